// Network description and structural validation: feedforward check, layer
// decomposition, and the analytical steady-state oracle used to validate
// the simulation engines.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qsim/errors.hpp"
#include "qsim/schedule.hpp"

namespace qsim {

struct NodeSpec {
    double service_rate = 1.0;          // per-server exponential rate
    PiecewiseConstant staffing;         // positive integer values
    PiecewiseConstant external_rate;    // non-negative arrival rates
};

struct RoutingEntry {
    int to = 0;
    double p = 0.0;
};

// Sparse row-major routing matrix; the exit probability of a row is the
// complement of its sum.
struct RoutingMatrix {
    int node_count = 0;
    std::vector<std::vector<RoutingEntry>> rows;

    double row_sum(int i) const {
        double s = 0.0;
        for (const auto& e : rows[static_cast<size_t>(i)]) s += e.p;
        return s;
    }
    double exit_probability(int i) const { return 1.0 - row_sum(i); }
};

struct NetworkSpec {
    std::vector<NodeSpec> nodes;
    RoutingMatrix routing;
    double horizon = 0.0;

    int node_count() const { return static_cast<int>(nodes.size()); }

    // All schedule breakpoints strictly inside (0, horizon).
    std::vector<double> breakpoints() const;

    std::string to_json_string() const;
    static NetworkSpec from_json_string(const std::string& text);
    static NetworkSpec load(const std::string& path);
    void save(const std::string& path) const;
};

struct LayerDecomposition {
    std::vector<std::vector<int>> layers;  // node indices per layer
    std::vector<int> layer_of;             // 1-based layer index per node
};

struct ValidatedNetwork {
    NetworkSpec spec;
    bool is_feedforward = false;
    bool is_multilayer = false;
    bool constant_parameter = false;
    std::optional<LayerDecomposition> layers;  // present iff is_multilayer
    std::vector<int> topo_order;               // valid iff is_feedforward
};

// Checks invariants (rates, row sums, schedules) and tags the spec with its
// structural facts. Throws SpecError on violated invariants.
ValidatedNetwork validate_network(const NetworkSpec& spec);

// Unique layering where sources sit in layer 1 and every routing edge
// advances exactly one layer. Throws SpecError when no such layering
// exists.
LayerDecomposition decompose_layers(const NetworkSpec& spec);

}  // namespace qsim
