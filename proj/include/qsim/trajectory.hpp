// Interval-indexed simulation records shared by the Euler engines and the
// event-driven reference engine, plus summary statistics across
// replications.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qsim/errors.hpp"

namespace qsim {

enum class Scheme { Backward, Forward, Average, Des };

std::string scheme_name(Scheme s);
Scheme scheme_from_name(const std::string& name);

struct SimConfig {
    double step = 0.1;
    double horizon = 0.0;  // 0 means: use the network's horizon
    Scheme scheme = Scheme::Backward;
    int64_t replications = 1;
    uint64_t base_seed = 0;
    double warmup_fraction = 0.2;
    bool record_flows = false;
    // Shared arrival streams between the two schemes of the average
    // estimator (variance-reduction option; default independent).
    bool common_random_arrivals = false;
    std::vector<int64_t> initial_state;  // empty = all idle
};

// One routed batch within an interval; to == kExitNode means leaving the
// system.
inline constexpr int kExitNode = -1;

struct FlowRecord {
    int from = 0;
    int to = kExitNode;
    int64_t count = 0;
};

class Trajectory {
public:
    Trajectory() = default;
    Trajectory(Scheme scheme, double step, int64_t intervals, int nodes,
               bool with_flows);

    Scheme scheme() const { return scheme_; }
    double step() const { return step_; }
    int64_t intervals() const { return intervals_; }
    int node_count() const { return nodes_; }
    bool has_flows() const { return has_flows_; }

    // State at grid time tau * step, tau in [0, intervals].
    int64_t state(int64_t tau, int node) const {
        return states_[idx(tau, node)];
    }
    // Departures within interval tau (the interval ending at tau * step),
    // tau in [1, intervals]; likewise arrivals and staffing.
    int64_t departures(int64_t tau, int node) const {
        return departures_[idx(tau - 1, node)];
    }
    int64_t external_arrivals(int64_t tau, int node) const {
        return arrivals_[idx(tau - 1, node)];
    }
    int64_t servers(int64_t tau, int node) const {
        return servers_[idx(tau - 1, node)];
    }
    const std::vector<FlowRecord>& flows(int64_t tau) const {
        return flows_[static_cast<size_t>(tau - 1)];
    }

    int64_t& state_mut(int64_t tau, int node) { return states_[idx(tau, node)]; }
    int64_t& departures_mut(int64_t tau, int node) {
        return departures_[idx(tau - 1, node)];
    }
    int64_t& external_arrivals_mut(int64_t tau, int node) {
        return arrivals_[idx(tau - 1, node)];
    }
    int64_t& servers_mut(int64_t tau, int node) {
        return servers_[idx(tau - 1, node)];
    }
    std::vector<FlowRecord>& flows_mut(int64_t tau) {
        return flows_[static_cast<size_t>(tau - 1)];
    }

    // Exact conservation per node and interval: state change equals
    // arrivals minus departures. Throws on the first violation.
    void check_flow_balance() const;

private:
    size_t idx(int64_t tau, int node) const {
        return static_cast<size_t>(tau) * static_cast<size_t>(nodes_) +
               static_cast<size_t>(node);
    }

    Scheme scheme_ = Scheme::Backward;
    double step_ = 0.0;
    int64_t intervals_ = 0;
    int nodes_ = 0;
    bool has_flows_ = false;
    std::vector<int64_t> states_;      // (intervals + 1) x nodes
    std::vector<int64_t> departures_;  // intervals x nodes
    std::vector<int64_t> arrivals_;    // intervals x nodes
    std::vector<int64_t> servers_;     // intervals x nodes
    std::vector<std::vector<FlowRecord>> flows_;
};

// Per-replication reductions computed while the trajectory streams by.
struct RepStats {
    std::vector<double> node_time_avg;  // post-warmup average of N per node
    double system_time_avg = 0.0;
    std::vector<int64_t> terminal_state;
    // States at the requested checkpoint grid indices.
    std::vector<std::vector<int64_t>> checkpoint_states;
};

struct SummaryStats {
    Scheme scheme = Scheme::Backward;
    int64_t replications = 0;
    std::vector<double> node_time_avg;
    std::vector<double> node_se;      // standard error across replications
    std::vector<double> node_ci_halfwidth;  // 1.96 * se
    double system_time_avg = 0.0;
    double system_se = 0.0;
    double system_ci_halfwidth = 0.0;
    std::vector<double> terminal_mean;
    double run_seconds = 0.0;
};

SummaryStats summarize(Scheme scheme, std::span<const RepStats> reps,
                       double run_seconds);

std::string summary_to_json(const SummaryStats& s);

// Columnar CSV: one row per (replication, tau, node) with N, D, A_ex.
void write_trajectory_csv(const std::string& path,
                          std::span<const Trajectory> trajectories);

// Framed little-endian archive holding full trajectories (states,
// departures, arrivals, staffing and, when recorded, the sparse flow
// frames). See README for the layout.
void write_trajectory_archive(const std::string& path,
                              std::span<const Trajectory> trajectories);
std::vector<Trajectory> read_trajectory_archive(const std::string& path);

}  // namespace qsim
