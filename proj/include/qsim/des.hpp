// Event-driven reference simulator for the same network class. Exact
// continuous-time dynamics; the state is sampled onto the same grid as the
// Euler engines so the outputs are directly comparable.
#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "qsim/euler.hpp"
#include "qsim/network.hpp"
#include "qsim/trajectory.hpp"

namespace qsim {

struct DesCustomer {
    double system_entry = 0.0;
    bool probed = false;
};

struct DesServerSlot {
    uint64_t epoch = 0;  // bumped on cancellation; stale events are ignored
    bool busy = false;
    DesCustomer customer;
};

// Mutable per-node state of the event engine. in_service() equals
// min(in_system, active_servers) after every settlement.
struct NodeRuntime {
    std::deque<DesCustomer> waiting;
    std::vector<DesServerSlot> slots;  // epochs persist across resizes
    int64_t active_servers = 0;
    int64_t in_system = 0;

    int64_t in_service() const {
        int64_t c = 0;
        for (int64_t s = 0; s < active_servers; ++s) {
            if (slots[static_cast<size_t>(s)].busy) ++c;
        }
        return c;
    }
};

// Applies a staffing change. A decrease cancels the services beyond the new
// count and returns those customers to the head of the queue (memoryless
// service makes requeue-then-resample equivalent in distribution); an
// increase seats waiting customers immediately. Returns the slot indices
// whose service clocks the caller must (re)start.
std::vector<int> staffing_change_settlement(NodeRuntime& node, int64_t new_servers);

// Collects exact per-customer sojourn times for customers that enter the
// system through `node` during [window_start, window_end).
struct SojournProbe {
    int node = 0;
    double window_start = 0.0;
    double window_end = 0.0;
};

struct DesResult {
    RunResult run;
    // One vector of completed sojourn times per replication (only filled
    // when a probe was supplied).
    std::vector<std::vector<double>> sojourn_samples;
};

RunResult simulate_des(const ValidatedNetwork& net, const SimConfig& config,
                       const RunOptions& options = {});

DesResult simulate_des_probed(const ValidatedNetwork& net, const SimConfig& config,
                              const SojournProbe& probe,
                              const RunOptions& options = {});

}  // namespace qsim
