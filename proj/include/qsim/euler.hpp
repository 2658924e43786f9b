// Backward and forward Euler simulation of the network state, plus the
// averaged estimator and the step-size selection rule.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qsim/network.hpp"
#include "qsim/purdep.hpp"
#include "qsim/rng.hpp"
#include "qsim/trajectory.hpp"

namespace qsim {

struct RunOptions {
    bool keep_trajectories = false;
    // Grid indices at which per-replication states are snapshotted.
    std::vector<int64_t> checkpoints;
};

struct RunResult {
    SummaryStats summary;
    std::vector<RepStats> reps;
    std::vector<Trajectory> trajectories;  // filled iff keep_trajectories
};

struct AverageResult {
    SummaryStats backward;
    SummaryStats forward;
    SummaryStats averaged;
    RunResult backward_run;
    RunResult forward_run;
};

// Resolves defaults and enforces the grid contract: horizon a multiple of
// step and every schedule breakpoint on the grid. Throws GridError.
SimConfig resolve_config(const ValidatedNetwork& net, SimConfig config);

int64_t interval_count(const SimConfig& config);

// Poisson external arrivals for the interval ending at tau * step; one
// stream per node.
std::vector<int64_t> sample_external_arrivals(const ValidatedNetwork& net,
                                              int64_t tau, double step,
                                              std::span<RngStream> arrival_streams);

// Multinomial split of each node's departures over its successor set plus
// exit. Appends flow records, accumulates internal arrivals, and returns
// per-node exit counts.
std::vector<int64_t> route_departures(std::span<const int64_t> departures,
                                      const RoutingMatrix& routing,
                                      std::span<RngStream> routing_streams,
                                      std::vector<FlowRecord>* flows,
                                      std::span<int64_t> internal_arrivals);

// Interval loop: departures drawn from the previous state, multinomial
// routing, external arrivals, state update. Any routing structure.
RunResult simulate_backward(const ValidatedNetwork& net, const SimConfig& config,
                            const RunOptions& options = {});

// Layer-batched kernel on multi-layer networks, topological node order on
// other feedforward networks; rejects routing graphs with cycles.
RunResult simulate_forward(const ValidatedNetwork& net, const SimConfig& config,
                           const RunOptions& options = {});

// Runs both schemes on independent substreams and reports the averaged
// estimator next to its two components.
AverageResult simulate_average(const ValidatedNetwork& net,
                               const SimConfig& config,
                               const RunOptions& options = {});

// Step-size rule: alpha / max service rate, rounded down to the largest
// step that divides the horizon and all schedule breakpoints.
double recommend_step(const ValidatedNetwork& net, double alpha);

// Worker count for replication-level parallelism (QSIM_WORKERS overrides
// hardware concurrency). Results do not depend on this value.
int worker_count();

}  // namespace qsim
