// Conditional sampling of individual-customer sojourn times over a stored
// trajectory: a tagged customer entering a given node during a given
// interval is walked through waiting and service phases using only the
// recorded per-interval counts and routed flows.
#pragma once

#include <cstdint>
#include <vector>

#include "qsim/rng.hpp"
#include "qsim/trajectory.hpp"

namespace qsim {

struct SojournQuery {
    int entry_node = 0;
    int64_t entry_interval = 1;  // the interval during which the customer arrives
    int64_t samples_per_path = 1;
    // Experiment flag: report T - h/2 instead of T to centre the
    // discretization; off by default.
    bool half_step_correction = false;
};

struct SojournHop {
    int node = 0;
    int64_t waiting_intervals = 0;
    int64_t service_intervals = 0;
};

struct SojournSample {
    double total_time = 0.0;
    bool censored = false;  // trajectory ended before the customer left
    std::vector<SojournHop> path;
};

// One conditional walk. Requires a trajectory recorded with flows; throws
// SpecError for a query against an empty node and on flow-inconsistent
// trajectories. The trajectory is read-only and may be shared by any
// number of concurrent samplers.
SojournSample sample_sojourn(const Trajectory& trajectory, const SojournQuery& query,
                             RngStream& rng);

std::vector<SojournSample> sample_sojourns(const Trajectory& trajectory,
                                           const SojournQuery& query,
                                           RngStream& rng);

double censored_fraction(const std::vector<SojournSample>& samples);

}  // namespace qsim
