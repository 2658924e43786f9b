// Analytical steady-state quantities for constant-parameter networks:
// traffic equations, Erlang C, and per-node M/M/m means. These are the
// validation oracles for the simulation engines.
#pragma once

#include <vector>

#include "qsim/network.hpp"

namespace qsim {

struct AnalyticalSolution {
    std::vector<double> total_rates;   // effective arrival rate per node
    std::vector<double> utilizations;  // rate / (servers * service_rate)
    std::vector<double> node_means;
    std::vector<double> erlang_c;      // delay probability per node
    double system_mean = 0.0;
};

// Effective arrival rates: the fixed point of rate = external + routed
// inflow. Feedforward networks are solved in topological order; general
// networks through the linear system. Requires a constant-parameter spec.
std::vector<double> solve_traffic_equations(const ValidatedNetwork& net);

// Probability that an arrival to an M/M/m queue finds all servers busy.
// Stable recurrence through Erlang B; valid for very large m.
double erlang_c(int64_t servers, double rho);

// Per-node means m rho + rho/(1-rho) C(m, rho) under the product-form
// stationary law. Throws SpecError when some utilization reaches 1.
AnalyticalSolution steady_state_means(const ValidatedNetwork& net);

// Max residual of the traffic fixed point, relative to the largest rate.
double traffic_residual(const ValidatedNetwork& net,
                        const std::vector<double>& rates);

}  // namespace qsim
