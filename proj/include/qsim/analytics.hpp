// Quantitative validation harness: relative-error bounds and their chain,
// heavy-traffic regime ratios, convergence-slope fits, stochastic-dominance
// tests, and the backward/forward gap identity checks.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qsim/analytic.hpp"
#include "qsim/euler.hpp"
#include "qsim/network.hpp"

namespace qsim {

struct ErrorReport {
    std::string scheme;
    double estimate = 0.0;
    double oracle = 0.0;
    double absolute_error = 0.0;
    double relative_error = 0.0;
    double bound = 0.0;            // theoretical bound on |relative error|
    bool bound_satisfied = false;  // within bound + 3 standard errors
    double ci_halfwidth = 0.0;
    double std_error = 0.0;
    double run_seconds = 0.0;
};

ErrorReport make_error_report(const std::string& scheme, double estimate,
                              double oracle, double bound, double std_error,
                              double run_seconds);

// Per-h relative-error bound of the long-run mean estimate, with the two
// coarser bounds above it: sum-rate / mean, the staffing-weighted average
// service rate, and the maximum service rate.
struct RelativeErrorBound {
    double rate_sum = 0.0;     // sum of effective arrival rates
    double system_mean = 0.0;
    double re_per_h = 0.0;     // rate_sum / system_mean
    double weighted_mu = 0.0;  // sum(m rho mu) / sum(m rho)
    double mu_max = 0.0;
    std::vector<double> node_re_per_h;
    bool chain_ok = false;  // re_per_h <= weighted_mu <= mu_max
};

RelativeErrorBound relative_error_bound(const ValidatedNetwork& net);

// Heavy-traffic regimes for the ratio of the relative-error bound to its
// asymptote, evaluated exactly through Erlang C.
enum class Regime {
    SpareCapacity,     // m (1 - rho) -> infinity; ratio to mu h -> 1
    Balanced,          // m (1 - rho) -> beta; ratio to mu h -> beta / (1 + beta)
    CriticallyLoaded,  // m (1 - rho) -> 0; ratio to m (1 - rho) mu h -> 1
};

struct RegimeSweep {
    Regime regime = Regime::SpareCapacity;
    std::vector<int64_t> m_values;
    std::vector<double> rho_values;
    std::vector<double> ratio_values;
    double limit = 1.0;  // the asymptotic value the ratios approach
};

// `param` is rho for SpareCapacity, beta for Balanced, unused for
// CriticallyLoaded (which uses rho = 1 - m^{-1.5}).
RegimeSweep regime_ratio_sweep(Regime regime, std::span<const int64_t> m_values,
                               double param);

struct SlopeFit {
    std::vector<double> step_values;
    std::vector<double> error_values;  // |relative error| per step
    std::vector<double> error_se;
    std::vector<bool> used;  // points kept after the noise-floor filter
    int points_used = 0;
    bool fit_ok = false;
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double slope_ci_low = 0.0;
    double slope_ci_high = 0.0;
};

// Log-log least squares on pre-computed errors; at least 4 steps spanning a
// decade. Points with |error| below 2 standard errors are excluded.
SlopeFit fit_loglog(std::span<const double> steps, std::span<const double> errors,
                    std::span<const double> errors_se);

struct SlopeConfig {
    double horizon = 1000.0;
    double warmup_fraction = 0.2;
    int64_t replications = 100;
    uint64_t base_seed = 1;
    int bootstrap_rounds = 200;
};

// Runs the scheme across the step grid against the analytical oracle and
// fits the error decay; the bootstrap CI resamples replications.
SlopeFit fit_convergence_slope(const ValidatedNetwork& net, Scheme scheme,
                               std::span<const double> h_list,
                               const SlopeConfig& config);

struct DominanceReport {
    bool pass = true;
    double worst_margin = 0.0;  // most positive violation of the 3 SE band
    int64_t points_checked = 0;
};

// Empirical first-order dominance lower <= upper: survival functions
// compared pointwise with a 3-combined-SE allowance, on support points
// backed by at least `min_obs` tail observations in each sample.
DominanceReport dominance_pair(std::span<const int64_t> lower,
                               std::span<const int64_t> upper,
                               int64_t min_obs = 10);

// Three-way check lower <= middle <= upper.
DominanceReport dominance_test(std::span<const int64_t> lower,
                               std::span<const int64_t> middle,
                               std::span<const int64_t> upper,
                               int64_t min_obs = 10);

struct GapCheck {
    std::vector<double> node_gap;
    std::vector<double> node_target;  // effective rate * h
    std::vector<double> node_band;    // 3 combined SE
    bool per_node_pass = true;
    double system_gap = 0.0;
    double system_target = 0.0;
    double system_band = 0.0;
    bool system_pass = true;
    double multilayer_bound = 0.0;  // 0 when the network is not multi-layer
    bool multilayer_bound_pass = true;
};

GapCheck gap_identity_check(const SummaryStats& backward,
                            const SummaryStats& forward,
                            const ValidatedNetwork& net, double h);

}  // namespace qsim
