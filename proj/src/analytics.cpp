#include "qsim/analytics.hpp"

#include <algorithm>
#include <cmath>

#include "qsim/stats.hpp"

namespace qsim {

ErrorReport make_error_report(const std::string& scheme, double estimate,
                              double oracle, double bound, double std_error,
                              double run_seconds) {
    ErrorReport r;
    r.scheme = scheme;
    r.estimate = estimate;
    r.oracle = oracle;
    r.absolute_error = estimate - oracle;
    r.relative_error = oracle != 0.0 ? r.absolute_error / oracle : 0.0;
    r.bound = bound;
    r.std_error = std_error;
    r.ci_halfwidth = 1.96 * std_error;
    const double band = oracle != 0.0 ? 3.0 * std_error / oracle : 0.0;
    r.bound_satisfied = std::fabs(r.relative_error) <= bound + band;
    r.run_seconds = run_seconds;
    return r;
}

RelativeErrorBound relative_error_bound(const ValidatedNetwork& net) {
    const AnalyticalSolution sol = steady_state_means(net);
    RelativeErrorBound out;
    out.system_mean = sol.system_mean;
    double weighted_num = 0.0;
    double weighted_den = 0.0;
    out.node_re_per_h.resize(sol.total_rates.size());
    for (size_t i = 0; i < sol.total_rates.size(); ++i) {
        const auto& node = net.spec.nodes[i];
        out.rate_sum += sol.total_rates[i];
        out.mu_max = std::max(out.mu_max, node.service_rate);
        const double m = node.staffing.value_at(0.0);
        weighted_num += m * sol.utilizations[i] * node.service_rate;
        weighted_den += m * sol.utilizations[i];
        out.node_re_per_h[i] =
            sol.node_means[i] > 0.0 ? sol.total_rates[i] / sol.node_means[i] : 0.0;
    }
    if (out.system_mean <= 0.0) {
        throw SpecError("relative_error_bound: system mean is zero");
    }
    out.re_per_h = out.rate_sum / out.system_mean;
    out.weighted_mu = weighted_den > 0.0 ? weighted_num / weighted_den : 0.0;
    out.chain_ok = out.re_per_h <= out.weighted_mu * (1.0 + 1e-12) &&
                   out.weighted_mu <= out.mu_max * (1.0 + 1e-12);
    return out;
}

RegimeSweep regime_ratio_sweep(Regime regime, std::span<const int64_t> m_values,
                               double param) {
    RegimeSweep sweep;
    sweep.regime = regime;
    for (size_t i = 1; i < m_values.size(); ++i) {
        if (m_values[i] <= m_values[i - 1]) {
            throw SpecError("regime sweep: m values must be strictly increasing");
        }
    }
    switch (regime) {
        case Regime::SpareCapacity:
            if (!(param > 0.0 && param < 1.0)) {
                throw SpecError("regime sweep: fixed rho must lie in (0, 1)");
            }
            sweep.limit = 1.0;
            break;
        case Regime::Balanced:
            if (!(param > 0.0)) {
                throw SpecError("regime sweep: beta must be positive");
            }
            sweep.limit = param / (1.0 + param);
            break;
        case Regime::CriticallyLoaded:
            sweep.limit = 1.0;
            break;
    }
    for (int64_t m : m_values) {
        double rho = 0.0;
        switch (regime) {
            case Regime::SpareCapacity:
                rho = param;
                break;
            case Regime::Balanced:
                rho = 1.0 - param / static_cast<double>(m);
                break;
            case Regime::CriticallyLoaded:
                rho = 1.0 - std::pow(static_cast<double>(m), -1.5);
                break;
        }
        if (!(rho > 0.0 && rho < 1.0)) {
            throw SpecError("regime sweep: utilization left (0, 1); m too small");
        }
        const double c = erlang_c(m, rho);
        const double slack = static_cast<double>(m) * (1.0 - rho);
        // Bound ratio: to mu h for the first two regimes, to m(1-rho) mu h
        // for the critically loaded one.
        const double ratio = regime == Regime::CriticallyLoaded
                                 ? 1.0 / (slack + c)
                                 : 1.0 / (1.0 + c / slack);
        sweep.m_values.push_back(m);
        sweep.rho_values.push_back(rho);
        sweep.ratio_values.push_back(ratio);
    }
    return sweep;
}

SlopeFit fit_loglog(std::span<const double> steps, std::span<const double> errors,
                    std::span<const double> errors_se) {
    if (steps.size() != errors.size() || steps.size() != errors_se.size()) {
        throw SpecError("slope fit: size mismatch");
    }
    if (steps.size() < 4) {
        throw SpecError("sweep requires >= 4 step values");
    }
    const auto [mn, mx] = std::minmax_element(steps.begin(), steps.end());
    if (*mx / *mn < 10.0 * (1.0 - 1e-12)) {
        throw SpecError("slope fit: step values must span at least one decade");
    }

    SlopeFit fit;
    fit.step_values.assign(steps.begin(), steps.end());
    fit.error_values.assign(errors.begin(), errors.end());
    fit.error_se.assign(errors_se.begin(), errors_se.end());
    fit.used.resize(steps.size());
    std::vector<double> lx, ly;
    for (size_t i = 0; i < steps.size(); ++i) {
        // Noise floor: points indistinguishable from Monte Carlo noise bias
        // the fit flat and are excluded.
        const bool keep = errors[i] > 0.0 && errors[i] >= 2.0 * errors_se[i];
        fit.used[i] = keep;
        if (keep) {
            lx.push_back(std::log(steps[i]));
            ly.push_back(std::log(errors[i]));
        }
    }
    fit.points_used = static_cast<int>(lx.size());
    if (fit.points_used < 2) return fit;  // fit_ok stays false
    const LineFit line = fit_line(lx, ly);
    fit.fit_ok = true;
    fit.slope = line.slope;
    fit.intercept = line.intercept;
    fit.r_squared = line.r_squared;
    fit.slope_ci_low = line.slope;
    fit.slope_ci_high = line.slope;
    return fit;
}

namespace {

double rep_system_mean(const RepStats& r) { return r.system_time_avg; }

}  // namespace

SlopeFit fit_convergence_slope(const ValidatedNetwork& net, Scheme scheme,
                               std::span<const double> h_list,
                               const SlopeConfig& config) {
    const AnalyticalSolution oracle = steady_state_means(net);
    const double target = oracle.system_mean;

    std::vector<double> errors(h_list.size());
    std::vector<double> errors_se(h_list.size());
    // Per-rep estimates per h, kept for the bootstrap.
    std::vector<std::vector<double>> rep_estimates(h_list.size());

    for (size_t hi = 0; hi < h_list.size(); ++hi) {
        SimConfig cfg;
        cfg.step = h_list[hi];
        cfg.horizon = config.horizon;
        cfg.replications = config.replications;
        cfg.base_seed = config.base_seed + hi;
        cfg.warmup_fraction = config.warmup_fraction;

        std::vector<double>& est = rep_estimates[hi];
        if (scheme == Scheme::Average) {
            const AverageResult avg = simulate_average(net, cfg);
            est.resize(avg.backward_run.reps.size());
            for (size_t r = 0; r < est.size(); ++r) {
                est[r] = 0.5 * (rep_system_mean(avg.backward_run.reps[r]) +
                                rep_system_mean(avg.forward_run.reps[r]));
            }
        } else {
            const RunResult run = scheme == Scheme::Backward
                                      ? simulate_backward(net, cfg)
                                      : simulate_forward(net, cfg);
            est.resize(run.reps.size());
            for (size_t r = 0; r < est.size(); ++r) {
                est[r] = rep_system_mean(run.reps[r]);
            }
        }
        const MeanVar mv = mean_var(est);
        errors[hi] = std::fabs(mv.mean - target) / target;
        errors_se[hi] = mv.std_error() / target;
    }

    SlopeFit fit = fit_loglog(h_list, errors, errors_se);
    if (!fit.fit_ok || config.bootstrap_rounds < 2) return fit;

    RngStream boot(config.base_seed ^ 0x626f6f74ULL);
    std::vector<double> slopes;
    slopes.reserve(static_cast<size_t>(config.bootstrap_rounds));
    std::vector<double> lx, ly;
    for (int b = 0; b < config.bootstrap_rounds; ++b) {
        lx.clear();
        ly.clear();
        for (size_t hi = 0; hi < h_list.size(); ++hi) {
            if (!fit.used[hi]) continue;
            const auto& est = rep_estimates[hi];
            double sum = 0.0;
            for (size_t r = 0; r < est.size(); ++r) {
                sum += est[boot.next_u64() % est.size()];
            }
            const double mean = sum / static_cast<double>(est.size());
            const double err = std::fabs(mean - target) / target;
            if (err > 0.0) {
                lx.push_back(std::log(h_list[hi]));
                ly.push_back(std::log(err));
            }
        }
        if (lx.size() >= 2) slopes.push_back(fit_line(lx, ly).slope);
    }
    if (slopes.size() >= 20) {
        std::sort(slopes.begin(), slopes.end());
        fit.slope_ci_low = slopes[static_cast<size_t>(0.025 * slopes.size())];
        fit.slope_ci_high =
            slopes[std::min(slopes.size() - 1,
                            static_cast<size_t>(0.975 * slopes.size()))];
    }
    return fit;
}

DominanceReport dominance_pair(std::span<const int64_t> lower,
                               std::span<const int64_t> upper,
                               int64_t min_obs) {
    if (lower.empty() || upper.empty()) {
        throw SpecError("dominance test: empty sample");
    }
    int64_t max_v = 0;
    for (int64_t v : lower) max_v = std::max(max_v, v);
    for (int64_t v : upper) max_v = std::max(max_v, v);
    const std::vector<double> sl = survival_function(lower, max_v);
    const std::vector<double> su = survival_function(upper, max_v);
    const double nl = static_cast<double>(lower.size());
    const double nu = static_cast<double>(upper.size());

    DominanceReport rep;
    rep.worst_margin = -1.0;
    for (int64_t x = 0; x <= max_v; ++x) {
        const double pl = sl[static_cast<size_t>(x)];
        const double pu = su[static_cast<size_t>(x)];
        // Require enough tail mass on both sides for the estimate to mean
        // anything at this support point.
        if (pl * nl < static_cast<double>(min_obs) &&
            pu * nu < static_cast<double>(min_obs)) {
            continue;
        }
        const double se =
            std::sqrt(pl * (1.0 - pl) / nl + pu * (1.0 - pu) / nu);
        const double margin = pl - pu - 3.0 * se;
        rep.worst_margin = std::max(rep.worst_margin, margin);
        ++rep.points_checked;
        if (margin > 0.0) rep.pass = false;
    }
    return rep;
}

DominanceReport dominance_test(std::span<const int64_t> lower,
                               std::span<const int64_t> middle,
                               std::span<const int64_t> upper,
                               int64_t min_obs) {
    const DominanceReport a = dominance_pair(lower, middle, min_obs);
    const DominanceReport b = dominance_pair(middle, upper, min_obs);
    DominanceReport out;
    out.pass = a.pass && b.pass;
    out.worst_margin = std::max(a.worst_margin, b.worst_margin);
    out.points_checked = a.points_checked + b.points_checked;
    return out;
}

GapCheck gap_identity_check(const SummaryStats& backward,
                            const SummaryStats& forward,
                            const ValidatedNetwork& net, double h) {
    const std::vector<double> rates = solve_traffic_equations(net);
    const size_t n = rates.size();
    GapCheck out;
    out.node_gap.resize(n);
    out.node_target.resize(n);
    out.node_band.resize(n);
    for (size_t i = 0; i < n; ++i) {
        out.node_gap[i] = backward.node_time_avg[i] - forward.node_time_avg[i];
        out.node_target[i] = rates[i] * h;
        out.node_band[i] = 3.0 * std::sqrt(backward.node_se[i] * backward.node_se[i] +
                                           forward.node_se[i] * forward.node_se[i]);
        if (std::fabs(out.node_gap[i] - out.node_target[i]) > out.node_band[i]) {
            out.per_node_pass = false;
        }
        out.system_target += out.node_target[i];
    }
    out.system_gap = backward.system_time_avg - forward.system_time_avg;
    out.system_band =
        3.0 * std::sqrt(backward.system_se * backward.system_se +
                        forward.system_se * forward.system_se);
    out.system_pass =
        std::fabs(out.system_gap - out.system_target) <= out.system_band;

    if (net.is_multilayer) {
        const auto& layers = net.layers->layers;
        const auto depth = static_cast<double>(layers.size());
        for (size_t k = 0; k < layers.size(); ++k) {
            double layer_external = 0.0;
            for (int i : layers[k]) {
                layer_external +=
                    net.spec.nodes[static_cast<size_t>(i)].external_rate.value_at(0.0);
            }
            out.multilayer_bound +=
                layer_external * (depth - static_cast<double>(k)) * h;
        }
        out.multilayer_bound_pass =
            out.system_gap <= out.multilayer_bound + out.system_band;
    }
    return out;
}

}  // namespace qsim
