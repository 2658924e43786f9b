#include "qsim/analytic.hpp"

#include <cmath>

namespace qsim {

namespace {

constexpr double kStabilityMargin = 1e-9;

// Dense LU solve with partial pivoting; n stays small (network sizes).
std::vector<double> solve_dense(std::vector<std::vector<double>> a,
                                std::vector<double> b) {
    const size_t n = b.size();
    for (size_t col = 0; col < n; ++col) {
        size_t pivot = col;
        for (size_t r = col + 1; r < n; ++r) {
            if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
        }
        if (std::fabs(a[pivot][col]) < 1e-14) {
            throw SpecError("traffic equations: singular system (closed routing cycle)");
        }
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            if (f == 0.0) continue;
            for (size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (size_t r = n; r-- > 0;) {
        double s = b[r];
        for (size_t c = r + 1; c < n; ++c) s -= a[r][c] * x[c];
        x[r] = s / a[r][r];
    }
    return x;
}

}  // namespace

std::vector<double> solve_traffic_equations(const ValidatedNetwork& net) {
    if (!net.constant_parameter) {
        throw SpecError("traffic equations require a constant-parameter spec");
    }
    const int n = net.spec.node_count();
    std::vector<double> external(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        external[static_cast<size_t>(i)] =
            net.spec.nodes[static_cast<size_t>(i)].external_rate.value_at(0.0);
    }

    if (net.is_feedforward) {
        std::vector<double> rates = external;
        for (int i : net.topo_order) {
            for (const auto& e : net.spec.routing.rows[static_cast<size_t>(i)]) {
                rates[static_cast<size_t>(e.to)] +=
                    e.p * rates[static_cast<size_t>(i)];
            }
        }
        return rates;
    }

    // (I - P^T) rate = external
    std::vector<std::vector<double>> a(
        static_cast<size_t>(n), std::vector<double>(static_cast<size_t>(n), 0.0));
    for (int i = 0; i < n; ++i) a[static_cast<size_t>(i)][static_cast<size_t>(i)] = 1.0;
    for (int i = 0; i < n; ++i) {
        for (const auto& e : net.spec.routing.rows[static_cast<size_t>(i)]) {
            a[static_cast<size_t>(e.to)][static_cast<size_t>(i)] -= e.p;
        }
    }
    return solve_dense(std::move(a), external);
}

double traffic_residual(const ValidatedNetwork& net,
                        const std::vector<double>& rates) {
    const int n = net.spec.node_count();
    std::vector<double> rhs(static_cast<size_t>(n));
    double scale = 0.0;
    for (int i = 0; i < n; ++i) {
        rhs[static_cast<size_t>(i)] =
            net.spec.nodes[static_cast<size_t>(i)].external_rate.value_at(0.0);
        scale = std::max(scale, std::fabs(rates[static_cast<size_t>(i)]));
    }
    for (int i = 0; i < n; ++i) {
        for (const auto& e : net.spec.routing.rows[static_cast<size_t>(i)]) {
            rhs[static_cast<size_t>(e.to)] += e.p * rates[static_cast<size_t>(i)];
        }
    }
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        worst = std::max(worst, std::fabs(rates[static_cast<size_t>(i)] -
                                          rhs[static_cast<size_t>(i)]));
    }
    return scale > 0.0 ? worst / scale : worst;
}

double erlang_c(int64_t servers, double rho) {
    if (servers < 1) throw SpecError("erlang_c: servers must be >= 1");
    if (!(rho > 0.0) || !(rho < 1.0)) {
        throw SpecError("erlang_c: rho must lie in (0, 1)");
    }
    const double a = static_cast<double>(servers) * rho;  // offered load
    double b = 1.0;  // Erlang B via the standard recurrence
    for (int64_t k = 1; k <= servers; ++k) {
        b = a * b / (static_cast<double>(k) + a * b);
    }
    return b / (1.0 - rho * (1.0 - b));
}

AnalyticalSolution steady_state_means(const ValidatedNetwork& net) {
    AnalyticalSolution sol;
    sol.total_rates = solve_traffic_equations(net);
    const int n = net.spec.node_count();
    sol.utilizations.resize(static_cast<size_t>(n));
    sol.node_means.resize(static_cast<size_t>(n));
    sol.erlang_c.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto& node = net.spec.nodes[static_cast<size_t>(i)];
        const auto m = static_cast<int64_t>(node.staffing.value_at(0.0));
        const double rate = sol.total_rates[static_cast<size_t>(i)];
        const double rho =
            rate / (static_cast<double>(m) * node.service_rate);
        sol.utilizations[static_cast<size_t>(i)] = rho;
        if (rate == 0.0) {
            sol.node_means[static_cast<size_t>(i)] = 0.0;
            sol.erlang_c[static_cast<size_t>(i)] = 0.0;
            continue;
        }
        if (rho >= 1.0 - kStabilityMargin) {
            throw SpecError("steady_state_means: node " + std::to_string(i + 1) +
                            " is unstable (utilization >= 1)");
        }
        const double c = erlang_c(m, rho);
        sol.erlang_c[static_cast<size_t>(i)] = c;
        sol.node_means[static_cast<size_t>(i)] =
            static_cast<double>(m) * rho + rho / (1.0 - rho) * c;
        sol.system_mean += sol.node_means[static_cast<size_t>(i)];
    }
    return sol;
}

}  // namespace qsim
