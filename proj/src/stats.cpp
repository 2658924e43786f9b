#include "qsim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace qsim {

namespace {

// Series expansion of the lower regularized gamma P(a, x); valid x < a + 1.
double gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int i = 0; i < 10000; ++i) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Lentz continued fraction for Q(a, x); valid x >= a + 1.
double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double f = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        f *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    return f * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double gamma_q(double a, double x) {
    if (a <= 0.0 || x < 0.0 || !std::isfinite(a) || !std::isfinite(x)) {
        throw std::invalid_argument("gamma_q: require a > 0, x >= 0");
    }
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_cf(a, x);
}

double chi_square_sf(double statistic, int df) {
    if (df <= 0) throw std::invalid_argument("chi_square_sf: df <= 0");
    if (statistic <= 0.0) return 1.0;
    return gamma_q(0.5 * df, 0.5 * statistic);
}

GofResult chi_square_gof(std::span<const int64_t> observed,
                         std::span<const double> expected_probs,
                         double min_expected) {
    if (observed.size() != expected_probs.size()) {
        throw std::invalid_argument("chi_square_gof: size mismatch");
    }
    int64_t total = 0;
    for (int64_t c : observed) total += c;
    if (total == 0) return {};

    GofResult res;
    double obs_acc = 0.0;
    double exp_acc = 0.0;
    std::vector<std::pair<double, double>> bins;  // (observed, expected)
    for (size_t i = 0; i < observed.size(); ++i) {
        obs_acc += static_cast<double>(observed[i]);
        exp_acc += expected_probs[i] * static_cast<double>(total);
        if (exp_acc >= min_expected) {
            bins.emplace_back(obs_acc, exp_acc);
            obs_acc = 0.0;
            exp_acc = 0.0;
        }
    }
    // Fold the trailing partial bin into the last full one.
    if (exp_acc > 0.0 || obs_acc > 0.0) {
        if (bins.empty()) {
            bins.emplace_back(obs_acc, exp_acc);
        } else {
            bins.back().first += obs_acc;
            bins.back().second += exp_acc;
        }
    }
    res.bins_used = static_cast<int>(bins.size());
    if (bins.size() < 2) return res;  // degenerate support, vacuous test

    double stat = 0.0;
    for (const auto& [obs, exp] : bins) {
        const double diff = obs - exp;
        stat += diff * diff / exp;
    }
    res.statistic = stat;
    res.df = static_cast<int>(bins.size()) - 1;
    res.p_value = chi_square_sf(stat, res.df);
    return res;
}

GofResult chi_square_two_sample(std::span<const int64_t> counts_a,
                                std::span<const int64_t> counts_b,
                                double min_pooled) {
    if (counts_a.size() != counts_b.size()) {
        throw std::invalid_argument("chi_square_two_sample: size mismatch");
    }
    double na = 0.0;
    double nb = 0.0;
    for (size_t i = 0; i < counts_a.size(); ++i) {
        na += static_cast<double>(counts_a[i]);
        nb += static_cast<double>(counts_b[i]);
    }
    GofResult res;
    if (na == 0.0 || nb == 0.0) return res;
    const double ka = std::sqrt(nb / na);
    const double kb = std::sqrt(na / nb);

    double acc_a = 0.0;
    double acc_b = 0.0;
    std::vector<std::pair<double, double>> bins;
    for (size_t i = 0; i < counts_a.size(); ++i) {
        acc_a += static_cast<double>(counts_a[i]);
        acc_b += static_cast<double>(counts_b[i]);
        if (acc_a + acc_b >= min_pooled) {
            bins.emplace_back(acc_a, acc_b);
            acc_a = acc_b = 0.0;
        }
    }
    if (acc_a + acc_b > 0.0) {
        if (bins.empty()) {
            bins.emplace_back(acc_a, acc_b);
        } else {
            bins.back().first += acc_a;
            bins.back().second += acc_b;
        }
    }
    res.bins_used = static_cast<int>(bins.size());
    if (bins.size() < 2) return res;

    double stat = 0.0;
    for (const auto& [oa, ob] : bins) {
        const double diff = ka * oa - kb * ob;
        stat += diff * diff / (oa + ob);
    }
    res.statistic = stat;
    res.df = static_cast<int>(bins.size()) - 1;
    res.p_value = chi_square_sf(stat, res.df);
    return res;
}

double ks_distance(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) {
        throw std::invalid_argument("ks_distance: empty sample");
    }
    std::vector<double> sa(a.begin(), a.end());
    std::vector<double> sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    const double na = static_cast<double>(sa.size());
    const double nb = static_cast<double>(sb.size());
    size_t ia = 0;
    size_t ib = 0;
    double d = 0.0;
    while (ia < sa.size() && ib < sb.size()) {
        const double x = std::min(sa[ia], sb[ib]);
        while (ia < sa.size() && sa[ia] <= x) ++ia;
        while (ib < sb.size() && sb[ib] <= x) ++ib;
        d = std::max(d, std::fabs(static_cast<double>(ia) / na -
                                  static_cast<double>(ib) / nb));
    }
    return d;
}

double MeanVar::std_error() const {
    if (n < 2) return std::numeric_limits<double>::infinity();
    return std::sqrt(variance / static_cast<double>(n));
}

MeanVar mean_var(std::span<const double> xs) {
    MeanVar mv;
    mv.n = xs.size();
    if (xs.empty()) return mv;
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    mv.mean = mean;
    mv.variance = xs.size() > 1 ? ss / static_cast<double>(xs.size() - 1) : 0.0;
    return mv;
}

std::vector<double> survival_function(std::span<const int64_t> samples,
                                      int64_t max_value) {
    std::vector<int64_t> hist = histogram(samples, max_value);
    std::vector<double> surv(hist.size(), 0.0);
    const double n = static_cast<double>(samples.size());
    int64_t tail = 0;
    for (size_t k = hist.size(); k-- > 0;) {
        tail += hist[k];
        surv[k] = static_cast<double>(tail) / n;
    }
    return surv;
}

std::vector<int64_t> histogram(std::span<const int64_t> samples,
                               int64_t max_value) {
    std::vector<int64_t> hist(static_cast<size_t>(max_value) + 1, 0);
    for (int64_t s : samples) {
        const int64_t k = std::clamp<int64_t>(s, 0, max_value);
        ++hist[static_cast<size_t>(k)];
    }
    return hist;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("fit_line: need >= 2 aligned points");
    }
    const double n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n;
    const double my = sy / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

}  // namespace qsim
