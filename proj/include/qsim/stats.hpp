// Statistical helpers shared by the validation harness and the test suites.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace qsim {

// Regularized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
double gamma_q(double a, double x);

// Survival p-value of a chi-square statistic with df degrees of freedom.
double chi_square_sf(double statistic, int df);

struct GofResult {
    double statistic = 0.0;
    int df = 0;
    double p_value = 1.0;
    int bins_used = 0;
};

// One-sample goodness of fit of observed counts against expected
// probabilities. Bins are merged left to right until the expected count
// reaches `min_expected`; df = bins - 1. With fewer than 2 effective bins
// the test is vacuous and p_value = 1.
GofResult chi_square_gof(std::span<const int64_t> observed,
                         std::span<const double> expected_probs,
                         double min_expected = 5.0);

// Two-sample chi-square homogeneity test on aligned histograms.
GofResult chi_square_two_sample(std::span<const int64_t> counts_a,
                                std::span<const int64_t> counts_b,
                                double min_pooled = 10.0);

// Two-sample Kolmogorov-Smirnov distance; inputs need not be sorted.
double ks_distance(std::span<const double> a, std::span<const double> b);

struct MeanVar {
    double mean = 0.0;
    double variance = 0.0;  // sample variance (n - 1 denominator)
    size_t n = 0;
    double std_error() const;
};

MeanVar mean_var(std::span<const double> xs);

// Empirical survival function P(X >= x) evaluated on integer support
// [0, max_value]; index k holds P(X >= k).
std::vector<double> survival_function(std::span<const int64_t> samples,
                                      int64_t max_value);

// Histogram of non-negative integer samples on [0, max_value]; values above
// max_value are clamped into the last bin.
std::vector<int64_t> histogram(std::span<const int64_t> samples,
                               int64_t max_value);

// Ordinary least squares fit y = intercept + slope * x.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

LineFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace qsim
