#include "qsim/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace qsim {

int64_t sample_poisson(RngStream& rng, double mean) {
    if (mean < 0.0 || !std::isfinite(mean)) {
        throw std::invalid_argument("sample_poisson: mean must be finite and >= 0");
    }
    if (mean == 0.0) return 0;
    std::poisson_distribution<int64_t> dist(mean);
    return dist(rng.engine());
}

namespace {

// CDF-walk inversion with the p <= 1/2 reflection; one uniform per draw.
int64_t binomial_inversion(RngStream& rng, int64_t n, double p) {
    bool flipped = false;
    if (p > 0.5) {
        p = 1.0 - p;
        flipped = true;
    }
    const double q = 1.0 - p;
    const double r = p / q;
    double pk = std::pow(q, static_cast<double>(n));
    double cdf = pk;
    const double u = rng.next_double();
    int64_t k = 0;
    while (u > cdf && k < n) {
        ++k;
        pk *= r * static_cast<double>(n - k + 1) / static_cast<double>(k);
        cdf += pk;
    }
    return flipped ? n - k : k;
}

}  // namespace

int64_t sample_binomial(RngStream& rng, int64_t trials, double p) {
    if (trials < 0) throw std::invalid_argument("sample_binomial: trials < 0");
    if (p < 0.0 || p > 1.0 || !std::isfinite(p)) {
        throw std::invalid_argument("sample_binomial: p outside [0, 1]");
    }
    if (trials == 0 || p == 0.0) return 0;
    if (p == 1.0) return trials;
    const double pmin = std::min(p, 1.0 - p);
    // Inversion is fast while n*pmin is small and (1-pmin)^n cannot underflow.
    if (static_cast<double>(trials) * pmin <= 32.0 &&
        static_cast<double>(trials) * -std::log1p(-pmin) < 600.0) {
        return binomial_inversion(rng, trials, p);
    }
    std::binomial_distribution<int64_t> dist(trials, p);
    return dist(rng.engine());
}

double sample_erlang(RngStream& rng, int64_t shape, double rate) {
    if (shape < 0) throw std::invalid_argument("sample_erlang: shape < 0");
    if (rate <= 0.0) throw std::invalid_argument("sample_erlang: rate <= 0");
    if (shape == 0) return 0.0;
    std::gamma_distribution<double> dist(static_cast<double>(shape), 1.0 / rate);
    return dist(rng.engine());
}

double sample_exponential(RngStream& rng, double rate) {
    if (rate <= 0.0) throw std::invalid_argument("sample_exponential: rate <= 0");
    // -log(1-u) with u in [0,1) avoids log(0).
    return -std::log1p(-rng.next_double()) / rate;
}

void sample_multinomial(RngStream& rng, int64_t trials,
                        std::span<const double> probs,
                        std::span<int64_t> counts, int64_t& remainder) {
    if (counts.size() != probs.size()) {
        throw std::invalid_argument("sample_multinomial: size mismatch");
    }
    // Conditional binomial decomposition; exact for any category order.
    double prob_left = 1.0;
    int64_t n_left = trials;
    for (size_t i = 0; i < probs.size(); ++i) {
        if (n_left == 0 || probs[i] <= 0.0) {
            counts[i] = 0;
            prob_left -= probs[i];
            continue;
        }
        double cond = prob_left > 0.0 ? probs[i] / prob_left : 1.0;
        if (cond > 1.0) cond = 1.0;
        const int64_t c = sample_binomial(rng, n_left, cond);
        counts[i] = c;
        n_left -= c;
        prob_left -= probs[i];
        if (prob_left <= 0.0) prob_left = 0.0;
    }
    remainder = n_left;
}

}  // namespace qsim
