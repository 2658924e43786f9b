#include "qsim/purdep.hpp"

#include <cmath>
#include <stdexcept>

namespace qsim {

void DepartureQuery::validate() const {
    if (initial_count < 0) throw std::invalid_argument("departure query: initial_count < 0");
    if (servers < 1) throw std::invalid_argument("departure query: servers < 1");
    if (rate <= 0.0 || !std::isfinite(rate)) throw std::invalid_argument("departure query: rate <= 0");
    if (duration < 0.0 || !std::isfinite(duration)) throw std::invalid_argument("departure query: duration < 0");
}

namespace {

int64_t exact_departure(const DepartureQuery& q, RngStream& rng) {
    const int64_t x = q.initial_count;
    const int64_t m = q.servers;
    if (x == 0) return 0;
    if (x <= m) {
        return sample_binomial(rng, x, -std::expm1(-q.rate * q.duration));
    }
    const double t = sample_erlang(rng, x - m, static_cast<double>(m) * q.rate);
    if (t > q.duration) {
        return sample_binomial(rng, x - m - 1, q.duration / t);
    }
    return (x - m) +
           sample_binomial(rng, m, -std::expm1(-q.rate * (q.duration - t)));
}

int64_t naive_departure(const DepartureQuery& q, RngStream& rng) {
    const int64_t busy = std::min(q.initial_count, q.servers);
    const int64_t s = sample_poisson(
        rng, static_cast<double>(busy) * q.rate * q.duration);
    return std::min(q.initial_count, s);
}

int64_t refined_departure(const DepartureQuery& q, RngStream& rng) {
    if (q.initial_count <= q.servers) {
        return sample_binomial(rng, q.initial_count,
                               -std::expm1(-q.rate * q.duration));
    }
    return naive_departure(q, rng);
}

// One component of the mask-combined batch formula: the Erlang draw uses
// shape (x - m)^+ (zero shape gives T = 0 and forces the first branch).
int64_t exact_departure_masked(const DepartureQuery& q, RngStream& rng) {
    const int64_t x = q.initial_count;
    const int64_t m = q.servers;
    const int64_t excess = x > m ? x - m : 0;
    const double t =
        excess > 0 ? sample_erlang(rng, excess, static_cast<double>(m) * q.rate)
                   : 0.0;
    const bool settled = t <= q.duration;
    const int64_t trials = settled ? std::min(x, m) : std::max<int64_t>(excess - 1, 0);
    const double p = settled ? -std::expm1(-q.rate * (q.duration - t))
                             : q.duration / t;
    return sample_binomial(rng, trials, p) + (settled ? excess : 0);
}

}  // namespace

int64_t generate_departure(const DepartureQuery& q, SamplerKind kind,
                           RngStream& rng) {
    q.validate();
    switch (kind) {
        case SamplerKind::Exact:
            return exact_departure(q, rng);
        case SamplerKind::Naive:
            return naive_departure(q, rng);
        case SamplerKind::Refined:
            return refined_departure(q, rng);
    }
    throw std::logic_error("generate_departure: unknown sampler kind");
}

void generate_departure_batch(std::span<const DepartureQuery> queries,
                              SamplerKind kind, RngStream& rng,
                              std::span<int64_t> out) {
    if (queries.size() != out.size()) {
        throw std::invalid_argument("generate_departure_batch: size mismatch");
    }
    for (size_t i = 0; i < queries.size(); ++i) {
        queries[i].validate();
        out[i] = kind == SamplerKind::Exact
                     ? exact_departure_masked(queries[i], rng)
                     : generate_departure(queries[i], kind, rng);
    }
}

void generate_departure_batch(std::span<const DepartureQuery> queries,
                              SamplerKind kind, std::span<RngStream> rngs,
                              std::span<int64_t> out) {
    if (queries.size() != out.size() || queries.size() != rngs.size()) {
        throw std::invalid_argument("generate_departure_batch: size mismatch");
    }
    for (size_t i = 0; i < queries.size(); ++i) {
        queries[i].validate();
        out[i] = kind == SamplerKind::Exact
                     ? exact_departure_masked(queries[i], rngs[i])
                     : generate_departure(queries[i], kind, rngs[i]);
    }
}

double stay_probability(int64_t x, int64_t m, int64_t d) {
    if (x < 1) throw std::invalid_argument("stay_probability: x < 1");
    if (m < 1) throw std::invalid_argument("stay_probability: m < 1");
    if (d < 0 || d > x) throw std::invalid_argument("stay_probability: d outside [0, x]");
    if (x <= m) {
        return static_cast<double>(x - d) / static_cast<double>(x);
    }
    const double ratio = static_cast<double>(m - 1) / static_cast<double>(m);
    if (d <= x - m) {
        return std::pow(ratio, static_cast<double>(d));
    }
    return std::pow(ratio, static_cast<double>(x - m)) *
           static_cast<double>(x - d) / static_cast<double>(m);
}

std::vector<double> pure_death_pmf_oracle(const DepartureQuery& q) {
    q.validate();
    const int64_t x = q.initial_count;
    if (x > 2000) {
        throw std::invalid_argument("pure_death_pmf_oracle: x exceeds oracle scale (2000)");
    }
    std::vector<double> pmf(static_cast<size_t>(x) + 1, 0.0);
    if (x == 0 || q.duration == 0.0) {
        pmf[0] = 1.0;
        return pmf;
    }

    const int64_t m = q.servers;
    const double big_rate = static_cast<double>(std::min(x, m)) * q.rate;
    const double a = big_rate * q.duration;  // uniformization rate * time

    // Jump probabilities of the uniformized chain, indexed by state y.
    std::vector<long double> jump(static_cast<size_t>(x) + 1, 0.0L);
    for (int64_t y = 1; y <= x; ++y) {
        jump[static_cast<size_t>(y)] =
            static_cast<long double>(std::min(y, m)) * q.rate / big_rate;
    }

    std::vector<long double> state(static_cast<size_t>(x) + 1, 0.0L);
    std::vector<long double> accum(static_cast<size_t>(x) + 1, 0.0L);
    state[static_cast<size_t>(x)] = 1.0L;

    const long double log_a = std::log(static_cast<long double>(a));
    long double cumulative = 0.0L;
    for (int64_t k = 0;; ++k) {
        const long double lw = -static_cast<long double>(a) +
                               static_cast<long double>(k) * log_a -
                               std::lgamma(static_cast<long double>(k) + 1.0L);
        const long double w = std::exp(lw);
        for (size_t y = 0; y < state.size(); ++y) accum[y] += w * state[y];
        cumulative += w;
        if (cumulative >= 1.0L - 1e-13L && static_cast<double>(k) >= a) break;
        if (k > 5'000'000) {
            throw std::runtime_error("pure_death_pmf_oracle: truncation failed to converge");
        }
        // One uniformized step: stay, or drop one level.
        for (size_t y = 0; y + 1 < state.size(); ++y) {
            state[y] = state[y] * (1.0L - jump[y]) + state[y + 1] * jump[y + 1];
        }
        state[static_cast<size_t>(x)] *= 1.0L - jump[static_cast<size_t>(x)];
    }

    // accum holds the terminal-state law; D = x - terminal state.
    for (int64_t y = 0; y <= x; ++y) {
        pmf[static_cast<size_t>(x - y)] = static_cast<double>(accum[static_cast<size_t>(y)]);
    }
    return pmf;
}

}  // namespace qsim
