// Random streams and exact discrete/continuous variate generation.
//
// Every stochastic component of the engine draws from an RngStream that is
// derived from (base_seed, replication, purpose, node). Streams are never
// shared between threads; replication results are therefore independent of
// worker scheduling.
#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace qsim {

// SplitMix64 finalizer; used to hash stream identifiers into seeds.
inline uint64_t mix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

enum class StreamPurpose : uint64_t {
    General = 0,
    Arrivals = 1,
    Departures = 2,
    Routing = 3,
    Sojourn = 4,
};

class RngStream {
public:
    explicit RngStream(uint64_t seed) : eng_(mix64(seed)) {}

    // Named substream for (replication, purpose, node); `domain` separates
    // engines that run side by side on the same replication (it is what the
    // common-random-numbers option collapses for arrivals).
    static RngStream derive(uint64_t base_seed, uint64_t replication,
                            StreamPurpose purpose, uint64_t node,
                            uint64_t domain = 0) {
        uint64_t s = mix64(base_seed);
        s = mix64(s ^ (replication * 0x9e3779b97f4a7c15ULL + 1));
        s = mix64(s ^ (static_cast<uint64_t>(purpose) << 32) ^ domain);
        s = mix64(s ^ (node + 0x51ed270bULL));
        return RngStream(s);
    }

    uint64_t next_u64() { return eng_(); }

    // Uniform double in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    std::mt19937_64& engine() { return eng_; }

private:
    std::mt19937_64 eng_;
};

// Poisson(mean); mean = 0 returns 0.
int64_t sample_poisson(RngStream& rng, double mean);

// Binomial(trials, p), exact marginal. Inversion when trials*min(p,1-p) is
// small, otherwise the library rejection sampler; both paths are exact.
int64_t sample_binomial(RngStream& rng, int64_t trials, double p);

// Erlang(shape, rate) = Gamma(shape, 1/rate); shape = 0 returns 0 exactly.
double sample_erlang(RngStream& rng, int64_t shape, double rate);

double sample_exponential(RngStream& rng, double rate);

// Multinomial(trials, (probs..., 1 - sum(probs))). Writes one count per
// entry of `probs`; the remainder category count is returned through
// `remainder`. Probabilities must sum to <= 1.
void sample_multinomial(RngStream& rng, int64_t trials,
                        std::span<const double> probs,
                        std::span<int64_t> counts, int64_t& remainder);

}  // namespace qsim
