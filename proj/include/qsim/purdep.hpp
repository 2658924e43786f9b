// Sampling the number of service completions in a pure departure process:
// a multi-server station observed over an interval with no arrivals. The
// exact sampler splits on whether the initial count exceeds the server
// count; the naive and refined samplers are the approximate baselines kept
// for comparison experiments.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qsim/rng.hpp"

namespace qsim {

struct DepartureQuery {
    int64_t initial_count = 0;  // customers present at the interval start
    int64_t servers = 1;
    double rate = 1.0;          // per-server exponential service rate
    double duration = 0.0;      // interval length

    void validate() const;
};

enum class SamplerKind { Exact, Naive, Refined };

// Draws the number of departures D in [0, initial_count].
//
// Exact: if x <= m, D ~ Binomial(x, 1 - e^{-mu h}); otherwise draw the time
// T ~ Erlang(x - m, m mu) at which the queue first empties down to m. Given
// T > h the conditional law is Binomial(x - m - 1, h / T); given T <= h it
// is (x - m) + Binomial(m, 1 - e^{-mu (h - T)}).
//
// Naive: D = min(x, Poisson(min(x, m) mu h)).
// Refined: exact binomial branch for x <= m, naive otherwise.
int64_t generate_departure(const DepartureQuery& q, SamplerKind kind,
                           RngStream& rng);

// Batched form of the exact sampler (mask-combined branches, one pass over
// the queries); marginally each output matches generate_departure on the
// corresponding query. The single-stream overload draws components in
// order; the multi-stream overload uses one stream per component.
void generate_departure_batch(std::span<const DepartureQuery> queries,
                              SamplerKind kind, RngStream& rng,
                              std::span<int64_t> out);
void generate_departure_batch(std::span<const DepartureQuery> queries,
                              SamplerKind kind, std::span<RngStream> rngs,
                              std::span<int64_t> out);

// Probability that a customer in service at the interval start is still
// being served by the same server at the end, given d total departures.
// Three cases: x <= m gives (x-d)/x; x > m with d <= x-m gives
// ((m-1)/m)^d; x > m with d >= x-m gives ((m-1)/m)^{x-m} (x-d)/m. The two
// x > m branches coincide at d = x-m because x - d = m there.
double stay_probability(int64_t x, int64_t m, int64_t d);

// Transient law of the pure-death chain with rates min(y, m) mu, computed
// by uniformization with truncation error below 1e-12. Returns the pmf of
// the departure count D over {0, ..., x}. Oracle for tests; capped at
// x <= 2000.
std::vector<double> pure_death_pmf_oracle(const DepartureQuery& q);

}  // namespace qsim
