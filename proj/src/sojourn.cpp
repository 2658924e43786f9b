#include "qsim/sojourn.hpp"

#include "qsim/purdep.hpp"

namespace qsim {

namespace {

// The tagged customer is in service at grid point `tau`. One service
// interval asks whether it survives interval tau+1, pairing the count at
// the interval start with that interval's departures (the pairing under
// which the conditional stay law applies). The backward scheme defers the
// interval's arrivals to its end, so the start count is the recorded state
// at tau; the forward scheme advances them to the start, so it is the
// recorded state at tau+1 plus the interval's departures.
int64_t service_start_count(const Trajectory& t, int64_t tau, int node) {
    if (t.scheme() == Scheme::Forward) {
        return t.state(tau + 1, node) + t.departures(tau + 1, node);
    }
    return t.state(tau, node);
}

int route_draw(const Trajectory& t, int64_t interval, int node, int64_t total,
               RngStream& rng) {
    double u = rng.next_double() * static_cast<double>(total);
    int64_t acc = 0;
    for (const auto& f : t.flows(interval)) {
        if (f.from != node) continue;
        acc += f.count;
        if (u < static_cast<double>(acc)) return f.to;
    }
    throw SpecError("trajectory: routed flows do not cover the departures");
}

}  // namespace

SojournSample sample_sojourn(const Trajectory& trajectory,
                             const SojournQuery& query, RngStream& rng) {
    const int64_t k = trajectory.intervals();
    if (!trajectory.has_flows()) {
        throw SpecError("sojourn sampling requires a trajectory recorded with flows");
    }
    if (trajectory.scheme() == Scheme::Des) {
        throw SpecError("sojourn sampling over event-driven trajectories is not supported");
    }
    if (query.entry_node < 0 || query.entry_node >= trajectory.node_count()) {
        throw SpecError("sojourn query: entry node out of range");
    }
    if (query.entry_interval < 1 || query.entry_interval > k) {
        throw SpecError("sojourn query: entry interval out of range");
    }
    if (trajectory.state(query.entry_interval, query.entry_node) < 1) {
        throw SpecError("sojourn query: no customer present at the entry interval");
    }

    SojournSample sample;
    int node = query.entry_node;
    int64_t tau = query.entry_interval;
    const double h = trajectory.step();

    for (;;) {
        SojournHop hop;
        hop.node = node;
        if (tau >= k) {
            sample.censored = true;
            sample.path.push_back(hop);
            return sample;
        }

        if (trajectory.state(tau, node) > trajectory.servers(tau + 1, node)) {
            // Waiting: advance until the customers ahead have drained down
            // to the server count of the interval being tested.
            const int64_t start = trajectory.state(tau, node);
            int64_t running = start;
            int64_t eta = 0;
            for (;;) {
                ++eta;
                if (tau + eta > k) {
                    sample.censored = true;
                    hop.waiting_intervals = eta;
                    sample.path.push_back(hop);
                    sample.total_time += static_cast<double>(eta) * h;
                    return sample;
                }
                running -= trajectory.departures(tau + eta, node);
                if (running <= trajectory.servers(tau + eta, node)) break;
            }
            hop.waiting_intervals = eta;
            sample.total_time += static_cast<double>(eta) * h;
            tau += eta;
        }

        // Service: one Bernoulli stay draw per interval.
        for (;;) {
            if (tau >= k) {
                sample.censored = true;
                sample.path.push_back(hop);
                return sample;
            }
            const int64_t interval = tau + 1;
            const int64_t d = trajectory.departures(interval, node);
            const int64_t m = trajectory.servers(interval, node);
            const int64_t x = service_start_count(trajectory, tau, node);
            if (x < 1 || d > x) {
                throw SpecError("trajectory: flow balance violated at the service step");
            }
            const double p_stay = stay_probability(x, m, d);
            ++hop.service_intervals;
            sample.total_time += h;
            ++tau;
            if (rng.next_double() < p_stay) continue;

            const int target = route_draw(trajectory, interval, node, d, rng);
            sample.path.push_back(hop);
            if (target == kExitNode) {
                if (query.half_step_correction) sample.total_time -= 0.5 * h;
                return sample;
            }
            node = target;
            break;  // back to the setup step at the new node
        }
    }
}

std::vector<SojournSample> sample_sojourns(const Trajectory& trajectory,
                                           const SojournQuery& query,
                                           RngStream& rng) {
    std::vector<SojournSample> out;
    out.reserve(static_cast<size_t>(query.samples_per_path));
    for (int64_t s = 0; s < query.samples_per_path; ++s) {
        out.push_back(sample_sojourn(trajectory, query, rng));
    }
    return out;
}

double censored_fraction(const std::vector<SojournSample>& samples) {
    if (samples.empty()) return 0.0;
    size_t censored = 0;
    for (const auto& s : samples) censored += s.censored ? 1 : 0;
    return static_cast<double>(censored) / static_cast<double>(samples.size());
}

}  // namespace qsim
