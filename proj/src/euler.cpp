#include "qsim/euler.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "rep_accumulator.hpp"

namespace qsim {

namespace {

constexpr uint64_t kBackwardDomain = 1;
constexpr uint64_t kForwardDomain = 2;
constexpr int64_t kCountCeiling = int64_t{1} << 62;

struct PreparedRouting {
    std::vector<std::vector<double>> probs;
    std::vector<std::vector<int>> targets;

    explicit PreparedRouting(const RoutingMatrix& routing) {
        const size_t n = routing.rows.size();
        probs.resize(n);
        targets.resize(n);
        for (size_t i = 0; i < n; ++i) {
            for (const auto& e : routing.rows[i]) {
                if (e.p <= 0.0) continue;
                probs[i].push_back(e.p);
                targets[i].push_back(e.to);
            }
        }
    }
};

struct NodeStreams {
    std::vector<RngStream> arrivals;
    std::vector<RngStream> departures;
    std::vector<RngStream> routing;

    NodeStreams(uint64_t seed, int64_t rep, int n, uint64_t domain,
                bool shared_arrivals) {
        const uint64_t arrival_domain = shared_arrivals ? 0 : domain;
        for (int i = 0; i < n; ++i) {
            const auto node = static_cast<uint64_t>(i);
            arrivals.push_back(RngStream::derive(seed, static_cast<uint64_t>(rep),
                                                 StreamPurpose::Arrivals, node,
                                                 arrival_domain));
            departures.push_back(RngStream::derive(seed, static_cast<uint64_t>(rep),
                                                   StreamPurpose::Departures, node,
                                                   domain));
            routing.push_back(RngStream::derive(seed, static_cast<uint64_t>(rep),
                                                StreamPurpose::Routing, node,
                                                domain));
        }
    }
};

void external_arrivals_into(const ValidatedNetwork& net, int64_t tau, double step,
                            std::span<RngStream> streams, std::span<int64_t> out) {
    // Schedules are constant across the interval (grid alignment is
    // validated), so the midpoint reads the correct segment regardless of
    // rounding at the boundary.
    const double mid = (static_cast<double>(tau) - 0.5) * step;
    for (size_t i = 0; i < out.size(); ++i) {
        const double rate = net.spec.nodes[i].external_rate.value_at(mid);
        out[i] = rate > 0.0 ? sample_poisson(streams[i], rate * step) : 0;
    }
}

// Multinomial routing for the subset of nodes in `group` (or all nodes when
// group is empty). Accumulates internal arrivals, returns per-node exits
// through `exits`, and appends flow records when `flows` is non-null.
void route_into(std::span<const int64_t> departures, const PreparedRouting& prep,
                std::span<RngStream> streams, std::span<const int> group,
                std::vector<FlowRecord>* flows, std::span<int64_t> internal,
                std::span<int64_t> exits, std::vector<int64_t>& scratch) {
    auto route_one = [&](int i) {
        const int64_t d = departures[static_cast<size_t>(i)];
        if (d == 0) {
            exits[static_cast<size_t>(i)] = 0;
            return;
        }
        const auto& probs = prep.probs[static_cast<size_t>(i)];
        const auto& targets = prep.targets[static_cast<size_t>(i)];
        scratch.resize(probs.size());
        int64_t exit_count = d;
        if (!probs.empty()) {
            sample_multinomial(streams[static_cast<size_t>(i)], d, probs,
                               scratch, exit_count);
            for (size_t k = 0; k < targets.size(); ++k) {
                internal[static_cast<size_t>(targets[k])] += scratch[k];
                if (flows && scratch[k] > 0) {
                    flows->push_back({i, targets[k], scratch[k]});
                }
            }
        }
        exits[static_cast<size_t>(i)] = exit_count;
        if (flows && exit_count > 0) flows->push_back({i, kExitNode, exit_count});
    };
    if (group.empty()) {
        for (int i = 0; i < static_cast<int>(departures.size()); ++i) route_one(i);
    } else {
        for (int i : group) route_one(i);
    }
}

std::vector<int64_t> initial_state_of(const ValidatedNetwork& net,
                                      const SimConfig& config) {
    const auto n = static_cast<size_t>(net.spec.node_count());
    if (config.initial_state.empty()) return std::vector<int64_t>(n, 0);
    if (config.initial_state.size() != n) {
        throw SpecError("initial state size does not match node count");
    }
    for (int64_t v : config.initial_state) {
        if (v < 0) throw SpecError("initial state must be non-negative");
    }
    return config.initial_state;
}

void check_counts(std::span<const int64_t> state) {
    for (int64_t v : state) {
        if (v < 0 || v > kCountCeiling) {
            throw std::runtime_error("state counter overflow");
        }
    }
}

template <typename Fn>
void run_parallel(int64_t count, Fn&& fn) {
    const int workers =
        static_cast<int>(std::min<int64_t>(worker_count(), count));
    if (workers <= 1) {
        for (int64_t r = 0; r < count; ++r) fn(r);
        return;
    }
    std::atomic<int64_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const int64_t r = next.fetch_add(1);
                if (r >= count || failed.load()) return;
                try {
                    fn(r);
                } catch (...) {
                    if (!failed.exchange(true)) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

// Shared interval loop; `forward` toggles between the two arrival
// conventions. Processing groups are layers for the layer-batched forward
// kernel, single nodes in topological order otherwise.
RepStats simulate_rep(const ValidatedNetwork& net, const SimConfig& config,
                      const PreparedRouting& prep,
                      const std::vector<std::vector<int>>& groups, bool forward,
                      int64_t rep, const RunOptions& options,
                      Trajectory* trajectory) {
    const int n = net.spec.node_count();
    const int64_t k = interval_count(config);
    const double h = config.step;
    NodeStreams streams(config.base_seed, rep, n,
                        forward ? kForwardDomain : kBackwardDomain,
                        config.common_random_arrivals);

    std::vector<int64_t> state = initial_state_of(net, config);
    detail::RepAccumulator acc(n, k, config.warmup_fraction, options.checkpoints);
    acc.observe(0, state);
    if (trajectory) {
        for (int i = 0; i < n; ++i) trajectory->state_mut(0, i) = state[i];
    }

    std::vector<DepartureQuery> queries(static_cast<size_t>(n));
    std::vector<int64_t> d(static_cast<size_t>(n), 0);
    std::vector<int64_t> a_ex(static_cast<size_t>(n), 0);
    std::vector<int64_t> a_in(static_cast<size_t>(n), 0);
    std::vector<int64_t> exits(static_cast<size_t>(n), 0);
    std::vector<int64_t> servers(static_cast<size_t>(n), 0);
    std::vector<int64_t> scratch;
    std::vector<FlowRecord> flow_buf;

    for (int64_t tau = 1; tau <= k; ++tau) {
        const double mid = (static_cast<double>(tau) - 0.5) * h;
        for (int i = 0; i < n; ++i) {
            servers[static_cast<size_t>(i)] = static_cast<int64_t>(
                net.spec.nodes[static_cast<size_t>(i)].staffing.value_at(mid));
        }
        std::fill(a_in.begin(), a_in.end(), 0);
        std::vector<FlowRecord>* flows = nullptr;
        if (trajectory && trajectory->has_flows()) {
            flow_buf.clear();
            flows = &flow_buf;
        }

        if (!forward) {
            for (int i = 0; i < n; ++i) {
                const auto iu = static_cast<size_t>(i);
                queries[iu] = {state[iu], servers[iu],
                               net.spec.nodes[iu].service_rate, h};
            }
            generate_departure_batch(queries, SamplerKind::Exact,
                                     streams.departures, d);
            route_into(d, prep, streams.routing, {}, flows, a_in, exits, scratch);
            external_arrivals_into(net, tau, h, streams.arrivals, a_ex);
            for (int i = 0; i < n; ++i) {
                const auto iu = static_cast<size_t>(i);
                state[iu] += a_ex[iu] + a_in[iu] - d[iu];
            }
        } else {
            external_arrivals_into(net, tau, h, streams.arrivals, a_ex);
            for (const auto& group : groups) {
                for (int i : group) {
                    const auto iu = static_cast<size_t>(i);
                    queries[iu] = {state[iu] + a_ex[iu] + a_in[iu], servers[iu],
                                   net.spec.nodes[iu].service_rate, h};
                    // Draw per node from its own stream; the layer batch and
                    // the node-by-node order consume streams identically.
                    d[iu] = generate_departure(queries[iu], SamplerKind::Exact,
                                               streams.departures[iu]);
                    state[iu] = queries[iu].initial_count - d[iu];
                }
                route_into(d, prep, streams.routing, group, flows, a_in, exits,
                           scratch);
            }
        }
        check_counts(state);
        acc.observe(tau, state);
        if (trajectory) {
            for (int i = 0; i < n; ++i) {
                const auto iu = static_cast<size_t>(i);
                trajectory->state_mut(tau, i) = state[iu];
                trajectory->departures_mut(tau, i) = d[iu];
                trajectory->external_arrivals_mut(tau, i) = a_ex[iu];
                trajectory->servers_mut(tau, i) = servers[iu];
            }
            if (flows) trajectory->flows_mut(tau) = flow_buf;
        }
    }
    return acc.finish(state);
}

}  // namespace

int worker_count() {
    if (const char* env = std::getenv("QSIM_WORKERS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

SimConfig resolve_config(const ValidatedNetwork& net, SimConfig config) {
    if (config.horizon == 0.0) config.horizon = net.spec.horizon;
    if (config.step <= 0.0 || !std::isfinite(config.step)) {
        throw GridError("step must be positive");
    }
    if (config.horizon <= 0.0 || !std::isfinite(config.horizon)) {
        throw GridError("horizon must be positive");
    }
    const double ratio = config.horizon / config.step;
    const auto k = static_cast<int64_t>(std::llround(ratio));
    if (k < 1 || std::fabs(ratio - static_cast<double>(k)) >
                     1e-9 * std::max(1.0, ratio)) {
        throw GridError("horizon is not an integer multiple of step");
    }
    for (double b : net.spec.breakpoints()) {
        if (b >= config.horizon) continue;
        const double steps = b / config.step;
        if (std::fabs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps)) {
            throw GridError("schedule breakpoint at t=" + std::to_string(b) +
                            " is not on the simulation grid");
        }
    }
    if (config.replications < 1) throw SpecError("replications must be >= 1");
    if (config.warmup_fraction < 0.0 || config.warmup_fraction >= 1.0) {
        throw SpecError("warmup fraction must lie in [0, 1)");
    }
    return config;
}

int64_t interval_count(const SimConfig& config) {
    return static_cast<int64_t>(std::llround(config.horizon / config.step));
}

std::vector<int64_t> sample_external_arrivals(const ValidatedNetwork& net,
                                              int64_t tau, double step,
                                              std::span<RngStream> arrival_streams) {
    std::vector<int64_t> out(static_cast<size_t>(net.spec.node_count()), 0);
    external_arrivals_into(net, tau, step, arrival_streams, out);
    return out;
}

std::vector<int64_t> route_departures(std::span<const int64_t> departures,
                                      const RoutingMatrix& routing,
                                      std::span<RngStream> routing_streams,
                                      std::vector<FlowRecord>* flows,
                                      std::span<int64_t> internal_arrivals) {
    PreparedRouting prep(routing);
    std::vector<int64_t> exits(departures.size(), 0);
    std::vector<int64_t> scratch;
    route_into(departures, prep, routing_streams, {}, flows, internal_arrivals,
               exits, scratch);
    return exits;
}

namespace {

RunResult run_scheme(const ValidatedNetwork& net, const SimConfig& raw,
                     const RunOptions& options, bool forward) {
    const SimConfig config = resolve_config(net, raw);
    if (forward && !net.is_feedforward) {
        throw SpecError("forward scheme requires feedforward network");
    }
    const int n = net.spec.node_count();
    const int64_t k = interval_count(config);

    std::vector<std::vector<int>> groups;
    if (forward) {
        if (net.is_multilayer) {
            groups = net.layers->layers;
        } else {
            for (int i : net.topo_order) groups.push_back({i});
        }
    }
    PreparedRouting prep(net.spec.routing);

    RunResult result;
    result.reps.resize(static_cast<size_t>(config.replications));
    if (options.keep_trajectories) {
        result.trajectories.assign(
            static_cast<size_t>(config.replications),
            Trajectory(forward ? Scheme::Forward : Scheme::Backward, config.step,
                       k, n, config.record_flows));
    }

    const auto start = std::chrono::steady_clock::now();
    run_parallel(config.replications, [&](int64_t rep) {
        Trajectory* traj = options.keep_trajectories
                               ? &result.trajectories[static_cast<size_t>(rep)]
                               : nullptr;
        result.reps[static_cast<size_t>(rep)] = simulate_rep(
            net, config, prep, groups, forward, rep, options, traj);
    });
    const std::chrono::duration<double> elapsed =
        std::chrono::steady_clock::now() - start;

    result.summary = summarize(forward ? Scheme::Forward : Scheme::Backward,
                               result.reps, elapsed.count());
    return result;
}

}  // namespace

RunResult simulate_backward(const ValidatedNetwork& net, const SimConfig& config,
                            const RunOptions& options) {
    return run_scheme(net, config, options, false);
}

RunResult simulate_forward(const ValidatedNetwork& net, const SimConfig& config,
                           const RunOptions& options) {
    return run_scheme(net, config, options, true);
}

AverageResult simulate_average(const ValidatedNetwork& net,
                               const SimConfig& config,
                               const RunOptions& options) {
    AverageResult out;
    out.backward_run = simulate_backward(net, config, options);
    out.forward_run = simulate_forward(net, config, options);
    out.backward = out.backward_run.summary;
    out.forward = out.forward_run.summary;

    // Replication-level averaged estimator; the reported point estimate is
    // the exact mean of the two component estimates.
    std::vector<RepStats> avg_reps(out.backward_run.reps.size());
    for (size_t r = 0; r < avg_reps.size(); ++r) {
        const auto& b = out.backward_run.reps[r];
        const auto& f = out.forward_run.reps[r];
        RepStats a;
        a.node_time_avg.resize(b.node_time_avg.size());
        for (size_t i = 0; i < b.node_time_avg.size(); ++i) {
            a.node_time_avg[i] = 0.5 * (b.node_time_avg[i] + f.node_time_avg[i]);
        }
        a.system_time_avg = 0.5 * (b.system_time_avg + f.system_time_avg);
        a.terminal_state.resize(b.terminal_state.size());
        for (size_t i = 0; i < b.terminal_state.size(); ++i) {
            a.terminal_state[i] = (b.terminal_state[i] + f.terminal_state[i]) / 2;
        }
        avg_reps[r] = std::move(a);
    }
    out.averaged = summarize(Scheme::Average, avg_reps,
                             out.backward.run_seconds + out.forward.run_seconds);
    for (size_t i = 0; i < out.averaged.node_time_avg.size(); ++i) {
        out.averaged.node_time_avg[i] =
            0.5 * (out.backward.node_time_avg[i] + out.forward.node_time_avg[i]);
    }
    out.averaged.system_time_avg =
        0.5 * (out.backward.system_time_avg + out.forward.system_time_avg);
    return out;
}

double recommend_step(const ValidatedNetwork& net, double alpha) {
    if (alpha <= 0.0 || !std::isfinite(alpha)) {
        throw SpecError("recommend_step: alpha must be positive");
    }
    double mu_max = 0.0;
    for (const auto& node : net.spec.nodes) {
        mu_max = std::max(mu_max, node.service_rate);
    }
    const double target = alpha / mu_max;
    const double horizon = net.spec.horizon;
    const std::vector<double> bps = net.spec.breakpoints();

    auto divides = [](double value, double step) {
        const double q = value / step;
        return std::fabs(q - std::round(q)) <= 1e-9 * std::max(1.0, q);
    };

    auto k = static_cast<int64_t>(std::ceil(horizon / target - 1e-9));
    for (; k <= 100'000'000; ++k) {
        const double h = horizon / static_cast<double>(k);
        bool ok = true;
        for (double b : bps) {
            if (!divides(b, h)) {
                ok = false;
                break;
            }
        }
        if (ok) return h;
    }
    throw GridError("recommend_step: no feasible step aligns with the schedule breakpoints");
}

}  // namespace qsim
