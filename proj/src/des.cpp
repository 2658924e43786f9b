#include "qsim/des.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <queue>
#include <thread>

#include "rep_accumulator.hpp"

namespace qsim {

namespace {

constexpr uint64_t kDesDomain = 3;

enum class EventKind : uint8_t { ExternalArrival, ServiceCompletion };

struct Event {
    double time = 0.0;
    uint64_t sequence = 0;  // makes the ordering total and deterministic
    EventKind kind = EventKind::ExternalArrival;
    int node = 0;
    int slot = 0;
    uint64_t epoch = 0;
};

struct EventLater {
    bool operator()(const Event& a, const Event& b) const {
        if (a.time != b.time) return a.time > b.time;
        return a.sequence > b.sequence;
    }
};

using EventHeap = std::priority_queue<Event, std::vector<Event>, EventLater>;

struct Engine {
    const ValidatedNetwork& net;
    const SimConfig& config;
    const SojournProbe* probe;
    int64_t rep;

    int n;
    int64_t intervals;
    double h;
    bool track_flows = false;
    EventHeap heap;
    uint64_t next_sequence = 0;
    std::vector<NodeRuntime> nodes;
    std::vector<RngStream> arrival_streams;
    std::vector<RngStream> service_streams;
    std::vector<RngStream> routing_streams;
    // Per-interval tallies for the trajectory record.
    std::vector<int64_t> interval_departures;
    std::vector<int64_t> interval_arrivals;
    std::vector<FlowRecord> interval_flows;
    std::vector<double> sojourns;

    Engine(const ValidatedNetwork& net_, const SimConfig& config_,
           const SojournProbe* probe_, int64_t rep_)
        : net(net_), config(config_), probe(probe_), rep(rep_) {
        n = net.spec.node_count();
        intervals = interval_count(config);
        h = config.step;
        nodes.resize(static_cast<size_t>(n));
        interval_departures.assign(static_cast<size_t>(n), 0);
        interval_arrivals.assign(static_cast<size_t>(n), 0);
        for (int i = 0; i < n; ++i) {
            const auto node = static_cast<uint64_t>(i);
            const auto r = static_cast<uint64_t>(rep);
            arrival_streams.push_back(RngStream::derive(
                config.base_seed, r, StreamPurpose::Arrivals, node, kDesDomain));
            service_streams.push_back(RngStream::derive(
                config.base_seed, r, StreamPurpose::Departures, node, kDesDomain));
            routing_streams.push_back(RngStream::derive(
                config.base_seed, r, StreamPurpose::Routing, node, kDesDomain));
        }
    }

    void push(Event e) {
        e.sequence = next_sequence++;
        heap.push(e);
    }

    void schedule_service(int node_idx, int slot, double now) {
        auto& node = nodes[static_cast<size_t>(node_idx)];
        const double rate = net.spec.nodes[static_cast<size_t>(node_idx)].service_rate;
        const double t = now + sample_exponential(
                                   service_streams[static_cast<size_t>(node_idx)], rate);
        push({t, 0, EventKind::ServiceCompletion, node_idx, slot,
              node.slots[static_cast<size_t>(slot)].epoch});
    }

    // Next external arrival after `t`, honoring the piecewise-constant rate
    // segment by segment (memorylessness makes the per-segment restart exact).
    double next_arrival_time(int node_idx, double t) {
        const auto& sched =
            net.spec.nodes[static_cast<size_t>(node_idx)].external_rate;
        const auto& segs = sched.segments();
        size_t k = 0;
        while (k + 1 < segs.size() && segs[k + 1].t_start <= t) ++k;
        for (;;) {
            const double rate = segs[k].value;
            const double seg_end =
                k + 1 < segs.size() ? segs[k + 1].t_start : config.horizon + 1.0;
            if (rate > 0.0) {
                const double cand =
                    t + sample_exponential(arrival_streams[static_cast<size_t>(node_idx)],
                                           rate);
                if (cand <= seg_end) return cand;
            }
            if (k + 1 >= segs.size()) return config.horizon + 1.0;
            t = seg_end;
            ++k;
        }
    }

    void enter_node(int node_idx, DesCustomer customer, double now) {
        auto& node = nodes[static_cast<size_t>(node_idx)];
        ++node.in_system;
        for (int64_t s = 0; s < node.active_servers; ++s) {
            auto& slot = node.slots[static_cast<size_t>(s)];
            if (!slot.busy) {
                slot.busy = true;
                slot.customer = customer;
                schedule_service(node_idx, static_cast<int>(s), now);
                return;
            }
        }
        node.waiting.push_back(customer);
    }

    void route_customer(int from, DesCustomer customer, double now) {
        double u = routing_streams[static_cast<size_t>(from)].next_double();
        for (const auto& e : net.spec.routing.rows[static_cast<size_t>(from)]) {
            if (u < e.p) {
                if (track_flows) interval_flows.push_back({from, e.to, 1});
                enter_node(e.to, customer, now);
                return;
            }
            u -= e.p;
        }
        if (track_flows) interval_flows.push_back({from, kExitNode, 1});
        if (customer.probed) sojourns.push_back(now - customer.system_entry);
    }

    // Staffing for the interval starting at grid time `now`; evaluated at
    // the interval midpoint so boundary rounding cannot pick the old
    // segment.
    void apply_staffing(double now) {
        for (int i = 0; i < n; ++i) {
            const auto m = static_cast<int64_t>(
                net.spec.nodes[static_cast<size_t>(i)].staffing.value_at(now +
                                                                         0.5 * h));
            auto& node = nodes[static_cast<size_t>(i)];
            if (m == node.active_servers) continue;
            for (int slot : staffing_change_settlement(node, m)) {
                schedule_service(i, slot, now);
            }
        }
    }

    RepStats run(const RunOptions& options, Trajectory* trajectory) {
        track_flows = trajectory != nullptr && trajectory->has_flows();
        std::vector<int64_t> init = config.initial_state;
        if (init.empty()) init.assign(static_cast<size_t>(n), 0);
        if (init.size() != static_cast<size_t>(n)) {
            throw SpecError("initial state size does not match node count");
        }
        apply_staffing(0.0);
        for (int i = 0; i < n; ++i) {
            for (int64_t c = 0; c < init[static_cast<size_t>(i)]; ++c) {
                enter_node(i, DesCustomer{0.0, false}, 0.0);
            }
        }
        for (int i = 0; i < n; ++i) {
            const double t = next_arrival_time(i, 0.0);
            if (t <= config.horizon) {
                push({t, 0, EventKind::ExternalArrival, i, 0, 0});
            }
        }

        detail::RepAccumulator acc(n, intervals, config.warmup_fraction,
                                   options.checkpoints);
        std::vector<int64_t> state(static_cast<size_t>(n), 0);
        auto capture_state = [&] {
            for (int i = 0; i < n; ++i) {
                state[static_cast<size_t>(i)] = nodes[static_cast<size_t>(i)].in_system;
            }
        };
        capture_state();
        acc.observe(0, state);
        if (trajectory) {
            for (int i = 0; i < n; ++i) {
                trajectory->state_mut(0, i) = state[static_cast<size_t>(i)];
            }
        }

        int64_t grid = 0;  // last recorded grid index
        auto close_intervals_until = [&](double event_time) {
            while (grid < intervals &&
                   event_time > static_cast<double>(grid + 1) * h) {
                ++grid;
                flush_interval(grid, acc, state, trajectory, options);
                apply_staffing(static_cast<double>(grid) * h);
            }
        };

        while (!heap.empty()) {
            const Event ev = heap.top();
            heap.pop();
            if (ev.time > config.horizon) break;
            close_intervals_until(ev.time);
            const int64_t tau = grid + 1;  // interval this event belongs to

            if (ev.kind == EventKind::ExternalArrival) {
                DesCustomer customer;
                customer.system_entry = ev.time;
                customer.probed = probe != nullptr && ev.node == probe->node &&
                                  ev.time >= probe->window_start &&
                                  ev.time < probe->window_end;
                enter_node(ev.node, customer, ev.time);
                if (tau <= intervals) {
                    interval_arrivals[static_cast<size_t>(ev.node)] += 1;
                }
                const double t = next_arrival_time(ev.node, ev.time);
                if (t <= config.horizon) {
                    push({t, 0, EventKind::ExternalArrival, ev.node, 0, 0});
                }
            } else {
                auto& node = nodes[static_cast<size_t>(ev.node)];
                if (ev.slot >= node.active_servers ||
                    node.slots[static_cast<size_t>(ev.slot)].epoch != ev.epoch ||
                    !node.slots[static_cast<size_t>(ev.slot)].busy) {
                    continue;  // cancelled by a staffing change
                }
                auto& slot = node.slots[static_cast<size_t>(ev.slot)];
                const DesCustomer customer = slot.customer;
                slot.busy = false;
                --node.in_system;
                if (tau <= intervals) {
                    interval_departures[static_cast<size_t>(ev.node)] += 1;
                }
                if (!node.waiting.empty()) {
                    slot.busy = true;
                    slot.customer = node.waiting.front();
                    node.waiting.pop_front();
                    schedule_service(ev.node, ev.slot, ev.time);
                }
                route_customer(ev.node, customer, ev.time);
            }
        }
        while (grid < intervals) {
            ++grid;
            flush_interval(grid, acc, state, trajectory, options);
            apply_staffing(static_cast<double>(grid) * h);
        }
        capture_state();
        return acc.finish(state);
    }

    void flush_interval(int64_t tau, detail::RepAccumulator& acc,
                        std::vector<int64_t>& state, Trajectory* trajectory,
                        const RunOptions&) {
        for (int i = 0; i < n; ++i) {
            state[static_cast<size_t>(i)] = nodes[static_cast<size_t>(i)].in_system;
        }
        acc.observe(tau, state);
        if (trajectory) {
            const double mid = (static_cast<double>(tau) - 0.5) * h;
            for (int i = 0; i < n; ++i) {
                const auto iu = static_cast<size_t>(i);
                trajectory->state_mut(tau, i) = state[iu];
                trajectory->departures_mut(tau, i) = interval_departures[iu];
                trajectory->external_arrivals_mut(tau, i) = interval_arrivals[iu];
                trajectory->servers_mut(tau, i) = static_cast<int64_t>(
                    net.spec.nodes[iu].staffing.value_at(mid));
            }
            if (trajectory->has_flows()) {
                trajectory->flows_mut(tau) = interval_flows;
            }
        }
        std::fill(interval_departures.begin(), interval_departures.end(), 0);
        std::fill(interval_arrivals.begin(), interval_arrivals.end(), 0);
        interval_flows.clear();
    }
};

template <typename Fn>
void run_reps(int64_t count, Fn&& fn) {
    int workers = worker_count();
    workers = static_cast<int>(std::min<int64_t>(workers, count));
    if (workers <= 1) {
        for (int64_t r = 0; r < count; ++r) fn(r);
        return;
    }
    std::atomic<int64_t> next{0};
    std::vector<std::thread> pool;
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

DesResult simulate_des_impl(const ValidatedNetwork& net, const SimConfig& raw,
                            const SojournProbe* probe, const RunOptions& options) {
    const SimConfig config = resolve_config(net, raw);
    const int n = net.spec.node_count();
    const int64_t k = interval_count(config);

    DesResult out;
    out.run.reps.resize(static_cast<size_t>(config.replications));
    out.sojourn_samples.resize(static_cast<size_t>(config.replications));
    if (options.keep_trajectories) {
        out.run.trajectories.assign(
            static_cast<size_t>(config.replications),
            Trajectory(Scheme::Des, config.step, k, n, config.record_flows));
    }

    const auto start = std::chrono::steady_clock::now();
    run_reps(config.replications, [&](int64_t rep) {
        Engine engine(net, config, probe, rep);
        Trajectory* traj = options.keep_trajectories
                               ? &out.run.trajectories[static_cast<size_t>(rep)]
                               : nullptr;
        out.run.reps[static_cast<size_t>(rep)] = engine.run(options, traj);
        out.sojourn_samples[static_cast<size_t>(rep)] = std::move(engine.sojourns);
    });
    const std::chrono::duration<double> elapsed =
        std::chrono::steady_clock::now() - start;
    out.run.summary = summarize(Scheme::Des, out.run.reps, elapsed.count());
    return out;
}

}  // namespace

std::vector<int> staffing_change_settlement(NodeRuntime& node, int64_t new_servers) {
    std::vector<int> to_schedule;
    if (new_servers < 1) throw SpecError("staffing must stay >= 1");
    const int64_t old_servers = node.active_servers;
    if (new_servers < old_servers) {
        // Cancel the services beyond the new count; interrupted customers
        // rejoin the queue head.
        for (int64_t s = new_servers; s < old_servers; ++s) {
            auto& slot = node.slots[static_cast<size_t>(s)];
            ++slot.epoch;
            if (slot.busy) {
                slot.busy = false;
                node.waiting.push_front(slot.customer);
            }
        }
    }
    node.active_servers = new_servers;
    if (static_cast<int64_t>(node.slots.size()) < new_servers) {
        node.slots.resize(static_cast<size_t>(new_servers));
    }
    for (int64_t s = 0; s < new_servers && !node.waiting.empty(); ++s) {
        auto& slot = node.slots[static_cast<size_t>(s)];
        if (slot.busy) continue;
        slot.busy = true;
        slot.customer = node.waiting.front();
        node.waiting.pop_front();
        ++slot.epoch;
        to_schedule.push_back(static_cast<int>(s));
    }
    return to_schedule;
}

RunResult simulate_des(const ValidatedNetwork& net, const SimConfig& config,
                       const RunOptions& options) {
    return simulate_des_impl(net, config, nullptr, options).run;
}

DesResult simulate_des_probed(const ValidatedNetwork& net, const SimConfig& config,
                              const SojournProbe& probe,
                              const RunOptions& options) {
    return simulate_des_impl(net, config, &probe, options);
}

}  // namespace qsim
