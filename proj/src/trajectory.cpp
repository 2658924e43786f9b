#include "qsim/trajectory.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "json.hpp"
#include "qsim/stats.hpp"

namespace qsim {

std::string scheme_name(Scheme s) {
    switch (s) {
        case Scheme::Backward: return "backward";
        case Scheme::Forward: return "forward";
        case Scheme::Average: return "average";
        case Scheme::Des: return "des";
    }
    return "unknown";
}

Scheme scheme_from_name(const std::string& name) {
    if (name == "backward") return Scheme::Backward;
    if (name == "forward") return Scheme::Forward;
    if (name == "average") return Scheme::Average;
    if (name == "des") return Scheme::Des;
    throw SpecError("unknown scheme: " + name);
}

Trajectory::Trajectory(Scheme scheme, double step, int64_t intervals,
                       int nodes, bool with_flows)
    : scheme_(scheme),
      step_(step),
      intervals_(intervals),
      nodes_(nodes),
      has_flows_(with_flows) {
    states_.assign(static_cast<size_t>(intervals + 1) * nodes, 0);
    departures_.assign(static_cast<size_t>(intervals) * nodes, 0);
    arrivals_.assign(static_cast<size_t>(intervals) * nodes, 0);
    servers_.assign(static_cast<size_t>(intervals) * nodes, 0);
    if (with_flows) flows_.resize(static_cast<size_t>(intervals));
}

void Trajectory::check_flow_balance() const {
    for (int64_t tau = 1; tau <= intervals_; ++tau) {
        std::vector<int64_t> internal(static_cast<size_t>(nodes_), 0);
        std::vector<int64_t> routed_out(static_cast<size_t>(nodes_), 0);
        if (has_flows_) {
            for (const auto& f : flows(tau)) {
                routed_out[static_cast<size_t>(f.from)] += f.count;
                if (f.to != kExitNode) {
                    internal[static_cast<size_t>(f.to)] += f.count;
                }
            }
        }
        for (int i = 0; i < nodes_; ++i) {
            if (has_flows_ &&
                routed_out[static_cast<size_t>(i)] != departures(tau, i)) {
                throw SpecError("trajectory: routed flow does not match departures");
            }
            const int64_t expect = state(tau - 1, i) - departures(tau, i) +
                                   external_arrivals(tau, i) +
                                   internal[static_cast<size_t>(i)];
            if (has_flows_ && state(tau, i) != expect) {
                throw SpecError("trajectory: flow balance violated");
            }
        }
    }
}

SummaryStats summarize(Scheme scheme, std::span<const RepStats> reps,
                       double run_seconds) {
    SummaryStats out;
    out.scheme = scheme;
    out.replications = static_cast<int64_t>(reps.size());
    out.run_seconds = run_seconds;
    if (reps.empty()) return out;
    const size_t n = reps.front().node_time_avg.size();
    out.node_time_avg.resize(n);
    out.node_se.resize(n);
    out.node_ci_halfwidth.resize(n);
    out.terminal_mean.resize(n);
    std::vector<double> buf(reps.size());
    for (size_t i = 0; i < n; ++i) {
        for (size_t r = 0; r < reps.size(); ++r) buf[r] = reps[r].node_time_avg[i];
        const MeanVar mv = mean_var(buf);
        out.node_time_avg[i] = mv.mean;
        out.node_se[i] = reps.size() > 1 ? mv.std_error() : 0.0;
        out.node_ci_halfwidth[i] = 1.96 * out.node_se[i];
        double term = 0.0;
        for (const auto& r : reps) term += static_cast<double>(r.terminal_state[i]);
        out.terminal_mean[i] = term / static_cast<double>(reps.size());
    }
    for (size_t r = 0; r < reps.size(); ++r) buf[r] = reps[r].system_time_avg;
    const MeanVar mv = mean_var(buf);
    out.system_time_avg = mv.mean;
    out.system_se = reps.size() > 1 ? mv.std_error() : 0.0;
    out.system_ci_halfwidth = 1.96 * out.system_se;
    return out;
}

std::string summary_to_json(const SummaryStats& s) {
    nlohmann::json j;
    j["scheme"] = scheme_name(s.scheme);
    j["replications"] = s.replications;
    j["run_seconds"] = s.run_seconds;
    j["system"] = {{"time_avg", s.system_time_avg},
                   {"se", s.system_se},
                   {"ci_halfwidth", s.system_ci_halfwidth}};
    j["nodes"] = nlohmann::json::array();
    for (size_t i = 0; i < s.node_time_avg.size(); ++i) {
        j["nodes"].push_back({{"node", i + 1},
                              {"time_avg", s.node_time_avg[i]},
                              {"se", s.node_se[i]},
                              {"ci_halfwidth", s.node_ci_halfwidth[i]},
                              {"terminal_mean", s.terminal_mean[i]}});
    }
    return j.dump(2);
}

void write_trajectory_csv(const std::string& path,
                          std::span<const Trajectory> trajectories) {
    std::ofstream out(path);
    if (!out) throw SpecError("cannot write trajectory csv: " + path);
    out << "replication,tau,node,N,D,A_ex\n";
    char line[160];
    for (size_t r = 0; r < trajectories.size(); ++r) {
        const auto& t = trajectories[r];
        for (int64_t tau = 1; tau <= t.intervals(); ++tau) {
            for (int i = 0; i < t.node_count(); ++i) {
                std::snprintf(line, sizeof line, "%zu,%lld,%d,%lld,%lld,%lld\n",
                              r, static_cast<long long>(tau), i,
                              static_cast<long long>(t.state(tau, i)),
                              static_cast<long long>(t.departures(tau, i)),
                              static_cast<long long>(t.external_arrivals(tau, i)));
                out << line;
            }
        }
    }
}

namespace {

constexpr uint32_t kArchiveMagic = 0x41545351;  // "QSTA"
constexpr uint32_t kArchiveVersion = 1;

template <typename T>
void put(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw SpecError("trajectory archive: truncated file");
    return v;
}

void put_i64s(std::ofstream& out, const int64_t* p, size_t count) {
    out.write(reinterpret_cast<const char*>(p),
              static_cast<std::streamsize>(count * sizeof(int64_t)));
}

}  // namespace

void write_trajectory_archive(const std::string& path,
                              std::span<const Trajectory> trajectories) {
    if (trajectories.empty()) {
        throw SpecError("trajectory archive: nothing to write");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SpecError("cannot write trajectory archive: " + path);
    const auto& first = trajectories.front();
    put(out, kArchiveMagic);
    put(out, kArchiveVersion);
    put(out, static_cast<uint32_t>(first.scheme()));
    put(out, first.step());
    put(out, static_cast<uint32_t>(first.node_count()));
    put(out, static_cast<uint64_t>(first.intervals()));
    put(out, static_cast<uint32_t>(trajectories.size()));
    put(out, static_cast<uint8_t>(first.has_flows() ? 1 : 0));

    const size_t n = static_cast<size_t>(first.node_count());
    const size_t k = static_cast<size_t>(first.intervals());
    for (const auto& t : trajectories) {
        if (t.node_count() != first.node_count() ||
            t.intervals() != first.intervals() ||
            t.has_flows() != first.has_flows()) {
            throw SpecError("trajectory archive: mixed trajectory shapes");
        }
        std::vector<int64_t> buf((k + 1) * n);
        for (int64_t tau = 0; tau <= t.intervals(); ++tau)
            for (int i = 0; i < t.node_count(); ++i)
                buf[static_cast<size_t>(tau) * n + static_cast<size_t>(i)] =
                    t.state(tau, i);
        put_i64s(out, buf.data(), (k + 1) * n);
        buf.resize(k * n);
        auto dump = [&](auto getter) {
            for (int64_t tau = 1; tau <= t.intervals(); ++tau)
                for (int i = 0; i < t.node_count(); ++i)
                    buf[static_cast<size_t>(tau - 1) * n + static_cast<size_t>(i)] =
                        getter(tau, i);
            put_i64s(out, buf.data(), k * n);
        };
        dump([&](int64_t tau, int i) { return t.departures(tau, i); });
        dump([&](int64_t tau, int i) { return t.external_arrivals(tau, i); });
        dump([&](int64_t tau, int i) { return t.servers(tau, i); });
        if (t.has_flows()) {
            for (int64_t tau = 1; tau <= t.intervals(); ++tau) {
                const auto& fl = t.flows(tau);
                put(out, static_cast<uint32_t>(fl.size()));
                for (const auto& f : fl) {
                    put(out, static_cast<int32_t>(f.from));
                    put(out, static_cast<int32_t>(f.to));
                    put(out, f.count);
                }
            }
        }
    }
}

std::vector<Trajectory> read_trajectory_archive(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SpecError("cannot open trajectory archive: " + path);
    if (get<uint32_t>(in) != kArchiveMagic) {
        throw SpecError("trajectory archive: bad magic");
    }
    if (get<uint32_t>(in) != kArchiveVersion) {
        throw SpecError("trajectory archive: unsupported version");
    }
    const auto scheme = static_cast<Scheme>(get<uint32_t>(in));
    const double step = get<double>(in);
    const auto nodes = static_cast<int>(get<uint32_t>(in));
    const auto intervals = static_cast<int64_t>(get<uint64_t>(in));
    const auto rep_count = get<uint32_t>(in);
    const bool has_flows = get<uint8_t>(in) != 0;

    std::vector<Trajectory> out;
    out.reserve(rep_count);
    for (uint32_t r = 0; r < rep_count; ++r) {
        Trajectory t(scheme, step, intervals, nodes, has_flows);
        for (int64_t tau = 0; tau <= intervals; ++tau)
            for (int i = 0; i < nodes; ++i) t.state_mut(tau, i) = get<int64_t>(in);
        for (int64_t tau = 1; tau <= intervals; ++tau)
            for (int i = 0; i < nodes; ++i)
                t.departures_mut(tau, i) = get<int64_t>(in);
        for (int64_t tau = 1; tau <= intervals; ++tau)
            for (int i = 0; i < nodes; ++i)
                t.external_arrivals_mut(tau, i) = get<int64_t>(in);
        for (int64_t tau = 1; tau <= intervals; ++tau)
            for (int i = 0; i < nodes; ++i) t.servers_mut(tau, i) = get<int64_t>(in);
        if (has_flows) {
            for (int64_t tau = 1; tau <= intervals; ++tau) {
                const auto count = get<uint32_t>(in);
                auto& fl = t.flows_mut(tau);
                fl.resize(count);
                for (auto& f : fl) {
                    f.from = get<int32_t>(in);
                    f.to = get<int32_t>(in);
                    f.count = get<int64_t>(in);
                }
            }
        }
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace qsim
