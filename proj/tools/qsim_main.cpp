// qsim: simulate Markovian queueing networks with the backward/forward
// Euler engines or the event-driven reference engine, compare them against
// the analytical oracle, fit error-decay slopes, and sample sojourn times
// from stored trajectories.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "qsim/analytics.hpp"
#include "qsim/des.hpp"
#include "qsim/euler.hpp"
#include "qsim/manifest.hpp"
#include "qsim/scenarios.hpp"
#include "qsim/sojourn.hpp"

namespace fs = std::filesystem;
using namespace qsim;

namespace {

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    }
};

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SpecError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw SpecError("cannot write file: " + path);
    out << text;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt4(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

struct CommonArgs {
    std::string spec_path;
    double h = 0.1;
    double horizon = 0.0;
    int64_t reps = 20;
    uint64_t seed = 1;
    double warmup = 0.2;
    std::string out_dir = ".";
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_spec = true) {
    if (with_spec) {
        cmd->add_option("--spec", args.spec_path, "network spec file (JSON)")
            ->required();
    }
    cmd->add_option("--h", args.h, "time step");
    cmd->add_option("--horizon", args.horizon,
                    "simulation horizon (default: the spec's horizon)");
    cmd->add_option("--reps", args.reps, "replication count");
    cmd->add_option("--seed", args.seed, "base seed");
    cmd->add_option("--warmup", args.warmup, "warm-up fraction discarded");
    cmd->add_option("--out", args.out_dir, "output directory");
}

SimConfig config_from(const CommonArgs& args) {
    SimConfig cfg;
    cfg.step = args.h;
    cfg.horizon = args.horizon;
    cfg.replications = args.reps;
    cfg.base_seed = args.seed;
    cfg.warmup_fraction = args.warmup;
    return cfg;
}

std::string canonical_flags(const SimConfig& cfg, const std::string& extra) {
    std::ostringstream ss;
    ss << "h=" << fmt(cfg.step) << ";horizon=" << fmt(cfg.horizon)
       << ";reps=" << cfg.replications << ";seed=" << cfg.base_seed
       << ";warmup=" << fmt(cfg.warmup_fraction)
       << ";flows=" << (cfg.record_flows ? 1 : 0) << ";" << extra;
    return ss.str();
}

int cmd_simulate(const CommonArgs& args, const std::string& scheme_str,
                 bool record_flows, bool write_trajectories) {
    const std::string spec_text = read_file(args.spec_path);
    const ValidatedNetwork net =
        validate_network(NetworkSpec::from_json_string(spec_text));
    SimConfig cfg = config_from(args);
    cfg.scheme = scheme_from_name(scheme_str);
    cfg.record_flows = record_flows;

    fs::create_directories(args.out_dir);
    RunManifest manifest;
    manifest.command = "simulate --scheme " + scheme_str;
    manifest.base_seed = cfg.base_seed;
    manifest.set_digest(spec_text, canonical_flags(cfg, "scheme=" + scheme_str));

    RunOptions options;
    options.keep_trajectories = write_trajectories || record_flows;

    Timer timer;
    std::string summary_json;
    std::vector<Trajectory> trajectories;
    if (cfg.scheme == Scheme::Average) {
        const AverageResult avg = simulate_average(net, cfg, options);
        nlohmann::json j;
        j["average"] = nlohmann::json::parse(summary_to_json(avg.averaged));
        j["backward"] = nlohmann::json::parse(summary_to_json(avg.backward));
        j["forward"] = nlohmann::json::parse(summary_to_json(avg.forward));
        summary_json = j.dump(2);
        trajectories = avg.backward_run.trajectories;
    } else {
        RunResult run;
        if (cfg.scheme == Scheme::Backward) {
            run = simulate_backward(net, cfg, options);
        } else if (cfg.scheme == Scheme::Forward) {
            run = simulate_forward(net, cfg, options);
        } else {
            run = simulate_des(net, cfg, options);
        }
        summary_json = summary_to_json(run.summary);
        trajectories = std::move(run.trajectories);
    }
    manifest.add_phase("simulate", timer.seconds());

    const std::string summary_path = args.out_dir + "/summary.json";
    write_file(summary_path, summary_json + "\n");
    manifest.add_output(summary_path);
    if (options.keep_trajectories) {
        Timer io_timer;
        const std::string csv_path = args.out_dir + "/trajectories.csv";
        write_trajectory_csv(csv_path, trajectories);
        manifest.add_output(csv_path);
        const std::string archive_path = args.out_dir + "/trajectories.qsta";
        write_trajectory_archive(archive_path, trajectories);
        manifest.add_output(archive_path);
        manifest.add_phase("export", io_timer.seconds());
    }
    manifest.save(args.out_dir + "/manifest.json");
    std::cout << summary_json << "\n";
    return 0;
}

int cmd_compare(const CommonArgs& args) {
    const std::string spec_text = read_file(args.spec_path);
    const ValidatedNetwork net =
        validate_network(NetworkSpec::from_json_string(spec_text));
    SimConfig cfg = config_from(args);

    fs::create_directories(args.out_dir);
    RunManifest manifest;
    manifest.command = "compare";
    manifest.base_seed = cfg.base_seed;
    manifest.set_digest(spec_text, canonical_flags(cfg, "cmd=compare"));

    bool have_oracle = true;
    double oracle = 0.0;
    double bound_per_h = 0.0;
    std::vector<double> rates;
    try {
        const RelativeErrorBound reb = relative_error_bound(net);
        oracle = reb.system_mean;
        bound_per_h = reb.re_per_h;
        rates = solve_traffic_equations(net);
    } catch (const SpecError&) {
        have_oracle = false;  // non-constant or unstable spec: no oracle columns
    }

    Timer tb;
    const RunResult backward = simulate_backward(net, cfg);
    const double backward_secs = tb.seconds();

    const bool forward_ok = net.is_feedforward;
    RunResult forward;
    double forward_secs = 0.0;
    if (forward_ok) {
        Timer tf;
        forward = simulate_forward(net, cfg);
        forward_secs = tf.seconds();
    }

    Timer td;
    const RunResult des = simulate_des(net, cfg);
    const double des_secs = td.seconds();

    nlohmann::json report;
    auto push_row = [&](const std::string& name, double estimate, double se,
                        double secs) {
        nlohmann::json row;
        row["scheme"] = name;
        row["run_seconds"] = secs;
        row["estimate"] = estimate;
        if (have_oracle) {
            const ErrorReport er = make_error_report(name, estimate, oracle,
                                                     bound_per_h * cfg.step, se, secs);
            row["oracle"] = oracle;
            row["relative_error"] = er.relative_error;
            row["bound"] = er.bound;
            row["bound_satisfied"] = er.bound_satisfied;
        }
        report["rows"].push_back(row);
        std::cout << name << ": estimate=" << fmt4(estimate)
                  << " run_seconds=" << fmt4(secs);
        if (have_oracle) {
            std::cout << " rel_error="
                      << fmt4((estimate - oracle) / oracle * 100.0) << "%";
        }
        std::cout << "\n";
    };

    push_row("backward", backward.summary.system_time_avg,
             backward.summary.system_se, backward_secs);
    if (forward_ok) {
        push_row("forward", forward.summary.system_time_avg,
                 forward.summary.system_se, forward_secs);
        push_row("average",
                 0.5 * (backward.summary.system_time_avg +
                        forward.summary.system_time_avg),
                 0.5 * std::sqrt(backward.summary.system_se *
                                     backward.summary.system_se +
                                 forward.summary.system_se *
                                     forward.summary.system_se),
                 backward_secs + forward_secs);
    }
    push_row("des", des.summary.system_time_avg, des.summary.system_se, des_secs);
    if (have_oracle) report["oracle"] = oracle;

    report["speedup_backward_vs_des"] = des_secs / backward_secs;
    std::cout << "speedup (des / backward): " << fmt4(des_secs / backward_secs)
              << "\n";

    if (forward_ok && have_oracle) {
        const GapCheck gap =
            gap_identity_check(backward.summary, forward.summary, net, cfg.step);
        report["gap"] = {{"system_gap", gap.system_gap},
                         {"system_target", gap.system_target},
                         {"system_band", gap.system_band},
                         {"per_node_pass", gap.per_node_pass},
                         {"system_pass", gap.system_pass}};
        std::cout << "gap identity: gap=" << fmt4(gap.system_gap)
                  << " target=" << fmt4(gap.system_target)
                  << (gap.system_pass ? " (within 3 SE)" : " (OUTSIDE 3 SE)")
                  << "\n";
        // Dominance on terminal system counts across replications.
        auto terminal_sums = [](const std::vector<RepStats>& reps) {
            std::vector<int64_t> out;
            out.reserve(reps.size());
            for (const auto& r : reps) {
                out.push_back(std::accumulate(r.terminal_state.begin(),
                                              r.terminal_state.end(), int64_t{0}));
            }
            return out;
        };
        const std::vector<int64_t> sf = terminal_sums(forward.reps);
        const std::vector<int64_t> sm = terminal_sums(des.reps);
        const std::vector<int64_t> sb = terminal_sums(backward.reps);
        const DominanceReport dom = dominance_test(sf, sm, sb);
        report["dominance"] = {{"pass", dom.pass},
                               {"worst_margin", dom.worst_margin},
                               {"points", dom.points_checked}};
        std::cout << "dominance (f <= des <= b): "
                  << (dom.pass ? "pass" : "FAIL") << "\n";
    }

    const std::string report_path = args.out_dir + "/compare.json";
    write_file(report_path, report.dump(2) + "\n");
    manifest.add_output(report_path);
    manifest.add_phase("compare", backward_secs + forward_secs + des_secs);
    manifest.save(args.out_dir + "/manifest.json");
    return 0;
}

int cmd_sweep(const CommonArgs& args, const std::string& scheme_str,
              const std::vector<double>& h_values) {
    const std::string spec_text = read_file(args.spec_path);
    const ValidatedNetwork net =
        validate_network(NetworkSpec::from_json_string(spec_text));
    if (h_values.size() < 4) {
        throw SpecError("sweep requires >= 4 step values");
    }
    fs::create_directories(args.out_dir);

    SlopeConfig sc;
    sc.horizon = args.horizon > 0.0 ? args.horizon : net.spec.horizon;
    sc.replications = args.reps;
    sc.base_seed = args.seed;
    sc.warmup_fraction = args.warmup;

    Timer timer;
    const SlopeFit fit = fit_convergence_slope(net, scheme_from_name(scheme_str),
                                               h_values, sc);

    std::ostringstream csv;
    csv << "h,abs_relative_error,se,used\n";
    for (size_t i = 0; i < fit.step_values.size(); ++i) {
        csv << fmt(fit.step_values[i]) << "," << fmt(fit.error_values[i]) << ","
            << fmt(fit.error_se[i]) << "," << (fit.used[i] ? 1 : 0) << "\n";
    }
    const std::string csv_path = args.out_dir + "/sweep.csv";
    write_file(csv_path, csv.str());

    nlohmann::json j;
    j["scheme"] = scheme_str;
    j["fit_ok"] = fit.fit_ok;
    j["slope"] = fit.slope;
    j["intercept"] = fit.intercept;
    j["r_squared"] = fit.r_squared;
    j["slope_ci"] = {fit.slope_ci_low, fit.slope_ci_high};
    j["points_used"] = fit.points_used;
    const std::string fit_path = args.out_dir + "/slope.json";
    write_file(fit_path, j.dump(2) + "\n");

    RunManifest manifest;
    manifest.command = "sweep --scheme " + scheme_str;
    manifest.base_seed = args.seed;
    manifest.set_digest(spec_text, canonical_flags(config_from(args),
                                                   "cmd=sweep;scheme=" + scheme_str));
    manifest.add_phase("sweep", timer.seconds());
    manifest.add_output(csv_path);
    manifest.add_output(fit_path);
    manifest.save(args.out_dir + "/manifest.json");

    std::cout << "slope=" << fmt4(fit.slope) << " r2=" << fmt4(fit.r_squared)
              << " points_used=" << fit.points_used << "\n";
    return 0;
}

int cmd_sojourn(const std::string& archive_path, int node_1based,
                int64_t interval, int64_t samples, uint64_t seed,
                const std::string& out_dir) {
    const std::vector<Trajectory> trajectories =
        read_trajectory_archive(archive_path);
    if (trajectories.empty()) throw SpecError("archive holds no trajectories");
    if (!trajectories.front().has_flows()) {
        throw SpecError("archive was recorded without flows; rerun simulate with --record-flows");
    }
    fs::create_directories(out_dir);

    SojournQuery query;
    query.entry_node = node_1based - 1;
    query.entry_interval = interval;
    query.samples_per_path = samples;

    std::ostringstream csv;
    csv << "replication,sample,total_time,censored\n";
    std::vector<double> completed;
    int64_t censored = 0;
    int64_t total = 0;
    for (size_t r = 0; r < trajectories.size(); ++r) {
        RngStream rng = RngStream::derive(seed, r, StreamPurpose::Sojourn,
                                          static_cast<uint64_t>(node_1based));
        const std::vector<SojournSample> ss =
            sample_sojourns(trajectories[r], query, rng);
        for (size_t k = 0; k < ss.size(); ++k) {
            csv << r << "," << k << "," << fmt(ss[k].total_time) << ","
                << (ss[k].censored ? 1 : 0) << "\n";
            ++total;
            if (ss[k].censored) {
                ++censored;
            } else {
                completed.push_back(ss[k].total_time);
            }
        }
    }
    const std::string csv_path = out_dir + "/sojourn.csv";
    write_file(csv_path, csv.str());

    const double censor_rate =
        total > 0 ? static_cast<double>(censored) / static_cast<double>(total) : 0.0;
    nlohmann::json j;
    j["samples"] = total;
    j["censored"] = censored;
    j["censored_fraction"] = censor_rate;
    if (!completed.empty()) {
        std::sort(completed.begin(), completed.end());
        j["min"] = completed.front();
        j["max"] = completed.back();
        double mean = 0.0;
        for (double v : completed) mean += v;
        j["mean"] = mean / static_cast<double>(completed.size());
        // Histogram on the step grid.
        const double h = trajectories.front().step();
        std::map<int64_t, int64_t> hist;
        for (double v : completed) ++hist[static_cast<int64_t>(std::llround(v / h))];
        for (const auto& [k, c] : hist) {
            j["histogram"].push_back({{"time", static_cast<double>(k) * h},
                                      {"count", c}});
        }
    }
    const std::string hist_path = out_dir + "/sojourn_summary.json";
    write_file(hist_path, j.dump(2) + "\n");

    RunManifest manifest;
    manifest.command = "sojourn";
    manifest.base_seed = seed;
    manifest.set_digest(archive_path,
                        "node=" + std::to_string(node_1based) +
                            ";interval=" + std::to_string(interval) +
                            ";samples=" + std::to_string(samples));
    manifest.add_output(csv_path);
    manifest.add_output(hist_path);
    manifest.save(out_dir + "/manifest.json");

    if (censor_rate > 0.01) {
        std::cerr << "warning: censoring rate " << fmt4(censor_rate * 100.0)
                  << "% exceeds 1%\n";
    }
    std::cout << "samples=" << total << " censored_fraction=" << fmt4(censor_rate)
              << "\n";
    return 0;
}

int cmd_scenarios(const std::string& name, const std::string& out_dir) {
    const Scenario s = make_scenario(name);
    fs::create_directories(out_dir);
    const std::string spec_path = out_dir + "/" + s.name + ".json";
    s.spec.save(spec_path);
    const std::string notes_path = out_dir + "/" + s.name + "_README.md";
    write_file(notes_path, s.notes);
    std::cout << "wrote " << spec_path << " and " << notes_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Euler-approximation simulator for Markovian queueing networks"};
    app.require_subcommand(1);

    CommonArgs sim_args;
    std::string sim_scheme = "backward";
    bool record_flows = false;
    bool write_traj = false;
    auto* sim = app.add_subcommand("simulate", "run one scheme and write summaries");
    add_common(sim, sim_args);
    sim->add_option("--scheme", sim_scheme, "backward|forward|average|des");
    sim->add_flag("--record-flows", record_flows,
                  "store routed flows (enables sojourn sampling)");
    sim->add_flag("--write-trajectories", write_traj,
                  "export per-interval trajectories");

    CommonArgs cmp_args;
    auto* cmp = app.add_subcommand(
        "compare", "side-by-side backward/forward/average/des with oracle checks");
    add_common(cmp, cmp_args);

    CommonArgs sweep_args;
    std::string sweep_scheme = "backward";
    std::vector<double> sweep_h;
    auto* sweep = app.add_subcommand("sweep", "error-decay slope across steps");
    add_common(sweep, sweep_args);
    sweep->add_option("--scheme", sweep_scheme, "backward|forward|average");
    sweep->add_option("--h-list", sweep_h, "step values (>= 4, spanning a decade)")
        ->expected(-1);

    std::string archive_path;
    int soj_node = 1;
    int64_t soj_interval = 1;
    int64_t soj_samples = 1000;
    uint64_t soj_seed = 1;
    std::string soj_out = ".";
    auto* soj = app.add_subcommand("sojourn",
                                   "sample sojourn times from a trajectory archive");
    soj->add_option("--archive", archive_path, "trajectory archive (.qsta)")
        ->required();
    soj->add_option("--node", soj_node, "entry node (1-based)");
    soj->add_option("--interval", soj_interval, "entry interval (1-based)");
    soj->add_option("--samples", soj_samples, "samples per stored path");
    soj->add_option("--seed", soj_seed, "base seed");
    soj->add_option("--out", soj_out, "output directory");

    std::string scenario_name;
    std::string scenario_out = ".";
    auto* scen = app.add_subcommand("scenarios", "write a bundled network spec");
    scen->add_option("name", scenario_name, "tandem|fan|hospital|datacenter")
        ->required();
    scen->add_option("--out", scenario_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            return cmd_simulate(sim_args, sim_scheme, record_flows, write_traj);
        }
        if (cmp->parsed()) return cmd_compare(cmp_args);
        if (sweep->parsed()) return cmd_sweep(sweep_args, sweep_scheme, sweep_h);
        if (soj->parsed()) {
            return cmd_sojourn(archive_path, soj_node, soj_interval, soj_samples,
                               soj_seed, soj_out);
        }
        if (scen->parsed()) return cmd_scenarios(scenario_name, scenario_out);
    } catch (const GridError& e) {
        std::cerr << "E_GRID: " << e.what() << "\n";
        return 3;
    } catch (const SpecError& e) {
        std::cerr << "E_VALIDATION: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "E_INTERNAL: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
