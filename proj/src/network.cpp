#include "qsim/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace qsim {

namespace {
constexpr double kRowSumTolerance = 1e-12;
}

std::vector<double> NetworkSpec::breakpoints() const {
    std::vector<double> bps;
    for (const auto& node : nodes) {
        for (const auto& sched : {node.staffing, node.external_rate}) {
            for (const auto& seg : sched.segments()) {
                if (seg.t_start > 0.0 && seg.t_start < horizon) {
                    bps.push_back(seg.t_start);
                }
            }
        }
    }
    std::sort(bps.begin(), bps.end());
    bps.erase(std::unique(bps.begin(), bps.end()), bps.end());
    return bps;
}

ValidatedNetwork validate_network(const NetworkSpec& spec) {
    const int n = spec.node_count();
    if (n < 1) throw SpecError("network: node count must be >= 1");
    if (spec.horizon <= 0.0 || !std::isfinite(spec.horizon)) {
        throw SpecError("network: horizon must be positive");
    }

    bool constant = true;
    for (int i = 0; i < n; ++i) {
        const auto& node = spec.nodes[static_cast<size_t>(i)];
        const std::string tag = "node " + std::to_string(i + 1);
        if (node.service_rate <= 0.0 || !std::isfinite(node.service_rate)) {
            throw SpecError(tag + ": service_rate must be > 0");
        }
        node.staffing.validate((tag + " staffing").c_str());
        node.external_rate.validate((tag + " external_rate").c_str());
        for (const auto& seg : node.staffing.segments()) {
            if (seg.value < 1.0 || seg.value != std::floor(seg.value)) {
                throw SpecError(tag + ": staffing values must be integers >= 1");
            }
            if (seg.t_start >= spec.horizon && seg.t_start != 0.0) {
                throw SpecError(tag + ": staffing breakpoint beyond horizon");
            }
        }
        for (const auto& seg : node.external_rate.segments()) {
            if (seg.value < 0.0 || !std::isfinite(seg.value)) {
                throw SpecError(tag + ": external_rate values must be >= 0");
            }
            if (seg.t_start >= spec.horizon && seg.t_start != 0.0) {
                throw SpecError(tag + ": external_rate breakpoint beyond horizon");
            }
        }
        constant = constant && node.staffing.is_constant() &&
                   node.external_rate.is_constant();
    }

    if (spec.routing.node_count != n ||
        spec.routing.rows.size() != static_cast<size_t>(n)) {
        throw SpecError("routing: dimension does not match node count");
    }
    for (int i = 0; i < n; ++i) {
        for (const auto& e : spec.routing.rows[static_cast<size_t>(i)]) {
            if (e.to < 0 || e.to >= n) {
                throw SpecError("routing: destination index out of range");
            }
            if (e.p < 0.0 || e.p > 1.0 || !std::isfinite(e.p)) {
                throw SpecError("routing: probability outside [0, 1]");
            }
        }
        if (spec.routing.row_sum(i) > 1.0 + kRowSumTolerance) {
            throw SpecError("routing: row " + std::to_string(i + 1) +
                            " sums to more than 1");
        }
    }

    ValidatedNetwork out;
    out.spec = spec;
    out.constant_parameter = constant;

    // Kahn's algorithm; leftover nodes indicate a directed cycle.
    std::vector<int> indegree(static_cast<size_t>(n), 0);
    for (int i = 0; i < n; ++i) {
        for (const auto& e : spec.routing.rows[static_cast<size_t>(i)]) {
            if (e.p > 0.0) ++indegree[static_cast<size_t>(e.to)];
        }
    }
    std::vector<int> order;
    order.reserve(static_cast<size_t>(n));
    std::vector<int> frontier;
    for (int i = 0; i < n; ++i) {
        if (indegree[static_cast<size_t>(i)] == 0) frontier.push_back(i);
    }
    while (!frontier.empty()) {
        const int i = frontier.front();
        frontier.erase(frontier.begin());
        order.push_back(i);
        for (const auto& e : spec.routing.rows[static_cast<size_t>(i)]) {
            if (e.p > 0.0 && --indegree[static_cast<size_t>(e.to)] == 0) {
                frontier.push_back(e.to);
            }
        }
    }
    out.is_feedforward = order.size() == static_cast<size_t>(n);
    if (out.is_feedforward) {
        out.topo_order = std::move(order);
        try {
            out.layers = decompose_layers(spec);
            out.is_multilayer = true;
        } catch (const SpecError&) {
            out.is_multilayer = false;
        }
    }
    return out;
}

LayerDecomposition decompose_layers(const NetworkSpec& spec) {
    const int n = spec.node_count();
    std::vector<std::vector<int>> preds(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        for (const auto& e : spec.routing.rows[static_cast<size_t>(i)]) {
            if (e.p > 0.0) preds[static_cast<size_t>(e.to)].push_back(i);
        }
    }

    LayerDecomposition out;
    out.layer_of.assign(static_cast<size_t>(n), 0);
    // Sources are pinned to layer 1; every other node must see all of its
    // predecessors in one common layer.
    bool progress = true;
    int assigned = 0;
    while (progress) {
        progress = false;
        for (int j = 0; j < n; ++j) {
            if (out.layer_of[static_cast<size_t>(j)] != 0) continue;
            const auto& ps = preds[static_cast<size_t>(j)];
            if (ps.empty()) {
                out.layer_of[static_cast<size_t>(j)] = 1;
            } else {
                int common = 0;
                bool ready = true;
                for (int p : ps) {
                    const int lp = out.layer_of[static_cast<size_t>(p)];
                    if (lp == 0) {
                        ready = false;
                        break;
                    }
                    if (common == 0) {
                        common = lp;
                    } else if (common != lp) {
                        throw SpecError(
                            "network is not multi-layer: node " +
                            std::to_string(j + 1) +
                            " receives flow from different layers");
                    }
                }
                if (!ready) continue;
                out.layer_of[static_cast<size_t>(j)] = common + 1;
            }
            ++assigned;
            progress = true;
        }
    }
    if (assigned != n) {
        throw SpecError("network is not multi-layer: routing graph has a cycle");
    }

    int depth = 0;
    for (int l : out.layer_of) depth = std::max(depth, l);
    out.layers.assign(static_cast<size_t>(depth), {});
    for (int i = 0; i < n; ++i) {
        out.layers[static_cast<size_t>(out.layer_of[static_cast<size_t>(i)] - 1)]
            .push_back(i);
    }
    // Every edge must advance exactly one layer.
    for (int i = 0; i < n; ++i) {
        for (const auto& e : spec.routing.rows[static_cast<size_t>(i)]) {
            if (e.p > 0.0 &&
                out.layer_of[static_cast<size_t>(e.to)] !=
                    out.layer_of[static_cast<size_t>(i)] + 1) {
                throw SpecError("network is not multi-layer: edge " +
                                std::to_string(i + 1) + " -> " +
                                std::to_string(e.to + 1) +
                                " does not advance one layer");
            }
        }
    }
    return out;
}

namespace {

PiecewiseConstant schedule_from_json(const nlohmann::json& j) {
    std::vector<ScheduleSegment> segs;
    for (const auto& s : j) {
        segs.push_back({s.at("t_start").get<double>(), s.at("value").get<double>()});
    }
    return PiecewiseConstant(std::move(segs));
}

nlohmann::json schedule_to_json(const PiecewiseConstant& sched) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& seg : sched.segments()) {
        j.push_back({{"t_start", seg.t_start}, {"value", seg.value}});
    }
    return j;
}

}  // namespace

std::string NetworkSpec::to_json_string() const {
    nlohmann::json j;
    j["horizon"] = horizon;
    j["nodes"] = nlohmann::json::array();
    for (const auto& node : nodes) {
        j["nodes"].push_back({{"service_rate", node.service_rate},
                              {"staffing", schedule_to_json(node.staffing)},
                              {"external_rate", schedule_to_json(node.external_rate)}});
    }
    j["routing"] = nlohmann::json::array();
    for (int i = 0; i < node_count(); ++i) {
        for (const auto& e : routing.rows[static_cast<size_t>(i)]) {
            j["routing"].push_back({{"from", i}, {"to", e.to}, {"p", e.p}});
        }
    }
    return j.dump(2);
}

NetworkSpec NetworkSpec::from_json_string(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw SpecError(std::string("spec file is not valid JSON: ") + e.what());
    }
    NetworkSpec spec;
    try {
        spec.horizon = j.at("horizon").get<double>();
        for (const auto& nj : j.at("nodes")) {
            NodeSpec node;
            node.service_rate = nj.at("service_rate").get<double>();
            node.staffing = schedule_from_json(nj.at("staffing"));
            node.external_rate = schedule_from_json(nj.at("external_rate"));
            spec.nodes.push_back(std::move(node));
        }
        spec.routing.node_count = spec.node_count();
        spec.routing.rows.assign(spec.nodes.size(), {});
        if (j.contains("routing")) {
            for (const auto& rj : j.at("routing")) {
                const int from = rj.at("from").get<int>();
                const int to = rj.at("to").get<int>();
                if (from < 0 || from >= spec.node_count()) {
                    throw SpecError("routing: source index out of range");
                }
                spec.routing.rows[static_cast<size_t>(from)].push_back(
                    {to, rj.at("p").get<double>()});
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw SpecError(std::string("spec file schema error: ") + e.what());
    }
    return spec;
}

NetworkSpec NetworkSpec::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SpecError("cannot open spec file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json_string(ss.str());
}

void NetworkSpec::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw SpecError("cannot write spec file: " + path);
    out << to_json_string() << "\n";
}

}  // namespace qsim
