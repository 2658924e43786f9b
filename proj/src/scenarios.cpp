#include "qsim/scenarios.hpp"

#include <cmath>

namespace qsim {

namespace {

constexpr double kTargetUtilization = 0.8;

struct Edge {
    int from;
    int to;
    double p;
};

// Builds a constant-parameter spec where every node hits the target
// utilization: external rates are backed out of the traffic fixed point
// given the routing fractions and per-node targets.
NetworkSpec build(int n, const std::vector<int64_t>& servers,
                  const std::vector<Edge>& edges, double horizon) {
    NetworkSpec spec;
    spec.horizon = horizon;
    spec.routing.node_count = n;
    spec.routing.rows.assign(static_cast<size_t>(n), {});
    for (const auto& e : edges) {
        spec.routing.rows[static_cast<size_t>(e.from)].push_back({e.to, e.p});
    }
    std::vector<double> target(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        target[static_cast<size_t>(i)] =
            kTargetUtilization * static_cast<double>(servers[static_cast<size_t>(i)]);
    }
    std::vector<double> inflow(static_cast<size_t>(n), 0.0);
    for (const auto& e : edges) {
        inflow[static_cast<size_t>(e.to)] += e.p * target[static_cast<size_t>(e.from)];
    }
    for (int i = 0; i < n; ++i) {
        const double external = target[static_cast<size_t>(i)] -
                                inflow[static_cast<size_t>(i)];
        if (external < -1e-9) {
            throw SpecError("scenario: routed inflow exceeds the utilization target at node " +
                            std::to_string(i + 1));
        }
        NodeSpec node;
        node.service_rate = 1.0;
        node.staffing = PiecewiseConstant::constant(
            static_cast<double>(servers[static_cast<size_t>(i)]));
        node.external_rate = PiecewiseConstant::constant(std::max(external, 0.0));
        spec.nodes.push_back(std::move(node));
    }
    return spec;
}

Scenario tandem_scenario() {
    Scenario s;
    s.name = "tandem";
    s.spec = build(2, {5, 5}, {{0, 1, 1.0}}, 1000.0);
    s.notes =
        "# tandem\n\n"
        "Two M/M/5 stations in series; all traffic from station 1 continues to\n"
        "station 2 and then leaves. Service rate 1 per server; the external\n"
        "rate puts both nodes at utilization 0.8. All values are synthetic\n"
        "defaults.\n";
    return s;
}

Scenario fan_scenario() {
    Scenario s;
    s.name = "fan";
    s.spec = build(4, {10, 4, 6, 10},
                   {{0, 1, 0.4}, {0, 2, 0.6}, {1, 3, 1.0}, {2, 3, 1.0}}, 1000.0);
    s.notes =
        "# fan\n\n"
        "Three-layer network 1 -> {2, 3} -> 4 with a 40/60 split after the\n"
        "first station. Service rate 1 per server; external arrivals enter at\n"
        "node 1 only and every node runs at utilization 0.8. All values are\n"
        "synthetic defaults.\n";
    return s;
}

Scenario hospital_scenario() {
    // Node order: Triage, Internal Medicine Room, Surgery Room,
    // Ophthalmology Room, Ear/Nose/Throat Room, Orthopedics Room,
    // Resuscitation Room, Management Rooms, I.C.U., Pre/Post-Operative
    // Care, Operation Room, Fixation Room, Internal Department,
    // Intermediate Burn Care, Intensive Burn Care, Burn OR, Orthopedic
    // Care Unit, Orthopedic OR, Ophthalmology OR, Ear/Nose/Throat OR.
    const std::vector<int64_t> servers = {10, 4,  50,  3,  3, 3, 20, 90, 200, 120,
                                          100, 6, 200, 12, 4, 3, 6,  12, 12,  3};
    const std::vector<Edge> edges = {
        {0, 1, 0.20}, {0, 2, 0.15}, {0, 3, 0.10},  {0, 4, 0.10},  {0, 5, 0.15},
        {0, 6, 0.20}, {1, 12, 0.60}, {1, 7, 0.20}, {2, 10, 0.50}, {2, 9, 0.30},
        {3, 18, 0.50}, {4, 19, 0.50}, {5, 17, 0.40}, {5, 11, 0.30},
        {6, 8, 0.50}, {6, 10, 0.30}, {7, 12, 0.30}, {8, 9, 0.20},
        {9, 12, 0.20}, {10, 9, 0.50}, {10, 8, 0.20}, {11, 16, 0.25},
        {13, 14, 0.30}, {13, 15, 0.10}, {14, 15, 0.20}, {17, 16, 0.30},
    };
    Scenario s;
    s.name = "hospital";
    s.spec = build(20, servers, edges, 1000.0);
    s.notes =
        "# hospital\n\n"
        "Twenty-department patient-flow network. The department list and\n"
        "server counts are fixed reference values for this scenario; the\n"
        "routing fractions and arrival rates are synthetic defaults, chosen\n"
        "so the traffic equations put every department at utilization 0.8\n"
        "with unit per-server service rate. The routing graph is feedforward\n"
        "(patients never revisit a department) but not multi-layer, so the\n"
        "forward scheme processes departments in topological order.\n";
    return s;
}

Scenario datacenter_scenario() {
    // Layered switch fabric: 128 edge, 36 fabric, 16 spine, 1 aggregator.
    const int n_edge = 128;
    const int n_fabric = 36;
    const int n_spine = 16;
    const int n = n_edge + n_fabric + n_spine + 1;
    std::vector<int64_t> servers(static_cast<size_t>(n));
    std::vector<Edge> edges;
    const int fabric0 = n_edge;
    const int spine0 = n_edge + n_fabric;
    const int core = n - 1;
    for (int i = 0; i < n_edge; ++i) {
        servers[static_cast<size_t>(i)] = 200;
        for (int f = 0; f < n_fabric; ++f) {
            edges.push_back({i, fabric0 + f, 0.75 / static_cast<double>(n_fabric)});
        }
    }
    for (int f = 0; f < n_fabric; ++f) {
        servers[static_cast<size_t>(fabric0 + f)] = 2000;
        for (int sp = 0; sp < n_spine; ++sp) {
            edges.push_back(
                {fabric0 + f, spine0 + sp, 0.75 / static_cast<double>(n_spine)});
        }
    }
    for (int sp = 0; sp < n_spine; ++sp) {
        servers[static_cast<size_t>(spine0 + sp)] = 5000;
        edges.push_back({spine0 + sp, core, 0.15});
    }
    servers[static_cast<size_t>(core)] = 13800;

    Scenario s;
    s.name = "datacenter";
    s.spec = build(n, servers, edges, 100.0);
    s.notes =
        "# datacenter\n\n"
        "A 181-node, four-layer switch-fabric abstraction: 128 edge nodes,\n"
        "36 fabric nodes, 16 spine nodes and one aggregator (13,800 servers,\n"
        "the largest node). The node and layer counts follow the fabric\n"
        "architecture this scenario abstracts; link multiplicities, routing\n"
        "fractions and all rates are synthetic defaults. Traffic moves up\n"
        "the layers only (feedforward, multi-layer), 75% of each edge/fabric\n"
        "node's completions continue upward, and external rates are chosen\n"
        "so every node runs at utilization 0.8 with unit service rate.\n";
    return s;
}

}  // namespace

std::vector<std::string> scenario_names() {
    return {"tandem", "fan", "hospital", "datacenter"};
}

Scenario make_scenario(const std::string& name) {
    if (name == "tandem") return tandem_scenario();
    if (name == "fan") return fan_scenario();
    if (name == "hospital") return hospital_scenario();
    if (name == "datacenter") return datacenter_scenario();
    throw SpecError("unknown scenario: " + name);
}

}  // namespace qsim
