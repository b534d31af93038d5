#include "doctest.h"
#include "dnr/io.hpp"
#include "dnr/oracle.hpp"
#include "dnr/scenario.hpp"

#include <cstdio>
#include <random>

using namespace dnr;

namespace {

ScenarioInstance bulk_only_instance(const cases::CaseData& cs) {
    ScenarioInstance s = ScenarioInstance::zeros(cs.grid.node_count());
    s.p_load = cs.p_load_nom;
    s.q_load = cs.q_load_nom;
    double pt = 2.0 * cs.p_load_nom.sum(), qt = 2.0 * cs.q_load_nom.sum();
    std::vector<int> heads = cs.bulk_source_nodes;
    heads.push_back(cs.grid.pcc());
    for (int j : heads) {
        s.p_gen_cap[j] = pt;
        s.q_gen_hi[j] = qt;
        s.q_gen_lo[j] = -qt;
    }
    refresh_x(cs.grid, s);
    return s;
}

// Independent exhaustive oracle for the 6-node grid: enumerates radial switch
// pairs and, per topology, grid-searches the single solar generator's (P, Q)
// on a step-1e-2 lattice while dispatching the remainder at the PCC. Written
// against the constraint definitions directly, not against the QP reduction.
struct DiscretizedResult {
    bool feasible = false;
    double objective = 0.0;
};

DiscretizedResult discretized_oracle(const cases::CaseData& cs, const ScenarioInstance& sc,
                                     int gen_node) {
    const GridModel& g = cs.grid;
    DiscretizedResult best;
    const double step = 1e-2;
    for (const auto& y : enumerate_radial(g)) {
        // tree structure: parent pointers from the PCC
        std::vector<int> parent(g.node_count(), -2), parent_edge(g.node_count(), -1), order;
        {
            std::vector<std::vector<std::pair<int, int>>> adj(g.node_count());
            for (int e = 0; e < g.line_count(); ++e) {
                int s = g.switch_index(e);
                if (s >= 0 && y[s] < 0.5) continue;
                adj[g.line(e).from].push_back({g.line(e).to, e});
                adj[g.line(e).to].push_back({g.line(e).from, e});
            }
            order.push_back(g.pcc());
            parent[g.pcc()] = -1;
            for (size_t h = 0; h < order.size(); ++h)
                for (auto [w, e] : adj[order[h]])
                    if (parent[w] == -2) {
                        parent[w] = order[h];
                        parent_edge[w] = e;
                        order.push_back(w);
                    }
        }
        int np = static_cast<int>(sc.p_gen_cap[gen_node] / step + 0.5);
        int nqlo = static_cast<int>(sc.q_gen_lo[gen_node] / step - 0.5);
        int nqhi = static_cast<int>(sc.q_gen_hi[gen_node] / step + 0.5);
        for (int ip = 0; ip <= np; ++ip) {
            for (int iq = nqlo; iq <= nqhi; ++iq) {
                Vec pg = Vec::Zero(g.node_count()), qg = Vec::Zero(g.node_count());
                pg[gen_node] = ip * step;
                qg[gen_node] = iq * step;
                pg[g.pcc()] = sc.p_load.sum() - pg[gen_node];
                qg[g.pcc()] = sc.q_load.sum() - qg[gen_node];
                if (pg[g.pcc()] < sc.p_gen_lo[g.pcc()] - 1e-12 ||
                    pg[g.pcc()] > sc.p_gen_cap[g.pcc()] + 1e-12)
                    continue;
                if (qg[g.pcc()] < sc.q_gen_lo[g.pcc()] - 1e-12 ||
                    qg[g.pcc()] > sc.q_gen_hi[g.pcc()] + 1e-12)
                    continue;
                // subtree sums give the unique lossless tree flows
                Vec sub_p = sc.p_load - pg, sub_q = sc.q_load - qg;
                for (auto it = order.rbegin(); it != order.rend(); ++it)
                    if (parent[*it] >= 0) {
                        sub_p[parent[*it]] += sub_p[*it];
                        sub_q[parent[*it]] += sub_q[*it];
                    }
                // voltages along root paths; reject sign-inconsistent flows
                Vec v = Vec::Ones(g.node_count());
                bool ok = true;
                double obj = 0.0;
                for (int j : order) {
                    if (parent[j] < 0) continue;
                    const Line& ln = g.line(parent_edge[j]);
                    double fp = sub_p[j], fq = sub_q[j];
                    if (fp * fq < -1e-12) { ok = false; break; }
                    v[j] = v[parent[j]] - 2.0 * (ln.r * fp + ln.x * fq);
                    if (v[j] < g.v_lo() - 1e-12 || v[j] > g.v_hi() + 1e-12) { ok = false; break; }
                    obj += ln.r * (fp * fp + fq * fq);
                }
                if (!ok) continue;
                if (!best.feasible || obj < best.objective) {
                    best.feasible = true;
                    best.objective = obj;
                }
            }
        }
    }
    return best;
}

}  // namespace

TEST_CASE("radial enumeration on the embedded grids") {
    cases::CaseData t6 = cases::make_test6();
    auto tops = enumerate_radial(t6.grid);
    CHECK(tops.size() == 3);  // all three switch pairs close a spanning tree
    for (const auto& y : tops) {
        CHECK(is_radial(t6.grid, y));
        double sum = 0;
        for (double v : y) sum += v;
        CHECK(sum == doctest::Approx(cutoff_L(t6.grid)));
    }
    std::vector<Line> tree_lines;
    for (int j = 1; j < 5; ++j) tree_lines.push_back({j, j - 1, j, 0.05, 0.05, true});
    GridModel tree(5, 0, std::move(tree_lines), 10000.0, 0.5, 1.5);
    CHECK(enumerate_radial(tree).size() == 1);
}

TEST_CASE("fixed-topology dispatch on trivial cases") {
    cases::CaseData t6 = cases::make_test6();
    ScenarioInstance zero = ScenarioInstance::zeros(6);
    // zero loads, zero caps: feasible all-zero dispatch
    FixedTopologySolution s =
        solve_fixed_topology(t6.grid, zero, t6.default_switch_state);
    REQUIRE(s.feasible);
    CHECK(s.objective == doctest::Approx(0.0));
    CHECK(s.kkt_residual <= 1e-6);
    CHECK(s.decision.state.p_gen.lpNorm<Eigen::Infinity>() <= 1e-9);

    ScenarioInstance sc = bulk_only_instance(t6);
    s = solve_fixed_topology(t6.grid, sc, t6.default_switch_state);
    REQUIRE(s.feasible);
    // lossless balance: total generation equals total load
    CHECK(s.decision.state.p_gen.sum() == doctest::Approx(sc.p_load.sum()).epsilon(1e-9));
    ViolationReport rep = check_feasibility(t6.grid, sc, s.decision, 1e-6);
    CHECK(rep.feasible(1e-6));
    CHECK(rep.count_over_eps == 0);
}

TEST_CASE("brute force agrees with per-topology minimum and the oracle contract") {
    cases::CaseData t6 = cases::make_test6();
    ScenarioInstance sc = bulk_only_instance(t6);
    FixedTopologySolution best = brute_force_optimum(t6.grid, sc);
    double min_obj = std::numeric_limits<double>::infinity();
    for (const auto& y : enumerate_radial(t6.grid)) {
        FixedTopologySolution s = solve_fixed_topology(t6.grid, sc, y);
        if (s.feasible) min_obj = std::min(min_obj, s.objective);
    }
    CHECK(best.objective == doctest::Approx(min_obj).epsilon(1e-12));
    ViolationReport rep = check_feasibility(t6.grid, sc, best.decision, 1e-6);
    CHECK(rep.feasible(1e-6));
}

TEST_CASE("matches the independent discretized oracle") {
    cases::CaseData t6 = cases::make_test6();
    std::mt19937_64 rng = make_rng(17);
    std::uniform_real_distribution<double> u(0.5, 1.5);
    const int gen_node = 4;
    for (int trial = 0; trial < 5; ++trial) {
        ScenarioInstance sc = bulk_only_instance(t6);
        for (int j = 1; j < 6; ++j) {
            sc.p_load[j] = std::round(sc.p_load[j] * u(rng) * 100.0) / 100.0;
            sc.q_load[j] = std::round(sc.q_load[j] * u(rng) * 100.0) / 100.0;
        }
        sc.p_gen_cap[gen_node] = 0.04;
        sc.q_gen_hi[gen_node] = 0.02;
        sc.q_gen_lo[gen_node] = -0.02;
        DiscretizedResult ref = discretized_oracle(t6, sc, gen_node);
        REQUIRE(ref.feasible);
        FixedTopologySolution sol = brute_force_optimum(t6.grid, sc);
        CHECK(sol.objective <= ref.objective + 1e-9);       // exact beats lattice
        CHECK(std::abs(sol.objective - ref.objective) <= 1e-4);
    }
}

TEST_CASE("added generation capacity never hurts the optimum") {
    cases::CaseData t6 = cases::make_test6();
    std::mt19937_64 rng = make_rng(29);
    std::uniform_real_distribution<double> u(0.6, 1.4);
    for (int trial = 0; trial < 10; ++trial) {
        ScenarioInstance sc = bulk_only_instance(t6);
        for (int j = 1; j < 6; ++j) {
            sc.p_load[j] *= u(rng);
            sc.q_load[j] *= u(rng);
        }
        sc.p_gen_cap[4] = 0.01;
        sc.q_gen_hi[4] = 0.005;
        sc.q_gen_lo[4] = -0.005;
        double base = brute_force_optimum(t6.grid, sc).objective;
        sc.p_gen_cap[4] *= 3.0;
        sc.q_gen_hi[4] *= 3.0;
        sc.q_gen_lo[4] *= 3.0;
        double relaxed = brute_force_optimum(t6.grid, sc).objective;
        CHECK(relaxed <= base + 1e-10);
    }
}

TEST_CASE("violation accounting is sound per constraint class") {
    cases::CaseData t6 = cases::make_test6();
    ScenarioInstance sc = bulk_only_instance(t6);
    FixedTopologySolution sol = brute_force_optimum(t6.grid, sc);
    ViolationReport clean = check_feasibility(t6.grid, sc, sol.decision, 1e-6);
    REQUIRE(clean.max_inequality <= 1e-6);

    const double m = 0.013;
    DecisionVector bad = sol.decision;
    bad.state.v[2] = t6.grid.v_lo() - m;  // undervoltage by exactly m
    ViolationReport rep = check_feasibility(t6.grid, sc, bad, 1e-6);
    int volt_hits = 0;
    for (const auto& v : rep.over_eps)
        if (v.kind == "voltage") {
            ++volt_hits;
            CHECK(v.amount == doctest::Approx(m).epsilon(1e-10));
            CHECK(v.index == 2);
        }
    CHECK(volt_hits == 1);

    DecisionVector bad2 = sol.decision;
    bad2.state.p_gen[4] = sc.p_gen_cap[4] + m;
    ViolationReport rep2 = check_feasibility(t6.grid, sc, bad2, 1e-6);
    double gen_max = 0.0;
    for (const auto& v : rep2.over_eps)
        if (v.kind == "gen-limit") gen_max = std::max(gen_max, v.amount);
    CHECK(gen_max == doctest::Approx(m).epsilon(1e-10));
}

TEST_CASE("warm start export and round trip") {
    cases::CaseData t6 = cases::make_test6();
    ScenarioInstance sc = bulk_only_instance(t6);
    FixedTopologySolution sol = brute_force_optimum(t6.grid, sc);
    ViolationReport clean = check_feasibility(t6.grid, sc, sol.decision, 1e-6);
    WarmStart full = export_warmstart(t6.grid, sol.decision, clean);
    // complete X_0: PG, QG, V per node; y per switch; z pair per line
    size_t expect = 3 * 6 + 3 + 2 * 6;
    CHECK(full.values.size() == expect);

    // node 1 touches only fixed lines, so the injected voltage violation
    // cannot spill into a switch's conditional Ohm constraint
    DecisionVector bad = sol.decision;
    bad.state.v[1] = t6.grid.v_lo() - 0.05;
    ViolationReport rep = check_feasibility(t6.grid, sc, bad, 1e-6);
    WarmStart part = export_warmstart(t6.grid, bad, rep);
    CHECK(part.values.size() == expect - 1);
    CHECK(part.values.count("V[2]") == 0);  // 1-based key for node index 1
    CHECK(part.values.count("V[3]") == 1);

    write_warmstart("ws_rt.txt", part);
    WarmStart back = read_warmstart("ws_rt.txt");
    CHECK(back.values.size() == part.values.size());
    for (const auto& [k, v] : part.values) {
        REQUIRE(back.values.count(k) == 1);
        CHECK(back.values.at(k) == v);  // lossless via shortest round-trip format
    }
    std::remove("ws_rt.txt");
}
