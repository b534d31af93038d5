#include "doctest.h"
#include "dnr/completion.hpp"
#include "dnr/oracle.hpp"
#include "dnr/scenario.hpp"

#include <random>

using namespace dnr;

namespace {

ScenarioInstance nominal_instance(const cases::CaseData& cs) {
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

Vec random_raw(const CompletionLayout& L, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 2.0);
    Vec raw(L.raw_size);
    for (int i = 0; i < L.raw_size; ++i) raw[i] = g(rng);
    return raw;
}

}  // namespace

TEST_CASE("all-zero raw outputs land on box midpoints") {
    cases::CaseData bw = cases::make_bw33();
    CompletionLayout L = CompletionLayout::make(bw.grid);
    HeadConfig cfg;
    cfg.use_phyr = false;
    Vec z = assemble_independents(bw.grid, Vec::Zero(L.raw_size), cfg, RoundMode::kTrain);
    CHECK(z[L.off_v] == doctest::Approx(0.5 * (bw.grid.v_lo() + bw.grid.v_hi())));
    CHECK(z[L.off_pij] == doctest::Approx(5.0));  // midpoint of [0, 10]
    CHECK(z[L.off_y] == doctest::Approx(0.5));    // sigmoid head at 0
    CHECK(z[L.off_zji] == doctest::Approx(1.0));  // step relaxation value at 0
    CHECK_THROWS_AS(assemble_independents(bw.grid, Vec::Zero(3), cfg, RoundMode::kTrain),
                    DimensionMismatch);
}

TEST_CASE("completion zeroes the equality residuals on random inputs") {
    cases::CaseData bw = cases::make_bw33();
    ScenarioInstance sc = nominal_instance(bw);
    CompletionLayout L = CompletionLayout::make(bw.grid);
    std::mt19937_64 rng = make_rng(21);
    HeadConfig cfg;
    for (int trial = 0; trial < 300; ++trial) {
        Vec raw = random_raw(L, rng);
        Vec z = assemble_independents(bw.grid, raw, cfg, RoundMode::kTrain);
        DecisionVector d = complete(bw.grid, sc, z);
        Vec r = distflow_residuals(bw.grid, d.topo, d.state);
        CHECK(r.lpNorm<Eigen::Infinity>() <= 1e-10);
        // direction-sum relations exact
        for (int e = 0; e < 37; ++e) {
            int s = bw.grid.switch_index(e);
            double want = s >= 0 ? d.topo.y[s] : 1.0;
            CHECK(d.topo.z_dir[e][0] + d.topo.z_dir[e][1] == doctest::Approx(want).epsilon(1e-14));
        }
        for (int j = 0; j < 33; ++j) {
            if (j == bw.grid.pcc()) continue;
            CHECK(d.state.v[j] > bw.grid.v_lo());
            CHECK(d.state.v[j] < bw.grid.v_hi());
        }
        CHECK(d.state.v[bw.grid.pcc()] == 1.0);
    }
}

TEST_CASE("three-node chain: PCC generation balances the leaf load") {
    std::vector<Line> lines{{1, 0, 1, 0.05, 0.04, false}, {2, 1, 2, 0.05, 0.04, false},
                            {3, 0, 2, 0.05, 0.04, true}};
    GridModel g(3, 0, std::move(lines), 10000.0, 0.5, 1.5);
    ScenarioInstance sc = ScenarioInstance::zeros(3);
    sc.p_load[2] = 1.0;
    CompletionLayout L = CompletionLayout::make(g);
    Vec z = Vec::Zero(L.size);
    // open switch, forward direction on both chain lines, flat voltage profile
    z[L.off_zji + 0] = 0.0;
    z[L.off_zji + 1] = 0.0;
    z[L.off_zji + 2] = 0.0;
    z[L.off_v + 0] = 1.0 - 2.0 * 0.05 * 1.0;
    z[L.off_v + 1] = z[L.off_v + 0] - 2.0 * 0.05 * 1.0;
    z[L.off_pij + 0] = 1.0;
    z[L.off_pij + 1] = 1.0;
    DecisionVector d = complete(g, sc, z);
    CHECK(d.state.p_gen[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(d.state.p_gen[1] == doctest::Approx(0.0));
    CHECK(d.state.p_gen[2] == doctest::Approx(0.0));
    CHECK(d.state.q_ij[0] == doctest::Approx(0.0));  // voltage drop fully explained by P
    Vec r = distflow_residuals(g, d.topo, d.state);
    CHECK(r.lpNorm<Eigen::Infinity>() <= 1e-14);
}

TEST_CASE("completion adjoint matches finite differences") {
    cases::CaseData t6 = cases::make_test6();
    ScenarioInstance sc = nominal_instance(t6);
    CompletionLayout L = CompletionLayout::make(t6.grid);
    std::mt19937_64 rng = make_rng(33);
    std::normal_distribution<double> g(0.0, 1.0);
    Vec z(L.size);
    for (int i = 0; i < L.size; ++i) z[i] = 0.3 * g(rng) + 0.5;

    // random linear functional over the full decision
    DecisionGrad w = DecisionGrad::zeros(t6.grid);
    for (int i = 0; i < w.v.size(); ++i) w.v[i] = g(rng);
    for (int i = 0; i < w.p_ij.size(); ++i) {
        w.p_ij[i] = g(rng);
        w.p_ji[i] = g(rng);
        w.q_ij[i] = g(rng);
        w.q_ji[i] = g(rng);
        w.z_ij[i] = g(rng);
        w.z_ji[i] = g(rng);
    }
    for (int i = 0; i < w.p_gen.size(); ++i) {
        w.p_gen[i] = g(rng);
        w.q_gen[i] = g(rng);
    }
    auto dot = [&](const DecisionVector& d) {
        double s = d.state.v.dot(w.v) + d.state.p_ij.dot(w.p_ij) + d.state.p_ji.dot(w.p_ji) +
                   d.state.q_ij.dot(w.q_ij) + d.state.q_ji.dot(w.q_ji) +
                   d.state.p_gen.dot(w.p_gen) + d.state.q_gen.dot(w.q_gen);
        for (size_t e = 0; e < d.topo.z_dir.size(); ++e)
            s += d.topo.z_dir[e][0] * w.z_ij[e] + d.topo.z_dir[e][1] * w.z_ji[e];
        return s;
    };
    Vec gz = complete_backward(t6.grid, w);
    const double h = 1e-6;
    for (int i = 0; i < L.size; ++i) {
        Vec zp = z, zm = z;
        zp[i] += h;
        zm[i] -= h;
        double fd = (dot(complete(t6.grid, sc, zp)) - dot(complete(t6.grid, sc, zm))) / (2 * h);
        CHECK(fd == doctest::Approx(gz[i]).epsilon(1e-6).scale(1.0));
    }
}

TEST_CASE("training loss reduces to the objective when the penalty is off") {
    cases::CaseData t6 = cases::make_test6();
    ScenarioInstance sc = nominal_instance(t6);
    CompletionLayout L = CompletionLayout::make(t6.grid);
    std::mt19937_64 rng = make_rng(4);
    HeadConfig cfg;
    Vec raw = Vec::Zero(L.raw_size);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int i = 0; i < L.raw_size; ++i) raw[i] = g(rng);
    Vec z = assemble_independents(t6.grid, raw, cfg, RoundMode::kTrain);
    DecisionVector d = complete(t6.grid, sc, z);
    LossOptions zero;
    zero.lambda = 0.0;
    CHECK(training_loss(t6.grid, sc, d, zero) == doctest::Approx(objective_f(t6.grid, d.state)));
    LossOptions strong;
    strong.lambda = 100.0;
    CHECK(training_loss(t6.grid, sc, d, strong) >= training_loss(t6.grid, sc, d, zero));
}

TEST_CASE("oracle optimum has zero penalty, so loss equals objective") {
    cases::CaseData t6 = cases::make_test6();
    ScenarioInstance sc = nominal_instance(t6);
    FixedTopologySolution sol = brute_force_optimum(t6.grid, sc);
    LossOptions opt;
    double l = training_loss(t6.grid, sc, sol.decision, opt);
    CHECK(l == doctest::Approx(sol.objective).epsilon(1e-9));
}

TEST_CASE("dependent block is invariant to probability noise that rounds identically") {
    cases::CaseData t6 = cases::make_test6();
    ScenarioInstance sc = nominal_instance(t6);
    CompletionLayout L = CompletionLayout::make(t6.grid);
    std::mt19937_64 rng = make_rng(8);
    std::normal_distribution<double> g(0.0, 1.0);
    Vec raw(L.raw_size);
    for (int i = 0; i < L.raw_size; ++i) raw[i] = g(rng);
    HeadConfig cfg;  // SiPhyR-style
    Vec z1 = assemble_independents(t6.grid, raw, cfg, RoundMode::kInference);
    Vec raw2 = raw;
    // nudge switch logits without reordering them
    for (int s = 0; s < t6.grid.switch_count(); ++s) raw2[L.off_y + s] += 1e-4 * (s + 1);
    Vec z2 = assemble_independents(t6.grid, raw2, cfg, RoundMode::kInference);
    DecisionVector d1 = complete(t6.grid, sc, z1);
    DecisionVector d2 = complete(t6.grid, sc, z2);
    CHECK((d1.state.p_gen - d2.state.p_gen).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((d1.state.q_gen - d2.state.q_gen).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((d1.state.q_ij - d2.state.q_ij).lpNorm<Eigen::Infinity>() == 0.0);
}
