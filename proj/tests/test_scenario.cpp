#include "doctest.h"
#include "dnr/io.hpp"
#include "dnr/scenario.hpp"

#include <sstream>

using namespace dnr;

TEST_CASE("load perturbation stays inside the 70% band with unit mean") {
    cases::CaseData bw = cases::make_bw33();
    std::mt19937_64 rng = make_rng(42);
    double ratio_sum = 0.0;
    long ratio_n = 0;
    Vec p, q;
    for (int i = 0; i < 3200; ++i) {  // 3200 draws x 32 loaded nodes > 1e5 samples
        perturb_loads(bw.p_load_nom, bw.q_load_nom, rng, p, q);
        for (int j = 0; j < 33; ++j) {
            if (bw.p_load_nom[j] <= 0.0) continue;
            double r = p[j] / bw.p_load_nom[j];
            CHECK(r >= 0.3);
            CHECK(r <= 1.7);
            // constant power factor
            CHECK(q[j] / bw.q_load_nom[j] == doctest::Approx(r).epsilon(1e-12));
            ratio_sum += r;
            ++ratio_n;
        }
    }
    CHECK(ratio_sum / ratio_n == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("daily profile shapes") {
    CHECK(synth_profile(ProfileKind::kSolar, 0.0) == 0.0);
    CHECK(synth_profile(ProfileKind::kSolar, 12.5) > 0.5);

    // residential: exactly two interior local maxima over a fine grid
    int maxima = 0;
    const int steps = 2400;
    auto f = [](double t) { return synth_profile(ProfileKind::kResidentialNominal, t); };
    for (int i = 1; i < steps; ++i) {
        double t0 = 24.0 * (i - 1) / steps, t1 = 24.0 * i / steps, t2 = 24.0 * (i + 1) / steps;
        if (f(t1) > f(t0) && f(t1) > f(t2)) ++maxima;
    }
    CHECK(maxima == 2);

    double weekday_midday = synth_profile(ProfileKind::kOffice, 12.0, 2);
    double weekend = synth_profile(ProfileKind::kOffice, 12.0, 5);
    CHECK(weekend <= 0.3 * weekday_midday);

    for (int k = 0; k < 12; ++k)
        for (int i = 0; i <= 240; ++i) {
            double v = synth_profile(static_cast<ProfileKind>(k), 24.0 * i / 241.0, i % 9);
            CHECK(v >= 0.0);
            CHECK(v <= 1.3);
        }
}

TEST_CASE("dataset construction from the embedded tables") {
    DatasetSpec spec;
    spec.grid_id = "bw33";
    spec.solar_layout = "DD-U";
    spec.solar_mode = SolarMode::kFlat;
    spec.count = 4;
    spec.seed = 9;
    Dataset ds = build_dataset(spec);
    CHECK(ds.solar_nodes.size() == 10);
    // node 4 carries 60 kW in this layout
    CHECK(ds.nameplate[3] == doctest::Approx(60.0 / 10000.0));
    // flat mode: availability = nameplate
    for (int j : ds.solar_nodes)
        CHECK(ds.instances[0].p_gen_cap[j] == doctest::Approx(ds.nameplate[j]));

    // solar penetration vs nominal load ~ 25.3%
    double pen = ds.nameplate.sum() / ds.grid_case.p_load_nom.sum();
    CHECK(pen == doctest::Approx(0.253).epsilon(0.02));

    DatasetSpec tspec;
    tspec.grid_id = "tpc94";
    tspec.solar_layout = "solar-error";
    tspec.solar_mode = SolarMode::kFlat;
    tspec.count = 1;
    tspec.seed = 9;
    Dataset tds = build_dataset(tspec);
    CHECK(tds.nameplate[77] == doctest::Approx(120.0 / 10000.0));
    CHECK(tds.nameplate[80] == doctest::Approx(150.0 / 10000.0));
    CHECK(tds.minutes_per_step == 5.0);

    spec.count = 0;
    CHECK_THROWS(build_dataset(spec));
    spec.count = 1;
    spec.solar_layout = "no-such-layout";
    CHECK_THROWS_AS(build_dataset(spec), UnknownLayout);
}

TEST_CASE("dataset generation is deterministic and pf-consistent") {
    DatasetSpec spec;
    spec.grid_id = "bw33";
    spec.load_mode = LoadMode::kResidential;
    spec.solar_layout = "DD-U";
    spec.solar_mode = SolarMode::kProfile;
    spec.count = 30;
    spec.seed = 77;
    Dataset a = build_dataset(spec);
    Dataset b = build_dataset(spec);
    for (int i = 0; i < spec.count; ++i) {
        CHECK((a.instances[i].p_load - b.instances[i].p_load).lpNorm<Eigen::Infinity>() == 0.0);
        CHECK((a.instances[i].p_gen_cap - b.instances[i].p_gen_cap).lpNorm<Eigen::Infinity>() ==
              0.0);
    }
    for (const auto& inst : a.instances)
        for (int j = 0; j < 33; ++j)
            if (a.grid_case.p_load_nom[j] > 0.0 && inst.p_load[j] > 0.0)
                CHECK(inst.q_load[j] / inst.p_load[j] ==
                      doctest::Approx(a.grid_case.q_load_nom[j] / a.grid_case.p_load_nom[j])
                          .epsilon(1e-9));
    // byte-identical CSV writes
    write_scenarios_csv("sc_a.csv", a);
    write_scenarios_csv("sc_b.csv", b);
    std::ifstream fa("sc_a.csv"), fb("sc_b.csv");
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    CHECK(sa.str() == sb.str());
    CHECK(!sa.str().empty());
    std::remove("sc_a.csv");
    std::remove("sc_b.csv");
}

TEST_CASE("scenario CSV round-trips into identical instances") {
    DatasetSpec spec;
    spec.grid_id = "test6";
    spec.solar_mode = SolarMode::kNone;
    spec.count = 12;
    spec.seed = 5;
    Dataset ds = build_dataset(spec);
    write_scenarios_csv("sc_rt.csv", ds);
    auto back = read_scenarios_csv("sc_rt.csv", ds.grid_case);
    REQUIRE(back.size() == ds.instances.size());
    for (size_t i = 0; i < back.size(); ++i) {
        CHECK((back[i].p_load - ds.instances[i].p_load).lpNorm<Eigen::Infinity>() == 0.0);
        CHECK((back[i].q_load - ds.instances[i].q_load).lpNorm<Eigen::Infinity>() == 0.0);
        CHECK((back[i].p_gen_cap - ds.instances[i].p_gen_cap).lpNorm<Eigen::Infinity>() == 0.0);
        CHECK((back[i].q_gen_hi - ds.instances[i].q_gen_hi).lpNorm<Eigen::Infinity>() == 0.0);
        CHECK((back[i].x - ds.instances[i].x).lpNorm<Eigen::Infinity>() == 0.0);
    }
    std::remove("sc_rt.csv");
}

TEST_CASE("split sizes and determinism") {
    std::vector<int> tr, va, te;
    split_dataset(1000, 0.8, 0.1, 0.1, 3, tr, va, te);
    CHECK(tr.size() == 800);
    CHECK(va.size() == 100);
    CHECK(te.size() == 100);
    std::vector<int> tr2, va2, te2;
    split_dataset(1000, 0.8, 0.1, 0.1, 3, tr2, va2, te2);
    CHECK(tr == tr2);
    CHECK(te == te2);
    // a year of hourly data -> 876 test instances
    split_dataset(8760, 0.8, 0.1, 0.1, 3, tr, va, te);
    CHECK(te.size() == 876);
    CHECK_THROWS(split_dataset(10, 0.5, 0.2, 0.2, 3, tr, va, te));
}
