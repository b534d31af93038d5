#include "doctest.h"
#include "dnr/rounding.hpp"

#include <algorithm>
#include <random>

using namespace dnr;

TEST_CASE("worked rounding example, both modes") {
    Vec z(4);
    z << 0.9, 0.7, 0.4, 0.1;
    Vec out;
    RoundingPlan plan = phyr_round(z, 2, RoundMode::kTrain, &out);
    CHECK(out[0] == 1.0);
    CHECK(out[1] == 0.7);  // free
    CHECK(out[2] == 0.4);  // free
    CHECK(out[3] == 0.0);
    CHECK(plan.forced_one.size() == 1);
    CHECK(plan.forced_zero.size() == 1);
    CHECK(plan.free.size() == 2);

    phyr_round(z, 2, RoundMode::kInference, &out);
    CHECK(out[0] == 1.0);
    CHECK(out[1] == 1.0);
    CHECK(out[2] == 0.0);
    CHECK(out[3] == 0.0);
}

TEST_CASE("two-entry train mode forces nothing") {
    Vec z(2);
    z << 0.8, 0.3;
    Vec out;
    RoundingPlan plan = phyr_round(z, 1, RoundMode::kTrain, &out);
    CHECK(out[0] == 0.8);
    CHECK(out[1] == 0.3);
    CHECK(plan.forced_one.empty());
    CHECK(plan.forced_zero.empty());
    CHECK(plan.free.size() == 2);
}

TEST_CASE("degenerate cutoffs force everything in both modes") {
    Vec z(3);
    z << 0.2, 0.9, 0.5;
    Vec out;
    for (RoundMode mode : {RoundMode::kTrain, RoundMode::kInference}) {
        RoundingPlan p0 = phyr_round(z, 0, mode, &out);
        CHECK(out.sum() == 0.0);
        CHECK(p0.free.empty());
        RoundingPlan p3 = phyr_round(z, 3, mode, &out);
        CHECK(out.sum() == 3.0);
        CHECK(p3.free.empty());
    }
    CHECK_THROWS_AS(phyr_round(z, 4, RoundMode::kTrain, &out), BadCutoff);
    CHECK_THROWS_AS(phyr_round(z, -1, RoundMode::kInference, &out), BadCutoff);
}

TEST_CASE("plan partitions the index set with the documented sizes") {
    std::mt19937_64 rng = make_rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        int m = 2 + static_cast<int>(rng() % 19);
        int L = 1 + static_cast<int>(rng() % (m - 1));
        Vec z(m);
        for (int i = 0; i < m; ++i) z[i] = u(rng);
        Vec out;
        RoundingPlan p = phyr_round(z, L, RoundMode::kTrain, &out);
        CHECK(static_cast<int>(p.forced_one.size()) == L - 1);
        CHECK(static_cast<int>(p.forced_zero.size()) == m - L - 1);
        CHECK(p.free.size() == 2);
        std::vector<int> all = p.forced_one;
        all.insert(all.end(), p.forced_zero.begin(), p.forced_zero.end());
        all.insert(all.end(), p.free.begin(), p.free.end());
        std::sort(all.begin(), all.end());
        for (int i = 0; i < m; ++i) CHECK(all[i] == i);

        phyr_round(z, L, RoundMode::kInference, &out);
        CHECK(out.sum() == doctest::Approx(L));
        // Idempotence under inference.
        Vec out2;
        phyr_round(out, L, RoundMode::kInference, &out2);
        CHECK((out - out2).lpNorm<Eigen::Infinity>() == 0.0);
    }
}

TEST_CASE("permutation equivariance and ranking monotonicity") {
    Vec z(5);
    z << 0.15, 0.95, 0.5, 0.8, 0.05;
    Vec out;
    phyr_round(z, 2, RoundMode::kInference, &out);
    std::vector<int> perm{3, 0, 4, 1, 2};
    Vec zp(5), outp_expect(5), outp;
    for (int i = 0; i < 5; ++i) {
        zp[i] = z[perm[i]];
        outp_expect[i] = out[perm[i]];
    }
    phyr_round(zp, 2, RoundMode::kInference, &outp);
    CHECK((outp - outp_expect).lpNorm<Eigen::Infinity>() == 0.0);

    // Raising every entry without changing the ranking keeps the forced-one set.
    RoundingPlan pa = phyr_round(z, 2, RoundMode::kTrain, &out);
    Vec z2 = z;
    for (int i = 0; i < 5; ++i) z2[i] = std::min(1.0, z[i] * 1.02);
    RoundingPlan pb = phyr_round(z2, 2, RoundMode::kTrain, &out);
    CHECK(pa.forced_one == pb.forced_one);
}

TEST_CASE("rounding gradient: identity on free entries, zero on forced") {
    Vec z(4);
    z << 0.9, 0.7, 0.4, 0.1;
    Vec out;
    RoundingPlan plan = phyr_round(z, 2, RoundMode::kTrain, &out);
    Vec g(4);
    g << 1.0, 2.0, 3.0, 4.0;
    Vec back = phyr_backward(plan, g);
    CHECK(back[0] == 0.0);
    CHECK(back[1] == 2.0);
    CHECK(back[2] == 3.0);
    CHECK(back[3] == 0.0);
}

TEST_CASE("step relaxation values") {
    CHECK(insi(0.0) == doctest::Approx(1.0));        // 2*2/(1+1) - 1
    CHECK(insi(-10.0) == 0.0);                       // positive-part cutoff
    CHECK(insi(10.0) == 1.0);                        // clamped; raw value would be ~3
    CHECK(insi(-0.1) > 0.0);
    CHECK(insi(-0.1) < 1.0);
    // finite difference on the interior region
    double u = -0.2, h = 1e-7;
    double fd = (insi(u + h) - insi(u - h)) / (2 * h);
    CHECK(insi_grad(u) == doctest::Approx(fd).epsilon(1e-5));
}

TEST_CASE("box scaling") {
    CHECK(scale_to_box(0.0, 2.0, 4.0) == doctest::Approx(3.0));
    double lo = 0.87 * 0.87, hi = 1.05 * 1.05;
    for (double raw : {-20.0, 20.0, -3.0, 3.0, 0.0}) {
        double v = scale_to_box(raw, lo, hi);
        CHECK(v > lo);
        CHECK(v < hi);
    }
    CHECK(scale_to_box(20.0, lo, hi) > hi - 1e-8);
    CHECK(scale_to_box(-20.0, lo, hi) < lo + 1e-8);
    CHECK_THROWS_AS(scale_to_box(0.0, 1.0, 1.0), BadBounds);
    double u = 0.3, h = 1e-7;
    double fd = (scale_to_box(u + h, lo, hi) - scale_to_box(u - h, lo, hi)) / (2 * h);
    CHECK(scale_to_box_grad(u, lo, hi) == doctest::Approx(fd).epsilon(1e-6));
}
