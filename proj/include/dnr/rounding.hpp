#pragma once

#include "dnr/common.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace dnr {

enum class RoundMode { kTrain, kInference };

/// Record of one rounding pass: which entries were forced to 1 / 0 and which
/// were left free. The permutation is frozen from the forward pass so the
/// backward pass can route gradients (identity on free entries, zero on
/// forced ones).
struct RoundingPlan {
    int cutoff = 0;
    RoundMode mode = RoundMode::kInference;
    std::vector<int> sorted_indices;  // descending by probability, stable
    std::vector<int> forced_one;
    std::vector<int> forced_zero;
    std::vector<int> free;
};

/// Cardinality-constrained rounding of switch probabilities. Sorts
/// descending (stable on index) and forces entries to binary values so that
/// the closed-switch count matches the cutoff:
///   inference: top L -> 1, rest -> 0;
///   train:     top L-1 -> 1, bottom m-L-1 -> 0, the two middle entries pass
///              through unchanged so gradient information is retained.
/// Degenerate cutoffs L=0 / L=m force everything with no free entries.
inline RoundingPlan phyr_round(const Vec& probs, int cutoff, RoundMode mode, Vec* out) {
    const int m = static_cast<int>(probs.size());
    if (cutoff < 0 || cutoff > m)
        throw BadCutoff("phyr_round: cutoff " + std::to_string(cutoff) + " outside [0, m]");
    RoundingPlan plan;
    plan.cutoff = cutoff;
    plan.mode = mode;
    plan.sorted_indices.resize(m);
    std::iota(plan.sorted_indices.begin(), plan.sorted_indices.end(), 0);
    std::stable_sort(plan.sorted_indices.begin(), plan.sorted_indices.end(),
                     [&](int a, int b) { return probs[a] > probs[b]; });
    *out = probs;
    int n_one, n_zero;
    if (mode == RoundMode::kInference || cutoff == 0 || cutoff == m) {
        n_one = cutoff;
        n_zero = m - cutoff;
    } else {
        n_one = cutoff - 1;
        n_zero = m - cutoff - 1;
    }
    for (int r = 0; r < m; ++r) {
        int idx = plan.sorted_indices[r];
        if (r < n_one) {
            (*out)[idx] = 1.0;
            plan.forced_one.push_back(idx);
        } else if (r >= m - n_zero) {
            (*out)[idx] = 0.0;
            plan.forced_zero.push_back(idx);
        } else {
            plan.free.push_back(idx);
        }
    }
    return plan;
}

/// Gradient contract of phyr_round: identity on free entries, zero on forced.
inline Vec phyr_backward(const RoundingPlan& plan, const Vec& grad_out) {
    Vec g = Vec::Zero(grad_out.size());
    for (int idx : plan.free) g[idx] = grad_out[idx];
    return g;
}

/// Differentiable step relaxation sigma(u) = [2(1+mu)/(mu + e^{-tau u}) - 1]_+
/// clamped above at 1 (the printed form exceeds 1 for large arguments).
inline double insi(double u, double tau = 5.0, double mu = 1.0) {
    double raw = 2.0 * (1.0 + mu) / (mu + std::exp(-tau * u)) - 1.0;
    return std::min(1.0, std::max(0.0, raw));
}

inline double insi_grad(double u, double tau = 5.0, double mu = 1.0) {
    double e = std::exp(-tau * u);
    double raw = 2.0 * (1.0 + mu) / (mu + e) - 1.0;
    if (raw <= 0.0 || raw >= 1.0) return 0.0;
    double d = mu + e;
    return 2.0 * (1.0 + mu) * tau * e / (d * d);
}

inline double sigmoid(double u) {
    return u >= 0.0 ? 1.0 / (1.0 + std::exp(-u)) : std::exp(u) / (1.0 + std::exp(u));
}

/// Maps an unconstrained value strictly inside (lo, hi).
inline double scale_to_box(double raw, double lo, double hi) {
    if (!(lo < hi)) throw BadBounds("scale_to_box: lo >= hi");
    return lo + sigmoid(raw) * (hi - lo);
}

inline double scale_to_box_grad(double raw, double lo, double hi) {
    double s = sigmoid(raw);
    return s * (1.0 - s) * (hi - lo);
}

}  // namespace dnr
