#pragma once

#include "dnr/completion.hpp"
#include "dnr/nn.hpp"
#include "dnr/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace dnr {

/// Switch-head variants. The continuous blocks are handled identically in
/// all of them; they differ in how the switch probabilities are produced
/// and whether the cardinality rounding layer runs.
enum class Variant { kInSi, kInSi2R, kClaPhyR, kSiPhyR, kInSiPhyR };

inline const char* variant_name(Variant v) {
    switch (v) {
        case Variant::kInSi: return "InSi";
        case Variant::kInSi2R: return "InSi2R";
        case Variant::kClaPhyR: return "ClaPhyR";
        case Variant::kSiPhyR: return "SiPhyR";
        case Variant::kInSiPhyR: return "InSiPhyR";
    }
    return "SiPhyR";
}

inline Variant parse_variant(const std::string& s) {
    if (s == "InSi") return Variant::kInSi;
    if (s == "InSi2R") return Variant::kInSi2R;
    if (s == "ClaPhyR") return Variant::kClaPhyR;
    if (s == "SiPhyR") return Variant::kSiPhyR;
    if (s == "InSiPhyR") return Variant::kInSiPhyR;
    throw Error("unknown model variant: " + s);
}

inline HeadConfig head_config(Variant v) {
    HeadConfig h;
    switch (v) {
        case Variant::kInSi:
            h.y_head = YHead::kInSi;
            h.use_phyr = false;
            break;
        case Variant::kInSi2R:
            h.y_head = YHead::kInSi;
            h.use_phyr = false;
            h.round_at_eval = true;
            break;
        case Variant::kClaPhyR:
            h.y_head = YHead::kClamp;
            h.use_phyr = true;
            break;
        case Variant::kSiPhyR:
            h.y_head = YHead::kSigmoid;
            h.use_phyr = true;
            break;
        case Variant::kInSiPhyR:
            h.y_head = YHead::kInSi;
            h.use_phyr = true;
            break;
    }
    return h;
}

/// Optimizer label for one scenario.
struct Label {
    std::vector<double> y;
    Vec v_mag;        // per node
    Vec p_gen, q_gen; // per node
    double objective = 0.0;
};

struct PipelineConfig {
    Variant variant = Variant::kSiPhyR;
    int hidden = 5;
    int epochs = 1500;
    int batch = 200;
    AdamConfig adam;
    LossOptions loss;
    int committee = 10;
    std::uint64_t seed = 1;
    bool supervised = false;
    bool supervised_penalty = false;
};

struct TrainedModel {
    PipelineConfig cfg;
    int in_dim = 0, out_dim = 0;
    std::vector<Mlp> members;
    std::vector<double> curve;  // mean training loss per epoch, member 0
};

namespace detail {

/// Loss and raw-output gradient for one sample.
inline double sample_loss_grad(const GridModel& grid, const ScenarioInstance& sc,
                               const Vec& raw, const PipelineConfig& cfg, const Label* label,
                               Vec* graw) {
    AssembleCache cache;
    HeadConfig head = head_config(cfg.variant);
    Vec z = assemble_independents(grid, raw, head, RoundMode::kTrain, &cache);
    DecisionVector d = complete(grid, sc, z);
    DecisionGrad dg;
    double loss;
    if (cfg.supervised && label) {
        loss = supervised_loss(grid, sc, d, label->v_mag, label->p_gen, label->q_gen, label->y,
                               cfg.supervised_penalty, cfg.loss, &dg);
    } else {
        loss = training_loss(grid, sc, d, cfg.loss, &dg);
    }
    Vec gz = complete_backward(grid, dg);
    // y enters both directly and through z_ij inside complete_backward.
    const CompletionLayout L = CompletionLayout::make(grid);
    for (int s = 0; s < grid.switch_count(); ++s) gz[L.off_y + s] += dg.y[s];
    *graw = assemble_backward(grid, cache, gz);
    if (!graw->allFinite() || !std::isfinite(loss))
        throw NonFiniteGradient("non-finite loss or gradient during training");
    return loss;
}

}  // namespace detail

/// Trains one committee member. `indices` selects training instances from
/// the dataset; labels may be null for the unsupervised losses.
inline std::vector<double> train_member(const Dataset& ds, const std::vector<int>& indices,
                                        const std::vector<Label>* labels,
                                        const PipelineConfig& cfg, std::uint64_t member_seed,
                                        Mlp* mlp) {
    const GridModel& grid = ds.grid_case.grid;
    std::mt19937_64 rng = make_rng(derive_seed(member_seed, 0xB47C));
    std::vector<int> order = indices;
    std::vector<double> curve;
    curve.reserve(cfg.epochs);
    const CompletionLayout L = CompletionLayout::make(grid);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        int counted = 0;
        for (size_t start = 0; start < order.size(); start += cfg.batch) {
            size_t end = std::min(order.size(), start + cfg.batch);
            int nb = static_cast<int>(end - start);
            if (nb < 2) continue;  // batch norm needs at least two samples
            Mat x(nb, ds.instances[order[start]].x.size());
            for (int r = 0; r < nb; ++r) x.row(r) = ds.instances[order[start + r]].x.transpose();
            Mat raw = mlp->forward(x, true);
            Mat gy(nb, L.raw_size);
            for (int r = 0; r < nb; ++r) {
                int idx = order[start + r];
                Vec graw;
                const Label* lab = labels ? &(*labels)[idx] : nullptr;
                double l = detail::sample_loss_grad(grid, ds.instances[idx], raw.row(r).transpose(),
                                                    cfg, lab, &graw);
                gy.row(r) = graw.transpose() / nb;
                epoch_loss += l;
                ++counted;
            }
            mlp->zero_grad();
            mlp->backward(gy);
            mlp->adam_step(cfg.adam);
        }
        curve.push_back(counted ? epoch_loss / counted : 0.0);
    }
    return curve;
}

inline TrainedModel train_model(const Dataset& ds, const std::vector<int>& indices,
                                const std::vector<Label>* labels, const PipelineConfig& cfg) {
    const GridModel& grid = ds.grid_case.grid;
    const CompletionLayout L = CompletionLayout::make(grid);
    TrainedModel model;
    model.cfg = cfg;
    model.in_dim = 2 * (grid.node_count() - 1);
    model.out_dim = L.raw_size;
    for (int k = 0; k < cfg.committee; ++k) {
        std::uint64_t seed_k = derive_seed(cfg.seed, static_cast<std::uint64_t>(k) + 101);
        std::mt19937_64 init_rng = make_rng(seed_k);
        model.members.emplace_back(model.in_dim, cfg.hidden, model.out_dim, init_rng);
        std::vector<double> curve = train_member(ds, indices, labels, cfg, seed_k,
                                                 &model.members.back());
        if (k == 0) model.curve = std::move(curve);
    }
    return model;
}

/// Committee prediction. Switch probabilities are averaged after the head
/// and before any rounding; all other blocks are averaged on the raw
/// outputs before their box scalings.
inline DecisionVector predict(const GridModel& grid, const ScenarioInstance& sc,
                              TrainedModel& model) {
    const CompletionLayout L = CompletionLayout::make(grid);
    const HeadConfig head = head_config(model.cfg.variant);
    Mat x(1, sc.x.size());
    x.row(0) = sc.x.transpose();
    Vec mean_raw = Vec::Zero(L.raw_size);
    Vec mean_prob = Vec::Zero(L.n_switch);
    for (Mlp& m : model.members) {
        Vec raw = m.forward(x, false).row(0).transpose();
        mean_raw += raw;
        for (int s = 0; s < L.n_switch; ++s) {
            double u = raw[L.off_y + s];
            double p;
            switch (head.y_head) {
                case YHead::kSigmoid: p = sigmoid(u); break;
                case YHead::kClamp: p = std::min(1.0, std::max(0.0, u)); break;
                default: p = insi(u, head.insi_tau, head.insi_mu); break;
            }
            mean_prob[s] += p;
        }
    }
    mean_raw /= static_cast<double>(model.members.size());
    mean_prob /= static_cast<double>(model.members.size());

    Vec z = Vec::Zero(L.size);
    if (head.use_phyr) {
        Vec rounded;
        phyr_round(mean_prob, cutoff_L(grid), RoundMode::kInference, &rounded);
        for (int s = 0; s < L.n_switch; ++s) z[L.off_y + s] = rounded[s];
    } else if (head.round_at_eval) {
        for (int s = 0; s < L.n_switch; ++s) z[L.off_y + s] = mean_prob[s] >= 0.5 ? 1.0 : 0.0;
    } else {
        for (int s = 0; s < L.n_switch; ++s) z[L.off_y + s] = mean_prob[s];
    }
    for (int e = 0; e < L.n_lines; ++e)
        z[L.off_zji + e] = insi(mean_raw[L.off_zji + e], head.insi_tau, head.insi_mu);
    for (int k = 0; k < L.n_nodes - 1; ++k)
        z[L.off_v + k] = scale_to_box(mean_raw[L.off_v + k], grid.v_lo(), grid.v_hi());
    auto box_flow = [&](int off, int count) {
        for (int k = 0; k < count; ++k)
            z[off + k] = scale_to_box(mean_raw[off + k], 0.0, head.flow_cap);
    };
    box_flow(L.off_pij, L.n_lines);
    box_flow(L.off_pji, L.n_lines);
    box_flow(L.off_qji, L.n_lines);
    box_flow(L.off_qij_sw, L.n_switch);
    return complete(grid, sc, z);
}

}  // namespace dnr
