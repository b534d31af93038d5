#pragma once

#include "dnr/grid.hpp"
#include "dnr/rounding.hpp"
#include "dnr/scenario.hpp"

#include <cmath>
#include <vector>

namespace dnr {

/// Flat layout of the independent-variable vector z. The order matches the
/// raw network output; the two trailing slots are the PCC load entries,
/// which are fixed to zero for these grids but kept in the map.
struct CompletionLayout {
    int n_switch = 0, n_lines = 0, n_nodes = 0;
    int off_y = 0;        // switch states, one per switch
    int off_zji = 0;      // reverse-direction indicator, one per line
    int off_v = 0;        // squared voltage at non-PCC nodes
    int off_pij = 0, off_pji = 0, off_qji = 0;  // per line
    int off_qij_sw = 0;   // forward reactive flow on switch lines only
    int off_pcc_load = 0;
    int size = 0;
    int raw_size = 0;     // network output dimension (no PCC-load slots)

    static CompletionLayout make(const GridModel& g) {
        CompletionLayout L;
        L.n_switch = g.switch_count();
        L.n_lines = g.line_count();
        L.n_nodes = g.node_count();
        int k = 0;
        L.off_y = k; k += L.n_switch;
        L.off_zji = k; k += L.n_lines;
        L.off_v = k; k += L.n_nodes - 1;
        L.off_pij = k; k += L.n_lines;
        L.off_pji = k; k += L.n_lines;
        L.off_qji = k; k += L.n_lines;
        L.off_qij_sw = k; k += L.n_switch;
        L.raw_size = k;
        L.off_pcc_load = k; k += 2;
        L.size = k;
        return L;
    }

    /// Index of node j within the non-PCC voltage block.
    int v_slot(const GridModel& g, int j) const { return j < g.pcc() ? j : j - 1; }
};

/// Full decision vector: topology plus power state, i.e. independents and the
/// completed dependents together.
struct DecisionVector {
    TopologyState topo;
    PowerState state;
};

/// Recovers all dependent variables from the independents through the
/// equality constraints. Closed form and linear: direction indicators from
/// the switch-sum relations, forward reactive flow on non-switch lines from
/// the voltage-drop relation, and nodal generation from the power balances.
inline DecisionVector complete(const GridModel& grid, const ScenarioInstance& sc, const Vec& z) {
    const CompletionLayout L = CompletionLayout::make(grid);
    if (z.size() != L.size) throw DimensionMismatch("complete: z has wrong length");
    const int n = grid.node_count(), m = grid.line_count();
    DecisionVector d;
    d.state = PowerState::zeros(n, m);
    d.state.p_load = sc.p_load;
    d.state.q_load = sc.q_load;
    d.state.p_load[grid.pcc()] = z[L.off_pcc_load];
    d.state.q_load[grid.pcc()] = z[L.off_pcc_load + 1];
    d.topo.y.assign(grid.switch_count(), 0.0);
    for (int s = 0; s < grid.switch_count(); ++s) d.topo.y[s] = z[L.off_y + s];
    d.topo.z_dir.assign(m, {0.0, 0.0});

    for (int j = 0; j < n; ++j)
        if (j != grid.pcc()) d.state.v[j] = z[L.off_v + L.v_slot(grid, j)];
    d.state.v[grid.pcc()] = 1.0;

    for (int e = 0; e < m; ++e) {
        d.state.p_ij[e] = z[L.off_pij + e];
        d.state.p_ji[e] = z[L.off_pji + e];
        d.state.q_ji[e] = z[L.off_qji + e];
        double zji = z[L.off_zji + e];
        int s = grid.switch_index(e);
        double closed = s >= 0 ? d.topo.y[s] : 1.0;
        d.topo.z_dir[e] = {closed - zji, zji};
        const Line& ln = grid.line(e);
        if (s >= 0) {
            d.state.q_ij[e] = z[L.off_qij_sw + s];
        } else {
            // Voltage-drop relation solved for Q_ij.
            double dv = d.state.v[ln.to] - d.state.v[ln.from];
            double dp = d.state.p_ij[e] - d.state.p_ji[e];
            d.state.q_ij[e] = d.state.q_ji[e] - dv / (2.0 * ln.x) - (ln.r / ln.x) * dp;
        }
    }

    // Nodal balances give the generation dispatch.
    for (int e = 0; e < m; ++e) {
        const Line& ln = grid.line(e);
        double dp = d.state.p_ij[e] - d.state.p_ji[e];
        double dq = d.state.q_ij[e] - d.state.q_ji[e];
        d.state.p_gen[ln.from] += dp;
        d.state.p_gen[ln.to] -= dp;
        d.state.q_gen[ln.from] += dq;
        d.state.q_gen[ln.to] -= dq;
    }
    d.state.p_gen += d.state.p_load;
    d.state.q_gen += d.state.q_load;
    return d;
}

/// Cotangents for every field of a DecisionVector.
struct DecisionGrad {
    Vec v, p_ij, p_ji, q_ij, q_ji, p_gen, q_gen;  // state
    Vec y, z_ij, z_ji;                            // topology

    static DecisionGrad zeros(const GridModel& g) {
        DecisionGrad d;
        d.v = Vec::Zero(g.node_count());
        d.p_ij = Vec::Zero(g.line_count());
        d.p_ji = Vec::Zero(g.line_count());
        d.q_ij = Vec::Zero(g.line_count());
        d.q_ji = Vec::Zero(g.line_count());
        d.p_gen = Vec::Zero(g.node_count());
        d.q_gen = Vec::Zero(g.node_count());
        d.y = Vec::Zero(g.switch_count());
        d.z_ij = Vec::Zero(g.line_count());
        d.z_ji = Vec::Zero(g.line_count());
        return d;
    }
};

/// Adjoint of complete(): pulls a DecisionGrad back to the independent
/// vector. The map is linear, so this is exact.
inline Vec complete_backward(const GridModel& grid, const DecisionGrad& g) {
    const CompletionLayout L = CompletionLayout::make(grid);
    const int n = grid.node_count(), m = grid.line_count();
    Vec gz = Vec::Zero(L.size);

    // Fold generation adjoints into flow adjoints (balance equations).
    Vec gpij = g.p_ij, gpji = g.p_ji, gqij = g.q_ij, gqji = g.q_ji;
    for (int e = 0; e < m; ++e) {
        const Line& ln = grid.line(e);
        double gp = g.p_gen[ln.from] - g.p_gen[ln.to];
        double gq = g.q_gen[ln.from] - g.q_gen[ln.to];
        gpij[e] += gp;
        gpji[e] -= gp;
        gqij[e] += gq;
        gqji[e] -= gq;
    }
    // PCC load slots feed the PCC balance directly.
    gz[L.off_pcc_load] = g.p_gen[grid.pcc()];
    gz[L.off_pcc_load + 1] = g.q_gen[grid.pcc()];

    Vec gv = g.v;  // node-indexed accumulator
    for (int e = 0; e < m; ++e) {
        const Line& ln = grid.line(e);
        int s = grid.switch_index(e);
        // Direction indicators: z_ij = closed - z_ji.
        gz[L.off_zji + e] += g.z_ji[e] - g.z_ij[e];
        if (s >= 0) gz[L.off_y + s] += g.z_ij[e];

        if (s >= 0) {
            gz[L.off_qij_sw + s] += gqij[e];
        } else {
            // q_ij = q_ji - (v_to - v_from)/(2x) - (r/x)(p_ij - p_ji)
            double gq = gqij[e];
            gz[L.off_qji + e] += gq;
            gv[ln.to] -= gq / (2.0 * ln.x);
            gv[ln.from] += gq / (2.0 * ln.x);
            gpij[e] -= gq * ln.r / ln.x;
            gpji[e] += gq * ln.r / ln.x;
        }
        gz[L.off_pij + e] += gpij[e];
        gz[L.off_pji + e] += gpji[e];
        gz[L.off_qji + e] += gqji[e];
    }
    for (int j = 0; j < n; ++j)
        if (j != grid.pcc()) gz[L.off_v + L.v_slot(grid, j)] += gv[j];
    return gz;
}

// ----------------------------------------------------------- assembly ----

enum class YHead { kSigmoid, kClamp, kInSi };

struct HeadConfig {
    YHead y_head = YHead::kSigmoid;
    bool use_phyr = true;       // round through the cardinality layer
    bool round_at_eval = false; // threshold rounding at inference (no PhyR)
    double flow_cap = 10.0;     // pu box for flow magnitudes, matches big-M
    double insi_tau = 5.0;
    double insi_mu = 1.0;
};

/// Per-entry chain-rule data recorded by assemble_independents.
struct AssembleCache {
    Vec dz_draw;        // elementwise derivative of z w.r.t. raw output
    RoundingPlan plan;  // valid when PhyR ran
    bool phyr_ran = false;
};

/// Scales the raw network output onto the independent variables: switch
/// probabilities through the configured head (and PhyR), direction
/// indicators through the step relaxation, voltages and flows onto their
/// boxes. Returns z of CompletionLayout::size (PCC load slots zero).
inline Vec assemble_independents(const GridModel& grid, const Vec& raw, const HeadConfig& cfg,
                                 RoundMode mode, AssembleCache* cache = nullptr) {
    const CompletionLayout L = CompletionLayout::make(grid);
    if (raw.size() != L.raw_size)
        throw DimensionMismatch("assemble_independents: raw output has wrong length");
    Vec z = Vec::Zero(L.size);
    Vec dz = Vec::Zero(L.size);

    // Switch-probability head.
    Vec probs(L.n_switch), dprobs(L.n_switch);
    for (int s = 0; s < L.n_switch; ++s) {
        double u = raw[L.off_y + s];
        switch (cfg.y_head) {
            case YHead::kSigmoid: {
                double p = sigmoid(u);
                probs[s] = p;
                dprobs[s] = p * (1.0 - p);
                break;
            }
            case YHead::kClamp:
                probs[s] = std::min(1.0, std::max(0.0, u));
                dprobs[s] = (u > 0.0 && u < 1.0) ? 1.0 : 0.0;
                break;
            case YHead::kInSi:
                probs[s] = insi(u, cfg.insi_tau, cfg.insi_mu);
                dprobs[s] = insi_grad(u, cfg.insi_tau, cfg.insi_mu);
                break;
        }
    }
    bool phyr_ran = false;
    RoundingPlan plan;
    if (cfg.use_phyr) {
        Vec rounded;
        plan = phyr_round(probs, cutoff_L(grid), mode, &rounded);
        phyr_ran = true;
        for (int s = 0; s < L.n_switch; ++s) z[L.off_y + s] = rounded[s];
    } else if (cfg.round_at_eval && mode == RoundMode::kInference) {
        for (int s = 0; s < L.n_switch; ++s) z[L.off_y + s] = probs[s] >= 0.5 ? 1.0 : 0.0;
        for (int s = 0; s < L.n_switch; ++s) dprobs[s] = 0.0;
    } else {
        for (int s = 0; s < L.n_switch; ++s) z[L.off_y + s] = probs[s];
    }
    for (int s = 0; s < L.n_switch; ++s) dz[L.off_y + s] = dprobs[s];

    for (int e = 0; e < L.n_lines; ++e) {
        double u = raw[L.off_zji + e];
        z[L.off_zji + e] = insi(u, cfg.insi_tau, cfg.insi_mu);
        dz[L.off_zji + e] = insi_grad(u, cfg.insi_tau, cfg.insi_mu);
    }
    for (int k = 0; k < L.n_nodes - 1; ++k) {
        double u = raw[L.off_v + k];
        z[L.off_v + k] = scale_to_box(u, grid.v_lo(), grid.v_hi());
        dz[L.off_v + k] = scale_to_box_grad(u, grid.v_lo(), grid.v_hi());
    }
    auto box_flow = [&](int off, int count) {
        for (int k = 0; k < count; ++k) {
            double u = raw[off + k];
            z[off + k] = scale_to_box(u, 0.0, cfg.flow_cap);
            dz[off + k] = scale_to_box_grad(u, 0.0, cfg.flow_cap);
        }
    };
    box_flow(L.off_pij, L.n_lines);
    box_flow(L.off_pji, L.n_lines);
    box_flow(L.off_qji, L.n_lines);
    box_flow(L.off_qij_sw, L.n_switch);

    if (cache) {
        cache->dz_draw = dz;
        cache->plan = plan;
        cache->phyr_ran = phyr_ran;
    }
    return z;
}

/// Chains an independent-vector gradient back to the raw network output,
/// applying the PhyR gradient contract when the rounding layer ran.
inline Vec assemble_backward(const GridModel& grid, const AssembleCache& cache, const Vec& gz) {
    const CompletionLayout L = CompletionLayout::make(grid);
    Vec graw = Vec::Zero(L.raw_size);
    Vec g = gz.head(L.raw_size);
    if (cache.phyr_ran) {
        Vec gy = g.segment(L.off_y, L.n_switch);
        Vec masked = phyr_backward(cache.plan, gy);
        for (int s = 0; s < L.n_switch; ++s) graw[L.off_y + s] = masked[s];
        for (int k = L.off_y + L.n_switch; k < L.raw_size; ++k) graw[k] = g[k];
    } else {
        graw = g;
    }
    return graw.cwiseProduct(cache.dz_draw.head(L.raw_size));
}

// ------------------------------------------------------- training loss ----

struct LossOptions {
    double lambda = 100.0;
    double big_m = 10.0;
    bool no_export = false;
};

/// Unsupervised objective: quadratic loss proxy plus the squared-hinge
/// penalty over the dependent-side inequalities (generation limits, flow
/// existence, conditional voltage drop on switch lines, optional no-export).
/// Fills `grad` (if given) with d loss / d (decision vector).
inline double training_loss(const GridModel& grid, const ScenarioInstance& sc,
                            const DecisionVector& d, const LossOptions& opt,
                            DecisionGrad* grad = nullptr) {
    const int n = grid.node_count(), m = grid.line_count();
    DecisionGrad g = DecisionGrad::zeros(grid);
    double f = 0.0;
    for (int e = 0; e < m; ++e) {
        const Line& ln = grid.line(e);
        f += ln.r * (d.state.p_ij[e] * d.state.p_ij[e] + d.state.p_ji[e] * d.state.p_ji[e] +
                     d.state.q_ij[e] * d.state.q_ij[e] + d.state.q_ji[e] * d.state.q_ji[e]);
        g.p_ij[e] += 2.0 * ln.r * d.state.p_ij[e];
        g.p_ji[e] += 2.0 * ln.r * d.state.p_ji[e];
        g.q_ij[e] += 2.0 * ln.r * d.state.q_ij[e];
        g.q_ji[e] += 2.0 * ln.r * d.state.q_ji[e];
    }

    double pen = 0.0;
    // hinge(h) adds lambda*max(0,h)^2 and routes 2*lambda*max(0,h) to dh.
    auto hinge = [&](double h) -> double {
        if (h <= 0.0) return 0.0;
        pen += h * h;
        return 2.0 * opt.lambda * h;
    };
    for (int j = 0; j < n; ++j) {
        double w = hinge(d.state.p_gen[j] - sc.p_gen_cap[j]);
        g.p_gen[j] += w;
        w = hinge(sc.p_gen_lo[j] - d.state.p_gen[j]);
        g.p_gen[j] -= w;
        w = hinge(d.state.q_gen[j] - sc.q_gen_hi[j]);
        g.q_gen[j] += w;
        w = hinge(sc.q_gen_lo[j] - d.state.q_gen[j]);
        g.q_gen[j] -= w;
    }
    for (int e = 0; e < m; ++e) {
        const Line& ln = grid.line(e);
        double zij = d.topo.z_dir[e][0], zji = d.topo.z_dir[e][1];
        double w;
        w = hinge(d.state.p_ij[e] - opt.big_m * zij);
        g.p_ij[e] += w; g.z_ij[e] -= w * opt.big_m;
        w = hinge(d.state.p_ji[e] - opt.big_m * zji);
        g.p_ji[e] += w; g.z_ji[e] -= w * opt.big_m;
        w = hinge(d.state.q_ij[e] - opt.big_m * zij);
        g.q_ij[e] += w; g.z_ij[e] -= w * opt.big_m;
        w = hinge(d.state.q_ji[e] - opt.big_m * zji);
        g.q_ji[e] += w; g.z_ji[e] -= w * opt.big_m;
        if (grid.switch_index(e) < 0) {
            w = hinge(-d.state.q_ij[e]);  // dependent, not box-certified
            g.q_ij[e] -= w;
        } else {
            // Conditional voltage drop, big-M relaxed by the switch state.
            int s = grid.switch_index(e);
            double ohm = d.state.v[ln.to] - d.state.v[ln.from] +
                         2.0 * (ln.r * (d.state.p_ij[e] - d.state.p_ji[e]) +
                                ln.x * (d.state.q_ij[e] - d.state.q_ji[e]));
            double slack = opt.big_m * (1.0 - d.topo.y[s]);
            w = hinge(ohm - slack);
            double w2 = hinge(-ohm - slack);
            double go = w - w2;
            g.v[ln.to] += go;
            g.v[ln.from] -= go;
            g.p_ij[e] += 2.0 * ln.r * go;
            g.p_ji[e] -= 2.0 * ln.r * go;
            g.q_ij[e] += 2.0 * ln.x * go;
            g.q_ji[e] -= 2.0 * ln.x * go;
            g.y[s] += (w + w2) * opt.big_m;
        }
    }
    if (opt.no_export) {
        for (int e = 0; e < m; ++e) {
            const Line& ln = grid.line(e);
            if (ln.to == grid.pcc()) {
                double w = hinge(d.state.p_ij[e]);
                g.p_ij[e] += w;
                w = hinge(d.state.q_ij[e]);
                g.q_ij[e] += w;
                w = hinge(d.topo.z_dir[e][0]);
                g.z_ij[e] += w;
            } else if (ln.from == grid.pcc()) {
                double w = hinge(d.state.p_ji[e]);
                g.p_ji[e] += w;
                w = hinge(d.state.q_ji[e]);
                g.q_ji[e] += w;
                w = hinge(d.topo.z_dir[e][1]);
                g.z_ji[e] += w;
            }
        }
    }
    if (grad) *grad = std::move(g);
    return f + opt.lambda * pen;
}

/// Regression loss against an optimizer label: squared error on voltage
/// magnitudes, generation dispatch, and switch states; the `pen` variant
/// adds the same soft inequality penalty as training_loss.
inline double supervised_loss(const GridModel& grid, const ScenarioInstance& sc,
                              const DecisionVector& d, const Vec& v_star_mag,
                              const Vec& p_gen_star, const Vec& q_gen_star,
                              const std::vector<double>& y_star, bool with_penalty,
                              const LossOptions& opt, DecisionGrad* grad = nullptr) {
    DecisionGrad g = DecisionGrad::zeros(grid);
    double l = 0.0;
    for (int j = 0; j < grid.node_count(); ++j) {
        double vm = std::sqrt(d.state.v[j]);
        double dv = vm - v_star_mag[j];
        double dp = d.state.p_gen[j] - p_gen_star[j];
        double dq = d.state.q_gen[j] - q_gen_star[j];
        l += dv * dv + dp * dp + dq * dq;
        g.v[j] += 2.0 * dv / (2.0 * vm);
        g.p_gen[j] += 2.0 * dp;
        g.q_gen[j] += 2.0 * dq;
    }
    for (int s = 0; s < grid.switch_count(); ++s) {
        double dy = d.topo.y[s] - y_star[s];
        l += dy * dy;
        g.y[s] += 2.0 * dy;
    }
    if (with_penalty) {
        DecisionGrad gp;
        DecisionVector tmp = d;
        double full = training_loss(grid, sc, tmp, opt, &gp);
        // Strip the objective part; keep only the penalty and its gradient.
        double obj = objective_f(grid, d.state);
        DecisionGrad gobj = DecisionGrad::zeros(grid);
        for (int e = 0; e < grid.line_count(); ++e) {
            const Line& ln = grid.line(e);
            gobj.p_ij[e] = 2.0 * ln.r * d.state.p_ij[e];
            gobj.p_ji[e] = 2.0 * ln.r * d.state.p_ji[e];
            gobj.q_ij[e] = 2.0 * ln.r * d.state.q_ij[e];
            gobj.q_ji[e] = 2.0 * ln.r * d.state.q_ji[e];
        }
        l += full - obj;
        g.v += gp.v - gobj.v;
        g.p_ij += gp.p_ij - gobj.p_ij;
        g.p_ji += gp.p_ji - gobj.p_ji;
        g.q_ij += gp.q_ij - gobj.q_ij;
        g.q_ji += gp.q_ji - gobj.q_ji;
        g.p_gen += gp.p_gen;
        g.q_gen += gp.q_gen;
        g.y += gp.y;
        g.z_ij += gp.z_ij;
        g.z_ji += gp.z_ji;
    }
    if (grad) *grad = std::move(g);
    return l;
}

}  // namespace dnr
