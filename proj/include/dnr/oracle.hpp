#pragma once

#include "dnr/completion.hpp"
#include "dnr/grid.hpp"
#include "dnr/qp.hpp"
#include "dnr/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace dnr {

struct OracleOptions {
    double big_m = 10.0;
    bool no_export = false;
    double qp_tol = 1e-9;
    int qp_max_iter = 100000;
    double sign_tol = 1e-9;    // net flows below this count as zero
    int max_branch_depth = 12; // recursion cap for sign-conflict branching
};

/// All radial switch configurations: exactly L switches closed and the
/// closed edge set forms a spanning tree. Candidate count is guarded.
inline std::vector<std::vector<double>> enumerate_radial(const GridModel& grid) {
    const int msw = grid.switch_count();
    const int L = cutoff_L(grid);
    double cand = 1.0;
    for (int i = 0; i < L; ++i) cand = cand * (msw - i) / (i + 1);
    if (cand > 1e6) throw TooManyTopologies("enumerate_radial: candidate count exceeds 1e6");

    std::vector<std::vector<double>> out;
    std::vector<int> pick(L);
    for (int i = 0; i < L; ++i) pick[i] = i;
    auto emit = [&]() {
        std::vector<double> y(msw, 0.0);
        for (int i : pick) y[i] = 1.0;
        if (is_radial(grid, y)) out.push_back(std::move(y));
    };
    if (L == 0) {
        std::vector<double> y(msw, 0.0);
        if (is_radial(grid, y)) out.push_back(std::move(y));
        return out;
    }
    while (true) {
        emit();
        int i = L - 1;
        while (i >= 0 && pick[i] == msw - L + i) --i;
        if (i < 0) break;
        ++pick[i];
        for (int j = i + 1; j < L; ++j) pick[j] = pick[j - 1] + 1;
    }
    return out;
}

namespace detail {

/// Spanning tree rooted at the PCC for a given switch configuration.
struct Tree {
    std::vector<int> order;        // BFS order, root first
    std::vector<int> parent;       // -1 at root
    std::vector<int> parent_edge;  // line index of the edge to the parent
    std::vector<int> closed;       // closed line indices (tree edges)
};

inline Tree build_tree(const GridModel& grid, const std::vector<double>& y) {
    const int n = grid.node_count();
    Tree t;
    t.parent.assign(n, -1);
    t.parent_edge.assign(n, -1);
    std::vector<std::vector<std::pair<int, int>>> adj(n);  // (neighbor, line)
    for (int e = 0; e < grid.line_count(); ++e) {
        int s = grid.switch_index(e);
        if (s >= 0 && y[s] < 0.5) continue;
        t.closed.push_back(e);
        const Line& ln = grid.line(e);
        adj[ln.from].push_back({ln.to, e});
        adj[ln.to].push_back({ln.from, e});
    }
    std::vector<char> seen(n, 0);
    t.order.push_back(grid.pcc());
    seen[grid.pcc()] = 1;
    for (size_t h = 0; h < t.order.size(); ++h) {
        int u = t.order[h];
        for (auto [w, e] : adj[u]) {
            if (seen[w]) continue;
            seen[w] = 1;
            t.parent[w] = u;
            t.parent_edge[w] = e;
            t.order.push_back(w);
        }
    }
    return t;
}

/// Affine expression c + a'u.
struct Affine {
    double c = 0.0;
    Vec a;
    double eval(const Vec& u) const { return c + (a.size() ? a.dot(u) : 0.0); }
};

/// Linear reduction of the fixed-topology dispatch problem. Variables are
/// the controllable injections (P then Q per generator node); every tree
/// flow and voltage is affine in them.
struct FlowMaps {
    std::vector<int> gen_nodes;            // non-PCC nodes with any dispatch range
    int nu = 0;                            // 2 * gen_nodes.size()
    std::vector<Affine> fp, fq;            // per closed edge, parent->child net flow
    std::vector<int> edge_child;           // child node per closed edge
    std::vector<Affine> v;                 // per node (root constant 1)
    Affine pcc_p, pcc_q;                   // PCC injection from lossless totals
};

inline FlowMaps build_flow_maps(const GridModel& grid, const ScenarioInstance& sc,
                                const Tree& t) {
    const int n = grid.node_count();
    FlowMaps fm;
    for (int j = 0; j < n; ++j) {
        if (j == grid.pcc()) continue;
        if (sc.p_gen_cap[j] != 0.0 || sc.p_gen_lo[j] != 0.0 || sc.q_gen_hi[j] != 0.0 ||
            sc.q_gen_lo[j] != 0.0)
            fm.gen_nodes.push_back(j);
    }
    const int ng = static_cast<int>(fm.gen_nodes.size());
    fm.nu = 2 * ng;
    std::vector<int> var_of(n, -1);
    for (int k = 0; k < ng; ++k) var_of[fm.gen_nodes[k]] = k;

    // Subtree sums, accumulated leaf-to-root.
    std::vector<Affine> sub_p(n), sub_q(n);
    for (int j = 0; j < n; ++j) {
        sub_p[j] = {sc.p_load[j], Vec::Zero(fm.nu)};
        sub_q[j] = {sc.q_load[j], Vec::Zero(fm.nu)};
        if (var_of[j] >= 0) {
            sub_p[j].a[var_of[j]] = -1.0;
            sub_q[j].a[ng + var_of[j]] = -1.0;
        }
    }
    for (auto it = t.order.rbegin(); it != t.order.rend(); ++it) {
        int j = *it;
        int p = t.parent[j];
        if (p < 0) continue;
        sub_p[p].c += sub_p[j].c;
        sub_p[p].a += sub_p[j].a;
        sub_q[p].c += sub_q[j].c;
        sub_q[p].a += sub_q[j].a;
    }

    fm.fp.resize(t.closed.size());
    fm.fq.resize(t.closed.size());
    fm.edge_child.assign(t.closed.size(), -1);
    std::vector<int> slot_of_edge(grid.line_count(), -1);
    for (size_t i = 0; i < t.closed.size(); ++i) slot_of_edge[t.closed[i]] = static_cast<int>(i);
    fm.v.assign(n, Affine{1.0, Vec::Zero(fm.nu)});
    for (int j : t.order) {
        if (t.parent[j] < 0) continue;
        int e = t.parent_edge[j];
        int slot = slot_of_edge[e];
        fm.edge_child[slot] = j;
        fm.fp[slot] = sub_p[j];
        fm.fq[slot] = sub_q[j];
        const Line& ln = grid.line(e);
        fm.v[j].c = fm.v[t.parent[j]].c - 2.0 * (ln.r * sub_p[j].c + ln.x * sub_q[j].c);
        fm.v[j].a = fm.v[t.parent[j]].a - 2.0 * (ln.r * sub_p[j].a + ln.x * sub_q[j].a);
    }

    double tot_p = sc.p_load.sum(), tot_q = sc.q_load.sum();
    fm.pcc_p = {tot_p, Vec::Zero(fm.nu)};
    fm.pcc_q = {tot_q, Vec::Zero(fm.nu)};
    for (int k = 0; k < ng; ++k) {
        fm.pcc_p.a[k] = -1.0;
        fm.pcc_q.a[ng + k] = -1.0;
    }
    return fm;
}

}  // namespace detail

struct FixedTopologySolution {
    bool feasible = false;
    double objective = 0.0;
    DecisionVector decision;
    double kkt_residual = 0.0;
};

/// Optimal dispatch on one radial topology: convex QP over controllable
/// injections, with tree flows and voltages eliminated. Edges whose real
/// and reactive net flows disagree in sign cannot be represented by the
/// binary direction indicators, so such solutions trigger branching on the
/// conflicted edge with both one-sided restrictions.
inline FixedTopologySolution solve_fixed_topology(const GridModel& grid,
                                                  const ScenarioInstance& sc,
                                                  const std::vector<double>& y,
                                                  const OracleOptions& opt = {}) {
    if (!is_radial(grid, y)) return {};
    detail::Tree tree = detail::build_tree(grid, y);
    detail::FlowMaps fm = detail::build_flow_maps(grid, sc, tree);
    const int ne = static_cast<int>(tree.closed.size());
    const int nu = fm.nu;

    QpProblem base;
    base.H = Mat::Zero(nu, nu);
    base.c = Vec::Zero(nu);
    for (int i = 0; i < ne; ++i) {
        const Line& ln = grid.line(tree.closed[i]);
        if (nu > 0) {
            base.H += 2.0 * ln.r * (fm.fp[i].a * fm.fp[i].a.transpose() +
                                    fm.fq[i].a * fm.fq[i].a.transpose());
            base.c += 2.0 * ln.r * (fm.fp[i].c * fm.fp[i].a + fm.fq[i].c * fm.fq[i].a);
        }
    }
    // Tiny ridge keeps the factorization stable when a generator cannot
    // influence any flow (never the case on these trees, but cheap).
    if (nu > 0) base.H += 1e-12 * Mat::Identity(nu, nu);

    std::vector<Vec> cols;
    std::vector<double> rhs;
    auto add_ge = [&](const detail::Affine& expr, double lo) {
        cols.push_back(expr.a.size() ? expr.a : Vec::Zero(nu));
        rhs.push_back(lo - expr.c);
    };
    auto add_le = [&](const detail::Affine& expr, double hi) {
        Vec neg = expr.a.size() ? Vec(-expr.a) : Vec(Vec::Zero(nu));
        cols.push_back(neg);
        rhs.push_back(expr.c - hi);
    };
    const int ng = static_cast<int>(fm.gen_nodes.size());
    for (int k = 0; k < ng; ++k) {
        int j = fm.gen_nodes[k];
        detail::Affine up{0.0, Vec::Zero(nu)}, uq{0.0, Vec::Zero(nu)};
        up.a[k] = 1.0;
        uq.a[ng + k] = 1.0;
        add_ge(up, sc.p_gen_lo[j]);
        add_le(up, sc.p_gen_cap[j]);
        add_ge(uq, sc.q_gen_lo[j]);
        add_le(uq, sc.q_gen_hi[j]);
    }
    add_ge(fm.pcc_p, sc.p_gen_lo[grid.pcc()]);
    add_le(fm.pcc_p, sc.p_gen_cap[grid.pcc()]);
    add_ge(fm.pcc_q, sc.q_gen_lo[grid.pcc()]);
    add_le(fm.pcc_q, sc.q_gen_hi[grid.pcc()]);
    for (int j = 0; j < grid.node_count(); ++j) {
        if (j == grid.pcc()) continue;
        add_ge(fm.v[j], grid.v_lo());
        add_le(fm.v[j], grid.v_hi());
    }
    if (opt.no_export) {
        // Power may only leave the PCC: root-incident edges flow outward.
        for (int i = 0; i < ne; ++i) {
            if (tree.parent[fm.edge_child[i]] == grid.pcc()) {
                add_ge(fm.fp[i], 0.0);
                add_ge(fm.fq[i], 0.0);
            }
        }
    }
    const int n_base = static_cast<int>(rhs.size());

    struct Best {
        bool ok = false;
        Vec u;
        double obj = 0.0;
        double kkt = 0.0;
    };
    // Branch on edges whose P and Q net flows take opposite signs.
    std::vector<std::pair<int, double>> signs;  // (closed-edge slot, +1/-1)
    std::function<Best(int)> solve_branch = [&](int depth) -> Best {
        QpProblem qp;
        qp.H = base.H;
        qp.c = base.c;
        int nc = n_base + 2 * static_cast<int>(signs.size());
        qp.A = Mat::Zero(nu, nc);
        qp.b = Vec::Zero(nc);
        for (int i = 0; i < n_base; ++i) {
            if (nu > 0) qp.A.col(i) = cols[i];
            qp.b[i] = rhs[i];
        }
        for (size_t s = 0; s < signs.size(); ++s) {
            auto [slot, sgn] = signs[s];
            int c0 = n_base + 2 * static_cast<int>(s);
            if (nu > 0) {
                qp.A.col(c0) = sgn * fm.fp[slot].a;
                qp.A.col(c0 + 1) = sgn * fm.fq[slot].a;
            }
            qp.b[c0] = -sgn * fm.fp[slot].c;
            qp.b[c0 + 1] = -sgn * fm.fq[slot].c;
        }
        QpResult qr = solve_qp(qp, opt.qp_tol, opt.qp_max_iter);
        if (qr.status != QpStatus::kOptimal) return {};
        // Look for a sign conflict not yet constrained.
        for (int i = 0; i < ne; ++i) {
            double fp = fm.fp[i].eval(qr.u), fq = fm.fq[i].eval(qr.u);
            if (fp > opt.sign_tol && fq < -opt.sign_tol) {
            } else if (fp < -opt.sign_tol && fq > opt.sign_tol) {
            } else {
                continue;
            }
            if (depth >= opt.max_branch_depth) return {};
            Best best;
            for (double sgn : {1.0, -1.0}) {
                signs.push_back({i, sgn});
                Best b = solve_branch(depth + 1);
                signs.pop_back();
                if (b.ok && (!best.ok || b.obj < best.obj)) best = b;
            }
            return best;
        }
        Best b;
        b.ok = true;
        b.u = qr.u;
        b.kkt = qr.kkt_residual;
        b.obj = 0.0;
        for (int i = 0; i < ne; ++i) {
            const Line& ln = grid.line(tree.closed[i]);
            double fp = fm.fp[i].eval(qr.u), fq = fm.fq[i].eval(qr.u);
            b.obj += ln.r * (fp * fp + fq * fq);
        }
        return b;
    };
    Best best = solve_branch(0);
    if (!best.ok) return {};

    FixedTopologySolution sol;
    sol.feasible = true;
    sol.objective = best.obj;
    sol.kkt_residual = best.kkt;
    const int n = grid.node_count(), m = grid.line_count();
    sol.decision.state = PowerState::zeros(n, m);
    sol.decision.state.p_load = sc.p_load;
    sol.decision.state.q_load = sc.q_load;
    sol.decision.topo.y = y;
    sol.decision.topo.z_dir.assign(m, {0.0, 0.0});
    for (int j = 0; j < n; ++j) sol.decision.state.v[j] = fm.v[j].eval(best.u);
    for (int k = 0; k < ng; ++k) {
        sol.decision.state.p_gen[fm.gen_nodes[k]] = best.u[k];
        sol.decision.state.q_gen[fm.gen_nodes[k]] = best.u[ng + k];
    }
    sol.decision.state.p_gen[grid.pcc()] = fm.pcc_p.eval(best.u);
    sol.decision.state.q_gen[grid.pcc()] = fm.pcc_q.eval(best.u);
    for (int i = 0; i < ne; ++i) {
        int e = tree.closed[i];
        const Line& ln = grid.line(e);
        int child = fm.edge_child[i];
        bool from_is_parent = ln.to == child;
        double fp = fm.fp[i].eval(best.u), fq = fm.fq[i].eval(best.u);
        // Dominant flow decides the direction indicator; default outward.
        bool fwd = (std::abs(fp) >= std::abs(fq) ? fp : fq) >= -opt.sign_tol;
        double pf = std::max(fp, 0.0), pb = std::max(-fp, 0.0);
        double qf = std::max(fq, 0.0), qb = std::max(-fq, 0.0);
        if (from_is_parent) {
            sol.decision.state.p_ij[e] = pf;
            sol.decision.state.p_ji[e] = pb;
            sol.decision.state.q_ij[e] = qf;
            sol.decision.state.q_ji[e] = qb;
            sol.decision.topo.z_dir[e] = fwd ? std::array<double, 2>{1.0, 0.0}
                                             : std::array<double, 2>{0.0, 1.0};
        } else {
            sol.decision.state.p_ij[e] = pb;
            sol.decision.state.p_ji[e] = pf;
            sol.decision.state.q_ij[e] = qb;
            sol.decision.state.q_ji[e] = qf;
            sol.decision.topo.z_dir[e] = fwd ? std::array<double, 2>{0.0, 1.0}
                                             : std::array<double, 2>{1.0, 0.0};
        }
    }
    return sol;
}

/// Exact optimum by exhaustive enumeration. Ties within 1e-12 keep the
/// earlier candidate, which is the lexicographically smallest closed-switch
/// id list because subsets are generated in lexicographic order.
inline FixedTopologySolution brute_force_optimum(const GridModel& grid,
                                                 const ScenarioInstance& sc,
                                                 const OracleOptions& opt = {}) {
    FixedTopologySolution best;
    for (const auto& y : enumerate_radial(grid)) {
        FixedTopologySolution s = solve_fixed_topology(grid, sc, y, opt);
        if (!s.feasible) continue;
        if (!best.feasible || s.objective < best.objective - 1e-12) best = s;
    }
    if (!best.feasible) throw AllInfeasible("brute_force_optimum: no feasible radial topology");
    return best;
}

// ------------------------------------------------------ feasibility ----

/// One recorded constraint violation.
struct Violation {
    std::string kind;  // constraint class
    int index = 0;     // node or line id (0-based internal)
    double amount = 0.0;
};

struct ViolationReport {
    double max_equality = 0.0;    // |g| over all equality constraints
    double max_binary = 0.0;      // distance to nearest integer
    double max_inequality = 0.0;  // max(0, h)
    double mean_inequality = 0.0; // sum of max(0,h) over all inequality rows
    int inequality_rows = 0;
    int count_over_eps = 0;       // inequality rows with violation > eps
    std::vector<Violation> over_eps;  // everything above eps, any class

    bool feasible(double eps) const {
        return max_equality <= eps && max_binary <= eps && max_inequality <= eps;
    }
};

/// Evaluates every constraint of the full mixed-integer model on a candidate
/// decision: equalities and integrality as absolute defects, inequalities as
/// positive parts. The mean is taken over inequality rows only.
inline ViolationReport check_feasibility(const GridModel& grid, const ScenarioInstance& sc,
                                         const DecisionVector& d, double eps = 1e-3,
                                         double big_m = 10.0, bool no_export = false) {
    ViolationReport rep;
    const int n = grid.node_count(), m = grid.line_count();
    auto eq = [&](const std::string& kind, int idx, double g) {
        double a = std::abs(g);
        rep.max_equality = std::max(rep.max_equality, a);
        if (a > eps) rep.over_eps.push_back({kind, idx, a});
    };
    auto bin = [&](const std::string& kind, int idx, double val) {
        double a = std::abs(val - std::round(val));
        rep.max_binary = std::max(rep.max_binary, a);
        if (a > eps) rep.over_eps.push_back({kind, idx, a});
    };
    auto ineq = [&](const std::string& kind, int idx, double h) {
        double a = std::max(0.0, h);
        rep.max_inequality = std::max(rep.max_inequality, a);
        rep.mean_inequality += a;
        ++rep.inequality_rows;
        if (a > eps) {
            ++rep.count_over_eps;
            rep.over_eps.push_back({kind, idx, a});
        }
    };

    TopologyState topo = d.topo;
    Vec resid = distflow_residuals(grid, topo, d.state);
    int k = 0;
    for (int j = 0; j < n; ++j) eq("balance-p", j, resid[k++]);
    for (int j = 0; j < n; ++j) eq("balance-q", j, resid[k++]);
    for (int e = 0; e < m; ++e)
        if (grid.switch_index(e) < 0) eq("ohm", e, resid[k++]);
    eq("pcc-voltage", grid.pcc(), d.state.v[grid.pcc()] - 1.0);

    double ysum = 0.0;
    for (int e = 0; e < m; ++e) {
        int s = grid.switch_index(e);
        double want = s >= 0 ? d.topo.y[s] : 1.0;
        eq("direction-sum", e, d.topo.z_dir[e][0] + d.topo.z_dir[e][1] - want);
        bin("binary-z", e, d.topo.z_dir[e][0]);
        bin("binary-z", e, d.topo.z_dir[e][1]);
    }
    for (int s = 0; s < grid.switch_count(); ++s) {
        bin("binary-y", grid.switch_lines()[s], d.topo.y[s]);
        ysum += d.topo.y[s];
    }
    eq("cardinality", 0, ysum - cutoff_L(grid));

    for (int j = 0; j < n; ++j) {
        ineq("gen-limit", j, d.state.p_gen[j] - sc.p_gen_cap[j]);
        ineq("gen-limit", j, sc.p_gen_lo[j] - d.state.p_gen[j]);
        ineq("gen-limit", j, d.state.q_gen[j] - sc.q_gen_hi[j]);
        ineq("gen-limit", j, sc.q_gen_lo[j] - d.state.q_gen[j]);
        if (j != grid.pcc()) {
            ineq("voltage", j, d.state.v[j] - grid.v_hi());
            ineq("voltage", j, grid.v_lo() - d.state.v[j]);
        }
    }
    std::vector<double> zsum(n, 0.0);
    for (int e = 0; e < m; ++e) {
        const Line& ln = grid.line(e);
        double zij = d.topo.z_dir[e][0], zji = d.topo.z_dir[e][1];
        ineq("flow-existence", e, -d.state.p_ij[e]);
        ineq("flow-existence", e, d.state.p_ij[e] - big_m * zij);
        ineq("flow-existence", e, -d.state.p_ji[e]);
        ineq("flow-existence", e, d.state.p_ji[e] - big_m * zji);
        ineq("flow-existence", e, -d.state.q_ij[e]);
        ineq("flow-existence", e, d.state.q_ij[e] - big_m * zij);
        ineq("flow-existence", e, -d.state.q_ji[e]);
        ineq("flow-existence", e, d.state.q_ji[e] - big_m * zji);
        int s = grid.switch_index(e);
        if (s >= 0) {
            double ohm = d.state.v[ln.to] - d.state.v[ln.from] +
                         2.0 * (ln.r * (d.state.p_ij[e] - d.state.p_ji[e]) +
                                ln.x * (d.state.q_ij[e] - d.state.q_ji[e]));
            double slackp = big_m * (1.0 - d.topo.y[s]);
            ineq("ohm-switch", e, ohm - slackp);
            ineq("ohm-switch", e, -ohm - slackp);
        }
        zsum[ln.from] += zij + zji;
        zsum[ln.to] += zij + zji;
    }
    for (int j = 0; j < n; ++j) ineq("connectivity", j, 1.0 - zsum[j]);
    if (no_export) {
        for (int e = 0; e < m; ++e) {
            const Line& ln = grid.line(e);
            if (ln.to == grid.pcc()) {
                ineq("no-export", e, d.state.p_ij[e]);
                ineq("no-export", e, d.state.q_ij[e]);
                ineq("no-export", e, d.topo.z_dir[e][0]);
            } else if (ln.from == grid.pcc()) {
                ineq("no-export", e, d.state.p_ji[e]);
                ineq("no-export", e, d.state.q_ji[e]);
                ineq("no-export", e, d.topo.z_dir[e][1]);
            }
        }
    }
    if (rep.inequality_rows > 0) rep.mean_inequality /= rep.inequality_rows;
    return rep;
}

// ------------------------------------------------------- warm start ----

/// Partial assignment for seeding an external MIP solver. Keys are
/// human-readable variable names over [P^G, Q^G, V, y, z_ij, z_ji];
/// entries implicated in a constraint violation are left out.
struct WarmStart {
    std::map<std::string, double> values;
};

inline WarmStart export_warmstart(const GridModel& grid, const DecisionVector& d,
                                  const ViolationReport& rep) {
    std::vector<char> skip_v(grid.node_count(), 0), skip_pg(grid.node_count(), 0),
        skip_qg(grid.node_count(), 0), skip_z(grid.line_count(), 0);
    std::vector<char> skip_y(grid.switch_count(), 0);
    for (const Violation& v : rep.over_eps) {
        if (v.kind == "voltage")
            skip_v[v.index] = 1;
        else if (v.kind == "gen-limit")
            skip_pg[v.index] = skip_qg[v.index] = 1;
        else if (v.kind == "flow-existence" || v.kind == "no-export")
            skip_z[v.index] = 1;
        else if (v.kind == "ohm-switch") {
            int s = grid.switch_index(v.index);
            if (s >= 0) skip_y[s] = 1;
        }
    }
    WarmStart ws;
    auto key = [](const char* base, int id) { return std::string(base) + "[" + std::to_string(id + 1) + "]"; };
    for (int j = 0; j < grid.node_count(); ++j) {
        if (!skip_pg[j]) ws.values[key("PG", j)] = d.state.p_gen[j];
        if (!skip_qg[j]) ws.values[key("QG", j)] = d.state.q_gen[j];
        if (!skip_v[j]) ws.values[key("V", j)] = std::sqrt(std::max(0.0, d.state.v[j]));
    }
    for (int s = 0; s < grid.switch_count(); ++s)
        if (!skip_y[s]) ws.values[key("y", grid.switch_lines()[s])] = d.topo.y[s];
    for (int e = 0; e < grid.line_count(); ++e) {
        if (skip_z[e]) continue;
        ws.values[key("z_ij", e)] = d.topo.z_dir[e][0];
        ws.values[key("z_ji", e)] = d.topo.z_dir[e][1];
    }
    return ws;
}

}  // namespace dnr
