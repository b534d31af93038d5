#pragma once

#include "dnr/common.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <vector>

namespace dnr {

struct Line {
    int id = 0;  // external branch number
    int from = 0;
    int to = 0;
    double r = 0.0;  // pu
    double x = 0.0;  // pu
    bool is_switch = false;
};

/// Immutable per-unit network model. Node ids are 0..N-1 after construction;
/// all line parameters are already converted to per-unit on base_kva.
class GridModel {
  public:
    GridModel(int node_count, int pcc_node, std::vector<Line> lines, double base_kva,
              double v_lo, double v_hi)
        : node_count_(node_count),
          pcc_(pcc_node),
          lines_(std::move(lines)),
          base_kva_(base_kva),
          v_lo_(v_lo),
          v_hi_(v_hi) {
        validate();
        for (int e = 0; e < line_count(); ++e)
            if (lines_[e].is_switch) switch_lines_.push_back(e);
    }

    int node_count() const { return node_count_; }
    int pcc() const { return pcc_; }
    int line_count() const { return static_cast<int>(lines_.size()); }
    int switch_count() const { return static_cast<int>(switch_lines_.size()); }
    const std::vector<Line>& lines() const { return lines_; }
    const Line& line(int e) const { return lines_[e]; }
    const std::vector<int>& switch_lines() const { return switch_lines_; }
    double base_kva() const { return base_kva_; }
    double v_lo() const { return v_lo_; }
    double v_hi() const { return v_hi_; }

    /// Index of line e within the switch list, or -1.
    int switch_index(int e) const {
        auto it = std::find(switch_lines_.begin(), switch_lines_.end(), e);
        return it == switch_lines_.end() ? -1 : static_cast<int>(it - switch_lines_.begin());
    }

  private:
    void validate() const;

    int node_count_;
    int pcc_;
    std::vector<Line> lines_;
    double base_kva_;
    double v_lo_, v_hi_;
    std::vector<int> switch_lines_;
};

struct TopologyState {
    std::vector<double> y;                          // per switch, 1 closed / 0 open
    std::vector<std::array<double, 2>> z_dir;       // per line: (z_ij, z_ji)
};

struct PowerState {
    Vec v;                    // per node, squared voltage magnitude (pu^2)
    Vec p_ij, p_ji, q_ij, q_ji;  // per line, directed flows (pu), >= 0 by convention
    Vec p_gen, q_gen;         // per node (pu)
    Vec p_load, q_load;       // per node (pu)

    static PowerState zeros(int nodes, int lines) {
        PowerState s;
        s.v = Vec::Ones(nodes);
        s.p_ij = Vec::Zero(lines);
        s.p_ji = Vec::Zero(lines);
        s.q_ij = Vec::Zero(lines);
        s.q_ji = Vec::Zero(lines);
        s.p_gen = Vec::Zero(nodes);
        s.q_gen = Vec::Zero(nodes);
        s.p_load = Vec::Zero(nodes);
        s.q_load = Vec::Zero(nodes);
        return s;
    }
};

namespace detail {

class UnionFind {
  public:
    explicit UnionFind(int n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
    int find(int a) {
        while (parent_[a] != a) a = parent_[a] = parent_[parent_[a]];
        return a;
    }
    // Returns false if a and b were already connected.
    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent_[a] = b;
        return true;
    }

  private:
    std::vector<int> parent_;
};

}  // namespace detail

/// Number of switches that must be closed for a radial topology:
/// (N-1) - (M - M_sw).
inline int cutoff_L(const GridModel& grid) {
    int L = (grid.node_count() - 1) - (grid.line_count() - grid.switch_count());
    if (L < 0 || L > grid.switch_count())
        throw InfeasibleRadiality("cutoff L=" + std::to_string(L) + " outside [0, M_sw]");
    return L;
}

/// Full spanning-tree test on the closed lines (all non-switch lines plus
/// closed switches): exactly N-1 edges, connected, acyclic.
inline bool is_radial(const GridModel& grid, const std::vector<double>& y) {
    if (static_cast<int>(y.size()) != grid.switch_count())
        throw DimensionMismatch("is_radial: y size != switch count");
    detail::UnionFind uf(grid.node_count());
    int edges = 0;
    for (int e = 0; e < grid.line_count(); ++e) {
        const Line& ln = grid.line(e);
        bool closed = !ln.is_switch || y[grid.switch_index(e)] > 0.5;
        if (!closed) continue;
        ++edges;
        if (!uf.unite(ln.from, ln.to)) return false;  // cycle
    }
    if (edges != grid.node_count() - 1) return false;
    int root = uf.find(0);
    for (int j = 1; j < grid.node_count(); ++j)
        if (uf.find(j) != root) return false;
    return true;
}

inline void GridModel::validate() const {
    if (node_count_ < 2) throw Error("grid: need at least 2 nodes");
    if (pcc_ < 0 || pcc_ >= node_count_) throw Error("grid: PCC node out of range");
    detail::UnionFind all(node_count_);
    detail::UnionFind fixed(node_count_);
    int fixed_edges = 0;
    for (const Line& ln : lines_) {
        if (ln.from < 0 || ln.from >= node_count_ || ln.to < 0 || ln.to >= node_count_ ||
            ln.from == ln.to)
            throw Error("grid: line " + std::to_string(ln.id) + " has bad endpoints");
        if (ln.r <= 0.0 || ln.x <= 0.0)
            throw Error("grid: line " + std::to_string(ln.id) + " needs R > 0 and X > 0");
        all.unite(ln.from, ln.to);
        if (!ln.is_switch) {
            if (!fixed.unite(ln.from, ln.to))
                throw InfeasibleRadiality("grid: non-switch lines contain a cycle");
            ++fixed_edges;
        }
    }
    int root = all.find(0);
    for (int j = 1; j < node_count_; ++j)
        if (all.find(j) != root) throw Error("grid: graph with all lines present is disconnected");
    int n_switch = 0;
    for (const Line& ln : lines_) n_switch += ln.is_switch ? 1 : 0;
    if (n_switch < 1) throw Error("grid: need at least one switchable line");
    // A radial configuration exists iff the fixed forest can be completed to a
    // spanning tree by closing switches (greedy works on the graphic matroid).
    detail::UnionFind greedy = fixed;
    int edges = fixed_edges;
    for (const Line& ln : lines_)
        if (ln.is_switch && greedy.unite(ln.from, ln.to)) ++edges;
    if (edges != node_count_ - 1)
        throw InfeasibleRadiality("grid: no radial topology exists");
    int L = (node_count_ - 1) - (static_cast<int>(lines_.size()) - n_switch);
    if (L < 0 || L > n_switch)
        throw InfeasibleRadiality("grid: cutoff L outside [0, M_sw]");
}

/// Stacked equality residuals: real balance (N), reactive balance (N), then
/// the voltage-drop relation for each non-switch line. Zero iff the
/// linearized power-flow equalities hold.
inline Vec distflow_residuals(const GridModel& grid, const TopologyState& /*topo*/,
                              const PowerState& s) {
    const int n = grid.node_count();
    const int m = grid.line_count();
    if (s.v.size() != n || s.p_ij.size() != m)
        throw DimensionMismatch("distflow_residuals: state dimensions do not match grid");
    int n_fixed = m - grid.switch_count();
    Vec res = Vec::Zero(2 * n + n_fixed);
    // Nodal balance: P^G_j - P^L_j = net directed outflow at j.
    Vec pout = Vec::Zero(n), qout = Vec::Zero(n);
    for (int e = 0; e < m; ++e) {
        const Line& ln = grid.line(e);
        pout[ln.from] += s.p_ij[e] - s.p_ji[e];
        pout[ln.to] += s.p_ji[e] - s.p_ij[e];
        qout[ln.from] += s.q_ij[e] - s.q_ji[e];
        qout[ln.to] += s.q_ji[e] - s.q_ij[e];
    }
    for (int j = 0; j < n; ++j) {
        res[j] = s.p_gen[j] - s.p_load[j] - pout[j];
        res[n + j] = s.q_gen[j] - s.q_load[j] - qout[j];
    }
    int k = 2 * n;
    for (int e = 0; e < m; ++e) {
        const Line& ln = grid.line(e);
        if (ln.is_switch) continue;
        res[k++] = s.v[ln.to] - s.v[ln.from] +
                   2.0 * (ln.r * (s.p_ij[e] - s.p_ji[e]) + ln.x * (s.q_ij[e] - s.q_ji[e]));
    }
    return res;
}

/// Quadratic loss proxy: sum over lines of (P_ij^2+P_ji^2+Q_ij^2+Q_ji^2) R_ij.
inline double objective_f(const GridModel& grid, const PowerState& s) {
    double f = 0.0;
    for (int e = 0; e < grid.line_count(); ++e) {
        const Line& ln = grid.line(e);
        f += (s.p_ij[e] * s.p_ij[e] + s.p_ji[e] * s.p_ji[e] + s.q_ij[e] * s.q_ij[e] +
              s.q_ji[e] * s.q_ji[e]) *
             ln.r;
    }
    return f;
}

/// Physical line losses: sum of R_ij ((P_ij-P_ji)^2 + (Q_ij-Q_ji)^2) / v_i.
inline double line_losses(const GridModel& grid, const PowerState& s) {
    double total = 0.0;
    for (int e = 0; e < grid.line_count(); ++e) {
        const Line& ln = grid.line(e);
        double vi = s.v[ln.from];
        if (vi <= 0.0) throw DegenerateVoltage("line_losses: v <= 0 at node " +
                                               std::to_string(ln.from));
        double dp = s.p_ij[e] - s.p_ji[e];
        double dq = s.q_ij[e] - s.q_ji[e];
        total += ln.r * (dp * dp + dq * dq) / vi;
    }
    return total;
}

/// Loads a grid from the CSV pair described in the README:
///   lines.csv: id,from,to,R_ohm,X_ohm,is_switch   (1-indexed node ids)
///   nodes.csv: id,P_L_kW,Q_L_kVAR
/// Returns the grid plus nominal per-unit loads.
struct LoadedGrid {
    GridModel grid;
    Vec p_load_nom;  // pu
    Vec q_load_nom;  // pu
};

inline LoadedGrid load_grid_csv(const std::string& lines_csv, const std::string& nodes_csv,
                                double base_kv, double base_kva, double v_lo, double v_hi,
                                int pcc_node = 0) {
    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string tok;
        while (std::getline(ss, tok, ',')) out.push_back(tok);
        return out;
    };
    std::ifstream lf(lines_csv);
    if (!lf) throw Error("cannot open " + lines_csv);
    double z_base = base_kv * base_kv * 1000.0 / base_kva;  // ohm
    std::string row;
    std::getline(lf, row);  // header
    std::vector<Line> lines;
    int max_node = 0;
    while (std::getline(lf, row)) {
        if (row.empty()) continue;
        auto c = split(row);
        Line ln;
        ln.id = std::stoi(c[0]);
        ln.from = std::stoi(c[1]) - 1;
        ln.to = std::stoi(c[2]) - 1;
        ln.r = std::stod(c[3]) / z_base;
        ln.x = std::stod(c[4]) / z_base;
        ln.is_switch = std::stoi(c[5]) != 0;
        max_node = std::max({max_node, ln.from, ln.to});
        lines.push_back(ln);
    }
    int n = max_node + 1;
    Vec pl = Vec::Zero(n), ql = Vec::Zero(n);
    std::ifstream nf(nodes_csv);
    if (!nf) throw Error("cannot open " + nodes_csv);
    std::getline(nf, row);
    while (std::getline(nf, row)) {
        if (row.empty()) continue;
        auto c = split(row);
        int j = std::stoi(c[0]) - 1;
        if (j < 0 || j >= n) throw Error("nodes.csv: node id out of range");
        pl[j] = std::stod(c[1]) / base_kva;
        ql[j] = std::stod(c[2]) / base_kva;
    }
    return LoadedGrid{GridModel(n, pcc_node, std::move(lines), base_kva, v_lo, v_hi), pl, ql};
}

}  // namespace dnr
