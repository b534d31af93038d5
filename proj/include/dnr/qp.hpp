#pragma once

#include "dnr/common.hpp"

#include <Eigen/Dense>
#include <limits>
#include <vector>

namespace dnr {

/// minimize 1/2 u'Hu + c'u  subject to  A'u >= b   (columns of A are
/// constraint normals). H must be positive definite.
struct QpProblem {
    Mat H;
    Vec c;
    Mat A;  // dim x n_constraints
    Vec b;
};

enum class QpStatus { kOptimal, kInfeasible, kMaxIter };

struct QpResult {
    QpStatus status = QpStatus::kMaxIter;
    Vec u;
    double objective = 0.0;
    double kkt_residual = 0.0;  // max of stationarity, violation, complementarity
    int iterations = 0;
    std::vector<int> active;  // indices of active constraints at the solution
    Vec multipliers;          // matching `active`
};

/// Dual active-set method (Goldfarb-Idnani). Starts at the unconstrained
/// minimizer, which is dual feasible, and adds the most violated constraint
/// each outer iteration, dropping blocking constraints along the way. Each
/// step direction comes from a dense solve of the bordered KKT system; no
/// incremental factorization updates.
inline QpResult solve_qp(const QpProblem& qp, double tol = 1e-9, int max_iter = 100000) {
    const int dim = static_cast<int>(qp.H.rows());
    const int nc = static_cast<int>(qp.b.size());
    QpResult res;
    res.u = Vec::Zero(dim);

    if (dim == 0) {
        // Only constant constraints remain: 0 >= b_i.
        for (int i = 0; i < nc; ++i)
            if (qp.b[i] > tol) { res.status = QpStatus::kInfeasible; return res; }
        res.status = QpStatus::kOptimal;
        return res;
    }

    Eigen::LDLT<Mat> hfac(qp.H);
    Vec u = hfac.solve(-qp.c);
    std::vector<int> active;
    std::vector<double> lam;

    auto slack = [&](int i) { return qp.A.col(i).dot(u) - qp.b[i]; };

    // Solves [H A_W; A_W' 0] [z; r] = [a; 0] for the current working set.
    auto step_dirs = [&](const Vec& a, Vec* z, Vec* r) {
        int k = static_cast<int>(active.size());
        Mat kkt = Mat::Zero(dim + k, dim + k);
        kkt.topLeftCorner(dim, dim) = qp.H;
        for (int j = 0; j < k; ++j) {
            kkt.block(0, dim + j, dim, 1) = qp.A.col(active[j]);
            kkt.block(dim + j, 0, 1, dim) = qp.A.col(active[j]).transpose();
        }
        Vec rhs = Vec::Zero(dim + k);
        rhs.head(dim) = a;
        Vec sol = kkt.fullPivLu().solve(rhs);
        *z = sol.head(dim);
        *r = sol.tail(k);
    };

    const double inf = std::numeric_limits<double>::infinity();
    int iter = 0;
    while (true) {
        if (++iter > max_iter) { res.status = QpStatus::kMaxIter; break; }
        // Most violated inactive constraint.
        int p = -1;
        double worst = -tol;
        for (int i = 0; i < nc; ++i) {
            bool in_w = false;
            for (int a : active) if (a == i) { in_w = true; break; }
            if (in_w) continue;
            double s = slack(i);
            if (s < worst) { worst = s; p = i; }
        }
        if (p < 0) { res.status = QpStatus::kOptimal; break; }

        Vec ap = qp.A.col(p);
        double lam_p = 0.0;
        bool added = false;
        while (true) {
            if (++iter > max_iter) break;
            Vec z, r;
            step_dirs(ap, &z, &r);
            double azp = ap.dot(z);
            double t2 = azp > tol ? -slack(p) / azp : inf;
            double t1 = inf;
            int block = -1;
            for (int j = 0; j < static_cast<int>(active.size()); ++j) {
                if (r[j] > tol) {
                    double cand = lam[j] / r[j];
                    if (cand < t1) { t1 = cand; block = j; }
                }
            }
            double t = std::min(t1, t2);
            if (t == inf) { res.status = QpStatus::kInfeasible; res.u = u; return res; }
            u += t * z;
            for (int j = 0; j < static_cast<int>(active.size()); ++j) lam[j] -= t * r[j];
            lam_p += t;
            if (t == t2 && t2 <= t1) {
                active.push_back(p);
                lam.push_back(lam_p);
                added = true;
                break;
            }
            active.erase(active.begin() + block);
            lam.erase(lam.begin() + block);
        }
        if (!added && iter > max_iter) { res.status = QpStatus::kMaxIter; break; }
    }

    res.u = u;
    res.objective = 0.5 * u.dot(qp.H * u) + qp.c.dot(u);
    res.iterations = iter;
    res.active = active;
    res.multipliers = Vec::Zero(static_cast<int>(lam.size()));
    for (size_t j = 0; j < lam.size(); ++j) res.multipliers[static_cast<int>(j)] = lam[j];

    // KKT residual: stationarity, primal feasibility, complementarity.
    Vec grad = qp.H * u + qp.c;
    for (size_t j = 0; j < active.size(); ++j) grad -= lam[j] * qp.A.col(active[j]);
    double resid = grad.lpNorm<Eigen::Infinity>();
    for (int i = 0; i < nc; ++i) resid = std::max(resid, -slack(i));
    for (size_t j = 0; j < active.size(); ++j)
        resid = std::max(resid, std::abs(lam[j] * slack(active[j])));
    res.kkt_residual = resid;
    return res;
}

}  // namespace dnr
