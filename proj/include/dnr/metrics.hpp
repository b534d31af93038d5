#pragma once

#include "dnr/oracle.hpp"
#include "dnr/pipeline.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace dnr {

/// Aggregate prediction-quality metrics against optimizer labels.
struct MetricsRecord {
    double disp_err = 0.0;   // mean squared dispatch error per node
    double volt_err = 0.0;   // mean squared voltage-magnitude error per node
    double top_err = 0.0;    // mean squared switch-state error, fraction
    double mean_ineq = 0.0;  // inequality violation, averaged over rows and instances
    double max_ineq = 0.0;
    double mean_count_over_eps = 0.0;  // violated inequality rows per instance
    double mean_objective = 0.0;
    int instances = 0;
};

inline MetricsRecord eval_metrics(const GridModel& grid,
                                  const std::vector<ScenarioInstance>& scenarios,
                                  const std::vector<DecisionVector>& decisions,
                                  const std::vector<Label>* labels, double eps = 1e-3,
                                  double big_m = 10.0, bool no_export = false) {
    MetricsRecord r;
    const int n = grid.node_count();
    const int msw = grid.switch_count();
    for (size_t i = 0; i < decisions.size(); ++i) {
        const DecisionVector& d = decisions[i];
        if (labels) {
            const Label& lab = (*labels)[i];
            double de = 0.0, ve = 0.0, te = 0.0;
            for (int j = 0; j < n; ++j) {
                double dp = d.state.p_gen[j] - lab.p_gen[j];
                double dq = d.state.q_gen[j] - lab.q_gen[j];
                de += dp * dp + dq * dq;
                double dv = std::sqrt(std::max(0.0, d.state.v[j])) - lab.v_mag[j];
                ve += dv * dv;
            }
            for (int s = 0; s < msw; ++s) {
                double dy = d.topo.y[s] - lab.y[s];
                te += dy * dy;
            }
            r.disp_err += de / n;
            r.volt_err += ve / n;
            r.top_err += te / msw;
        }
        ViolationReport vr = check_feasibility(grid, scenarios[i], d, eps, big_m, no_export);
        r.mean_ineq += vr.mean_inequality;
        r.max_ineq = std::max(r.max_ineq, vr.max_inequality);
        r.mean_count_over_eps += vr.count_over_eps;
        r.mean_objective += objective_f(grid, d.state);
        ++r.instances;
    }
    if (r.instances > 0) {
        double inv = 1.0 / r.instances;
        r.disp_err *= inv;
        r.volt_err *= inv;
        r.top_err *= inv;
        r.mean_ineq *= inv;
        r.mean_count_over_eps *= inv;
        r.mean_objective *= inv;
    }
    return r;
}

// ------------------------------------------------- system-level report ----

/// Operating summary for one reconfiguration policy over a scenario set.
struct ReportRow {
    std::string mode;           // "none", "static", "dynamic"
    double energy_loss_kwh = 0.0;
    double avg_voltage = 0.0;   // mean voltage magnitude, pu
    int undervoltage = 0;       // node-instances below 0.95 pu
    double pv_utilization = 0.0;  // dispatched / available at solar sites
    int infeasible = 0;         // instances with no feasible dispatch
};

struct SystemReport {
    std::vector<ReportRow> rows;
    std::vector<double> static_topology;  // switch states chosen by the static policy
};

namespace detail {

inline void accumulate_row(const GridModel& grid, const Dataset& ds,
                           const ScenarioInstance& sc, const DecisionVector& d,
                           double hours, ReportRow* row, double* volt_sum, int* volt_n,
                           double* pv_disp, double* pv_avail) {
    row->energy_loss_kwh += line_losses(grid, d.state) * grid.base_kva() * hours;
    for (int j = 0; j < grid.node_count(); ++j) {
        double vm = std::sqrt(std::max(0.0, d.state.v[j]));
        *volt_sum += vm;
        ++*volt_n;
        if (vm < 0.95) ++row->undervoltage;
    }
    for (size_t k = 0; k < ds.solar_nodes.size(); ++k) {
        int j = ds.solar_nodes[k];
        *pv_disp += d.state.p_gen[j];
        *pv_avail += sc.p_gen_cap[j];
    }
}

}  // namespace detail

/// Compares three operating policies on the same scenarios: keeping the
/// default topology, the best single topology for the whole set, and
/// per-instance reoptimization. Per-topology dispatch solves are shared
/// between the static search and the dynamic policy.
inline SystemReport power_system_report(const Dataset& ds, const std::vector<int>& indices,
                                        const OracleOptions& opt = {}) {
    const GridModel& grid = ds.grid_case.grid;
    const double hours = ds.minutes_per_step / 60.0;
    std::vector<std::vector<double>> topologies = enumerate_radial(grid);
    const int nt = static_cast<int>(topologies.size());
    const int ni = static_cast<int>(indices.size());

    // cache[t][i]: dispatch of topology t on instance i.
    std::vector<std::vector<FixedTopologySolution>> cache(nt);
    for (int t = 0; t < nt; ++t) {
        cache[t].resize(ni);
        for (int i = 0; i < ni; ++i)
            cache[t][i] = solve_fixed_topology(grid, ds.instances[indices[i]], topologies[t], opt);
    }

    SystemReport rep;
    auto finish = [&](ReportRow row, double volt_sum, int volt_n, double pv_disp,
                      double pv_avail) {
        row.avg_voltage = volt_n ? volt_sum / volt_n : 0.0;
        row.pv_utilization = pv_avail > 0.0 ? pv_disp / pv_avail : 0.0;
        rep.rows.push_back(std::move(row));
    };

    // No reconfiguration: the default switch states.
    {
        ReportRow row{"none"};
        double vs = 0.0, pd = 0.0, pa = 0.0;
        int vn = 0;
        if (!is_radial(grid, ds.grid_case.default_switch_state))
            throw InfeasibleRadiality("power_system_report: default topology is not radial");
        for (int i = 0; i < ni; ++i) {
            FixedTopologySolution s = solve_fixed_topology(
                grid, ds.instances[indices[i]], ds.grid_case.default_switch_state, opt);
            if (!s.feasible) { ++row.infeasible; continue; }
            detail::accumulate_row(grid, ds, ds.instances[indices[i]], s.decision, hours, &row,
                                   &vs, &vn, &pd, &pa);
        }
        finish(std::move(row), vs, vn, pd, pa);
    }

    // Static: single topology minimizing total losses across the set,
    // required to be feasible on every instance.
    {
        int best_t = -1;
        double best_total = 0.0;
        for (int t = 0; t < nt; ++t) {
            double total = 0.0;
            bool ok = true;
            for (int i = 0; i < ni; ++i) {
                if (!cache[t][i].feasible) { ok = false; break; }
                total += cache[t][i].objective;
            }
            if (ok && (best_t < 0 || total < best_total - 1e-12)) {
                best_t = t;
                best_total = total;
            }
        }
        ReportRow row{"static"};
        double vs = 0.0, pd = 0.0, pa = 0.0;
        int vn = 0;
        if (best_t >= 0) {
            rep.static_topology = topologies[best_t];
            for (int i = 0; i < ni; ++i)
                detail::accumulate_row(grid, ds, ds.instances[indices[i]],
                                       cache[best_t][i].decision, hours, &row, &vs, &vn, &pd,
                                       &pa);
        } else {
            row.infeasible = ni;
        }
        finish(std::move(row), vs, vn, pd, pa);
    }

    // Dynamic: per-instance best topology.
    {
        ReportRow row{"dynamic"};
        double vs = 0.0, pd = 0.0, pa = 0.0;
        int vn = 0;
        for (int i = 0; i < ni; ++i) {
            int best_t = -1;
            for (int t = 0; t < nt; ++t) {
                if (!cache[t][i].feasible) continue;
                if (best_t < 0 || cache[t][i].objective < cache[best_t][i].objective - 1e-12)
                    best_t = t;
            }
            if (best_t < 0) { ++row.infeasible; continue; }
            detail::accumulate_row(grid, ds, ds.instances[indices[i]], cache[best_t][i].decision,
                                   hours, &row, &vs, &vn, &pd, &pa);
        }
        finish(std::move(row), vs, vn, pd, pa);
    }
    return rep;
}

}  // namespace dnr
