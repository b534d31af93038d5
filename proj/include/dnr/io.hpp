#pragma once

#include "dnr/metrics.hpp"
#include "dnr/oracle.hpp"
#include "dnr/pipeline.hpp"
#include "dnr/scenario.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace dnr {

/// Shortest round-trippable decimal form; deterministic across runs.
inline std::string fmt_full(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// Readable form for report-style outputs that are never parsed back.
inline std::string fmt_short(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open for reading: " + path);
    return f;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw Error("cannot open for writing: " + path);
    return f;
}

}  // namespace detail

// --------------------------------------------------------- scenarios ----

/// One row per instance: timestamp, loads per node, then available solar
/// per site. Node ids in the header are 1-based, matching the case tables.
inline void write_scenarios_csv(const std::string& path, const Dataset& ds) {
    std::ofstream f = detail::open_out(path);
    const GridModel& g = ds.grid_case.grid;
    f << "timestamp";
    for (int j = 0; j < g.node_count(); ++j) f << ",PL[" << j + 1 << "]";
    for (int j = 0; j < g.node_count(); ++j) f << ",QL[" << j + 1 << "]";
    for (int j : ds.solar_nodes) f << ",PGcap[" << j + 1 << "]";
    f << "\n";
    for (const ScenarioInstance& s : ds.instances) {
        f << s.timestamp;
        for (int j = 0; j < g.node_count(); ++j) f << "," << fmt_full(s.p_load[j]);
        for (int j = 0; j < g.node_count(); ++j) f << "," << fmt_full(s.q_load[j]);
        for (int j : ds.solar_nodes) f << "," << fmt_full(s.p_gen_cap[j]);
        f << "\n";
    }
}

/// Rebuilds full scenario instances from the CSV: loads and solar caps come
/// from the file, derived dispatch bounds from the same rules the generator
/// uses (reactive capability 0.44 of the cap, bulk sources sized off the
/// nominal case loads).
inline std::vector<ScenarioInstance> read_scenarios_csv(const std::string& path,
                                                        const cases::CaseData& cs) {
    std::ifstream f = detail::open_in(path);
    const GridModel& g = cs.grid;
    const int n = g.node_count();
    std::string line;
    if (!std::getline(f, line)) throw Error("empty scenarios file: " + path);
    std::vector<std::string> hdr = detail::split_csv(line);
    std::vector<int> solar_nodes;
    for (size_t c = 1 + 2 * static_cast<size_t>(n); c < hdr.size(); ++c) {
        const std::string& h = hdr[c];
        auto lb = h.find('['), rb = h.find(']');
        if (h.rfind("PGcap", 0) != 0 || lb == std::string::npos || rb == std::string::npos)
            throw Error("bad scenarios header column: " + h);
        solar_nodes.push_back(std::stoi(h.substr(lb + 1, rb - lb - 1)) - 1);
    }
    double bulk_p = 2.0 * cs.p_load_nom.sum();
    double bulk_q = 2.0 * cs.q_load_nom.sum();
    std::vector<ScenarioInstance> out;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<std::string> c = detail::split_csv(line);
        if (c.size() != 1 + 2 * static_cast<size_t>(n) + solar_nodes.size())
            throw Error("bad scenarios row width in " + path);
        ScenarioInstance s = ScenarioInstance::zeros(n);
        s.timestamp = std::stoi(c[0]);
        size_t k = 1;
        for (int j = 0; j < n; ++j) s.p_load[j] = std::stod(c[k++]);
        for (int j = 0; j < n; ++j) s.q_load[j] = std::stod(c[k++]);
        for (int j : solar_nodes) {
            double cap = std::stod(c[k++]);
            s.p_gen_cap[j] = cap;
            s.q_gen_hi[j] = 0.44 * cap;
            s.q_gen_lo[j] = -0.44 * cap;
        }
        for (int j : cs.bulk_source_nodes) {
            s.p_gen_cap[j] = bulk_p;
            s.q_gen_hi[j] = bulk_q;
            s.q_gen_lo[j] = -bulk_q;
        }
        s.p_gen_cap[g.pcc()] = bulk_p;
        s.q_gen_hi[g.pcc()] = bulk_q;
        s.q_gen_lo[g.pcc()] = -bulk_q;
        refresh_x(g, s);
        out.push_back(std::move(s));
    }
    return out;
}

// ------------------------------------------------------------ labels ----

/// One row per scenario: closed-switch line ids (semicolon separated,
/// 1-based), objective value, then voltage magnitude and dispatch per node.
inline void write_labels_csv(const std::string& path, const GridModel& g,
                             const std::vector<Label>& labels) {
    std::ofstream f = detail::open_out(path);
    f << "closed_switches,objective";
    for (int j = 0; j < g.node_count(); ++j) f << ",V[" << j + 1 << "]";
    for (int j = 0; j < g.node_count(); ++j) f << ",PG[" << j + 1 << "]";
    for (int j = 0; j < g.node_count(); ++j) f << ",QG[" << j + 1 << "]";
    f << "\n";
    for (const Label& lab : labels) {
        std::string ids;
        for (int s = 0; s < g.switch_count(); ++s) {
            if (lab.y[s] > 0.5) {
                if (!ids.empty()) ids += ";";
                ids += std::to_string(g.line(g.switch_lines()[s]).id);
            }
        }
        f << ids << "," << fmt_full(lab.objective);
        for (int j = 0; j < g.node_count(); ++j) f << "," << fmt_full(lab.v_mag[j]);
        for (int j = 0; j < g.node_count(); ++j) f << "," << fmt_full(lab.p_gen[j]);
        for (int j = 0; j < g.node_count(); ++j) f << "," << fmt_full(lab.q_gen[j]);
        f << "\n";
    }
}

inline std::vector<Label> read_labels_csv(const std::string& path, const GridModel& g) {
    std::ifstream f = detail::open_in(path);
    const int n = g.node_count();
    std::string line;
    if (!std::getline(f, line)) throw Error("empty labels file: " + path);
    std::vector<Label> out;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<std::string> c = detail::split_csv(line);
        if (c.size() != 2 + 3 * static_cast<size_t>(n))
            throw Error("bad labels row width in " + path);
        Label lab;
        lab.y.assign(g.switch_count(), 0.0);
        std::stringstream ids(c[0]);
        std::string tok;
        while (std::getline(ids, tok, ';')) {
            if (tok.empty()) continue;
            int want = std::stoi(tok);
            bool found = false;
            for (int s = 0; s < g.switch_count(); ++s) {
                if (g.line(g.switch_lines()[s]).id == want) {
                    lab.y[s] = 1.0;
                    found = true;
                    break;
                }
            }
            if (!found) throw Error("labels reference unknown switch line id " + tok);
        }
        lab.objective = std::stod(c[1]);
        lab.v_mag = Vec::Zero(n);
        lab.p_gen = Vec::Zero(n);
        lab.q_gen = Vec::Zero(n);
        size_t k = 2;
        for (int j = 0; j < n; ++j) lab.v_mag[j] = std::stod(c[k++]);
        for (int j = 0; j < n; ++j) lab.p_gen[j] = std::stod(c[k++]);
        for (int j = 0; j < n; ++j) lab.q_gen[j] = std::stod(c[k++]);
        out.push_back(std::move(lab));
    }
    return out;
}

inline Label label_from_solution(const GridModel& g, const FixedTopologySolution& sol) {
    Label lab;
    lab.y = sol.decision.topo.y;
    lab.objective = sol.objective;
    const int n = g.node_count();
    lab.v_mag = Vec::Zero(n);
    for (int j = 0; j < n; ++j) lab.v_mag[j] = std::sqrt(std::max(0.0, sol.decision.state.v[j]));
    lab.p_gen = sol.decision.state.p_gen;
    lab.q_gen = sol.decision.state.q_gen;
    return lab;
}

// --------------------------------------------------------- warm start ----

inline void write_warmstart(const std::string& path, const WarmStart& ws) {
    std::ofstream f = detail::open_out(path);
    for (const auto& [k, v] : ws.values) f << k << "=" << fmt_full(v) << "\n";
}

inline WarmStart read_warmstart(const std::string& path) {
    std::ifstream f = detail::open_in(path);
    WarmStart ws;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw Error("bad warm-start line: " + line);
        ws.values[line.substr(0, eq)] = std::stod(line.substr(eq + 1));
    }
    return ws;
}

// -------------------------------------------------------------- config ----

/// Flat key=value file; '#' starts a comment, blank lines ignored.
inline std::map<std::string, std::string> read_config(const std::string& path) {
    std::ifstream f = detail::open_in(path);
    std::map<std::string, std::string> out;
    std::string line;
    auto trim = [](std::string s) {
        size_t a = s.find_first_not_of(" \t");
        size_t b = s.find_last_not_of(" \t");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    while (std::getline(f, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw Error("bad config line: " + line);
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

// ---------------------------------------------------------- checkpoint ----

inline void save_checkpoint(const std::string& path, TrainedModel& model) {
    std::ofstream f = detail::open_out(path);
    f << "dnr-checkpoint 1\n";
    f << "variant " << variant_name(model.cfg.variant) << "\n";
    f << "hidden " << model.cfg.hidden << "\n";
    f << "committee " << model.cfg.committee << "\n";
    f << "in_dim " << model.in_dim << "\n";
    f << "out_dim " << model.out_dim << "\n";
    f << "seed " << model.cfg.seed << "\n";
    f << "epochs " << model.cfg.epochs << "\n";
    f << "batch " << model.cfg.batch << "\n";
    f << "lr " << fmt_full(model.cfg.adam.lr) << "\n";
    f << "lambda " << fmt_full(model.cfg.loss.lambda) << "\n";
    f << "big_m " << fmt_full(model.cfg.loss.big_m) << "\n";
    f << "no_export " << (model.cfg.loss.no_export ? 1 : 0) << "\n";
    f << "supervised " << (model.cfg.supervised ? 1 : 0) << "\n";
    f << "supervised_penalty " << (model.cfg.supervised_penalty ? 1 : 0) << "\n";
    for (size_t k = 0; k < model.members.size(); ++k) {
        f << "member " << k << " steps " << model.members[k].step_count() << "\n";
        model.members[k].visit_params([&](const std::string& name, Mat& m) {
            f << "tensor " << name << " " << m.rows() << " " << m.cols() << "\n";
            for (int i = 0; i < m.rows(); ++i) {
                for (int j = 0; j < m.cols(); ++j) {
                    if (j) f << " ";
                    f << fmt_full(m(i, j));
                }
                f << "\n";
            }
        });
    }
}

inline TrainedModel load_checkpoint(const std::string& path) {
    std::ifstream f = detail::open_in(path);
    std::string word;
    f >> word;
    int version;
    f >> version;
    if (word != "dnr-checkpoint" || version != 1)
        throw Error("unrecognized checkpoint header in " + path);
    TrainedModel model;
    std::string key;
    int flag;
    f >> key >> word;
    model.cfg.variant = parse_variant(word);
    f >> key >> model.cfg.hidden;
    f >> key >> model.cfg.committee;
    f >> key >> model.in_dim;
    f >> key >> model.out_dim;
    f >> key >> model.cfg.seed;
    f >> key >> model.cfg.epochs;
    f >> key >> model.cfg.batch;
    f >> key >> model.cfg.adam.lr;
    f >> key >> model.cfg.loss.lambda;
    f >> key >> model.cfg.loss.big_m;
    f >> key >> flag;
    model.cfg.loss.no_export = flag != 0;
    f >> key >> flag;
    model.cfg.supervised = flag != 0;
    f >> key >> flag;
    model.cfg.supervised_penalty = flag != 0;
    std::mt19937_64 dummy = make_rng(0);
    for (int k = 0; k < model.cfg.committee; ++k) {
        int idx, steps;
        f >> key >> idx >> word >> steps;
        if (key != "member") throw Error("malformed checkpoint member block in " + path);
        model.members.emplace_back(model.in_dim, model.cfg.hidden, model.out_dim, dummy);
        model.members.back().set_step_count(steps);
        model.members.back().visit_params([&](const std::string& name, Mat& m) {
            std::string tk, tn;
            int rows, cols;
            f >> tk >> tn >> rows >> cols;
            if (tk != "tensor" || tn != name || rows != m.rows() || cols != m.cols())
                throw Error("checkpoint tensor mismatch at " + name + " in " + path);
            for (int i = 0; i < rows; ++i)
                for (int j = 0; j < cols; ++j) f >> m(i, j);
        });
    }
    if (!f) throw Error("truncated checkpoint: " + path);
    return model;
}

// ------------------------------------------------------------ outputs ----

inline void write_metrics_csv(const std::string& path,
                              const std::vector<std::pair<std::string, MetricsRecord>>& rows) {
    std::ofstream f = detail::open_out(path);
    f << "model,instances,disp_err,volt_err,top_err,mean_ineq,max_ineq,count_over_eps,"
         "objective\n";
    for (const auto& [name, r] : rows) {
        f << name << "," << r.instances << "," << fmt_short(r.disp_err) << ","
          << fmt_short(r.volt_err) << "," << fmt_short(r.top_err) << ","
          << fmt_short(r.mean_ineq) << "," << fmt_short(r.max_ineq) << ","
          << fmt_short(r.mean_count_over_eps) << "," << fmt_short(r.mean_objective) << "\n";
    }
}

inline void write_curves_csv(const std::string& path,
                             const std::vector<std::pair<std::string, std::vector<double>>>& curves) {
    std::ofstream f = detail::open_out(path);
    f << "model,epoch,loss\n";
    for (const auto& [name, curve] : curves)
        for (size_t e = 0; e < curve.size(); ++e)
            f << name << "," << e + 1 << "," << fmt_short(curve[e]) << "\n";
}

inline void write_report_csv(const std::string& path, const SystemReport& rep,
                             const GridModel& g) {
    std::ofstream f = detail::open_out(path);
    f << "mode,energy_loss_kwh,avg_voltage,undervoltage_count,pv_utilization,infeasible,"
         "closed_switches\n";
    for (const ReportRow& row : rep.rows) {
        std::string closed;
        if (row.mode == "static" && !rep.static_topology.empty()) {
            for (int s = 0; s < g.switch_count(); ++s) {
                if (rep.static_topology[s] > 0.5) {
                    if (!closed.empty()) closed += ";";
                    closed += std::to_string(g.line(g.switch_lines()[s]).id);
                }
            }
        }
        f << row.mode << "," << fmt_short(row.energy_loss_kwh) << ","
          << fmt_short(row.avg_voltage) << "," << row.undervoltage << ","
          << fmt_short(row.pv_utilization) << "," << row.infeasible << "," << closed << "\n";
    }
}

}  // namespace dnr
