// Command-line front end: dataset generation, exhaustive labeling, training,
// evaluation, operating reports, and warm-start export.

#include "CLI11.hpp"
#include "dnr/io.hpp"

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

namespace {

dnr::LoadMode parse_load_mode(const std::string& s) {
    if (s == "perturbed") return dnr::LoadMode::kPerturbed;
    if (s == "residential") return dnr::LoadMode::kResidential;
    if (s == "mixed") return dnr::LoadMode::kMixed;
    throw CLI::ValidationError("--load-mode", "expected perturbed|residential|mixed");
}

dnr::SolarMode parse_solar_mode(const std::string& s) {
    if (s == "profile") return dnr::SolarMode::kProfile;
    if (s == "flat") return dnr::SolarMode::kFlat;
    if (s == "none") return dnr::SolarMode::kNone;
    throw CLI::ValidationError("--solar-mode", "expected profile|flat|none");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"physics-informed distribution-grid reconfiguration toolkit"};
    app.require_subcommand(1);

    std::uint64_t seed = 1;
    double eps = 1e-3, big_m = 10.0;
    bool no_export = false;
    app.add_option("--seed", seed, "base RNG seed");
    app.add_option("--eps", eps, "feasibility tolerance");
    app.add_option("--big-m", big_m, "big-M constant, pu");
    app.add_flag("--no-export", no_export, "forbid power export to the PCC");
    app.fallthrough();

    std::string grid_id = "bw33";
    std::string scenarios_path, labels_path, checkpoint_path, out_path;

    // generate
    auto* gen = app.add_subcommand("generate", "synthesize a scenario dataset");
    int count = 100;
    std::string load_mode = "perturbed", solar_layout = "DD-U", solar_mode = "flat";
    gen->set_config("--config");
    gen->add_option("--grid", grid_id, "grid id: bw33|tpc94|test6");
    gen->add_option("--count", count, "number of instances");
    gen->add_option("--load-mode", load_mode, "perturbed|residential|mixed");
    gen->add_option("--solar-layout", solar_layout, "solar siting layout name");
    gen->add_option("--solar-mode", solar_mode, "profile|flat|none");
    gen->add_option("--out", out_path, "output scenarios.csv")->required();

    // label
    auto* lab = app.add_subcommand("label", "solve every scenario exactly");
    lab->set_config("--config");
    lab->add_option("--grid", grid_id, "grid id");
    lab->add_option("--scenarios", scenarios_path, "input scenarios.csv")->required();
    lab->add_option("--out", out_path, "output labels.csv")->required();

    // train
    auto* tr = app.add_subcommand("train", "train a predictor committee");
    std::string variant = "SiPhyR", curves_path;
    int hidden = 5, epochs = 100, batch = 200, committee = 3;
    double lr = 1e-3, lambda = 100.0;
    bool supervised = false, supervised_penalty = false;
    tr->set_config("--config");
    tr->add_option("--grid", grid_id, "grid id");
    tr->add_option("--scenarios", scenarios_path, "training scenarios.csv")->required();
    tr->add_option("--labels", labels_path, "labels.csv (required for supervised)");
    tr->add_option("--variant", variant, "InSi|InSi2R|ClaPhyR|SiPhyR|InSiPhyR");
    tr->add_option("--hidden", hidden, "hidden width");
    tr->add_option("--epochs", epochs, "training epochs");
    tr->add_option("--batch", batch, "batch size");
    tr->add_option("--committee", committee, "committee size");
    tr->add_option("--lr", lr, "learning rate");
    tr->add_option("--lambda", lambda, "inequality penalty weight");
    tr->add_flag("--supervised", supervised, "regression to labels instead of the physics loss");
    tr->add_flag("--supervised-penalty", supervised_penalty,
                 "add the inequality penalty to the supervised loss");
    tr->add_option("--checkpoint", checkpoint_path, "output checkpoint path")->required();
    tr->add_option("--curves", curves_path, "output curves.csv");

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on scenarios");
    ev->set_config("--config");
    ev->add_option("--grid", grid_id, "grid id");
    ev->add_option("--scenarios", scenarios_path, "scenarios.csv")->required();
    ev->add_option("--labels", labels_path, "labels.csv for error metrics");
    ev->add_option("--checkpoint", checkpoint_path, "trained checkpoint")->required();
    ev->add_option("--out", out_path, "output metrics.csv")->required();

    // report
    auto* rp = app.add_subcommand("report", "compare reconfiguration policies");
    rp->set_config("--config");
    rp->add_option("--grid", grid_id, "grid id");
    rp->add_option("--scenarios", scenarios_path, "scenarios.csv")->required();
    rp->add_option("--out", out_path, "output report.csv")->required();

    // warmstart
    auto* ws = app.add_subcommand("warmstart", "export a warm-start record");
    int index = 0;
    ws->set_config("--config");
    ws->add_option("--grid", grid_id, "grid id");
    ws->add_option("--scenarios", scenarios_path, "scenarios.csv")->required();
    ws->add_option("--checkpoint", checkpoint_path, "use a model prediction instead of the oracle");
    ws->add_option("--index", index, "scenario row to export");
    ws->add_option("--out", out_path, "output record path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        dnr::OracleOptions oracle_opt;
        oracle_opt.big_m = big_m;
        oracle_opt.no_export = no_export;

        if (gen->parsed()) {
            dnr::DatasetSpec spec;
            spec.grid_id = grid_id;
            spec.count = count;
            spec.seed = seed;
            spec.load_mode = parse_load_mode(load_mode);
            spec.solar_mode = parse_solar_mode(solar_mode);
            spec.solar_layout = solar_mode == "none" ? "" : solar_layout;
            dnr::Dataset ds = dnr::build_dataset(spec);
            dnr::write_scenarios_csv(out_path, ds);
            std::cout << "wrote " << ds.instances.size() << " scenarios to " << out_path << "\n";
        } else if (lab->parsed()) {
            dnr::cases::CaseData cs = dnr::load_case(grid_id);
            auto instances = dnr::read_scenarios_csv(scenarios_path, cs);
            std::vector<dnr::Label> labels;
            for (const auto& sc : instances) {
                dnr::FixedTopologySolution sol = dnr::brute_force_optimum(cs.grid, sc, oracle_opt);
                labels.push_back(dnr::label_from_solution(cs.grid, sol));
            }
            dnr::write_labels_csv(out_path, cs.grid, labels);
            std::cout << "wrote " << labels.size() << " labels to " << out_path << "\n";
        } else if (tr->parsed()) {
            dnr::DatasetSpec spec;
            spec.grid_id = grid_id;
            spec.count = 1;
            spec.seed = seed;
            dnr::Dataset ds{spec, dnr::load_case(grid_id)};
            ds.instances = dnr::read_scenarios_csv(scenarios_path, ds.grid_case);
            std::vector<dnr::Label> labels;
            if (!labels_path.empty())
                labels = dnr::read_labels_csv(labels_path, ds.grid_case.grid);
            if (supervised && labels.empty())
                throw dnr::MissingLabels("supervised training requires --labels");
            dnr::PipelineConfig cfg;
            cfg.variant = dnr::parse_variant(variant);
            cfg.hidden = hidden;
            cfg.epochs = epochs;
            cfg.batch = batch;
            cfg.committee = committee;
            cfg.adam.lr = lr;
            cfg.loss.lambda = lambda;
            cfg.loss.big_m = big_m;
            cfg.loss.no_export = no_export;
            cfg.seed = seed;
            cfg.supervised = supervised;
            cfg.supervised_penalty = supervised_penalty;
            std::vector<int> idx(ds.instances.size());
            for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
            dnr::TrainedModel model =
                dnr::train_model(ds, idx, labels.empty() ? nullptr : &labels, cfg);
            dnr::save_checkpoint(checkpoint_path, model);
            if (!curves_path.empty())
                dnr::write_curves_csv(curves_path, {{variant, model.curve}});
            std::cout << "trained " << committee << " member(s), checkpoint at "
                      << checkpoint_path << "\n";
        } else if (ev->parsed()) {
            dnr::cases::CaseData cs = dnr::load_case(grid_id);
            auto instances = dnr::read_scenarios_csv(scenarios_path, cs);
            dnr::TrainedModel model = dnr::load_checkpoint(checkpoint_path);
            std::vector<dnr::Label> labels;
            if (!labels_path.empty()) labels = dnr::read_labels_csv(labels_path, cs.grid);
            const std::vector<dnr::Label>* labp = labels.empty() ? nullptr : &labels;
            std::vector<std::pair<std::string, dnr::MetricsRecord>> rows;
            std::vector<dnr::DecisionVector> preds;
            for (const auto& sc : instances) preds.push_back(dnr::predict(cs.grid, sc, model));
            std::string name = dnr::variant_name(model.cfg.variant);
            rows.push_back({name + "/ensemble",
                            dnr::eval_metrics(cs.grid, instances, preds, labp, eps, big_m,
                                              no_export)});
            for (size_t k = 0; k < model.members.size(); ++k) {
                dnr::TrainedModel one;
                one.cfg = model.cfg;
                one.in_dim = model.in_dim;
                one.out_dim = model.out_dim;
                one.members.push_back(model.members[k]);
                std::vector<dnr::DecisionVector> p1;
                for (const auto& sc : instances) p1.push_back(dnr::predict(cs.grid, sc, one));
                rows.push_back({name + "/member-" + std::to_string(k),
                                dnr::eval_metrics(cs.grid, instances, p1, labp, eps, big_m,
                                                  no_export)});
            }
            dnr::write_metrics_csv(out_path, rows);
            std::cout << "wrote metrics for " << rows.size() << " row(s) to " << out_path << "\n";
        } else if (rp->parsed()) {
            dnr::DatasetSpec spec;
            spec.grid_id = grid_id;
            spec.count = 1;
            spec.seed = seed;
            dnr::Dataset ds{spec, dnr::load_case(grid_id)};
            ds.instances = dnr::read_scenarios_csv(scenarios_path, ds.grid_case);
            // Recover the solar sites so utilization can be reported.
            {
                dnr::ScenarioInstance& s0 = ds.instances.front();
                for (int j = 0; j < ds.grid_case.grid.node_count(); ++j) {
                    if (j == ds.grid_case.grid.pcc()) continue;
                    bool bulk = false;
                    for (int b : ds.grid_case.bulk_source_nodes) bulk |= (b == j);
                    if (!bulk && s0.p_gen_cap[j] > 0.0) ds.solar_nodes.push_back(j);
                }
            }
            ds.minutes_per_step = grid_id == "tpc94" ? 5.0 : 60.0;
            std::vector<int> idx(ds.instances.size());
            for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
            dnr::SystemReport rep = dnr::power_system_report(ds, idx, oracle_opt);
            dnr::write_report_csv(out_path, rep, ds.grid_case.grid);
            std::cout << "wrote policy report to " << out_path << "\n";
        } else if (ws->parsed()) {
            dnr::cases::CaseData cs = dnr::load_case(grid_id);
            auto instances = dnr::read_scenarios_csv(scenarios_path, cs);
            if (index < 0 || index >= static_cast<int>(instances.size()))
                throw dnr::Error("--index out of range");
            dnr::DecisionVector d;
            if (!checkpoint_path.empty()) {
                dnr::TrainedModel model = dnr::load_checkpoint(checkpoint_path);
                d = dnr::predict(cs.grid, instances[index], model);
            } else {
                d = dnr::brute_force_optimum(cs.grid, instances[index], oracle_opt).decision;
            }
            dnr::ViolationReport vr =
                dnr::check_feasibility(cs.grid, instances[index], d, eps, big_m, no_export);
            dnr::write_warmstart(out_path, dnr::export_warmstart(cs.grid, d, vr));
            std::cout << "wrote warm-start record to " << out_path << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
