// ppikit command-line tool: ingest -> diagnose -> estimate, plus the
// synthetic-data simulation lab.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "ppikit/csv.hpp"
#include "ppikit/diagnostics.hpp"
#include "ppikit/estimators.hpp"
#include "ppikit/json_io.hpp"
#include "ppikit/kernels.hpp"
#include "ppikit/simlab.hpp"

namespace {

struct SchemaFlags {
    std::vector<std::string> x_cols;
    std::string y_col = "y";
    std::string s_col = "s";
    std::string yhat_col;
    std::string id_col = "id";
    bool allow_incomplete = false;

    ppikit::CsvSchema to_schema() const {
        ppikit::CsvSchema s;
        s.covariate_columns = x_cols;
        s.outcome_column = y_col;
        s.label_column = s_col;
        s.prediction_column = yhat_col;
        s.id_column = id_col;
        s.allow_incomplete_rows = allow_incomplete;
        return s;
    }
};

void add_schema_flags(CLI::App* cmd, SchemaFlags& flags) {
    cmd->add_option("--x-cols", flags.x_cols,
                    "Covariate columns (default: every unclaimed column)");
    cmd->add_option("--y-col", flags.y_col, "Outcome column name");
    cmd->add_option("--s-col", flags.s_col, "Label indicator column name");
    cmd->add_option("--yhat-col", flags.yhat_col, "Prediction column name");
    cmd->add_option("--id-col", flags.id_col, "Row id column name");
    cmd->add_flag("--allow-incomplete", flags.allow_incomplete,
                  "Drop rows with missing covariates instead of failing");
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag_seed,
                           std::optional<std::uint64_t> config_seed) {
    if (flag_seed) return *flag_seed;
    if (const char* env = std::getenv("PPIKIT_SEED")) {
        return std::strtoull(env, nullptr, 10);
    }
    return config_seed.value_or(0);
}

ppikit::LossTarget parse_target(const std::string& name) {
    if (name == "mean") return ppikit::LossTarget::mean();
    if (name == "linreg" || name == "linear_regression") {
        return ppikit::LossTarget::linear_regression();
    }
    ppikit::raise(ppikit::Errc::InvalidSpec, "unknown target '" + name + "'");
}

int run(int argc, char** argv) {
    CLI::App app{"prediction-powered inference toolkit"};
    app.require_subcommand(1);

    // estimate
    auto* est_cmd = app.add_subcommand("estimate", "Point estimate with confidence interval");
    std::string est_input, est_method = "ppi", est_target = "mean", learner_kind = "ridge";
    double est_level = 0.90, ridge_penalty = 1.0, gb_lr = 0.1;
    int gb_rounds = 100, gb_min_leaf = 1;
    unsigned crossfit_k = 5;
    std::size_t boot_b = 1000;
    std::optional<double> fixed_lambda;
    std::optional<std::uint64_t> est_seed;
    bool all_n_form = false;
    SchemaFlags est_schema;
    est_cmd->add_option("--input", est_input, "Input CSV")->required();
    est_cmd->add_option("--method", est_method,
                        "classical | ppi | ppipp | crossppi | crossppboot");
    est_cmd->add_option("--target", est_target, "mean | linreg");
    est_cmd->add_option("--level", est_level, "Confidence level (default 0.90)");
    est_cmd->add_option("--lambda", fixed_lambda, "Fix the PPI++ lambda in [0,1]");
    est_cmd->add_flag("--all-n-mean", all_n_form,
                      "PPI mean variant averaging predictions over all rows");
    est_cmd->add_option("--learner", learner_kind, "ridge | gb_stumps (cross-fit methods)");
    est_cmd->add_option("--penalty", ridge_penalty, "Ridge penalty");
    est_cmd->add_option("--rounds", gb_rounds, "GBStumps boosting rounds");
    est_cmd->add_option("--lr", gb_lr, "GBStumps learning rate");
    est_cmd->add_option("--min-leaf", gb_min_leaf, "GBStumps minimum rows per leaf");
    est_cmd->add_option("--K", crossfit_k, "Cross-fitting folds (default 5)");
    est_cmd->add_option("--boot-b", boot_b, "Bootstrap replicates (default 1000)");
    est_cmd->add_option("--seed", est_seed, "Seed for cross-fitting / bootstrap");
    add_schema_flags(est_cmd, est_schema);

    // diagnose
    auto* diag_cmd = app.add_subcommand("diagnose", "Assumption diagnostics and recommendation");
    std::string diag_input;
    bool pretrained = false;
    ppikit::DiagnosticThresholds thresholds;
    SchemaFlags diag_schema;
    diag_cmd->add_option("--input", diag_input, "Input CSV")->required();
    diag_cmd->add_flag("--pretrained", pretrained,
                       "Predictions come from an external pre-trained model");
    std::optional<double> pvalue_threshold;
    diag_cmd->add_option("--smd-threshold", thresholds.smd, "A1 flag threshold on |SMD|");
    diag_cmd->add_option("--pvalue-threshold", pvalue_threshold,
                         "Flag threshold applied to the KS, energy, and shift p-values");
    diag_cmd->add_option("--energy-perms", thresholds.energy_permutations,
                         "Permutations for the energy-distance p-value");
    diag_cmd->add_option("--diag-seed", thresholds.seed, "Permutation seed");
    add_schema_flags(diag_cmd, diag_schema);

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo coverage study");
    std::string config_path, out_path, audit_path;
    unsigned jobs = 0;
    std::optional<std::uint64_t> sim_seed;
    sim_cmd->add_option("--config", config_path, "Scenario JSON config")->required();
    sim_cmd->add_option("--out", out_path, "Output CoverageTable CSV")->required();
    sim_cmd->add_option("--jobs", jobs, "Worker threads (0 = hardware)");
    sim_cmd->add_option("--seed", sim_seed, "Override the config seed");
    sim_cmd->add_option("--audit", audit_path, "Write per-replication JSONL here");

    auto* version_cmd = app.add_subcommand("version", "Print version information");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (est_cmd->parsed()) {
            auto ingest = ppikit::ingest_csv(est_input, est_schema.to_schema());
            ppikit::LossTarget target = parse_target(est_target);
            auto method = ppikit::method_from_name(est_method);
            if (!method) {
                ppikit::raise(ppikit::Errc::InvalidSpec,
                              "unknown method '" + est_method + "'");
            }

            ppikit::LearnerSpec learner =
                learner_kind == "gb_stumps"
                    ? ppikit::LearnerSpec::gb_stumps(gb_rounds, gb_lr, gb_min_leaf)
                    : ppikit::LearnerSpec::ridge(ridge_penalty);
            std::uint64_t seed = resolve_seed(est_seed, std::nullopt);

            auto require_preds = [&]() -> const ppikit::PredictionSet& {
                if (!ingest.predictions) {
                    ppikit::raise(ppikit::Errc::MissingPredictions,
                                  "method needs a prediction column (yhat)");
                }
                return *ingest.predictions;
            };

            ppikit::Estimate est;
            ppikit::ConfidenceInterval ci;
            switch (*method) {
                case ppikit::Method::Classical:
                    est = ppikit::cc_estimate(ingest.dataset, target);
                    ci = ppikit::confidence_interval(est, est_level);
                    break;
                case ppikit::Method::PPI: {
                    ppikit::PpiOptions opts;
                    opts.all_n_mean_form = all_n_form;
                    est = ppikit::ppi_estimate(ingest.dataset, require_preds(), target, opts);
                    ci = ppikit::confidence_interval(est, est_level);
                    break;
                }
                case ppikit::Method::PPIpp: {
                    ppikit::LambdaPolicy policy =
                        fixed_lambda ? ppikit::LambdaPolicy::fixed(*fixed_lambda)
                                     : ppikit::LambdaPolicy::optimized();
                    est = ppikit::ppipp_estimate(ingest.dataset, require_preds(), target,
                                                 policy);
                    ci = ppikit::confidence_interval(est, est_level);
                    break;
                }
                case ppikit::Method::CrossPPI:
                    est = ppikit::cross_ppi_estimate(ingest.dataset, learner, crossfit_k,
                                                     seed, target);
                    ci = ppikit::confidence_interval(est, est_level);
                    break;
                case ppikit::Method::CrossPPBoot: {
                    ppikit::BootConfig boot{boot_b, seed, est_level};
                    auto res = ppikit::cross_ppboot_ci(ingest.dataset, learner, crossfit_k,
                                                       seed, target, boot);
                    est = std::move(res.estimate);
                    ci = std::move(res.ci);
                    break;
                }
            }
            std::cout << ppikit::estimate_to_json(est, ci).dump(2) << "\n";
            return 0;
        }

        if (diag_cmd->parsed()) {
            if (pvalue_threshold) {
                thresholds.ks_pvalue = *pvalue_threshold;
                thresholds.energy_pvalue = *pvalue_threshold;
                thresholds.shift_pvalue = *pvalue_threshold;
            }
            auto ingest = ppikit::ingest_csv(diag_input, diag_schema.to_schema());
            if (!ingest.predictions) {
                ppikit::raise(ppikit::Errc::MissingPredictions,
                              "diagnose needs a prediction column (yhat)");
            }
            auto report = ppikit::build_report(ingest.dataset, *ingest.predictions,
                                               thresholds, pretrained);
            auto rec = ppikit::recommend(report, pretrained);
            std::cerr << ppikit::render_report_table(report, rec);
            std::cout << ppikit::report_to_json(report, rec).dump(2) << "\n";
            return 0;
        }

        if (sim_cmd->parsed()) {
            ppikit::ScenarioConfig cfg = ppikit::load_scenario_config(config_path);
            cfg.scenario.mc.seed = resolve_seed(sim_seed, cfg.scenario.mc.seed);

            std::vector<ppikit::ReplicationRecord> audit;
            auto* audit_ptr = audit_path.empty() ? nullptr : &audit;
            ppikit::CoverageTable table =
                ppikit::run_scenario(cfg.dgp, cfg.mechanism, cfg.scenario, jobs, audit_ptr);
            ppikit::emit_table(table, out_path);

            if (!audit_path.empty()) {
                std::ofstream out(audit_path);
                if (!out) ppikit::raise(ppikit::Errc::IoError, "cannot write " + audit_path);
                for (const auto& rec : audit) {
                    out << ppikit::replication_to_json(rec).dump() << "\n";
                }
            }

            std::cerr << "simulate: " << cfg.scenario.mc.reps << " replications, "
                      << table.failed_replications << " failed; wrote "
                      << table.rows.size() << " rows to " << out_path << "\n";
            nlohmann::ordered_json summary;
            summary["schema_version"] = ppikit::kSchemaVersion;
            summary["out"] = out_path;
            summary["reps"] = table.reps;
            summary["failed_replications"] = table.failed_replications;
            summary["rows"] = table.rows.size();
            summary["seed"] = cfg.scenario.mc.seed;
            std::cout << summary.dump(2) << "\n";
            return 0;
        }

        if (version_cmd->parsed()) {
            std::cout << "ppikit " << ppikit::kVersion << " (schema_version "
                      << ppikit::kSchemaVersion << ", kernels "
                      << ppikit::kernels::backend_name(ppikit::kernels::active_backend())
                      << ")\n";
            return 0;
        }
    } catch (const ppikit::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

} // namespace

int main(int argc, char** argv) { return run(argc, argv); }
