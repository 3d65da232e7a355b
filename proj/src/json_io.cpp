#include "ppikit/json_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace ppikit {

namespace {

nlohmann::ordered_json finite_or_string(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

LearnerSpec parse_learner(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "ridge") {
        return LearnerSpec::ridge(j.value("penalty", 1.0));
    }
    if (kind == "gb_stumps") {
        return LearnerSpec::gb_stumps(j.value("rounds", 100),
                                      j.value("learning_rate", 0.1),
                                      j.value("min_leaf", 1));
    }
    raise(Errc::InvalidSpec, "unknown learner kind '" + kind + "'");
}

} // namespace

nlohmann::ordered_json estimate_to_json(const Estimate& e, const ConfidenceInterval& ci) {
    nlohmann::ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["method"] = std::string(method_name(e.method));
    if (e.lambda) j["lambda"] = *e.lambda;
    j["theta"] = e.theta;
    std::vector<double> se(e.dim());
    for (std::size_t i = 0; i < e.dim(); ++i) se[i] = e.se(i);
    j["se"] = se;
    j["ci_level"] = ci.level;
    j["ci_lower"] = ci.lower;
    j["ci_upper"] = ci.upper;
    j["n_l"] = e.n_l;
    j["n_u"] = e.n_u;
    if (!e.note.empty()) j["note"] = e.note;
    return j;
}

nlohmann::ordered_json report_to_json(const DiagnosticReport& report,
                                      const Recommendation& rec) {
    nlohmann::ordered_json j;
    j["schema_version"] = kSchemaVersion;

    nlohmann::ordered_json covs = nlohmann::ordered_json::array();
    for (const auto& c : report.per_covariate) {
        covs.push_back({{"name", c.name},
                        {"smd", finite_or_string(c.smd)},
                        {"ks_stat", c.ks_stat},
                        {"ks_pvalue", c.ks_pvalue}});
    }
    j["per_covariate"] = covs;
    j["energy_distance"] = report.energy_distance;
    j["energy_pvalue"] =
        report.energy_pvalue ? nlohmann::ordered_json(*report.energy_pvalue)
                             : nlohmann::ordered_json(nullptr);
    j["prediction_shift"] = {
        {"mean_residual", report.prediction_shift.mean_residual},
        {"t_stat", finite_or_string(report.prediction_shift.t_stat)},
        {"pvalue", report.prediction_shift.pvalue},
        {"degenerate", report.prediction_shift.degenerate}};
    j["missingness"] = {{"n_l", report.missingness.n_l},
                        {"n_u", report.missingness.n_u},
                        {"labeled_fraction", report.missingness.labeled_fraction},
                        {"rejected_covariate_rows",
                         report.missingness.rejected_covariate_rows}};
    j["flags"] = {{"A1_suspect", report.flags.a1_suspect},
                  {"A2_suspect", report.flags.a2_suspect},
                  {"A3_violated", report.flags.a3_violated}};
    j["thresholds"] = {{"smd", report.thresholds.smd},
                       {"ks_pvalue", report.thresholds.ks_pvalue},
                       {"energy_pvalue", report.thresholds.energy_pvalue},
                       {"shift_pvalue", report.thresholds.shift_pvalue},
                       {"energy_permutations", report.thresholds.energy_permutations}};
    j["has_pretrained"] = report.has_pretrained;
    j["recommendation"] = {{"variant", std::string(variant_name(rec.variant))},
                           {"reasons", rec.reasons}};
    j["caveat"] = report.caveat;
    return j;
}

std::string render_report_table(const DiagnosticReport& report,
                                const Recommendation& rec) {
    std::ostringstream out;
    out << "assumption diagnostics (n_l=" << report.missingness.n_l
        << ", n_u=" << report.missingness.n_u << ", labeled fraction="
        << report.missingness.labeled_fraction << ")\n";
    out << "  covariate        smd       ks_stat   ks_pvalue\n";
    for (const auto& c : report.per_covariate) {
        out << "  " << c.name;
        for (std::size_t pad = c.name.size(); pad < 15; ++pad) out << ' ';
        char line[96];
        std::snprintf(line, sizeof(line), "%9.4f %9.4f %11.4g", c.smd, c.ks_stat,
                      c.ks_pvalue);
        out << line << "\n";
    }
    out << "  energy distance: " << report.energy_distance;
    if (report.energy_pvalue) out << " (pvalue " << *report.energy_pvalue << ")";
    out << "\n  prediction shift: mean residual " << report.prediction_shift.mean_residual
        << ", t " << report.prediction_shift.t_stat << ", pvalue "
        << report.prediction_shift.pvalue << "\n";
    out << "  flags: A1_suspect=" << (report.flags.a1_suspect ? "yes" : "no")
        << " A2_suspect=" << (report.flags.a2_suspect ? "yes" : "no")
        << " A3_violated=" << (report.flags.a3_violated ? "yes" : "no") << "\n";
    out << "  recommended variant: " << variant_name(rec.variant) << "\n";
    for (const auto& r : rec.reasons) out << "    - " << r << "\n";
    out << "  caveat: " << report.caveat << "\n";
    return out.str();
}

ScenarioConfig parse_scenario_config(const nlohmann::json& j) {
    ScenarioConfig cfg;

    const auto& dgp = j.at("dgp");
    cfg.dgp.n = dgp.at("n").get<std::size_t>();
    cfg.dgp.p = dgp.at("p").get<std::size_t>();
    cfg.dgp.beta = dgp.at("beta").get<std::vector<double>>();
    cfg.dgp.noise_sd = dgp.at("noise_sd").get<double>();
    cfg.dgp.covariate_corr = dgp.value("covariate_corr", 0.0);
    cfg.dgp.nonlinearity = dgp.value("nonlinearity", 0.0);

    const auto& mech = j.at("mechanism");
    const std::string mech_kind = mech.at("kind").get<std::string>();
    if (mech_kind == "mcar") {
        cfg.mechanism = LabelMechanism::mcar(mech.at("pi").get<double>());
    } else if (mech_kind == "mnar") {
        cfg.mechanism = LabelMechanism::mnar(mech.value("quantile", 0.8),
                                             mech.value("multiplier", 10.0),
                                             mech.at("target_pi").get<double>());
    } else {
        raise(Errc::InvalidSpec, "unknown mechanism kind '" + mech_kind + "'");
    }

    const auto& sc = j.at("scenario");
    const auto& regime = sc.at("regime");
    const std::string regime_kind = regime.at("kind").get<std::string>();
    if (regime_kind == "holdout") {
        cfg.scenario.regime = Regime::holdout(regime.at("n_external").get<std::size_t>());
    } else if (regime_kind == "double_dipping") {
        cfg.scenario.regime =
            Regime::double_dipping(regime.value("n_external", std::size_t{0}));
    } else {
        raise(Errc::InvalidSpec, "unknown regime kind '" + regime_kind + "'");
    }

    cfg.scenario.learner = parse_learner(sc.at("learner"));

    for (const auto& name : sc.at("methods")) {
        auto m = method_from_name(name.get<std::string>());
        if (!m) raise(Errc::InvalidSpec, "unknown method '" + name.get<std::string>() + "'");
        cfg.scenario.methods.push_back(*m);
    }

    const std::string target = sc.value("target", std::string("linear_regression"));
    if (target == "mean") {
        cfg.scenario.target = LossTarget::mean();
    } else if (target == "linear_regression" || target == "linreg") {
        cfg.scenario.target = LossTarget::linear_regression();
    } else {
        raise(Errc::InvalidSpec, "unknown target '" + target + "'");
    }

    const auto& mc = sc.at("mc");
    cfg.scenario.mc.reps = mc.at("reps").get<std::size_t>();
    cfg.scenario.mc.seed = mc.value("seed", std::uint64_t{0});
    cfg.scenario.mc.ci_level = mc.value("ci_level", 0.90);

    cfg.scenario.crossfit_k = sc.value("crossfit_k", 5u);
    cfg.scenario.boot_b = sc.value("boot_b", std::size_t{500});
    cfg.scenario.strict_mode = sc.value("strict_mode", false);
    return cfg;
}

ScenarioConfig load_scenario_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::IoError, "cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::InvalidSpec, "config parse error: " + std::string(e.what()));
    }
    return parse_scenario_config(j);
}

nlohmann::ordered_json replication_to_json(const ReplicationRecord& rec) {
    nlohmann::ordered_json j;
    j["rep"] = rec.rep;
    j["failed"] = rec.failed;
    if (rec.failed) j["error"] = rec.error;
    j["n_l"] = rec.realized_n_l;
    nlohmann::ordered_json methods = nlohmann::ordered_json::object();
    for (const auto& m : rec.methods) {
        nlohmann::ordered_json mj;
        mj["theta"] = m.theta;
        mj["lower"] = m.lower;
        mj["upper"] = m.upper;
        if (m.lambda) mj["lambda"] = *m.lambda;
        methods[std::string(method_name(m.method))] = mj;
    }
    j["methods"] = methods;
    return j;
}

} // namespace ppikit
