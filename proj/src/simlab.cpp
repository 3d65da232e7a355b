#include "ppikit/simlab.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <thread>

#include "ppikit/rng.hpp"

namespace ppikit {

namespace {

void validate_dgp(const DGPSpec& dgp) {
    if (dgp.n < 1) raise(Errc::InvalidSpec, "dgp.n must be >= 1");
    if (dgp.p < 1) raise(Errc::InvalidSpec, "dgp.p must be >= 1");
    if (dgp.beta.size() != dgp.p + 1) {
        raise(Errc::InvalidSpec, "dgp.beta must have length p + 1 (intercept first)");
    }
    if (!(dgp.noise_sd > 0.0)) raise(Errc::InvalidSpec, "dgp.noise_sd must be > 0");
    if (!(dgp.covariate_corr >= 0.0 && dgp.covariate_corr < 1.0)) {
        raise(Errc::InvalidSpec, "dgp.covariate_corr must lie in [0, 1)");
    }
    if (!(dgp.nonlinearity >= 0.0)) raise(Errc::InvalidSpec, "dgp.nonlinearity must be >= 0");
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return {buf, ptr};
}

struct PreparedRep {
    Dataset dataset;
    std::optional<PredictionSet> predictions; // absent when no external model
    std::size_t n_l = 0;
};

// Draw internal data, apply labeling, and train the regime's external model.
PreparedRep prepare_replication(const DGPSpec& dgp, const LabelMechanism& mech,
                                const ScenarioSpec& scenario, std::uint64_t data_seed,
                                std::uint64_t label_seed, std::uint64_t external_seed,
                                bool needs_external_model) {
    SyntheticData internal = generate(dgp, data_seed);
    std::vector<std::uint8_t> labels = apply_labeling(internal.outcomes, mech, label_seed);

    std::vector<double> outcomes_labeled;
    for (std::size_t r = 0; r < labels.size(); ++r) {
        if (labels[r]) outcomes_labeled.push_back(internal.outcomes[r]);
    }

    PreparedRep rep{Dataset::create(internal.covariates, std::move(labels),
                                    std::move(outcomes_labeled)),
                    std::nullopt, 0};
    rep.n_l = rep.dataset.n_labeled();
    if (!needs_external_model) return rep;

    const auto& regime = scenario.regime;
    std::size_t n_ext = regime.n_external;
    SyntheticData external;
    if (n_ext > 0) {
        DGPSpec ext_dgp = dgp;
        ext_dgp.n = n_ext;
        external = generate(ext_dgp, external_seed);
    }

    Matrix train_x;
    std::vector<double> train_y;
    if (regime.kind == Regime::Kind::Holdout) {
        if (n_ext < 2) raise(Errc::InvalidSpec, "holdout regime needs n_external >= 2");
        train_x = std::move(external.covariates);
        train_y = std::move(external.outcomes);
    } else {
        // Double-dipping: pool external rows with the internal labeled rows,
        // deliberately reusing inference data for training.
        auto [lab, unl] = split_views(rep.dataset);
        train_x = Matrix(n_ext + lab.size(), dgp.p);
        train_y.resize(n_ext + lab.size());
        for (std::size_t c = 0; c < dgp.p; ++c) {
            auto dst = train_x.col(c);
            if (n_ext > 0) {
                auto src = external.covariates.col(c);
                std::copy(src.begin(), src.end(), dst.begin());
            }
            auto labc = lab.x.col(c);
            std::copy(labc.begin(), labc.end(),
                      dst.begin() + static_cast<std::ptrdiff_t>(n_ext));
        }
        for (std::size_t r = 0; r < n_ext; ++r) train_y[r] = external.outcomes[r];
        for (std::size_t r = 0; r < lab.size(); ++r) train_y[n_ext + r] = lab.y[r];
    }

    Predictor model = fit_learner(scenario.learner, train_x, train_y);
    rep.predictions =
        PredictionSet{model.predict(rep.dataset.covariates()), Pretrained{}};
    return rep;
}

} // namespace

LabelMechanism LabelMechanism::mcar(double pi) {
    if (!(pi > 0.0 && pi < 1.0)) raise(Errc::InvalidSpec, "MCAR pi must lie in (0, 1)");
    LabelMechanism m;
    m.kind = Kind::Mcar;
    m.pi = pi;
    return m;
}

LabelMechanism LabelMechanism::mnar(double quantile, double multiplier,
                                    double target_pi) {
    if (!(quantile > 0.0 && quantile < 1.0)) {
        raise(Errc::InvalidSpec, "MNAR quantile must lie in (0, 1)");
    }
    if (!(multiplier > 1.0)) raise(Errc::InvalidSpec, "MNAR multiplier must be > 1");
    if (!(target_pi > 0.0 && target_pi < 1.0)) {
        raise(Errc::InvalidSpec, "MNAR target_pi must lie in (0, 1)");
    }
    LabelMechanism m;
    m.kind = Kind::Mnar;
    m.quantile = quantile;
    m.multiplier = multiplier;
    m.target_pi = target_pi;
    return m;
}

double LabelMechanism::mnar_p_low() const {
    return target_pi / (quantile + multiplier * (1.0 - quantile));
}

Regime Regime::holdout(std::size_t n_external) {
    return {Kind::Holdout, n_external};
}

Regime Regime::double_dipping(std::size_t n_external) {
    return {Kind::DoubleDipping, n_external};
}

SyntheticData generate(const DGPSpec& dgp, std::uint64_t seed) {
    validate_dgp(dgp);
    Rng rng(seed);
    SyntheticData out;
    out.covariates = Matrix(dgp.n, dgp.p);
    out.outcomes.resize(dgp.n);

    const double shared = std::sqrt(dgp.covariate_corr);
    const double own = std::sqrt(1.0 - dgp.covariate_corr);
    for (std::size_t r = 0; r < dgp.n; ++r) {
        double z0 = rng.normal();
        double mean = dgp.beta[0];
        for (std::size_t c = 0; c < dgp.p; ++c) {
            double x = shared * z0 + own * rng.normal();
            out.covariates(r, c) = x;
            mean += dgp.beta[c + 1] * x;
        }
        mean += dgp.nonlinearity * std::sin(out.covariates(r, 0));
        out.outcomes[r] = mean + dgp.noise_sd * rng.normal();
    }
    return out;
}

std::vector<std::uint8_t> apply_labeling(std::span<const double> outcomes,
                                         const LabelMechanism& mech,
                                         std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::uint8_t> labels(outcomes.size(), 0);

    if (mech.kind == LabelMechanism::Kind::Mcar) {
        for (std::size_t r = 0; r < outcomes.size(); ++r) {
            labels[r] = rng.bernoulli(mech.pi) ? 1 : 0;
        }
        return labels;
    }

    const double p_low = mech.mnar_p_low();
    const double p_high = mech.multiplier * p_low;
    if (p_high > 1.0 + 1e-12) {
        raise(Errc::InfeasibleMechanism,
              "high-side labeling probability " + std::to_string(p_high) +
                  " exceeds 1; lower target_pi or the multiplier");
    }

    // Empirical outcome quantile: order statistic at rank ceil(q * n).
    std::vector<double> sorted(outcomes.begin(), outcomes.end());
    std::sort(sorted.begin(), sorted.end());
    auto rank = static_cast<std::size_t>(
        std::ceil(mech.quantile * static_cast<double>(sorted.size()) - 1e-12));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    const double threshold = sorted[rank - 1];

    for (std::size_t r = 0; r < outcomes.size(); ++r) {
        double prob = outcomes[r] > threshold ? p_high : p_low;
        labels[r] = rng.bernoulli(prob) ? 1 : 0;
    }
    return labels;
}

std::vector<double> true_parameter(const DGPSpec& dgp, const LossTarget& target) {
    validate_dgp(dgp);
    if (target.kind == LossTarget::Kind::Mean) {
        // E[Y] = beta_0: covariates are centered and E[sin(X_1)] = 0.
        return {dgp.beta[0]};
    }
    if (!target.include_intercept) {
        raise(Errc::InvalidSpec, "scenario regression target requires an intercept");
    }
    // Population projection of Y on [1, X]. For unit-variance Gaussian X with
    // E[X_j sin(X_1)] = corr(X_j, X_1) * exp(-1/2), the Sigma^{-1} weighting
    // collapses the sin term onto the first slope alone.
    std::vector<double> theta = dgp.beta;
    theta[1] += dgp.nonlinearity * std::exp(-0.5);
    return theta;
}

CoverageTable run_scenario(const DGPSpec& dgp, const LabelMechanism& mech,
                           const ScenarioSpec& scenario, unsigned jobs,
                           std::vector<ReplicationRecord>* audit) {
    validate_dgp(dgp);
    if (scenario.methods.empty()) raise(Errc::InvalidSpec, "scenario needs >= 1 method");
    if (scenario.mc.reps < 1) raise(Errc::InvalidSpec, "scenario needs >= 1 replication");
    if (!(scenario.mc.ci_level > 0.0 && scenario.mc.ci_level < 1.0)) {
        raise(Errc::InvalidLevel, "ci_level must lie strictly in (0, 1)");
    }

    const bool has_cross = std::any_of(
        scenario.methods.begin(), scenario.methods.end(), [](Method m) {
            return m == Method::CrossPPI || m == Method::CrossPPBoot;
        });
    if (scenario.strict_mode &&
        scenario.regime.kind == Regime::Kind::DoubleDipping && has_cross) {
        raise(Errc::InvalidSpec,
              "strict mode forbids cross-fitting methods under double-dipping");
    }
    const bool needs_external = std::any_of(
        scenario.methods.begin(), scenario.methods.end(), [](Method m) {
            return m == Method::PPI || m == Method::PPIpp;
        });
    if (needs_external && scenario.regime.kind == Regime::Kind::Holdout &&
        scenario.regime.n_external < 2) {
        raise(Errc::InvalidSpec, "holdout regime needs n_external >= 2");
    }
    if (has_cross) {
        if (scenario.crossfit_k < 2) raise(Errc::InvalidSpec, "crossfit_k must be >= 2");
        const bool has_boot =
            std::find(scenario.methods.begin(), scenario.methods.end(),
                      Method::CrossPPBoot) != scenario.methods.end();
        if (has_boot && scenario.boot_b < 100) {
            raise(Errc::InvalidSpec, "boot_b must be >= 100");
        }
    }

    const std::vector<double> truth = true_parameter(dgp, scenario.target);
    const std::size_t dim = truth.size();
    const std::size_t reps = scenario.mc.reps;

    std::vector<ReplicationRecord> records(reps);

    auto run_one = [&](std::size_t rep) {
        ReplicationRecord& rec = records[rep];
        rec.rep = rep;
        try {
            PreparedRep prep = prepare_replication(
                dgp, mech, scenario, mix_seed(scenario.mc.seed, rep, 1),
                mix_seed(scenario.mc.seed, rep, 2), mix_seed(scenario.mc.seed, rep, 3),
                needs_external);
            rec.realized_n_l = prep.n_l;

            for (Method method : scenario.methods) {
                Estimate est;
                ConfidenceInterval ci;
                switch (method) {
                    case Method::Classical:
                        est = cc_estimate(prep.dataset, scenario.target);
                        ci = confidence_interval(est, scenario.mc.ci_level);
                        break;
                    case Method::PPI:
                        est = ppi_estimate(prep.dataset, *prep.predictions,
                                           scenario.target);
                        ci = confidence_interval(est, scenario.mc.ci_level);
                        break;
                    case Method::PPIpp:
                        est = ppipp_estimate(prep.dataset, *prep.predictions,
                                             scenario.target, LambdaPolicy::optimized());
                        ci = confidence_interval(est, scenario.mc.ci_level);
                        break;
                    case Method::CrossPPI:
                        est = cross_ppi_estimate(prep.dataset, scenario.learner,
                                                 scenario.crossfit_k,
                                                 mix_seed(scenario.mc.seed, rep, 4),
                                                 scenario.target);
                        ci = confidence_interval(est, scenario.mc.ci_level);
                        break;
                    case Method::CrossPPBoot: {
                        BootConfig boot{scenario.boot_b,
                                        mix_seed(scenario.mc.seed, rep, 5),
                                        scenario.mc.ci_level};
                        BootResult br = cross_ppboot_ci(
                            prep.dataset, scenario.learner, scenario.crossfit_k,
                            mix_seed(scenario.mc.seed, rep, 4), scenario.target, boot);
                        est = std::move(br.estimate);
                        ci = std::move(br.ci);
                        break;
                    }
                }
                MethodRecord mr;
                mr.method = method;
                mr.theta = est.theta;
                mr.lower = std::move(ci.lower);
                mr.upper = std::move(ci.upper);
                mr.lambda = est.lambda;
                rec.methods.push_back(std::move(mr));
            }
        } catch (const Error& err) {
            rec.failed = true;
            rec.error = err.what();
            rec.methods.clear();
        }
    };

    unsigned workers = jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : jobs;
    workers = std::min<unsigned>(workers, reps);
    if (workers <= 1) {
        for (std::size_t rep = 0; rep < reps; ++rep) run_one(rep);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t rep = w; rep < reps; rep += workers) run_one(rep);
            });
        }
        for (auto& t : pool) t.join();
    }

    // Sequential reduction in replication order keeps aggregation independent
    // of scheduling.
    CoverageTable table;
    table.reps = reps;
    for (Method method : scenario.methods) {
        for (std::size_t c = 0; c < dim; ++c) {
            CoverageRow row;
            row.method = method;
            row.coefficient = c;
            row.reps = reps;
            std::size_t ok = 0, covered = 0;
            double width_sum = 0.0, bias_sum = 0.0;
            for (const auto& rec : records) {
                if (rec.failed) continue;
                const MethodRecord* mr = nullptr;
                for (const auto& cand : rec.methods) {
                    if (cand.method == method) {
                        mr = &cand;
                        break;
                    }
                }
                if (!mr) continue;
                ++ok;
                if (mr->lower[c] <= truth[c] && truth[c] <= mr->upper[c]) ++covered;
                width_sum += mr->upper[c] - mr->lower[c];
                bias_sum += mr->theta[c] - truth[c];
            }
            if (ok > 0) {
                row.coverage = static_cast<double>(covered) / static_cast<double>(ok);
                row.mean_width = width_sum / static_cast<double>(ok);
                row.mean_bias = bias_sum / static_cast<double>(ok);
            }
            table.rows.push_back(row);
        }
    }
    table.failed_replications = static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(),
                      [](const ReplicationRecord& r) { return r.failed; }));

    if (audit) *audit = std::move(records);
    return table;
}

void emit_table(const CoverageTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) raise(Errc::IoError, "cannot write " + path);
    out << "method,coefficient,coverage,mean_width,mean_bias,reps\n";

    // Canonical order: method enum order, then coefficient index.
    std::vector<CoverageRow> rows = table.rows;
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        if (a.method != b.method) return static_cast<int>(a.method) < static_cast<int>(b.method);
        return a.coefficient < b.coefficient;
    });
    for (const auto& row : rows) {
        out << method_name(row.method) << ',' << row.coefficient << ','
            << format_double(row.coverage) << ',' << format_double(row.mean_width)
            << ',' << format_double(row.mean_bias) << ',' << row.reps << "\n";
    }
    if (!out) raise(Errc::IoError, "failed writing " + path);
}

} // namespace ppikit
