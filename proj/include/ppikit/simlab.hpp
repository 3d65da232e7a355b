#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ppikit/crossfit.hpp"
#include "ppikit/data_model.hpp"
#include "ppikit/estimators.hpp"

namespace ppikit {

// Equicorrelated Gaussian covariates with a linear mean, an optional
// sin-shaped nonlinearity on the first covariate, and Gaussian noise:
//   Y = [1, X] beta + nonlinearity * sin(X_1) + Normal(0, noise_sd^2).
struct DGPSpec {
    std::size_t n = 0;
    std::size_t p = 0;
    std::vector<double> beta;    // length p + 1, intercept first
    double noise_sd = 1.0;
    double covariate_corr = 0.0; // in [0, 1)
    double nonlinearity = 0.0;
};

// Ground truth stays here, outside Dataset; estimators can never touch the
// outcomes of unlabeled rows.
struct SyntheticData {
    Matrix covariates;
    std::vector<double> outcomes;
};

SyntheticData generate(const DGPSpec& dgp, std::uint64_t seed);

struct LabelMechanism {
    enum class Kind { Mcar, Mnar };
    Kind kind = Kind::Mcar;
    double pi = 0.5;          // MCAR labeled probability
    double quantile = 0.8;    // MNAR: outcome quantile splitting low/high
    double multiplier = 10.0; // MNAR: high-side probability multiplier
    double target_pi = 0.2;   // MNAR: expected labeled fraction

    static LabelMechanism mcar(double pi);
    static LabelMechanism mnar(double quantile, double multiplier, double target_pi);

    // MNAR low-side labeling probability solving the expected-fraction
    // constraint: target_pi / (quantile + multiplier * (1 - quantile)).
    double mnar_p_low() const;
};

std::vector<std::uint8_t> apply_labeling(std::span<const double> outcomes,
                                         const LabelMechanism& mech,
                                         std::uint64_t seed);

struct Regime {
    enum class Kind { Holdout, DoubleDipping };
    Kind kind = Kind::Holdout;
    // Holdout: size of the disjoint external training draw. DoubleDipping:
    // external rows pooled with the internal labeled rows for training
    // (0 trains on internal labeled rows alone).
    std::size_t n_external = 0;

    static Regime holdout(std::size_t n_external);
    static Regime double_dipping(std::size_t n_external = 0);
};

struct MonteCarloConfig {
    std::size_t reps = 500;
    std::uint64_t seed = 0;
    double ci_level = 0.90;
};

struct ScenarioSpec {
    Regime regime;
    LearnerSpec learner;
    std::vector<Method> methods;
    MonteCarloConfig mc;
    LossTarget target = LossTarget::linear_regression();
    std::uint32_t crossfit_k = 5;
    std::size_t boot_b = 500;
    // Forbid CrossPPI / CrossPPBoot under DoubleDipping (cross-fitting exists
    // to avoid exactly that reuse); off by default so their behavior under
    // contamination can still be studied.
    bool strict_mode = false;
};

struct CoverageRow {
    Method method = Method::Classical;
    std::size_t coefficient = 0;
    double coverage = 0.0;
    double mean_width = 0.0;
    double mean_bias = 0.0;
    std::size_t reps = 0;
};

struct CoverageTable {
    std::vector<CoverageRow> rows;
    std::size_t reps = 0;
    std::size_t failed_replications = 0;
};

// Per-replication audit record (JSONL when requested from the CLI).
struct MethodRecord {
    Method method;
    std::vector<double> theta;
    std::vector<double> lower;
    std::vector<double> upper;
    std::optional<double> lambda;
};

struct ReplicationRecord {
    std::size_t rep = 0;
    bool failed = false;
    std::string error;
    std::size_t realized_n_l = 0;
    std::vector<MethodRecord> methods;
};

// Population parameter targeted by the scenario; exact for the Gaussian DGP
// (the sin term shifts only the first slope, by nonlinearity * exp(-1/2)).
std::vector<double> true_parameter(const DGPSpec& dgp, const LossTarget& target);

// Runs mc.reps replications in parallel (jobs == 0 picks the hardware
// count). Each replication owns RNG streams keyed by (mc.seed, rep), and
// aggregation happens in replication order, so output is byte-identical for
// any worker count.
CoverageTable run_scenario(const DGPSpec& dgp, const LabelMechanism& mech,
                           const ScenarioSpec& scenario, unsigned jobs = 0,
                           std::vector<ReplicationRecord>* audit = nullptr);

void emit_table(const CoverageTable& table, const std::string& path);

} // namespace ppikit
