#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ppikit/data_model.hpp"
#include "ppikit/estimators.hpp"

namespace ppikit {

// Balanced random partition of the labeled rows. assignment[i] is the fold of
// the i-th labeled row (in dataset row order) and is a deterministic function
// of (seed, n_labeled, k).
struct FoldPlan {
    std::uint32_t k = 0;
    std::vector<std::uint32_t> assignment;
    std::uint64_t seed = 0;
};

struct LearnerSpec {
    enum class Kind { Ridge, GBStumps };
    Kind kind = Kind::Ridge;
    double penalty = 1.0;        // Ridge
    int rounds = 100;            // GBStumps
    double learning_rate = 0.1;  // GBStumps
    int min_leaf = 1;            // GBStumps

    static LearnerSpec ridge(double penalty);
    static LearnerSpec gb_stumps(int rounds, double learning_rate, int min_leaf = 1);
};

// A fitted model; a pure function from a covariate row to a prediction.
struct Predictor {
    struct Stump {
        std::size_t feature;
        double threshold;
        double left;
        double right;
    };

    double base = 0.0;
    std::vector<double> coef;  // linear part (Ridge)
    std::vector<Stump> stumps; // boosted part (GBStumps); values include shrinkage

    double predict_row(std::span<const double> row) const;
    std::vector<double> predict(const Matrix& x) const;
};

FoldPlan make_folds(std::size_t n_labeled, std::uint32_t k, std::uint64_t seed);

Predictor fit_learner(const LearnerSpec& spec, const Matrix& x,
                      std::span<const double> y);

struct CrossFitResult {
    PredictionSet predictions; // CrossFitted provenance with the fold map
    std::vector<Predictor> fold_models;
};

// Out-of-fold predictions for labeled rows; unlabeled rows get the mean of
// the K fold models' predictions.
CrossFitResult crossfit_predict(const Dataset& d, const LearnerSpec& spec,
                                const FoldPlan& plan);

Estimate cross_ppi_estimate(const Dataset& d, const LearnerSpec& spec,
                            std::uint32_t k, std::uint64_t seed,
                            const LossTarget& target);

struct BootConfig {
    std::size_t b = 1000;
    std::uint64_t seed = 0;
    double level = 0.90;
};

struct BootResult {
    Estimate estimate;     // non-resampled Cross-PPI point estimate
    ConfidenceInterval ci; // percentile interval over the replicates
    std::vector<std::vector<double>> replicates; // per replicate, theta vector
};

// Cross-fitted predictions are computed once and frozen; each replicate
// resamples labeled and unlabeled rows independently and recomputes the PPI
// point estimate. Replicate r draws from a stream keyed by (boot.seed, r).
BootResult cross_ppboot_ci(const Dataset& d, const LearnerSpec& spec,
                           std::uint32_t k, std::uint64_t seed,
                           const LossTarget& target, const BootConfig& boot);

} // namespace ppikit
