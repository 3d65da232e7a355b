#pragma once

#include "ppikit/data_model.hpp"

namespace ppikit {

// Interpolation weight for PPI++. Fixed pins lambda; Optimized selects it to
// minimize the estimated asymptotic variance (closed form for Mean, grid
// search for LinearRegression).
struct LambdaPolicy {
    enum class Mode { Fixed, Optimized };
    Mode mode = Mode::Optimized;
    double value = 1.0;

    static LambdaPolicy fixed(double v);
    static LambdaPolicy optimized() { return {Mode::Optimized, 1.0}; }
};

// Plug-in evaluation of the fixed-predictor variance difference
// V(PPI) - V(CC) for mean estimation. gap < 0 means PPI is expected to be
// more efficient than complete-case.
struct VarianceGap {
    double gap = 0.0;
    double var_pred = 0.0;   // pooled sample variance of predictions
    double cov_y_pred = 0.0; // labeled-sample Cov(Y, prediction)
    double pi = 0.0;         // labeled fraction n_l / n
    std::size_t n = 0;
};

struct PpiOptions {
    // Mean only: first term averages predictions over all n rows instead of
    // the unlabeled rows. Asymptotically equivalent under MCAR; off by
    // default.
    bool all_n_mean_form = false;
};

Estimate cc_estimate(const Dataset& d, const LossTarget& target);

Estimate ppi_estimate(const Dataset& d, const PredictionSet& preds,
                      const LossTarget& target, const PpiOptions& opts = {});

Estimate ppipp_estimate(const Dataset& d, const PredictionSet& preds,
                        const LossTarget& target, const LambdaPolicy& policy);

ConfidenceInterval confidence_interval(const Estimate& e, double level = 0.90);

VarianceGap variance_gap(const Dataset& d, const PredictionSet& preds);

// Standard normal quantile, exposed for interval construction and tests.
double normal_quantile(double p);

} // namespace ppikit
