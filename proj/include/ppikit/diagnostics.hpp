#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ppikit/data_model.hpp"

namespace ppikit {

// (mean_labeled - mean_unlabeled) / sqrt((var_l + var_u) / 2)
double standardized_mean_diff(std::span<const double> labeled,
                              std::span<const double> unlabeled);

struct KsResult {
    double stat = 0.0;
    double pvalue = 1.0;
};

// Exact two-sample sup-distance between right-continuous ECDFs; p-value from
// the asymptotic Kolmogorov distribution at effective size na*nb/(na+nb).
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

struct EnergyResult {
    double dist = 0.0;
    std::optional<double> pvalue; // present when permutations > 0
};

// V-statistic 2*mean||a-b|| - mean||a-a'|| - mean||b-b'|| over Euclidean row
// distances, with a pooled-permutation p-value.
EnergyResult energy_distance(const Matrix& a, const Matrix& b,
                             std::size_t permutations, std::uint64_t seed);

struct ShiftCheck {
    double mean_residual = 0.0;
    double t_stat = 0.0;
    double pvalue = 1.0;
    bool degenerate = false; // zero residual variance with nonzero mean
};

// One-sample t-test of the labeled residuals Y - Yhat against zero. A large
// statistic is a calibration warning, not proof of an assumption violation.
ShiftCheck prediction_shift_check(const Dataset& d, const PredictionSet& preds);

struct DiagnosticThresholds {
    double smd = 0.1;
    double ks_pvalue = 0.01;
    double energy_pvalue = 0.01;
    double shift_pvalue = 0.01;
    std::size_t energy_permutations = 199;
    std::uint64_t seed = 0;
};

struct CovariateDiagnostic {
    std::string name;
    double smd = 0.0;
    double ks_stat = 0.0;
    double ks_pvalue = 1.0;
};

struct DiagnosticFlags {
    bool a1_suspect = false;
    bool a2_suspect = false;
    bool a3_violated = false;
};

struct MissingnessSummary {
    std::size_t n_l = 0;
    std::size_t n_u = 0;
    double labeled_fraction = 0.0;
    std::size_t rejected_covariate_rows = 0;
};

struct DiagnosticReport {
    std::vector<CovariateDiagnostic> per_covariate;
    double energy_distance = 0.0;
    std::optional<double> energy_pvalue;
    ShiftCheck prediction_shift;
    MissingnessSummary missingness;
    DiagnosticFlags flags;
    DiagnosticThresholds thresholds;
    bool has_pretrained = true;
    // Diagnostics compare covariates only; selection driven by the outcome
    // itself can be invisible in X.
    std::string caveat;
};

DiagnosticReport build_report(const Dataset& d, const PredictionSet& preds,
                              const DiagnosticThresholds& thresholds = {},
                              bool has_pretrained = true);

struct Recommendation {
    enum class Variant {
        PPI_or_PPIpp,
        MarRobustVariant,
        CrossFitVariant,
        ImputationVariant,
        Combined,
    };
    Variant variant = Variant::PPI_or_PPIpp;
    std::vector<std::string> reasons;
};

std::string_view variant_name(Recommendation::Variant v);

// Deterministic and total over the 8 flag combinations.
Recommendation recommend(const DiagnosticReport& report, bool has_pretrained);

} // namespace ppikit
