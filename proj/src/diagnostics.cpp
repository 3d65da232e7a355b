#include "ppikit/diagnostics.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ppikit/kernels.hpp"
#include "ppikit/rng.hpp"

namespace ppikit {

namespace {

namespace k = kernels;

// Asymptotic Kolmogorov tail Q(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2),
// truncated at 100 terms; returns 1 when the series has not converged (tiny
// lambda).
double kolmogorov_tail(double lambda) {
    if (lambda <= 0.0) return 1.0;
    const double a2 = -2.0 * lambda * lambda;
    double fac = 2.0;
    double sum = 0.0;
    double prev_term = 0.0;
    for (int j = 1; j <= 100; ++j) {
        double term = fac * std::exp(a2 * static_cast<double>(j) * static_cast<double>(j));
        sum += term;
        double mag = std::abs(term);
        if (mag <= 0.001 * prev_term || mag <= 1e-10 * std::abs(sum)) {
            return std::clamp(sum, 0.0, 1.0);
        }
        fac = -fac;
        prev_term = mag;
    }
    return 1.0;
}

double energy_stat(const Matrix& a, const Matrix& b) {
    const std::size_t p = a.cols();

    // Accumulate squared distances column by column so the inner loops run
    // over contiguous data, then reduce with a vectorized sqrt-sum.
    auto pair_mean = [&](const Matrix& lhs, const Matrix& rhs, bool same) {
        const std::size_t nl = lhs.rows();
        const std::size_t nr = rhs.rows();
        if (same && nl < 2) return 0.0;
        std::vector<double> sq(nr);
        double total = 0.0;
        for (std::size_t i = 0; i < nl; ++i) {
            std::fill(sq.begin(), sq.end(), 0.0);
            for (std::size_t c = 0; c < p; ++c) {
                k::sq_dist_accum(lhs(i, c), rhs.col(c), sq);
            }
            total += k::sum_sqrt(sq);
        }
        // V-statistic: all ordered pairs, self-distances included (they are 0).
        return total / (static_cast<double>(nl) * static_cast<double>(nr));
    };

    return 2.0 * pair_mean(a, b, false) - pair_mean(a, a, true) - pair_mean(b, b, true);
}

Matrix take_rows(const Matrix& src, std::span<const std::uint32_t> rows) {
    Matrix out(rows.size(), src.cols());
    for (std::size_t c = 0; c < src.cols(); ++c) {
        auto col = src.col(c);
        auto dst = out.col(c);
        for (std::size_t i = 0; i < rows.size(); ++i) dst[i] = col[rows[i]];
    }
    return out;
}

} // namespace

double standardized_mean_diff(std::span<const double> labeled,
                              std::span<const double> unlabeled) {
    if (labeled.size() < 2 || unlabeled.size() < 2) {
        raise(Errc::TooFewSamples, "standardized mean difference needs >= 2 per sample");
    }
    double ml = k::mean(labeled);
    double mu = k::mean(unlabeled);
    double pooled = std::sqrt(0.5 * (k::sample_var(labeled) + k::sample_var(unlabeled)));
    if (pooled == 0.0) {
        if (ml == mu) return 0.0;
        raise(Errc::DegenerateScale,
              "both samples are constant but their means differ");
    }
    return (ml - mu) / pooled;
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) raise(Errc::EmptySample, "KS needs nonempty samples");

    std::vector<double> sa(a.begin(), a.end());
    std::vector<double> sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());

    // Walk the merged samples; the ECDF gap can only change at sample points.
    const double na = static_cast<double>(sa.size());
    const double nb = static_cast<double>(sb.size());
    std::size_t ia = 0, ib = 0;
    double stat = 0.0;
    while (ia < sa.size() && ib < sb.size()) {
        double point = std::min(sa[ia], sb[ib]);
        while (ia < sa.size() && sa[ia] <= point) ++ia;
        while (ib < sb.size() && sb[ib] <= point) ++ib;
        stat = std::max(stat, std::abs(static_cast<double>(ia) / na -
                                       static_cast<double>(ib) / nb));
    }
    double eff = na * nb / (na + nb);
    return {stat, kolmogorov_tail(std::sqrt(eff) * stat)};
}

EnergyResult energy_distance(const Matrix& a, const Matrix& b,
                             std::size_t permutations, std::uint64_t seed) {
    if (a.cols() != b.cols()) {
        raise(Errc::DimensionMismatch, "energy distance needs equal column counts");
    }
    EnergyResult out;
    out.dist = energy_stat(a, b);
    if (permutations == 0) return out;

    const std::size_t na = a.rows();
    const std::size_t n = na + b.rows();
    Matrix pooled(n, a.cols());
    for (std::size_t c = 0; c < a.cols(); ++c) {
        auto dst = pooled.col(c);
        auto ca = a.col(c);
        auto cb = b.col(c);
        std::copy(ca.begin(), ca.end(), dst.begin());
        std::copy(cb.begin(), cb.end(), dst.begin() + static_cast<std::ptrdiff_t>(na));
    }

    std::size_t at_least = 0;
    std::vector<std::uint32_t> idx(n);
    for (std::size_t permutation = 0; permutation < permutations; ++permutation) {
        Rng rng = Rng::from_stream(seed, permutation);
        std::iota(idx.begin(), idx.end(), 0u);
        rng.shuffle(std::span<std::uint32_t>(idx));
        Matrix pa = take_rows(pooled, std::span<const std::uint32_t>(idx.data(), na));
        Matrix pb = take_rows(pooled,
                              std::span<const std::uint32_t>(idx.data() + na, n - na));
        if (energy_stat(pa, pb) >= out.dist) ++at_least;
    }
    out.pvalue = static_cast<double>(at_least + 1) / static_cast<double>(permutations + 1);
    return out;
}

ShiftCheck prediction_shift_check(const Dataset& d, const PredictionSet& preds) {
    if (d.n_labeled() < 2) {
        raise(Errc::InsufficientLabeled, "prediction shift check needs >= 2 labeled rows");
    }
    auto [lab, unl] = split_views(d, preds);
    std::vector<double> resid(lab.size());
    k::sub(lab.y, lab.yhat, resid);

    ShiftCheck out;
    out.mean_residual = k::mean(resid);
    double sd = std::sqrt(k::sample_var(resid));
    if (sd == 0.0) {
        out.degenerate = true;
        if (out.mean_residual == 0.0) {
            out.t_stat = 0.0;
            out.pvalue = 1.0;
        } else {
            out.t_stat = std::copysign(std::numeric_limits<double>::infinity(),
                                       out.mean_residual);
            out.pvalue = 0.0;
        }
        return out;
    }
    double n = static_cast<double>(lab.size());
    out.t_stat = out.mean_residual / (sd / std::sqrt(n));
    boost::math::students_t_distribution<double> dist(n - 1.0);
    out.pvalue = 2.0 * boost::math::cdf(dist, -std::abs(out.t_stat));
    return out;
}

DiagnosticReport build_report(const Dataset& d, const PredictionSet& preds,
                              const DiagnosticThresholds& thresholds,
                              bool has_pretrained) {
    DiagnosticReport report;
    report.thresholds = thresholds;
    report.has_pretrained = has_pretrained;
    report.caveat =
        "Diagnostics compare covariates only; outcome-driven selection (MNAR) "
        "can be invisible in X, and (A1)/(A2) remain untestable in general.";

    auto [lab, unl] = split_views(d);
    report.missingness.n_l = d.n_labeled();
    report.missingness.n_u = d.n_unlabeled();
    report.missingness.labeled_fraction =
        static_cast<double>(d.n_labeled()) / static_cast<double>(d.n());
    report.missingness.rejected_covariate_rows = d.rejected_covariate_rows();

    bool covariate_shift = false;
    const bool enough_rows = lab.size() >= 2 && unl.size() >= 2;
    for (std::size_t c = 0; c < d.p(); ++c) {
        CovariateDiagnostic cd;
        cd.name = "x" + std::to_string(c + 1);
        if (enough_rows) {
            double ml = k::mean(lab.x.col(c));
            double mu = k::mean(unl.x.col(c));
            double pooled = std::sqrt(
                0.5 * (k::sample_var(lab.x.col(c)) + k::sample_var(unl.x.col(c))));
            cd.smd = pooled == 0.0
                         ? (ml == mu ? 0.0
                                     : std::copysign(
                                           std::numeric_limits<double>::infinity(),
                                           ml - mu))
                         : (ml - mu) / pooled;
            KsResult ks = ks_two_sample(lab.x.col(c), unl.x.col(c));
            cd.ks_stat = ks.stat;
            cd.ks_pvalue = ks.pvalue;
        }
        if (std::abs(cd.smd) > thresholds.smd) covariate_shift = true;
        if (cd.ks_pvalue < thresholds.ks_pvalue) covariate_shift = true;
        report.per_covariate.push_back(std::move(cd));
    }

    if (enough_rows && d.p() > 0) {
        EnergyResult er = energy_distance(lab.x, unl.x, thresholds.energy_permutations,
                                          thresholds.seed);
        report.energy_distance = er.dist;
        report.energy_pvalue = er.pvalue;
        if (er.pvalue && *er.pvalue < thresholds.energy_pvalue) covariate_shift = true;
    }

    report.prediction_shift = prediction_shift_check(d, preds);

    report.flags.a1_suspect = covariate_shift;
    report.flags.a2_suspect =
        !has_pretrained || report.prediction_shift.pvalue < thresholds.shift_pvalue;
    report.flags.a3_violated = d.rejected_covariate_rows() > 0;
    return report;
}

std::string_view variant_name(Recommendation::Variant v) {
    switch (v) {
        case Recommendation::Variant::PPI_or_PPIpp: return "PPI_or_PPIpp";
        case Recommendation::Variant::MarRobustVariant: return "MAR_robust_variant";
        case Recommendation::Variant::CrossFitVariant: return "CrossFit_variant";
        case Recommendation::Variant::ImputationVariant: return "Imputation_variant";
        case Recommendation::Variant::Combined: return "Combined";
    }
    return "Unknown";
}

Recommendation recommend(const DiagnosticReport& report, bool has_pretrained) {
    const auto& f = report.flags;
    Recommendation rec;

    int raised = static_cast<int>(f.a1_suspect) + static_cast<int>(f.a2_suspect) +
                 static_cast<int>(f.a3_violated);
    if (raised == 0) {
        rec.variant = Recommendation::Variant::PPI_or_PPIpp;
        rec.reasons.push_back("no assumption flags raised");
    } else if (raised > 1) {
        rec.variant = Recommendation::Variant::Combined;
        rec.reasons.push_back("multiple assumption flags raised");
    } else if (f.a1_suspect) {
        rec.variant = Recommendation::Variant::MarRobustVariant;
        rec.reasons.push_back(
            "labeled/unlabeled covariate distributions differ (A1 suspect)");
    } else if (f.a2_suspect) {
        rec.variant = Recommendation::Variant::CrossFitVariant;
        rec.reasons.push_back(
            has_pretrained
                ? "systematic prediction shift on labeled rows (A2 suspect)"
                : "no pre-trained model; cross-fit predictions internally (A2)");
    } else {
        rec.variant = Recommendation::Variant::ImputationVariant;
        rec.reasons.push_back("rows were dropped for incomplete covariates (A3)");
    }

    if (f.a1_suspect) {
        rec.reasons.push_back(
            "note: MAR-robust and imputation variants are named, not implemented here");
    }
    rec.reasons.push_back("diagnostics are advisory; (A1)/(A2) are largely untestable");
    return rec;
}

} // namespace ppikit
