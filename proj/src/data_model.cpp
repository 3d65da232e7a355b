#include "ppikit/data_model.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace ppikit {

Dataset Dataset::create(Matrix covariates,
                        std::vector<std::uint8_t> label_indicator,
                        std::vector<double> outcomes_labeled,
                        std::vector<std::int64_t> row_ids) {
    const std::size_t n = label_indicator.size();
    if (covariates.rows() != n) {
        raise(Errc::DimensionMismatch,
              "covariate rows (" + std::to_string(covariates.rows()) +
                  ") != label indicator length (" + std::to_string(n) + ")");
    }
    if (!row_ids.empty() && row_ids.size() != n) {
        raise(Errc::DimensionMismatch, "row_ids length != row count");
    }
    for (std::size_t c = 0; c < covariates.cols(); ++c) {
        for (std::size_t r = 0; r < n; ++r) {
            if (!std::isfinite(covariates(r, c))) {
                raise(Errc::MalformedRow,
                      "row " + std::to_string(r) + ": missing or non-finite covariate"
                      " violates complete-covariate assumption (A3)");
            }
        }
    }

    Dataset d;
    d.covariates_ = std::move(covariates);
    d.label_ = std::move(label_indicator);
    d.outcome_slot_.assign(n, 0);

    std::size_t n_l = 0;
    for (std::size_t r = 0; r < n; ++r) {
        if (d.label_[r] > 1) {
            raise(Errc::MalformedRow,
                  "row " + std::to_string(r) + ": label indicator must be 0 or 1");
        }
        if (d.label_[r] == 1) d.outcome_slot_[r] = n_l++;
    }
    if (outcomes_labeled.size() != n_l) {
        raise(Errc::DimensionMismatch,
              "got " + std::to_string(outcomes_labeled.size()) +
                  " outcomes for " + std::to_string(n_l) + " labeled rows");
    }
    for (std::size_t k = 0; k < outcomes_labeled.size(); ++k) {
        if (!std::isfinite(outcomes_labeled[k])) {
            raise(Errc::MalformedRow, "non-finite outcome for a labeled row");
        }
    }
    d.outcomes_ = std::move(outcomes_labeled);
    d.n_labeled_ = n_l;

    if (row_ids.empty()) {
        d.row_ids_.resize(n);
        for (std::size_t r = 0; r < n; ++r) d.row_ids_[r] = static_cast<std::int64_t>(r);
    } else {
        d.row_ids_ = std::move(row_ids);
    }
    return d;
}

std::pair<LabeledView, UnlabeledView> split_views(const Dataset& d) {
    const std::size_t n = d.n();
    const std::size_t p = d.p();
    LabeledView lab;
    UnlabeledView unl;
    lab.x = Matrix(d.n_labeled(), p);
    unl.x = Matrix(d.n_unlabeled(), p);
    lab.row_ids.reserve(d.n_labeled());
    lab.y.reserve(d.n_labeled());
    unl.row_ids.reserve(d.n_unlabeled());

    std::size_t il = 0, iu = 0;
    for (std::size_t r = 0; r < n; ++r) {
        if (d.is_labeled(r)) {
            for (std::size_t c = 0; c < p; ++c) lab.x(il, c) = d.covariates()(r, c);
            lab.row_ids.push_back(d.row_id(r));
            lab.y.push_back(*d.outcome(r));
            ++il;
        } else {
            for (std::size_t c = 0; c < p; ++c) unl.x(iu, c) = d.covariates()(r, c);
            unl.row_ids.push_back(d.row_id(r));
            ++iu;
        }
    }
    return {std::move(lab), std::move(unl)};
}

std::pair<LabeledView, UnlabeledView> split_views(const Dataset& d,
                                                  const PredictionSet& preds) {
    if (preds.values.size() != d.n()) {
        raise(Errc::MissingPredictions,
              "prediction set has " + std::to_string(preds.values.size()) +
                  " values for " + std::to_string(d.n()) + " rows");
    }
    for (double v : preds.values) {
        if (!std::isfinite(v)) {
            raise(Errc::MissingPredictions, "non-finite prediction value");
        }
    }
    auto [lab, unl] = split_views(d);
    lab.yhat.reserve(lab.size());
    unl.yhat.reserve(unl.size());
    for (std::size_t r = 0; r < d.n(); ++r) {
        (d.is_labeled(r) ? lab.yhat : unl.yhat).push_back(preds.values[r]);
    }
    return {std::move(lab), std::move(unl)};
}

std::string_view method_name(Method m) {
    switch (m) {
        case Method::Classical: return "Classical";
        case Method::PPI: return "PPI";
        case Method::PPIpp: return "PPIpp";
        case Method::CrossPPI: return "CrossPPI";
        case Method::CrossPPBoot: return "CrossPPBoot";
    }
    return "Unknown";
}

std::optional<Method> method_from_name(std::string_view name) {
    if (name == "Classical" || name == "classical" || name == "cc") return Method::Classical;
    if (name == "PPI" || name == "ppi") return Method::PPI;
    if (name == "PPIpp" || name == "ppipp" || name == "ppi++") return Method::PPIpp;
    if (name == "CrossPPI" || name == "cross_ppi" || name == "crossppi") return Method::CrossPPI;
    if (name == "CrossPPBoot" || name == "cross_ppboot" || name == "crossppboot")
        return Method::CrossPPBoot;
    return std::nullopt;
}

double Estimate::se(std::size_t j) const {
    double v = covariance(j, j);
    return v > 0.0 ? std::sqrt(v) : 0.0;
}

void finalize_covariance(Matrix& cov) {
    const std::size_t d = cov.rows();
    if (cov.cols() != d) raise(Errc::DimensionMismatch, "covariance not square");
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i + 1; j < d; ++j) {
            double a = cov(i, j), b = cov(j, i);
            if (std::abs(a - b) > 1e-10 * std::max(1.0, std::abs(a))) {
                raise(Errc::InvalidSpec, "covariance asymmetry exceeds 1e-10");
            }
            double s = 0.5 * (a + b);
            cov(i, j) = s;
            cov(j, i) = s;
        }
    }
    Eigen::Map<const Eigen::MatrixXd> m(cov.data(), static_cast<Eigen::Index>(d),
                                        static_cast<Eigen::Index>(d));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigs(m, Eigen::EigenvaluesOnly);
    if (eigs.info() == Eigen::Success && eigs.eigenvalues().minCoeff() < -1e-10) {
        raise(Errc::InvalidSpec, "covariance has eigenvalue below -1e-10");
    }
}

} // namespace ppikit
