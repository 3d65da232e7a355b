#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ppikit/errors.hpp"

namespace ppikit {

// Column-major dense matrix. Columns are contiguous so the reduction kernels
// can run straight over them.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[c * rows_ + r]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[c * rows_ + r]; }

    std::span<const double> col(std::size_t c) const {
        return {data_.data() + c * rows_, rows_};
    }
    std::span<double> col(std::size_t c) {
        return {data_.data() + c * rows_, rows_};
    }

    const double* data() const { return data_.data(); }
    double* data() { return data_.data(); }

    std::vector<double> row(std::size_t r) const {
        std::vector<double> out(cols_);
        for (std::size_t c = 0; c < cols_; ++c) out[c] = (*this)(r, c);
        return out;
    }

    bool operator==(const Matrix& other) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Observed data: covariates for every row, a 0/1 label indicator, and
// outcomes stored only for labeled rows. An unlabeled row's outcome is not
// representable here at all; simulations keep ground truth in a separate
// structure (see simlab), which makes peeking structural rather than a
// convention.
class Dataset {
public:
    // outcomes_labeled holds one value per labeled row, in row order.
    // row_ids may be empty, in which case 0..n-1 is used.
    static Dataset create(Matrix covariates,
                          std::vector<std::uint8_t> label_indicator,
                          std::vector<double> outcomes_labeled,
                          std::vector<std::int64_t> row_ids = {});

    std::size_t n() const { return label_.size(); }
    std::size_t n_labeled() const { return n_labeled_; }
    std::size_t n_unlabeled() const { return n() - n_labeled_; }
    std::size_t p() const { return covariates_.cols(); }

    const Matrix& covariates() const { return covariates_; }
    bool is_labeled(std::size_t row) const { return label_[row] != 0; }

    // Present iff the row is labeled.
    std::optional<double> outcome(std::size_t row) const {
        if (!is_labeled(row)) return std::nullopt;
        return outcomes_[outcome_slot_[row]];
    }

    std::int64_t row_id(std::size_t row) const { return row_ids_[row]; }
    std::span<const std::int64_t> row_ids() const { return row_ids_; }
    std::span<const std::uint8_t> label_indicator() const { return label_; }

    // Rows dropped by lenient CSV ingestion for missing covariates; feeds the
    // A3 diagnostic flag.
    std::size_t rejected_covariate_rows() const { return rejected_rows_; }
    void set_rejected_covariate_rows(std::size_t count) { rejected_rows_ = count; }

private:
    Dataset() = default;

    Matrix covariates_;
    std::vector<std::uint8_t> label_;
    std::vector<double> outcomes_;          // one per labeled row, in row order
    std::vector<std::size_t> outcome_slot_; // row -> index into outcomes_
    std::vector<std::int64_t> row_ids_;
    std::size_t n_labeled_ = 0;
    std::size_t rejected_rows_ = 0;
};

struct Pretrained {
    bool operator==(const Pretrained&) const = default;
};

struct CrossFitted {
    std::vector<std::uint32_t> fold_of_labeled; // per labeled row, in row order
    std::uint32_t model_count = 0;
    bool operator==(const CrossFitted&) const = default;
};

using Provenance = std::variant<Pretrained, CrossFitted>;

// Per-row predicted outcomes. Length must equal the paired Dataset's row
// count; estimators check this and refuse partial prediction sets.
struct PredictionSet {
    std::vector<double> values;
    Provenance provenance = Pretrained{};

    bool is_cross_fitted() const {
        return std::holds_alternative<CrossFitted>(provenance);
    }
    bool operator==(const PredictionSet&) const = default;
};

struct LossTarget {
    enum class Kind { Mean, LinearRegression };
    Kind kind = Kind::Mean;
    bool include_intercept = true;

    static LossTarget mean() { return {Kind::Mean, true}; }
    static LossTarget linear_regression(bool include_intercept = true) {
        return {Kind::LinearRegression, include_intercept};
    }
};

enum class Method { Classical, PPI, PPIpp, CrossPPI, CrossPPBoot };

std::string_view method_name(Method m);
std::optional<Method> method_from_name(std::string_view name);

struct Estimate {
    std::vector<double> theta;
    // Asymptotic covariance of theta, already divided by sample size:
    // SE_j = sqrt(covariance(j, j)).
    Matrix covariance;
    Method method = Method::Classical;
    std::optional<double> lambda; // recorded for PPIpp
    std::size_t n_l = 0;
    std::size_t n_u = 0;
    std::string note; // e.g. bootstrap variant metadata

    std::size_t dim() const { return theta.size(); }
    double se(std::size_t j) const;
};

struct ConfidenceInterval {
    double level = 0.90;
    std::vector<double> lower;
    std::vector<double> upper;
};

// Materialized, read-only, index-stable views of the labeled / unlabeled
// halves. Columns are contiguous copies so estimator loops are pure kernel
// calls. yhat is filled only by the PredictionSet overload.
struct LabeledView {
    std::vector<std::int64_t> row_ids;
    Matrix x;
    std::vector<double> y;
    std::vector<double> yhat;
    std::size_t size() const { return row_ids.size(); }
};

struct UnlabeledView {
    std::vector<std::int64_t> row_ids;
    Matrix x;
    std::vector<double> yhat;
    std::size_t size() const { return row_ids.size(); }
};

std::pair<LabeledView, UnlabeledView> split_views(const Dataset& d);
std::pair<LabeledView, UnlabeledView> split_views(const Dataset& d,
                                                  const PredictionSet& preds);

// Symmetrizes in place and verifies the Estimate covariance contract
// (symmetry within 1e-10, eigenvalues >= -1e-10). Raises on violation.
void finalize_covariance(Matrix& cov);

} // namespace ppikit
