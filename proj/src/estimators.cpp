#include "ppikit/estimators.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "linalg.hpp"
#include "ppikit/kernels.hpp"

namespace ppikit {

namespace {

namespace k = kernels;

LossTarget validated_target(const Dataset& d, const LossTarget& target) {
    if (target.kind == LossTarget::Kind::LinearRegression && d.p() < 1) {
        raise(Errc::InvalidSpec, "linear regression requires at least one covariate");
    }
    return target;
}

Matrix build_design(const Matrix& x, bool include_intercept) {
    if (!include_intercept) return x;
    Matrix design(x.rows(), x.cols() + 1);
    for (std::size_t r = 0; r < x.rows(); ++r) design(r, 0) = 1.0;
    for (std::size_t c = 0; c < x.cols(); ++c) {
        auto src = x.col(c);
        auto dst = design.col(c + 1);
        std::copy(src.begin(), src.end(), dst.begin());
    }
    return design;
}

// (1/m) X'X over the rows of a design matrix
Eigen::MatrixXd normalized_gram(const Matrix& design) {
    const std::size_t d = design.cols();
    const double m = static_cast<double>(design.rows());
    Eigen::MatrixXd g(d, d);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
            double v = k::dot(design.col(i), design.col(j)) / m;
            g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
            g(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
        }
    }
    return g;
}

// (1/m) X'v
Eigen::VectorXd normalized_xtv(const Matrix& design, std::span<const double> v) {
    const std::size_t d = design.cols();
    const double m = static_cast<double>(design.rows());
    Eigen::VectorXd out(d);
    for (std::size_t j = 0; j < d; ++j) {
        out(static_cast<Eigen::Index>(j)) = k::dot(design.col(j), v) / m;
    }
    return out;
}

std::vector<double> design_times(const Matrix& design, const Eigen::VectorXd& theta) {
    std::vector<double> out(design.rows(), 0.0);
    for (std::size_t j = 0; j < design.cols(); ++j) {
        double tj = theta(static_cast<Eigen::Index>(j));
        auto col = design.col(j);
        for (std::size_t r = 0; r < out.size(); ++r) out[r] += tj * col[r];
    }
    return out;
}

// Centered sample covariance (n-1 denominator) of the per-row score vectors
// g_i = x_i * r_i. Zero matrix when fewer than two rows.
Eigen::MatrixXd score_covariance(const Matrix& design, std::span<const double> r) {
    const std::size_t d = design.cols();
    const std::size_t m = design.rows();
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d),
                                                static_cast<Eigen::Index>(d));
    if (m < 2) return cov;
    Matrix scores(m, d);
    std::vector<double> means(d);
    for (std::size_t j = 0; j < d; ++j) {
        k::mul(design.col(j), r, scores.col(j));
        means[j] = k::mean(scores.col(j));
    }
    const double denom = static_cast<double>(m - 1);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
            double v = k::sum_prod_dev(scores.col(i), means[i], scores.col(j), means[j]) / denom;
            cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
            cov(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
        }
    }
    return cov;
}

Estimate make_estimate(std::vector<double> theta, const Eigen::MatrixXd& cov,
                       Method method, std::size_t n_l, std::size_t n_u) {
    Estimate e;
    e.theta = std::move(theta);
    e.covariance = detail::from_eigen(cov);
    finalize_covariance(e.covariance);
    e.method = method;
    e.n_l = n_l;
    e.n_u = n_u;
    return e;
}

Estimate mean_estimate_1d(double theta, double variance, Method method,
                          std::size_t n_l, std::size_t n_u) {
    Eigen::MatrixXd cov(1, 1);
    cov(0, 0) = variance;
    return make_estimate({theta}, cov, method, n_l, n_u);
}

void require_labeled(const Dataset& d, std::size_t minimum) {
    if (d.n_labeled() < minimum) {
        raise(Errc::InsufficientLabeled,
              "need at least " + std::to_string(minimum) + " labeled rows, have " +
                  std::to_string(d.n_labeled()));
    }
}

void require_unlabeled(const Dataset& d) {
    if (d.n_unlabeled() < 1) {
        raise(Errc::EmptyUnlabeled, "estimator needs at least one unlabeled row");
    }
}

Estimate cc_linreg(const Dataset& d, const LossTarget& target) {
    auto [lab, unl] = split_views(d);
    Matrix design = build_design(lab.x, target.include_intercept);
    const std::size_t dim = design.cols();
    require_labeled(d, dim + 1);

    Eigen::MatrixXd h = normalized_gram(design);
    Eigen::VectorXd rhs = normalized_xtv(design, lab.y);
    Eigen::VectorXd theta = detail::solve_checked(h, rhs, "labeled design");

    std::vector<double> fitted = design_times(design, theta);
    std::vector<double> resid(fitted.size());
    k::sub(lab.y, fitted, resid);

    Eigen::MatrixXd hinv = detail::invert_checked(h, "labeled design");
    Eigen::MatrixXd cov = hinv * score_covariance(design, resid) * hinv /
                          static_cast<double>(lab.size());
    return make_estimate({theta.data(), theta.data() + dim}, cov, Method::Classical,
                         d.n_labeled(), d.n_unlabeled());
}

struct PpippParts {
    Matrix design_l;
    Matrix design_u;
    Eigen::MatrixXd gram_l;
    Eigen::MatrixXd gram_u;
    Eigen::VectorXd xt_y_l;
    Eigen::VectorXd xt_yhat_l;
    Eigen::VectorXd xt_yhat_u;
    LabeledView lab;
    UnlabeledView unl;
};

PpippParts regression_parts(const Dataset& d, const PredictionSet& preds,
                            const LossTarget& target) {
    PpippParts parts;
    std::tie(parts.lab, parts.unl) = split_views(d, preds);
    parts.design_l = build_design(parts.lab.x, target.include_intercept);
    parts.design_u = build_design(parts.unl.x, target.include_intercept);
    parts.gram_l = normalized_gram(parts.design_l);
    parts.gram_u = normalized_gram(parts.design_u);
    parts.xt_y_l = normalized_xtv(parts.design_l, parts.lab.y);
    parts.xt_yhat_l = normalized_xtv(parts.design_l, parts.lab.yhat);
    parts.xt_yhat_u = normalized_xtv(parts.design_u, parts.unl.yhat);
    return parts;
}

struct RegressionFit {
    Eigen::VectorXd theta;
    Eigen::MatrixXd cov;
};

// Solves the lambda-weighted estimating equation
//   [lambda*Gu + (1-lambda)*Gl] theta =
//       lambda*(Xu'yhat/nu - Xl'yhat/nl) + Xl'y/nl
// and assembles the sandwich covariance from the per-sample scores.
RegressionFit ppipp_regression_fit(const PpippParts& parts, double lambda) {
    Eigen::MatrixXd a = lambda * parts.gram_u + (1.0 - lambda) * parts.gram_l;
    Eigen::VectorXd b =
        lambda * (parts.xt_yhat_u - parts.xt_yhat_l) + parts.xt_y_l;
    Eigen::VectorXd theta = detail::solve_checked(a, b, "estimating equation");
    Eigen::MatrixXd ainv = detail::invert_checked(a, "estimating equation");

    const std::size_t n_l = parts.design_l.rows();
    const std::size_t n_u = parts.design_u.rows();

    std::vector<double> fit_u = design_times(parts.design_u, theta);
    std::vector<double> ru(n_u);
    k::sub(fit_u, parts.unl.yhat, ru);
    Eigen::MatrixXd vu = lambda * lambda * score_covariance(parts.design_u, ru);

    std::vector<double> fit_l = design_times(parts.design_l, theta);
    std::vector<double> rl(n_l);
    for (std::size_t i = 0; i < n_l; ++i) {
        rl[i] = (fit_l[i] - parts.lab.y[i]) - lambda * (fit_l[i] - parts.lab.yhat[i]);
    }
    Eigen::MatrixXd vl = score_covariance(parts.design_l, rl);

    Eigen::MatrixXd mid = vu / static_cast<double>(n_u) + vl / static_cast<double>(n_l);
    return {theta, ainv * mid * ainv};
}

struct MeanStats {
    double mean_y_l;
    double mean_yhat_l;
    double mean_yhat_u;
    double var_yhat_u;
    std::size_t n_l;
    std::size_t n_u;
};

MeanStats mean_stats(const LabeledView& lab, const UnlabeledView& unl) {
    MeanStats s{};
    s.n_l = lab.size();
    s.n_u = unl.size();
    s.mean_y_l = k::mean(lab.y);
    s.mean_yhat_l = k::mean(lab.yhat);
    s.mean_yhat_u = k::mean(unl.yhat);
    s.var_yhat_u = k::sample_var(unl.yhat);
    return s;
}

double ppipp_mean_variance(const LabeledView& lab, const MeanStats& s, double lambda) {
    std::vector<double> adjusted(lab.size());
    for (std::size_t i = 0; i < adjusted.size(); ++i) {
        adjusted[i] = lab.y[i] - lambda * lab.yhat[i];
    }
    return k::sample_var(adjusted) / static_cast<double>(s.n_l) +
           lambda * lambda * s.var_yhat_u / static_cast<double>(s.n_u);
}

} // namespace

LambdaPolicy LambdaPolicy::fixed(double v) {
    if (!(v >= 0.0 && v <= 1.0)) {
        raise(Errc::InvalidSpec, "fixed lambda must lie in [0, 1]");
    }
    return {Mode::Fixed, v};
}

Estimate cc_estimate(const Dataset& d, const LossTarget& target) {
    validated_target(d, target);
    if (target.kind == LossTarget::Kind::LinearRegression) return cc_linreg(d, target);

    require_labeled(d, 2);
    auto [lab, unl] = split_views(d);
    double theta = k::mean(lab.y);
    double variance = k::sample_var(lab.y) / static_cast<double>(lab.size());
    return mean_estimate_1d(theta, variance, Method::Classical, d.n_labeled(),
                            d.n_unlabeled());
}

Estimate ppi_estimate(const Dataset& d, const PredictionSet& preds,
                      const LossTarget& target, const PpiOptions& opts) {
    validated_target(d, target);
    require_labeled(d, 2);
    require_unlabeled(d);

    if (target.kind == LossTarget::Kind::Mean) {
        auto [lab, unl] = split_views(d, preds);
        std::vector<double> resid(lab.size());
        k::sub(lab.y, lab.yhat, resid);
        double resid_mean = k::mean(resid);
        double resid_var = k::sample_var(resid);
        double n_l = static_cast<double>(lab.size());
        double n_u = static_cast<double>(unl.size());

        double theta, variance;
        if (opts.all_n_mean_form) {
            // First term over all n rows; the labeled overlap contributes a
            // covariance cross-term.
            double pred_mean_all = k::mean(preds.values);
            double pred_var_all = k::sample_var(preds.values);
            double n = static_cast<double>(d.n());
            theta = pred_mean_all + resid_mean;
            double cross = k::sample_cov(lab.yhat, resid);
            variance = pred_var_all / n + resid_var / n_l + 2.0 * cross / n;
        } else {
            theta = k::mean(unl.yhat) + resid_mean;
            variance = k::sample_var(unl.yhat) / n_u + resid_var / n_l;
        }
        Estimate e = mean_estimate_1d(theta, variance, Method::PPI, lab.size(), unl.size());
        e.note = opts.all_n_mean_form ? "all-n prediction mean" : "";
        return e;
    }

    if (opts.all_n_mean_form) {
        raise(Errc::InvalidSpec, "all-n form is defined for the mean target only");
    }
    auto parts = regression_parts(d, preds, target);
    const std::size_t dim = parts.design_l.cols();
    require_labeled(d, dim + 1);
    auto fit = ppipp_regression_fit(parts, 1.0);
    return make_estimate({fit.theta.data(), fit.theta.data() + dim}, fit.cov,
                         Method::PPI, d.n_labeled(), d.n_unlabeled());
}

Estimate ppipp_estimate(const Dataset& d, const PredictionSet& preds,
                        const LossTarget& target, const LambdaPolicy& policy) {
    validated_target(d, target);
    require_labeled(d, 2);
    require_unlabeled(d);

    if (target.kind == LossTarget::Kind::Mean) {
        auto [lab, unl] = split_views(d, preds);
        MeanStats s = mean_stats(lab, unl);

        double lambda;
        if (policy.mode == LambdaPolicy::Mode::Fixed) {
            lambda = policy.value;
        } else {
            // Minimizer of the plug-in variance, with the pooled prediction
            // variance standing in for both per-arm variances; constant
            // predictions force lambda = 0.
            double pooled = k::sample_var(preds.values);
            if (pooled <= 0.0) {
                lambda = 0.0;
            } else {
                double ratio = static_cast<double>(s.n_l) / static_cast<double>(s.n_u);
                double raw = k::sample_cov(lab.y, lab.yhat) / (pooled * (1.0 + ratio));
                lambda = std::clamp(raw, 0.0, 1.0);
            }
        }

        double control = s.mean_yhat_u - s.mean_yhat_l;
        double theta = s.mean_y_l + lambda * control;
        double variance = ppipp_mean_variance(lab, s, lambda);
        Estimate e = mean_estimate_1d(theta, variance, Method::PPIpp, s.n_l, s.n_u);
        e.lambda = lambda;
        return e;
    }

    auto parts = regression_parts(d, preds, target);
    const std::size_t dim = parts.design_l.cols();
    require_labeled(d, dim + 1);

    double lambda;
    if (policy.mode == LambdaPolicy::Mode::Fixed) {
        lambda = policy.value;
    } else {
        // Grid search on trace of the sandwich covariance, ties toward the
        // smaller lambda.
        double best_trace = 0.0;
        lambda = 0.0;
        for (int step = 0; step <= 100; ++step) {
            double cand = static_cast<double>(step) / 100.0;
            auto fit = ppipp_regression_fit(parts, cand);
            double tr = fit.cov.trace();
            if (step == 0 || tr < best_trace) {
                best_trace = tr;
                lambda = cand;
            }
        }
    }

    auto fit = ppipp_regression_fit(parts, lambda);
    Estimate e = make_estimate({fit.theta.data(), fit.theta.data() + dim}, fit.cov,
                               Method::PPIpp, d.n_labeled(), d.n_unlabeled());
    e.lambda = lambda;
    return e;
}

ConfidenceInterval confidence_interval(const Estimate& e, double level) {
    if (!(level > 0.0 && level < 1.0)) {
        raise(Errc::InvalidLevel, "confidence level must lie strictly in (0, 1)");
    }
    double z = normal_quantile(0.5 * (1.0 + level));
    ConfidenceInterval ci;
    ci.level = level;
    ci.lower.resize(e.dim());
    ci.upper.resize(e.dim());
    for (std::size_t j = 0; j < e.dim(); ++j) {
        double half = z * e.se(j);
        ci.lower[j] = e.theta[j] - half;
        ci.upper[j] = e.theta[j] + half;
    }
    return ci;
}

VarianceGap variance_gap(const Dataset& d, const PredictionSet& preds) {
    require_labeled(d, 2);
    require_unlabeled(d);
    auto [lab, unl] = split_views(d, preds);

    VarianceGap g;
    g.n = d.n();
    g.pi = static_cast<double>(d.n_labeled()) / static_cast<double>(d.n());
    g.var_pred = k::sample_var(preds.values);
    g.cov_y_pred = k::sample_cov(lab.y, lab.yhat);
    double n = static_cast<double>(g.n);
    g.gap = g.var_pred / (g.pi * (1.0 - g.pi) * n) - 2.0 * g.cov_y_pred / (g.pi * n);
    return g;
}

double normal_quantile(double p) {
    static const boost::math::normal_distribution<double> unit_normal;
    return boost::math::quantile(unit_normal, p);
}

} // namespace ppikit
