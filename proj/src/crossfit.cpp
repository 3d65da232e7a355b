#include "ppikit/crossfit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "linalg.hpp"
#include "ppikit/kernels.hpp"
#include "ppikit/rng.hpp"

namespace ppikit {

namespace {

namespace k = kernels;

struct StumpSearch {
    bool found = false;
    std::size_t feature = 0;
    std::size_t split_pos = 0; // first index of the right leaf, in sorted order
    double threshold = 0.0;
    double gain = 0.0;
    double left_mean = 0.0;
    double right_mean = 0.0;
};

// Exhaustive greedy stump: thresholds are midpoints of adjacent distinct
// sorted values, both leaves keep at least min_leaf rows, ties go to the
// first candidate in (feature, threshold) order.
StumpSearch best_stump(const Matrix& x, const std::vector<std::vector<std::uint32_t>>& order,
                       const std::vector<double>& resid, int min_leaf) {
    const std::size_t m = resid.size();
    StumpSearch best;
    double total = 0.0;
    for (double v : resid) total += v;
    const double base_score = total * total / static_cast<double>(m);

    for (std::size_t j = 0; j < x.cols(); ++j) {
        auto col = x.col(j);
        const auto& ord = order[j];
        double left_sum = 0.0;
        for (std::size_t i = 1; i < m; ++i) {
            left_sum += resid[ord[i - 1]];
            if (col[ord[i]] == col[ord[i - 1]]) continue;
            if (i < static_cast<std::size_t>(min_leaf) ||
                m - i < static_cast<std::size_t>(min_leaf)) {
                continue;
            }
            double right_sum = total - left_sum;
            double score = left_sum * left_sum / static_cast<double>(i) +
                           right_sum * right_sum / static_cast<double>(m - i);
            double gain = score - base_score;
            if (gain > best.gain + 1e-12) {
                best.found = true;
                best.gain = gain;
                best.feature = j;
                best.split_pos = i;
                best.threshold = 0.5 * (col[ord[i - 1]] + col[ord[i]]);
                best.left_mean = left_sum / static_cast<double>(i);
                best.right_mean = right_sum / static_cast<double>(m - i);
            }
        }
    }
    return best;
}

Predictor fit_ridge(double penalty, const Matrix& x, std::span<const double> y) {
    const std::size_t m = x.rows();
    const std::size_t p = x.cols();
    const double ym = k::mean(y);

    Matrix xc(m, p);
    std::vector<double> col_means(p);
    for (std::size_t j = 0; j < p; ++j) {
        col_means[j] = k::mean(x.col(j));
        auto src = x.col(j);
        auto dst = xc.col(j);
        for (std::size_t r = 0; r < m; ++r) dst[r] = src[r] - col_means[j];
    }
    std::vector<double> yc(m);
    for (std::size_t r = 0; r < m; ++r) yc[r] = y[r] - ym;

    Eigen::VectorXd beta;
    if (penalty > 0.0) {
        Eigen::MatrixXd g(p, p);
        for (std::size_t i = 0; i < p; ++i) {
            for (std::size_t j = i; j < p; ++j) {
                double v = k::dot(xc.col(i), xc.col(j));
                g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
                g(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
            }
        }
        g.diagonal().array() += penalty;
        Eigen::VectorXd rhs(p);
        for (std::size_t j = 0; j < p; ++j) {
            rhs(static_cast<Eigen::Index>(j)) = k::dot(xc.col(j), yc);
        }
        beta = g.ldlt().solve(rhs);
    } else {
        // Unpenalized least squares on the centered design; rank-deficient
        // designs get a pivoted-QR basic solution.
        Eigen::Map<const Eigen::MatrixXd> xe(xc.data(), static_cast<Eigen::Index>(m),
                                             static_cast<Eigen::Index>(p));
        Eigen::Map<const Eigen::VectorXd> ye(yc.data(), static_cast<Eigen::Index>(m));
        beta = xe.colPivHouseholderQr().solve(ye);
    }

    Predictor model;
    model.coef.assign(beta.data(), beta.data() + p);
    model.base = ym;
    for (std::size_t j = 0; j < p; ++j) model.base -= model.coef[j] * col_means[j];
    return model;
}

Predictor fit_gb_stumps(const LearnerSpec& spec, const Matrix& x,
                        std::span<const double> y) {
    const std::size_t m = x.rows();
    const std::size_t p = x.cols();

    std::vector<std::vector<std::uint32_t>> order(p);
    for (std::size_t j = 0; j < p; ++j) {
        order[j].resize(m);
        std::iota(order[j].begin(), order[j].end(), 0u);
        auto col = x.col(j);
        std::stable_sort(order[j].begin(), order[j].end(),
                         [&](std::uint32_t a, std::uint32_t b) { return col[a] < col[b]; });
    }

    Predictor model;
    model.base = k::mean(y);
    std::vector<double> resid(m);
    for (std::size_t r = 0; r < m; ++r) resid[r] = y[r] - model.base;

    for (int round = 0; round < spec.rounds; ++round) {
        StumpSearch s = best_stump(x, order, resid, spec.min_leaf);
        if (!s.found) break;
        Predictor::Stump stump{s.feature, s.threshold, spec.learning_rate * s.left_mean,
                               spec.learning_rate * s.right_mean};
        model.stumps.push_back(stump);
        auto col = x.col(s.feature);
        for (std::size_t r = 0; r < m; ++r) {
            resid[r] -= col[r] <= s.threshold ? stump.left : stump.right;
        }
    }
    return model;
}

} // namespace

LearnerSpec LearnerSpec::ridge(double penalty) {
    if (!(penalty >= 0.0)) raise(Errc::InvalidSpec, "ridge penalty must be >= 0");
    LearnerSpec s;
    s.kind = Kind::Ridge;
    s.penalty = penalty;
    return s;
}

LearnerSpec LearnerSpec::gb_stumps(int rounds, double learning_rate, int min_leaf) {
    if (rounds < 1) raise(Errc::InvalidSpec, "gb_stumps rounds must be >= 1");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
        raise(Errc::InvalidSpec, "gb_stumps learning_rate must lie in (0, 1]");
    }
    if (min_leaf < 1) raise(Errc::InvalidSpec, "gb_stumps min_leaf must be >= 1");
    LearnerSpec s;
    s.kind = Kind::GBStumps;
    s.rounds = rounds;
    s.learning_rate = learning_rate;
    s.min_leaf = min_leaf;
    return s;
}

double Predictor::predict_row(std::span<const double> row) const {
    double v = base;
    for (std::size_t j = 0; j < coef.size(); ++j) v += coef[j] * row[j];
    for (const auto& s : stumps) {
        v += row[s.feature] <= s.threshold ? s.left : s.right;
    }
    return v;
}

std::vector<double> Predictor::predict(const Matrix& x) const {
    std::vector<double> out(x.rows(), base);
    for (std::size_t j = 0; j < coef.size(); ++j) {
        auto col = x.col(j);
        for (std::size_t r = 0; r < out.size(); ++r) out[r] += coef[j] * col[r];
    }
    for (const auto& s : stumps) {
        auto col = x.col(s.feature);
        for (std::size_t r = 0; r < out.size(); ++r) {
            out[r] += col[r] <= s.threshold ? s.left : s.right;
        }
    }
    return out;
}

FoldPlan make_folds(std::size_t n_labeled, std::uint32_t k, std::uint64_t seed) {
    if (k < 2) raise(Errc::InvalidSpec, "fold count must be >= 2");
    if (k > n_labeled) {
        raise(Errc::TooFewLabeled, "cannot split " + std::to_string(n_labeled) +
                                       " labeled rows into " + std::to_string(k) + " folds");
    }
    std::vector<std::uint32_t> perm(n_labeled);
    std::iota(perm.begin(), perm.end(), 0u);
    Rng rng(mix_seed(seed, n_labeled, k));
    rng.shuffle(std::span<std::uint32_t>(perm));

    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.assignment.resize(n_labeled);
    for (std::size_t i = 0; i < n_labeled; ++i) {
        plan.assignment[perm[i]] = static_cast<std::uint32_t>(i % k);
    }
    return plan;
}

Predictor fit_learner(const LearnerSpec& spec, const Matrix& x,
                      std::span<const double> y) {
    if (x.rows() != y.size()) {
        raise(Errc::DimensionMismatch, "training rows != outcome length");
    }
    std::size_t need = 2;
    if (spec.kind == LearnerSpec::Kind::GBStumps) {
        need = std::max<std::size_t>(2, 2 * static_cast<std::size_t>(spec.min_leaf));
    }
    if (x.rows() < need) {
        raise(Errc::DegenerateTraining, "need at least " + std::to_string(need) +
                                            " training rows, have " +
                                            std::to_string(x.rows()));
    }
    return spec.kind == LearnerSpec::Kind::Ridge ? fit_ridge(spec.penalty, x, y)
                                                 : fit_gb_stumps(spec, x, y);
}

CrossFitResult crossfit_predict(const Dataset& d, const LearnerSpec& spec,
                                const FoldPlan& plan) {
    if (plan.assignment.size() != d.n_labeled()) {
        raise(Errc::FoldMismatch, "fold plan covers " +
                                      std::to_string(plan.assignment.size()) +
                                      " rows, dataset has " +
                                      std::to_string(d.n_labeled()) + " labeled");
    }
    if (plan.k < 2) raise(Errc::FoldMismatch, "fold plan needs k >= 2");
    for (auto f : plan.assignment) {
        if (f >= plan.k) raise(Errc::FoldMismatch, "fold index out of range");
    }

    auto [lab, unl] = split_views(d);
    const std::size_t n_l = lab.size();
    const std::size_t p = d.p();

    std::vector<double> labeled_pred(n_l, 0.0);
    std::vector<double> unlabeled_sum(unl.size(), 0.0);
    CrossFitResult out;
    out.fold_models.reserve(plan.k);

    for (std::uint32_t fold = 0; fold < plan.k; ++fold) {
        std::vector<std::uint32_t> train_rows;
        std::vector<std::uint32_t> held_rows;
        for (std::uint32_t i = 0; i < n_l; ++i) {
            (plan.assignment[i] == fold ? held_rows : train_rows).push_back(i);
        }
        Matrix xt(train_rows.size(), p);
        std::vector<double> yt(train_rows.size());
        for (std::size_t r = 0; r < train_rows.size(); ++r) {
            for (std::size_t c = 0; c < p; ++c) xt(r, c) = lab.x(train_rows[r], c);
            yt[r] = lab.y[train_rows[r]];
        }
        Predictor model = fit_learner(spec, xt, yt);

        for (auto i : held_rows) {
            labeled_pred[i] = model.predict_row(lab.x.row(i));
        }
        std::vector<double> up = model.predict(unl.x);
        for (std::size_t r = 0; r < up.size(); ++r) unlabeled_sum[r] += up[r];
        out.fold_models.push_back(std::move(model));
    }

    std::vector<double> values(d.n());
    std::size_t il = 0, iu = 0;
    for (std::size_t r = 0; r < d.n(); ++r) {
        if (d.is_labeled(r)) {
            values[r] = labeled_pred[il++];
        } else {
            values[r] = unlabeled_sum[iu++] / static_cast<double>(plan.k);
        }
    }
    out.predictions =
        PredictionSet{std::move(values), CrossFitted{plan.assignment, plan.k}};
    return out;
}

Estimate cross_ppi_estimate(const Dataset& d, const LearnerSpec& spec,
                            std::uint32_t k, std::uint64_t seed,
                            const LossTarget& target) {
    FoldPlan plan = make_folds(d.n_labeled(), k, seed);
    CrossFitResult cf = crossfit_predict(d, spec, plan);
    Estimate e = ppi_estimate(d, cf.predictions, target);
    e.method = Method::CrossPPI;
    return e;
}

BootResult cross_ppboot_ci(const Dataset& d, const LearnerSpec& spec,
                           std::uint32_t k, std::uint64_t seed,
                           const LossTarget& target, const BootConfig& boot) {
    if (boot.b < 100) raise(Errc::InvalidSpec, "bootstrap needs at least 100 replicates");
    if (!(boot.level > 0.0 && boot.level < 1.0)) {
        raise(Errc::InvalidLevel, "bootstrap level must lie strictly in (0, 1)");
    }

    FoldPlan plan = make_folds(d.n_labeled(), k, seed);
    CrossFitResult cf = crossfit_predict(d, spec, plan);
    Estimate point = ppi_estimate(d, cf.predictions, target);
    point.method = Method::CrossPPBoot;
    point.note = "percentile bootstrap over frozen cross-fitted predictions";

    auto [lab, unl] = split_views(d, cf.predictions);
    const std::size_t n_l = lab.size();
    const std::size_t n_u = unl.size();
    std::vector<double> resid(n_l);
    k::sub(lab.y, lab.yhat, resid);

    const bool is_mean = target.kind == LossTarget::Kind::Mean;
    const std::size_t dim = point.dim();

    Matrix design_l(0, 0), design_u(0, 0);
    if (!is_mean) {
        auto with_intercept = [&](const Matrix& x) {
            if (!target.include_intercept) return x;
            Matrix m(x.rows(), x.cols() + 1);
            for (std::size_t r = 0; r < x.rows(); ++r) m(r, 0) = 1.0;
            for (std::size_t c = 0; c < x.cols(); ++c) {
                auto src = x.col(c);
                std::copy(src.begin(), src.end(), m.col(c + 1).begin());
            }
            return m;
        };
        design_l = with_intercept(lab.x);
        design_u = with_intercept(unl.x);
    }

    std::vector<std::vector<double>> replicates; // per replicate, theta vector
    replicates.reserve(boot.b);
    std::vector<std::uint32_t> lidx(n_l), uidx(n_u);

    for (std::size_t r = 0; r < boot.b; ++r) {
        Rng rng = Rng::from_stream(boot.seed, r);
        for (auto& v : lidx) v = static_cast<std::uint32_t>(rng.below(n_l));
        for (auto& v : uidx) v = static_cast<std::uint32_t>(rng.below(n_u));

        if (is_mean) {
            double theta = k::sum_gather(unl.yhat, uidx) / static_cast<double>(n_u) +
                           k::sum_gather(resid, lidx) / static_cast<double>(n_l);
            replicates.push_back({theta});
            continue;
        }

        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim),
                                                  static_cast<Eigen::Index>(dim));
        Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
        std::vector<double> row(dim);
        for (auto i : uidx) {
            for (std::size_t c = 0; c < dim; ++c) row[c] = design_u(i, c);
            for (std::size_t c1 = 0; c1 < dim; ++c1) {
                for (std::size_t c2 = c1; c2 < dim; ++c2) {
                    a(static_cast<Eigen::Index>(c1), static_cast<Eigen::Index>(c2)) +=
                        row[c1] * row[c2];
                }
                b(static_cast<Eigen::Index>(c1)) += row[c1] * unl.yhat[i];
            }
        }
        a /= static_cast<double>(n_u);
        b /= static_cast<double>(n_u);
        Eigen::VectorXd bl = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
        for (auto i : lidx) {
            for (std::size_t c = 0; c < dim; ++c) {
                bl(static_cast<Eigen::Index>(c)) += design_l(i, c) * resid[i];
            }
        }
        b += bl / static_cast<double>(n_l);
        for (std::size_t c1 = 0; c1 < dim; ++c1) {
            for (std::size_t c2 = 0; c2 < c1; ++c2) {
                a(static_cast<Eigen::Index>(c1), static_cast<Eigen::Index>(c2)) =
                    a(static_cast<Eigen::Index>(c2), static_cast<Eigen::Index>(c1));
            }
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
        if (qr.rank() < static_cast<Eigen::Index>(dim)) continue; // degenerate resample
        Eigen::VectorXd theta = qr.solve(b);
        replicates.emplace_back(theta.data(), theta.data() + dim);
    }

    const std::size_t b_eff = replicates.size();
    if (b_eff < boot.b / 2) {
        raise(Errc::RankDeficientDesign, "most bootstrap resamples were degenerate");
    }

    // Percentile interval: order statistics at ranks ceil(B*alpha/2) and
    // ceil(B*(1 - alpha/2)).
    const double alpha = 1.0 - boot.level;
    auto rank_index = [&](double q) {
        auto rank = static_cast<std::size_t>(
            std::ceil(q * static_cast<double>(b_eff) - 1e-12));
        rank = std::clamp<std::size_t>(rank, 1, b_eff);
        return rank - 1;
    };

    ConfidenceInterval ci;
    ci.level = boot.level;
    ci.lower.resize(dim);
    ci.upper.resize(dim);
    std::vector<double> coord(b_eff);
    for (std::size_t j = 0; j < dim; ++j) {
        for (std::size_t r = 0; r < b_eff; ++r) coord[r] = replicates[r][j];
        std::sort(coord.begin(), coord.end());
        ci.lower[j] = coord[rank_index(alpha / 2.0)];
        ci.upper[j] = coord[rank_index(1.0 - alpha / 2.0)];
    }

    // Report the bootstrap covariance of the replicates alongside the
    // percentile interval.
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim),
                                                static_cast<Eigen::Index>(dim));
    if (b_eff >= 2) {
        std::vector<double> means(dim, 0.0);
        for (const auto& rep : replicates) {
            for (std::size_t j = 0; j < dim; ++j) means[j] += rep[j];
        }
        for (auto& m : means) m /= static_cast<double>(b_eff);
        for (const auto& rep : replicates) {
            for (std::size_t j = 0; j < dim; ++j) {
                for (std::size_t l = j; l < dim; ++l) {
                    cov(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l)) +=
                        (rep[j] - means[j]) * (rep[l] - means[l]);
                }
            }
        }
        cov /= static_cast<double>(b_eff - 1);
        for (std::size_t j = 0; j < dim; ++j) {
            for (std::size_t l = 0; l < j; ++l) {
                cov(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l)) =
                    cov(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(j));
            }
        }
    }
    point.covariance = detail::from_eigen(cov);
    finalize_covariance(point.covariance);

    return {std::move(point), std::move(ci), std::move(replicates)};
}

} // namespace ppikit
