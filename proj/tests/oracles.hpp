#pragma once

// Brute-force reference implementations used only by tests. Everything here
// is written with naive loops and a hand-rolled Gauss-Jordan solver so the
// oracles share no code path with the library (which runs on the lane-blocked
// kernels and Eigen factorizations).

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace oracle {

inline double mean(const std::vector<double>& x) {
    double s = 0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

inline double var(const std::vector<double>& x) {
    if (x.size() < 2) return 0.0;
    double m = mean(x);
    double s = 0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

inline double cov(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() < 2) return 0.0;
    double mx = mean(x), my = mean(y);
    double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - mx) * (y[i] - my);
    return s / static_cast<double>(x.size() - 1);
}

// Row-major dense matrix for the oracle side.
struct Mat {
    std::size_t rows = 0, cols = 0;
    std::vector<double> a;
    Mat() = default;
    Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}
    double& operator()(std::size_t r, std::size_t c) { return a[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return a[r * cols + c]; }
};

// Gauss-Jordan with partial pivoting.
inline std::vector<double> solve(Mat m, std::vector<double> b) {
    const std::size_t n = m.rows;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(m(r, col)) > std::abs(m(piv, col))) piv = r;
        }
        if (std::abs(m(piv, col)) < 1e-300) throw std::runtime_error("singular");
        if (piv != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(m(piv, c), m(col, c));
            std::swap(b[piv], b[col]);
        }
        double d = m(col, col);
        for (std::size_t c = 0; c < n; ++c) m(col, c) /= d;
        b[col] /= d;
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            double f = m(r, col);
            if (f == 0.0) continue;
            for (std::size_t c = 0; c < n; ++c) m(r, c) -= f * m(col, c);
            b[r] -= f * b[col];
        }
    }
    return b;
}

// det(g) / prod(diag(g)): a cheap conditioning indicator for normalized Gram
// matrices (1 for orthogonal columns, ~0 near singularity).
inline double hadamard_ratio(Mat g) {
    const std::size_t n = g.rows;
    double det = 1.0, diag = 1.0;
    for (std::size_t i = 0; i < n; ++i) diag *= g(i, i);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(g(r, col)) > std::abs(g(piv, col))) piv = r;
        }
        if (g(piv, col) == 0.0) return 0.0;
        if (piv != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(g(piv, c), g(col, c));
            det = -det;
        }
        det *= g(col, col);
        for (std::size_t r = col + 1; r < n; ++r) {
            double f = g(r, col) / g(col, col);
            for (std::size_t c = col; c < n; ++c) g(r, c) -= f * g(col, c);
        }
    }
    return diag == 0.0 ? 0.0 : det / diag;
}

inline Mat inverse(const Mat& m) {
    const std::size_t n = m.rows;
    Mat inv(n, n);
    for (std::size_t c = 0; c < n; ++c) {
        std::vector<double> e(n, 0.0);
        e[c] = 1.0;
        auto col = solve(m, e);
        for (std::size_t r = 0; r < n; ++r) inv(r, c) = col[r];
    }
    return inv;
}

struct Fit {
    std::vector<double> theta;
    Mat covariance;
};

// Centered sample covariance of scores g_i = x_i * r_i, n-1 denominator.
inline Mat score_cov(const Mat& design, const std::vector<double>& r) {
    const std::size_t m = design.rows, d = design.cols;
    Mat out(d, d);
    if (m < 2) return out;
    Mat g(m, d);
    std::vector<double> gm(d, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            g(i, j) = design(i, j) * r[i];
            gm[j] += g(i, j);
        }
    }
    for (auto& v : gm) v /= static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            for (std::size_t l = 0; l < d; ++l) {
                out(j, l) += (g(i, j) - gm[j]) * (g(i, l) - gm[l]);
            }
        }
    }
    for (auto& v : out.a) v /= static_cast<double>(m - 1);
    return out;
}

inline Mat gram(const Mat& design) {
    const std::size_t m = design.rows, d = design.cols;
    Mat g(d, d);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            for (std::size_t l = 0; l < d; ++l) g(j, l) += design(i, j) * design(i, l);
        }
    }
    for (auto& v : g.a) v /= static_cast<double>(m);
    return g;
}

inline std::vector<double> xtv(const Mat& design, const std::vector<double>& v) {
    std::vector<double> out(design.cols, 0.0);
    for (std::size_t i = 0; i < design.rows; ++i) {
        for (std::size_t j = 0; j < design.cols; ++j) out[j] += design(i, j) * v[i];
    }
    for (auto& x : out) x /= static_cast<double>(design.rows);
    return out;
}

inline Mat sandwich(const Mat& bread, const Mat& meat) {
    const std::size_t d = bread.rows;
    Mat tmp(d, d), out(d, d);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            for (std::size_t l = 0; l < d; ++l) tmp(i, j) += bread(i, l) * meat(l, j);
        }
    }
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            for (std::size_t l = 0; l < d; ++l) out(i, j) += tmp(i, l) * bread(l, j);
        }
    }
    return out;
}

// ---- Mean-target estimators ----------------------------------------------

inline Fit cc_mean(const std::vector<double>& y_l) {
    Fit f;
    f.theta = {mean(y_l)};
    f.covariance = Mat(1, 1);
    f.covariance(0, 0) = var(y_l) / static_cast<double>(y_l.size());
    return f;
}

inline Fit ppi_mean(const std::vector<double>& y_l, const std::vector<double>& yhat_l,
                    const std::vector<double>& yhat_u) {
    std::vector<double> resid(y_l.size());
    for (std::size_t i = 0; i < y_l.size(); ++i) resid[i] = y_l[i] - yhat_l[i];
    Fit f;
    f.theta = {mean(yhat_u) + mean(resid)};
    f.covariance = Mat(1, 1);
    f.covariance(0, 0) = var(yhat_u) / static_cast<double>(yhat_u.size()) +
                         var(resid) / static_cast<double>(y_l.size());
    return f;
}

inline Fit ppipp_mean(const std::vector<double>& y_l, const std::vector<double>& yhat_l,
                      const std::vector<double>& yhat_u, double lambda) {
    Fit f;
    f.theta = {mean(y_l) + lambda * (mean(yhat_u) - mean(yhat_l))};
    std::vector<double> adj(y_l.size());
    for (std::size_t i = 0; i < y_l.size(); ++i) adj[i] = y_l[i] - lambda * yhat_l[i];
    f.covariance = Mat(1, 1);
    f.covariance(0, 0) = var(adj) / static_cast<double>(y_l.size()) +
                         lambda * lambda * var(yhat_u) / static_cast<double>(yhat_u.size());
    return f;
}

// Plug-in variance of the mean-target PPI++ estimator at a given lambda;
// used as the grid-search oracle for the optimized policy.
inline double ppipp_mean_variance(const std::vector<double>& y_l,
                                  const std::vector<double>& yhat_l,
                                  const std::vector<double>& yhat_u, double lambda) {
    std::vector<double> adj(y_l.size());
    for (std::size_t i = 0; i < y_l.size(); ++i) adj[i] = y_l[i] - lambda * yhat_l[i];
    return var(adj) / static_cast<double>(y_l.size()) +
           lambda * lambda * var(yhat_u) / static_cast<double>(yhat_u.size());
}

// ---- Regression-target estimators -----------------------------------------

inline Mat design_with_intercept(const Mat& x, bool intercept) {
    if (!intercept) return x;
    Mat d(x.rows, x.cols + 1);
    for (std::size_t r = 0; r < x.rows; ++r) {
        d(r, 0) = 1.0;
        for (std::size_t c = 0; c < x.cols; ++c) d(r, c + 1) = x(r, c);
    }
    return d;
}

inline Fit cc_linreg(const Mat& x_l, const std::vector<double>& y_l, bool intercept) {
    Mat design = design_with_intercept(x_l, intercept);
    Mat h = gram(design);
    Fit f;
    f.theta = solve(h, xtv(design, y_l));
    std::vector<double> resid(design.rows);
    for (std::size_t i = 0; i < design.rows; ++i) {
        double fit = 0;
        for (std::size_t j = 0; j < design.cols; ++j) fit += design(i, j) * f.theta[j];
        resid[i] = y_l[i] - fit;
    }
    Mat cov = sandwich(inverse(h), score_cov(design, resid));
    for (auto& v : cov.a) v /= static_cast<double>(design.rows);
    f.covariance = cov;
    return f;
}

// lambda = 1 gives the PPI estimating equation; lambda = 0 gives CC.
inline Fit ppipp_linreg(const Mat& x_l, const std::vector<double>& y_l,
                        const std::vector<double>& yhat_l, const Mat& x_u,
                        const std::vector<double>& yhat_u, bool intercept,
                        double lambda) {
    Mat dl = design_with_intercept(x_l, intercept);
    Mat du = design_with_intercept(x_u, intercept);
    const std::size_t d = dl.cols;

    Mat gl = gram(dl), gu = gram(du);
    Mat a(d, d);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            a(i, j) = lambda * gu(i, j) + (1.0 - lambda) * gl(i, j);
        }
    }
    auto bu = xtv(du, yhat_u);
    auto bl_hat = xtv(dl, yhat_l);
    auto bl_y = xtv(dl, y_l);
    std::vector<double> b(d);
    for (std::size_t j = 0; j < d; ++j) b[j] = lambda * (bu[j] - bl_hat[j]) + bl_y[j];

    Fit f;
    f.theta = solve(a, b);

    std::vector<double> ru(du.rows);
    for (std::size_t i = 0; i < du.rows; ++i) {
        double fit = 0;
        for (std::size_t j = 0; j < d; ++j) fit += du(i, j) * f.theta[j];
        ru[i] = fit - yhat_u[i];
    }
    Mat vu = score_cov(du, ru);
    for (auto& v : vu.a) v *= lambda * lambda;

    std::vector<double> rl(dl.rows);
    for (std::size_t i = 0; i < dl.rows; ++i) {
        double fit = 0;
        for (std::size_t j = 0; j < d; ++j) fit += dl(i, j) * f.theta[j];
        rl[i] = (fit - y_l[i]) - lambda * (fit - yhat_l[i]);
    }
    Mat vl = score_cov(dl, rl);

    Mat mid(d, d);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            mid(i, j) = vu(i, j) / static_cast<double>(du.rows) +
                        vl(i, j) / static_cast<double>(dl.rows);
        }
    }
    f.covariance = sandwich(inverse(a), mid);
    return f;
}

inline Fit ppi_linreg(const Mat& x_l, const std::vector<double>& y_l,
                      const std::vector<double>& yhat_l, const Mat& x_u,
                      const std::vector<double>& yhat_u, bool intercept) {
    return ppipp_linreg(x_l, y_l, yhat_l, x_u, yhat_u, intercept, 1.0);
}

// ---- Diagnostics oracles ---------------------------------------------------

// O(n*m) double loop over the pooled points.
inline double ks_stat(const std::vector<double>& a, const std::vector<double>& b) {
    double stat = 0.0;
    auto ecdf = [](const std::vector<double>& s, double t) {
        std::size_t c = 0;
        for (double v : s) {
            if (v <= t) ++c;
        }
        return static_cast<double>(c) / static_cast<double>(s.size());
    };
    for (double t : a) stat = std::max(stat, std::abs(ecdf(a, t) - ecdf(b, t)));
    for (double t : b) stat = std::max(stat, std::abs(ecdf(a, t) - ecdf(b, t)));
    return stat;
}

inline double energy_distance(const std::vector<std::vector<double>>& a,
                              const std::vector<std::vector<double>>& b) {
    auto dist = [](const std::vector<double>& u, const std::vector<double>& v) {
        double s = 0;
        for (std::size_t i = 0; i < u.size(); ++i) s += (u[i] - v[i]) * (u[i] - v[i]);
        return std::sqrt(s);
    };
    double ab = 0, aa = 0, bb = 0;
    for (const auto& u : a) {
        for (const auto& v : b) ab += dist(u, v);
    }
    for (const auto& u : a) {
        for (const auto& v : a) aa += dist(u, v);
    }
    for (const auto& u : b) {
        for (const auto& v : b) bb += dist(u, v);
    }
    double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    return 2.0 * ab / (na * nb) - aa / (na * na) - bb / (nb * nb);
}

} // namespace oracle
