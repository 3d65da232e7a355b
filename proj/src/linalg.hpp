#pragma once

// Internal Eigen-backed helpers for the small d x d solves. The long-n
// reductions run through ppikit::kernels; only cold factorization work lands
// here.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>

#include "ppikit/data_model.hpp"
#include "ppikit/errors.hpp"

namespace ppikit::detail {

inline Eigen::Map<const Eigen::MatrixXd> as_eigen(const Matrix& m) {
    return {m.data(), static_cast<Eigen::Index>(m.rows()),
            static_cast<Eigen::Index>(m.cols())};
}

// Rank-revealing solve of the symmetric system A x = b. Raises
// RankDeficientDesign when A is singular or its QR-based condition estimate
// exceeds 1e12.
inline Eigen::VectorXd solve_checked(const Eigen::MatrixXd& a,
                                     const Eigen::VectorXd& b,
                                     const char* what) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    const auto& r = qr.matrixR();
    const Eigen::Index d = a.rows();
    double rmax = std::abs(r(0, 0));
    double rmin = std::abs(r(d - 1, d - 1));
    if (!(rmin > 0.0) || rmax / rmin > 1e12) {
        raise(Errc::RankDeficientDesign, std::string(what) +
                  ": condition estimate exceeds 1e12 or matrix is singular");
    }
    return qr.solve(b);
}

inline Eigen::MatrixXd invert_checked(const Eigen::MatrixXd& a, const char* what) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    const auto& r = qr.matrixR();
    const Eigen::Index d = a.rows();
    double rmax = std::abs(r(0, 0));
    double rmin = std::abs(r(d - 1, d - 1));
    if (!(rmin > 0.0) || rmax / rmin > 1e12) {
        raise(Errc::RankDeficientDesign, std::string(what) +
                  ": condition estimate exceeds 1e12 or matrix is singular");
    }
    return qr.inverse();
}

inline Matrix from_eigen(const Eigen::MatrixXd& m) {
    Matrix out(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c)
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            out(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = m(r, c);
    return out;
}

} // namespace ppikit::detail
