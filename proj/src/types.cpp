#include "safelqr/types.hpp"

#include <Eigen/SVD>
#include <cstdio>
#include <limits>

#include "safelqr/control.hpp"
#include "safelqr/errors.hpp"

namespace safelqr {

double Cost::value() const {
    return finite_ ? value_ : std::numeric_limits<double>::infinity();
}

std::string Cost::str() const {
    if (!finite_) return "inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value_);
    return buf;
}

namespace {

// PSD square root via symmetric eigendecomposition; tolerates eigenvalues
// down to -1e-10 * |W| (clamped to zero) so that W = 0 is usable noise.
Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& W) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(W);
    const Eigen::VectorXd& ev = es.eigenvalues();
    const double scale = ev.cwiseAbs().maxCoeff();
    Eigen::VectorXd root(ev.size());
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev[i] < -1e-10 * (1.0 + scale)) {
            throw DefinitenessError("noise covariance W has a negative eigenvalue");
        }
        root[i] = std::sqrt(std::max(ev[i], 0.0));
    }
    return es.eigenvectors() * root.asDiagonal();
}

}  // namespace

LinearPlant::LinearPlant(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd W)
    : A_(std::move(A)), B_(std::move(B)), W_(std::move(W)) {
    detail::require_square(A_, "A");
    detail::require_finite(A_, "A");
    detail::require_finite(B_, "B");
    detail::require_finite(W_, "W");
    const auto n = A_.rows();
    if (B_.rows() != n || B_.cols() < 1) {
        throw DimensionError("B must be n x m with m >= 1");
    }
    if (W_.rows() != n || W_.cols() != n) {
        throw DimensionError("W must be n x n");
    }
    detail::require_symmetric(W_, "W");
    noise_factor_ = psd_factor(W_);

    // Controllability: rank of [B, AB, ..., A^{n-1}B] via singular values.
    const auto m = B_.cols();
    Eigen::MatrixXd ctrb(n, n * m);
    Eigen::MatrixXd block = B_;
    for (Eigen::Index i = 0; i < n; ++i) {
        ctrb.middleCols(i * m, m) = block;
        block = A_ * block;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(ctrb);
    const Eigen::VectorXd& sv = svd.singularValues();
    if (sv.size() < n || sv[n - 1] <= 1e-8 * sv[0]) {
        throw ValidityError("(A, B) is not controllable");
    }
}

LQWeights::LQWeights(Eigen::MatrixXd Q, Eigen::MatrixXd R)
    : Q_(std::move(Q)), R_(std::move(R)) {
    detail::require_square(Q_, "Q");
    detail::require_square(R_, "R");
    detail::require_finite(Q_, "Q");
    detail::require_finite(R_, "R");
    detail::require_symmetric(Q_, "Q");
    detail::require_symmetric(R_, "R");
    if (detail::min_eigenvalue(Q_) <= 0.0) {
        throw DefinitenessError("Q must be positive definite");
    }
    if (detail::min_eigenvalue(R_) <= 0.0) {
        throw DefinitenessError("R must be positive definite");
    }
}

}  // namespace safelqr
