#include "safelqr/control.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "safelqr/errors.hpp"

namespace safelqr {

namespace detail {

void require_square(const Eigen::MatrixXd& M, const char* name) {
    if (M.rows() != M.cols() || M.rows() == 0) {
        std::ostringstream os;
        os << name << " must be square, got " << M.rows() << " x " << M.cols();
        throw DimensionError(os.str());
    }
}

void require_finite(const Eigen::MatrixXd& M, const char* name) {
    if (!M.allFinite()) {
        throw ValidityError(std::string(name) + " contains non-finite entries");
    }
}

void require_symmetric(const Eigen::MatrixXd& M, const char* name) {
    const double scale = M.cwiseAbs().maxCoeff();
    if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + scale)) {
        throw ValidityError(std::string(name) + " must be symmetric");
    }
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& M) {
    return 0.5 * (M + M.transpose());
}

namespace {

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> pd_eigen(const Eigen::MatrixXd& P,
                                                        const char* name) {
    require_square(P, name);
    require_finite(P, name);
    require_symmetric(P, name);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(P));
    if (es.eigenvalues().minCoeff() <= 0.0) {
        throw DefinitenessError(std::string(name) + " must be positive definite");
    }
    return es;
}

}  // namespace

Eigen::MatrixXd sqrt_pd(const Eigen::MatrixXd& P, const char* name) {
    auto es = pd_eigen(P, name);
    return es.operatorSqrt();
}

Eigen::MatrixXd inverse_sqrt_pd(const Eigen::MatrixXd& P, const char* name) {
    auto es = pd_eigen(P, name);
    return es.operatorInverseSqrt();
}

Eigen::MatrixXd inverse_pd(const Eigen::MatrixXd& P, const char* name) {
    auto es = pd_eigen(P, name);
    return es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() *
           es.eigenvectors().transpose();
}

double max_eigenvalue(const Eigen::MatrixXd& S) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(S));
    return es.eigenvalues().maxCoeff();
}

double min_eigenvalue(const Eigen::MatrixXd& S) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(S));
    return es.eigenvalues().minCoeff();
}

double pd_condition(const Eigen::MatrixXd& P, const char* name) {
    auto es = pd_eigen(P, name);
    return es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff();
}

double operator_norm(const Eigen::MatrixXd& M) {
    if (M.size() == 0) return 0.0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    return svd.singularValues()[0];
}

}  // namespace detail

double spectral_radius(const Eigen::MatrixXd& M) {
    detail::require_square(M, "matrix");
    detail::require_finite(M, "matrix");
    Eigen::EigenSolver<Eigen::MatrixXd> es(M, /*computeEigenvectors=*/false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

namespace {

double stein_residual(const Eigen::MatrixXd& X, const Eigen::MatrixXd& T,
                      const Eigen::MatrixXd& C) {
    return (X - T * X * T.transpose() - C).norm();
}

}  // namespace

Eigen::MatrixXd solve_stein(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C,
                            SteinForm form, double tol) {
    detail::require_square(A, "A");
    detail::require_finite(A, "A");
    detail::require_square(C, "C");
    detail::require_finite(C, "C");
    detail::require_symmetric(C, "C");
    if (A.rows() != C.rows()) {
        throw DimensionError("A and C must have matching dimensions");
    }
    const double radius = spectral_radius(A);
    if (radius >= 1.0) {
        std::ostringstream os;
        os << "Stein equation has no solution: spectral radius " << radius << " >= 1";
        throw InstabilityError(os.str());
    }

    // Work in the forward orientation; the adjoint form is the forward form
    // for A^T.
    const Eigen::MatrixXd T0 = (form == SteinForm::Forward) ? A : A.transpose();

    // Doubling: after k rounds X holds the first 2^k series terms and
    // T = T0^(2^k). The spectral radius bound above guarantees the update
    // norm decays geometrically.
    Eigen::MatrixXd X = detail::symmetrize(C);
    Eigen::MatrixXd T = T0;
    for (int round = 0; round < 200; ++round) {
        Eigen::MatrixXd update = T * X * T.transpose();
        X = detail::symmetrize(X + update);
        if (!X.allFinite()) {
            throw ConvergenceError("Stein doubling produced non-finite values",
                                   std::numeric_limits<double>::infinity());
        }
        T = T * T;
        if (update.norm() <= 0.25 * tol * (1.0 + X.norm())) break;
    }

    // Verify; a handful of plain fixed-point sweeps mops up any residual the
    // doubling scheme left behind.
    double res = stein_residual(X, T0, C);
    for (int sweep = 0; sweep < 10000 && res > tol * (1.0 + X.norm()); ++sweep) {
        X = detail::symmetrize(T0 * X * T0.transpose() + C);
        res = stein_residual(X, T0, C);
    }
    if (res > tol * (1.0 + X.norm())) {
        throw ConvergenceError("Stein solve missed its residual contract", res);
    }
    return X;
}

namespace {

struct RiccatiCore {
    Eigen::MatrixXd P;
    long iterations = 0;
};

double dare_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                     const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                     const Eigen::MatrixXd& P) {
    const Eigen::MatrixXd BtPA = B.transpose() * P * A;
    const Eigen::MatrixXd G = R + B.transpose() * P * B;
    const Eigen::MatrixXd next =
        Q + A.transpose() * P * A - BtPA.transpose() * G.llt().solve(BtPA);
    return (next - P).norm() / (1.0 + P.norm());
}

// Structure-preserving doubling; quadratically convergent. Returns nullopt
// when the iteration breaks down (singular step or non-finite values), in
// which case the caller retries with the plain fixed-point recursion.
std::optional<RiccatiCore> dare_doubling(const Eigen::MatrixXd& A,
                                         const Eigen::MatrixXd& B,
                                         const Eigen::MatrixXd& Q,
                                         const Eigen::MatrixXd& R,
                                         const DareOptions& opts) {
    const Eigen::Index n = A.rows();
    Eigen::MatrixXd Ak = A;
    Eigen::MatrixXd Gk = B * R.llt().solve(B.transpose());
    Eigen::MatrixXd Hk = Q;
    for (long it = 1; it <= 200; ++it) {
        const Eigen::MatrixXd Wm = Eigen::MatrixXd::Identity(n, n) + Gk * Hk;
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(Wm);
        const Eigen::MatrixXd V1 = lu.solve(Ak);
        const Eigen::MatrixXd V2 = lu.solve(Gk.transpose()).transpose();
        Gk = detail::symmetrize(Gk + Ak * V2 * Ak.transpose());
        const Eigen::MatrixXd Hnext = detail::symmetrize(Hk + V1.transpose() * Hk * Ak);
        Ak = Ak * V1;
        const double step = (Hnext - Hk).norm();
        Hk = Hnext;
        if (!Hk.allFinite() || !Gk.allFinite() || !Ak.allFinite()) return std::nullopt;
        if (Hk.norm() > 1e120) return std::nullopt;
        if (step <= opts.tol * (1.0 + Hk.norm())) {
            return RiccatiCore{Hk, it};
        }
    }
    return std::nullopt;
}

RiccatiCore dare_fixed_point(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                             const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                             const DareOptions& opts) {
    Eigen::MatrixXd P = Q;
    double step = std::numeric_limits<double>::infinity();
    for (long it = 1; it <= opts.max_iterations; ++it) {
        const Eigen::MatrixXd BtPA = B.transpose() * P * A;
        const Eigen::MatrixXd G = R + B.transpose() * P * B;
        Eigen::MatrixXd next = detail::symmetrize(
            Q + A.transpose() * P * A - BtPA.transpose() * G.llt().solve(BtPA));
        step = (next - P).norm();
        P = std::move(next);
        if (!P.allFinite() || P.norm() > 1e120) {
            throw StabilizabilityError(
                "Riccati recursion diverged: (A, B) pair appears unstabilizable");
        }
        if (step <= opts.tol * (1.0 + P.norm())) {
            return RiccatiCore{P, it};
        }
    }
    throw ConvergenceError("Riccati recursion did not converge", step);
}

}  // namespace

GainSolution dare_gain(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                       const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                       const DareOptions& options) {
    detail::require_square(A, "A");
    detail::require_finite(A, "A");
    detail::require_finite(B, "B");
    if (B.rows() != A.rows()) throw DimensionError("B must have n rows");
    if (Q.rows() != A.rows() || Q.cols() != A.cols()) {
        throw DimensionError("Q must be n x n");
    }
    if (R.rows() != B.cols() || R.cols() != B.cols()) {
        throw DimensionError("R must be m x m");
    }

    std::optional<RiccatiCore> core = dare_doubling(A, B, Q, R, options);
    if (core.has_value() &&
        dare_residual(A, B, Q, R, core->P) > 1e-9) {
        core.reset();
    }
    if (!core.has_value()) {
        core = dare_fixed_point(A, B, Q, R, options);
    }

    GainSolution out;
    out.P = core->P;
    const Eigen::MatrixXd G = R + B.transpose() * out.P * B;
    out.K = -G.llt().solve(B.transpose() * out.P * A);
    out.residual = dare_residual(A, B, Q, R, out.P);
    out.iterations = core->iterations;
    if (out.residual > 1e-9) {
        throw ConvergenceError("Riccati solution missed its residual contract",
                               out.residual);
    }
    if (spectral_radius(A + B * out.K) >= 1.0) {
        throw StabilizabilityError("Riccati gain failed to stabilize the closed loop");
    }
    return out;
}

RiccatiSolution dare_solve(const LinearPlant& plant, const LQWeights& weights,
                           const DareOptions& options) {
    if (weights.state_dim() != plant.state_dim() ||
        weights.input_dim() != plant.input_dim()) {
        throw DimensionError("weight dimensions do not match the plant");
    }
    GainSolution g = dare_gain(plant.A(), plant.B(), weights.Q(), weights.R(), options);
    RiccatiSolution out;
    out.P = std::move(g.P);
    out.K = std::move(g.K);
    out.cost = (plant.W() * out.P).trace();
    out.residual = g.residual;
    out.iterations = g.iterations;
    return out;
}

Cost linear_feedback_cost(const LinearPlant& plant, const LQWeights& weights,
                          const Eigen::MatrixXd& K) {
    if (K.rows() != plant.input_dim() || K.cols() != plant.state_dim()) {
        throw DimensionError("gain must be m x n");
    }
    detail::require_finite(K, "K");
    const Eigen::MatrixXd Acl = plant.A() + plant.B() * K;
    if (spectral_radius(Acl) >= 1.0) {
        return Cost::infinite();
    }
    const Eigen::MatrixXd stage =
        detail::symmetrize(weights.Q() + K.transpose() * weights.R() * K);
    const Eigen::MatrixXd P = solve_stein(Acl, stage, SteinForm::Adjoint);
    return Cost::finite((plant.W() * P).trace());
}

double weighted_matrix_norm(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& P) {
    detail::require_square(Q, "Q");
    detail::require_finite(Q, "Q");
    detail::require_symmetric(Q, "Q");
    if (Q.rows() != P.rows()) throw DimensionError("Q and P dimensions differ");
    const Eigen::MatrixXd S = detail::inverse_sqrt_pd(P, "P");
    return detail::max_eigenvalue(S * Q * S);
}

double weighted_operator_norm(const Eigen::MatrixXd& A, const Eigen::MatrixXd& P) {
    detail::require_square(A, "A");
    detail::require_finite(A, "A");
    if (A.rows() != P.rows()) throw DimensionError("A and P dimensions differ");
    const Eigen::MatrixXd S = detail::sqrt_pd(P, "P");
    const Eigen::MatrixXd Si = detail::inverse_sqrt_pd(P, "P");
    return detail::operator_norm(S * A * Si);
}

Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& W) {
    detail::require_square(W, "W");
    detail::require_finite(W, "W");
    detail::require_symmetric(W, "W");
    Eigen::LLT<Eigen::MatrixXd> llt(detail::symmetrize(W));
    if (llt.info() != Eigen::Success) {
        throw DefinitenessError("W is not positive definite");
    }
    return llt.matrixL();
}

}  // namespace safelqr
