#pragma once

#include <Eigen/Dense>

#include "safelqr/types.hpp"

namespace safelqr {

/// Largest eigenvalue modulus of a square matrix, accurate to 1e-8 relative.
double spectral_radius(const Eigen::MatrixXd& M);

/// Which fixed-point map a Stein equation uses.
enum class SteinForm {
    Forward,  ///< X = A X A^T + C  (covariance / gramian direction)
    Adjoint,  ///< X = A^T X A + C  (cost / Lyapunov direction)
};

/// Unique fixed point of the Stein equation for stable A (spectral radius
/// < 1) and symmetric PSD C. Evaluates the matrix power series with a
/// doubling scheme, verifies the residual against `tol * (1 + |X|)`, and
/// falls back to plain fixed-point sweeps if the verification fails.
Eigen::MatrixXd solve_stein(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C,
                            SteinForm form, double tol = 1e-10);

struct DareOptions {
    double tol = 1e-12;          ///< relative residual stopping threshold
    long max_iterations = 1000000;
};

/// Riccati solve on raw matrices, for use on least-squares estimates whose
/// (A, B) pair carries no controllability guarantee. Throws
/// StabilizabilityError when the recursion diverges and ConvergenceError
/// when the iteration cap is reached.
struct GainSolution {
    Eigen::MatrixXd P;
    Eigen::MatrixXd K;
    double residual = 0.0;
    long iterations = 0;
};
GainSolution dare_gain(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                       const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                       const DareOptions& options = {});

/// Solves the DARE for the plant, returning (P, K, tr(W P)). The returned
/// solution satisfies the residual contract |dare(P) - P| <= 1e-9 (1 + |P|)
/// and the closed loop A + B K is stable.
RiccatiSolution dare_solve(const LinearPlant& plant, const LQWeights& weights,
                           const DareOptions& options = {});

/// Exact LQ cost of the linear feedback u = K x: tr(W P_K) with P_K the
/// adjoint Stein solution for (A + BK, Q + K'RK). Returns Cost::infinite()
/// when the closed loop is unstable; instability is a valid result here,
/// not an error.
Cost linear_feedback_cost(const LinearPlant& plant, const LQWeights& weights,
                          const Eigen::MatrixXd& K);

/// |Q|_P = |P^{-1/2} Q P^{-1/2}| for symmetric PSD Q and PD P (the largest
/// eigenvalue of the congruence-transformed matrix).
double weighted_matrix_norm(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& P);

/// Induced norm of A as an operator on the P-inner-product space,
/// |P^{1/2} A P^{-1/2}|, so that |A v|_P <= result * |v|_P for all v.
double weighted_operator_norm(const Eigen::MatrixXd& A, const Eigen::MatrixXd& P);

/// Lower-triangular L with L L^T = W for symmetric PD W.
Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& W);

namespace detail {

// Shared validation / PD-matrix helpers.
void require_square(const Eigen::MatrixXd& M, const char* name);
void require_finite(const Eigen::MatrixXd& M, const char* name);
void require_symmetric(const Eigen::MatrixXd& M, const char* name);
Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& M);

// Eigendecomposition-based functions of a symmetric PD matrix; throw
// DefinitenessError when the smallest eigenvalue is not strictly positive.
Eigen::MatrixXd sqrt_pd(const Eigen::MatrixXd& P, const char* name);
Eigen::MatrixXd inverse_sqrt_pd(const Eigen::MatrixXd& P, const char* name);
Eigen::MatrixXd inverse_pd(const Eigen::MatrixXd& P, const char* name);

// Extreme eigenvalues of a symmetric matrix.
double max_eigenvalue(const Eigen::MatrixXd& S);
double min_eigenvalue(const Eigen::MatrixXd& S);

// |P| * |P^{-1}| for symmetric PD P (two-norm condition number).
double pd_condition(const Eigen::MatrixXd& P, const char* name);

double operator_norm(const Eigen::MatrixXd& M);

}  // namespace detail

}  // namespace safelqr
