#pragma once

#include <Eigen/Dense>
#include <optional>

#include "safelqr/types.hpp"

namespace safelqr {

/// Quadratic stability certificate for the fallback loop A0 = A + B K0:
/// A0' P0 A0 < rho0 * P0 with an eigenvalue margin of at least 1e-8.
struct FallbackCertificate {
    Eigen::MatrixXd P0;
    double rho0 = 0.0;
};

/// Common quadratic certificate for the primary loop A1 = A + B K1 and the
/// dwell-length fallback power A0^t:
///   A1' P A1 < rho * P   and   (A0^t)' P A0^t < rho * P,
/// with `min_dwell` the smallest t for which the second inequality holds at
/// the 1e-8 margin.
struct CommonCertificate {
    Eigen::MatrixXd P;
    double rho = 0.0;
    int min_dwell = 0;
};

/// Builds (P0, rho0) for a stabilizing K0. With rho0 omitted, uses
/// rho0 = (1 + rho(A0)^2) / 2 and P0 solving the scaled Stein equation
/// (A0/sqrt(rho0))' P0 (A0/sqrt(rho0)) + I = P0, which yields a strict
/// inequality by construction.
FallbackCertificate build_fallback_certificate(const LinearPlant& plant,
                                               const Eigen::MatrixXd& K0,
                                               std::optional<double> rho0 = {});

/// Builds (P, rho) from the primary loop the same way and searches the
/// smallest dwell time satisfying the fallback-power inequality. Requires
/// both gains stabilizing.
CommonCertificate build_common_certificate(const LinearPlant& plant,
                                           const Eigen::MatrixXd& K0,
                                           const Eigen::MatrixXd& K1,
                                           std::optional<double> rho = {});

/// Independent checker: margin rho0 - lambda_max(P0^{-1/2} A0'P0 A0 P0^{-1/2}).
/// The certificate is valid iff the result is >= 1e-8.
double fallback_certificate_margin(const LinearPlant& plant,
                                   const Eigen::MatrixXd& K0,
                                   const FallbackCertificate& cert);

struct CommonCertificateMargins {
    double primary = 0.0;  ///< margin of the A1 inequality
    double dwell = 0.0;    ///< margin of the A0^t inequality
    bool pass(double tol = 1e-8) const { return primary >= tol && dwell >= tol; }
};

/// Independent checker for both inequalities; `dwell` overrides the
/// certificate's min_dwell (used to confirm minimality: the check must fail
/// one step below min_dwell). dwell = 0 means the identity power and always
/// fails.
CommonCertificateMargins common_certificate_margins(
    const LinearPlant& plant, const Eigen::MatrixXd& K0, const Eigen::MatrixXd& K1,
    const CommonCertificate& cert, std::optional<int> dwell = {});

/// Smallest t >= 1 with (A0^t)' P A0^t < rho * P at the 1e-8 margin, for a
/// caller-chosen (P, rho).
int find_min_dwell(const LinearPlant& plant, const Eigen::MatrixXd& K0,
                   const Eigen::MatrixXd& P, double rho);

/// Steady-state covariance of the fallback loop: the forward Stein solution
/// X = A0 X A0' + W.
Eigen::MatrixXd process_gramian(const LinearPlant& plant, const Eigen::MatrixXd& K0);

/// Smallest threshold the tail/gap analysis supports:
/// sqrt(3 |Wt| |P| |P^{-1}|) / (1 - rho^{1/4}).
double threshold_floor(const Eigen::MatrixXd& gramian, const Eigen::MatrixXd& P,
                       double rho);

/// Bound on the expected fallback Lyapunov energy E[x' P0 x] under switching:
/// (M^2 a^2 |P0| + tr(W P0)) / (1 - rho0), where a bounds the norm of both
/// closed-loop matrices.
double lyapunov_energy_bound(double threshold, double cl_norm_max,
                             const Eigen::MatrixXd& P0, double rho0,
                             const Eigen::MatrixXd& W);

/// Safety bound: the switched LQ cost is below
/// (M^2 a^2 |P0| + tr(W P0)) |Q01|_{P0} / (1 - rho0)
/// for ANY primary gain, stabilizing or not. Q01 = Q + K0'R K0 + K1'R K1,
/// a = max(|A + B K0|, |A + B K1|).
double switched_cost_bound(const LinearPlant& plant, const LQWeights& weights,
                           const Eigen::MatrixXd& K0, const Eigen::MatrixXd& K1,
                           double threshold, const FallbackCertificate& cert);

/// Fourth-moment bound under switching with a valid common certificate:
/// E |x|^4_{P0} <= 8 (Qm |P0|_P^2 + (n^2 + 2n) |P0|^2_{Wt^{-1}}), where
/// Qm = (6 rho tr(Wt P)^2 + (1-rho)(n^2+2n) |P|^2_{Wt^{-1}})
///      / ((1-rho)(1-rho^2)).
struct FourthMomentBound {
    double moment_const = 0.0;  ///< Qm above
    double bound = 0.0;
};
FourthMomentBound fourth_moment_bound(int n, const Eigen::MatrixXd& P, double rho,
                                      const Eigen::MatrixXd& P0,
                                      const Eigen::MatrixXd& gramian);

/// Bound t * tail(M) on the per-step probability of the fallback mode, with
/// tail(M) = 2^{n/2+1} / (rho^{-1/2} - 1)
///           * exp(-(1 - rho^{1/4})^2 M^2 / (4 |Wt| |P| |P^{-1}|)).
/// May exceed one; it is an upper bound, not a probability.
double fallback_probability_bound(double threshold, int dwell, int n,
                                  const Eigen::MatrixXd& P, double rho,
                                  const Eigen::MatrixXd& gramian);

/// Coefficient c of the asymptotic gap decay O(t^{1/4} exp(-c M^2)):
/// (1 - rho^{1/4})^2 / (16 |Wt| |P| |P^{-1}|). Equals a quarter of the
/// exponent coefficient in fallback_probability_bound.
double gap_decay_rate(double rho, const Eigen::MatrixXd& P,
                      const Eigen::MatrixXd& gramian);

/// Every system-dependent constant of the switching analysis, exposed so
/// tests and reports can inspect the bound assembly term by term. The gap
/// bound reads
///   gap <= 2 c1 c2 g + (c2^2 + c3) g^2,   g = c4 (t * tail(M))^{1/4},
/// with
///   c1 = sqrt(tr(W P) |Q1|_P / (1 - rho)),
///   c2 = |D1| |Q1|_{P0} sum_s |A1^s|_{Q1}   (operator norms w.r.t. Q1),
///   c3 = |D2| |P0^{-1}|,
///   c4 = (fourth-moment bound)^{1/4},
/// where Q1 = Q + K1'R K1, A1 = A + B K1, D1 = B (K0 - K1), and
/// D2 = K0'R K0 - K1'R K1.
struct SwitchAnalysis {
    Eigen::MatrixXd gramian;              ///< steady-state fallback covariance
    double threshold_floor = 0.0;         ///< smallest admissible M
    double cl_norm_max = 0.0;             ///< max(|A + B K0|, |A + B K1|)
    Eigen::MatrixXd stage_weight_both;    ///< Q + K0'R K0 + K1'R K1
    Eigen::MatrixXd stage_weight_primary; ///< Q + K1'R K1
    Eigen::MatrixXd primary_loop;         ///< A + B K1
    Eigen::MatrixXd loop_shift;           ///< B (K0 - K1)
    Eigen::MatrixXd stage_shift;          ///< K0'R K0 - K1'R K1
    double moment_const = 0.0;            ///< Qm of the fourth-moment bound
    double fourth_moment = 0.0;           ///< the fourth-moment bound itself
    double c1 = 0.0;
    double c2 = 0.0;
    double c3 = 0.0;
    double c4 = 0.0;
    double decay_rate = 0.0;
    double loop_shift_norm = 0.0;         ///< |D1|, used in c2
    double loop_shift_wnorm = 0.0;        ///< |D1|_{Q1}, reported alongside
    double power_series = 0.0;            ///< sum_s |A1^s|_{Q1}
};

/// Assembles all (M, t)-independent constants. Both certificates must be
/// valid for the given plant and gains, and the primary gain must be
/// stabilizing.
SwitchAnalysis analyze_switching(const LinearPlant& plant, const LQWeights& weights,
                                 const Eigen::MatrixXd& K0, const Eigen::MatrixXd& K1,
                                 const FallbackCertificate& cert0,
                                 const CommonCertificate& cert);

/// The switching performance-gap bound at a specific (threshold, dwell).
/// Refuses (PreconditionError) when threshold < threshold_floor or
/// dwell < cert.min_dwell: the analysis does not extrapolate outside its
/// own assumptions.
struct GapBound {
    double bound = 0.0;
    double perturbation_level = 0.0;  ///< g = c4 (t * tail)^{1/4}
    double tail = 0.0;                ///< t * tail(M)
    SwitchAnalysis analysis;
};
GapBound switching_gap_bound(const LinearPlant& plant, const LQWeights& weights,
                             const Eigen::MatrixXd& K0, const Eigen::MatrixXd& K1,
                             double threshold, int dwell,
                             const FallbackCertificate& cert0,
                             const CommonCertificate& cert);

}  // namespace safelqr
