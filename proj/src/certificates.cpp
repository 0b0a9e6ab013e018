#include "safelqr/certificates.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include "safelqr/control.hpp"
#include "safelqr/errors.hpp"

namespace safelqr {

namespace {

using detail::inverse_sqrt_pd;
using detail::max_eigenvalue;
using detail::operator_norm;
using detail::pd_condition;
using detail::symmetrize;

Eigen::MatrixXd closed_loop(const LinearPlant& plant, const Eigen::MatrixXd& K,
                            const char* name) {
    if (K.rows() != plant.input_dim() || K.cols() != plant.state_dim()) {
        throw DimensionError(std::string(name) + " must be m x n");
    }
    detail::require_finite(K, name);
    return plant.A() + plant.B() * K;
}

void require_rate(double rho, const char* name) {
    if (!(rho > 0.0) || !(rho < 1.0)) {
        std::ostringstream os;
        os << name << " must lie in (0, 1), got " << rho;
        throw DomainError(os.str());
    }
}

// lambda_max(P^{-1/2} T' P T P^{-1/2}): the contraction level of T in the
// P-metric. The certificate inequality T'PT < rho P holds with margin
// rho - level.
double contraction_level(const Eigen::MatrixXd& T, const Eigen::MatrixXd& P) {
    const Eigen::MatrixXd S = inverse_sqrt_pd(P, "P");
    return max_eigenvalue(S * T.transpose() * P * T * S);
}

constexpr double kMargin = 1e-8;

// Certificate construction shared by the fallback and common variants:
// rho defaults to the midpoint between rho(T)^2 and 1, and P solves the
// scaled Stein equation (T/sqrt(rho))' P (T/sqrt(rho)) + I = P, giving
// T'PT = rho (P - I) < rho P strictly.
std::pair<Eigen::MatrixXd, double> certificate_pair(const Eigen::MatrixXd& T,
                                                    std::optional<double> rho_opt,
                                                    const char* role) {
    const double radius = spectral_radius(T);
    if (radius >= 1.0) {
        std::ostringstream os;
        os << role << " gain is not stabilizing: closed-loop spectral radius "
           << radius;
        throw InstabilityError(os.str());
    }
    double rho = rho_opt.value_or((1.0 + radius * radius) / 2.0);
    require_rate(rho, "rho");
    if (rho <= radius * radius) {
        std::ostringstream os;
        os << "requested rate " << rho << " is infeasible: must exceed squared "
           << "spectral radius " << radius * radius;
        throw InfeasibleRateError(os.str());
    }
    const Eigen::Index n = T.rows();
    const Eigen::MatrixXd P = solve_stein(
        T / std::sqrt(rho), Eigen::MatrixXd::Identity(n, n), SteinForm::Adjoint);
    if (rho - contraction_level(T, P) < kMargin) {
        throw CertificateError(
            "constructed certificate misses the 1e-8 eigenvalue margin; the "
            "closed loop is too close to the stability boundary");
    }
    return {P, rho};
}

void require_valid_fallback(const LinearPlant& plant, const Eigen::MatrixXd& K0,
                            const FallbackCertificate& cert) {
    if (fallback_certificate_margin(plant, K0, cert) < kMargin) {
        throw CertificateError("fallback certificate fails its margin invariant");
    }
}

void require_valid_common(const LinearPlant& plant, const Eigen::MatrixXd& K0,
                          const Eigen::MatrixXd& K1, const CommonCertificate& cert) {
    if (!common_certificate_margins(plant, K0, K1, cert).pass(kMargin)) {
        throw CertificateError("common certificate fails its margin invariant");
    }
}

}  // namespace

FallbackCertificate build_fallback_certificate(const LinearPlant& plant,
                                               const Eigen::MatrixXd& K0,
                                               std::optional<double> rho0) {
    const Eigen::MatrixXd A0 = closed_loop(plant, K0, "K0");
    auto [P0, rho] = certificate_pair(A0, rho0, "fallback");
    return FallbackCertificate{std::move(P0), rho};
}

CommonCertificate build_common_certificate(const LinearPlant& plant,
                                           const Eigen::MatrixXd& K0,
                                           const Eigen::MatrixXd& K1,
                                           std::optional<double> rho) {
    const Eigen::MatrixXd A0 = closed_loop(plant, K0, "K0");
    if (spectral_radius(A0) >= 1.0) {
        throw InstabilityError("fallback gain is not stabilizing");
    }
    const Eigen::MatrixXd A1 = closed_loop(plant, K1, "K1");
    auto [P, rate] = certificate_pair(A1, rho, "primary");
    CommonCertificate cert{std::move(P), rate, 0};
    cert.min_dwell = find_min_dwell(plant, K0, cert.P, cert.rho);
    return cert;
}

double fallback_certificate_margin(const LinearPlant& plant,
                                   const Eigen::MatrixXd& K0,
                                   const FallbackCertificate& cert) {
    require_rate(cert.rho0, "rho0");
    const Eigen::MatrixXd A0 = closed_loop(plant, K0, "K0");
    return cert.rho0 - contraction_level(A0, cert.P0);
}

CommonCertificateMargins common_certificate_margins(
    const LinearPlant& plant, const Eigen::MatrixXd& K0, const Eigen::MatrixXd& K1,
    const CommonCertificate& cert, std::optional<int> dwell) {
    require_rate(cert.rho, "rho");
    const int t = dwell.value_or(cert.min_dwell);
    if (t < 0) throw DomainError("dwell time must be nonnegative");
    const Eigen::MatrixXd A0 = closed_loop(plant, K0, "K0");
    const Eigen::MatrixXd A1 = closed_loop(plant, K1, "K1");
    const Eigen::Index n = A0.rows();
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < t; ++i) power = A0 * power;
    CommonCertificateMargins out;
    out.primary = cert.rho - contraction_level(A1, cert.P);
    out.dwell = cert.rho - contraction_level(power, cert.P);
    return out;
}

int find_min_dwell(const LinearPlant& plant, const Eigen::MatrixXd& K0,
                   const Eigen::MatrixXd& P, double rho) {
    require_rate(rho, "rho");
    const Eigen::MatrixXd A0 = closed_loop(plant, K0, "K0");
    if (spectral_radius(A0) >= 1.0) {
        throw InstabilityError("fallback gain is not stabilizing");
    }
    const Eigen::MatrixXd S = inverse_sqrt_pd(P, "P");
    Eigen::MatrixXd power = A0;
    constexpr int kDwellCap = 1000000;
    for (int t = 1; t <= kDwellCap; ++t) {
        const double level = max_eigenvalue(S * power.transpose() * P * power * S);
        if (rho - level >= kMargin) return t;
        power = A0 * power;
    }
    throw ConvergenceError("no dwell time below the search cap satisfies the "
                           "fallback-power inequality",
                           0.0);
}

Eigen::MatrixXd process_gramian(const LinearPlant& plant, const Eigen::MatrixXd& K0) {
    const Eigen::MatrixXd A0 = closed_loop(plant, K0, "K0");
    return solve_stein(A0, plant.W(), SteinForm::Forward);
}

double threshold_floor(const Eigen::MatrixXd& gramian, const Eigen::MatrixXd& P,
                       double rho) {
    require_rate(rho, "rho");
    const double cond = pd_condition(P, "P");
    const double g = max_eigenvalue(gramian);
    return std::sqrt(3.0 * g * cond) / (1.0 - std::pow(rho, 0.25));
}

double lyapunov_energy_bound(double threshold, double cl_norm_max,
                             const Eigen::MatrixXd& P0, double rho0,
                             const Eigen::MatrixXd& W) {
    require_rate(rho0, "rho0");
    if (!(threshold > 0.0)) throw DomainError("threshold must be positive");
    const double p0_norm = max_eigenvalue(P0);
    const double noise_term = (W * P0).trace();
    return (threshold * threshold * cl_norm_max * cl_norm_max * p0_norm + noise_term) /
           (1.0 - rho0);
}

double switched_cost_bound(const LinearPlant& plant, const LQWeights& weights,
                           const Eigen::MatrixXd& K0, const Eigen::MatrixXd& K1,
                           double threshold, const FallbackCertificate& cert) {
    require_valid_fallback(plant, K0, cert);
    const Eigen::MatrixXd A0 = closed_loop(plant, K0, "K0");
    const Eigen::MatrixXd A1 = closed_loop(plant, K1, "K1");
    const double norm_max = std::max(operator_norm(A0), operator_norm(A1));
    const Eigen::MatrixXd Q01 =
        symmetrize(weights.Q() + K0.transpose() * weights.R() * K0 +
                   K1.transpose() * weights.R() * K1);
    return lyapunov_energy_bound(threshold, norm_max, cert.P0, cert.rho0, plant.W()) *
           weighted_matrix_norm(Q01, cert.P0);
}

namespace {

// |X|_{Wt^{-1}} = |Wt^{1/2} X Wt^{1/2}|, evaluated without forming the
// explicit inverse.
double inverse_weighted_norm(const Eigen::MatrixXd& X, const Eigen::MatrixXd& gramian) {
    const Eigen::MatrixXd S = detail::sqrt_pd(gramian, "gramian");
    return max_eigenvalue(S * X * S);
}

}  // namespace

FourthMomentBound fourth_moment_bound(int n, const Eigen::MatrixXd& P, double rho,
                                      const Eigen::MatrixXd& P0,
                                      const Eigen::MatrixXd& gramian) {
    require_rate(rho, "rho");
    if (n < 1) throw DomainError("state dimension must be positive");
    const double dim_term = static_cast<double>(n) * n + 2.0 * n;
    const double trace_wp = (gramian * P).trace();
    const double p_wnorm = inverse_weighted_norm(P, gramian);
    const double p0_wnorm = inverse_weighted_norm(P0, gramian);
    const double p0_pnorm = weighted_matrix_norm(P0, P);

    FourthMomentBound out;
    out.moment_const = (6.0 * rho * trace_wp * trace_wp +
                        (1.0 - rho) * dim_term * p_wnorm * p_wnorm) /
                       ((1.0 - rho) * (1.0 - rho * rho));
    out.bound = 8.0 * (out.moment_const * p0_pnorm * p0_pnorm +
                       dim_term * p0_wnorm * p0_wnorm);
    return out;
}

double fallback_probability_bound(double threshold, int dwell, int n,
                                  const Eigen::MatrixXd& P, double rho,
                                  const Eigen::MatrixXd& gramian) {
    require_rate(rho, "rho");
    if (dwell < 1) throw DomainError("dwell time must be at least 1");
    if (threshold < 0.0 || std::isnan(threshold)) {
        throw DomainError("threshold must be nonnegative");
    }
    const double cond = pd_condition(P, "P");
    const double g = max_eigenvalue(gramian);
    const double quarter_root = std::pow(rho, 0.25);
    const double exponent = -(1.0 - quarter_root) * (1.0 - quarter_root) * threshold *
                            threshold / (4.0 * g * cond);
    const double tail = std::pow(2.0, 0.5 * n + 1.0) /
                        (1.0 / std::sqrt(rho) - 1.0) * std::exp(exponent);
    return dwell * tail;
}

double gap_decay_rate(double rho, const Eigen::MatrixXd& P,
                      const Eigen::MatrixXd& gramian) {
    require_rate(rho, "rho");
    const double cond = pd_condition(P, "P");
    const double g = max_eigenvalue(gramian);
    const double quarter_root = std::pow(rho, 0.25);
    return (1.0 - quarter_root) * (1.0 - quarter_root) / (16.0 * g * cond);
}

namespace {

// sum_{s>=0} |A1^s|_{Q1} with operator norms in the Q1 metric. Terms are
// accumulated until they drop below 1e-12; the remainder is bounded by a
// geometric series anchored at the first power whose norm falls below one
// (submultiplicativity in a fixed metric makes that rigorous).
double weighted_power_series(const Eigen::MatrixXd& A1, const Eigen::MatrixXd& Q1) {
    const Eigen::MatrixXd S = detail::sqrt_pd(Q1, "Q1");
    const Eigen::MatrixXd Si = inverse_sqrt_pd(Q1, "Q1");
    const Eigen::Index n = A1.rows();
    constexpr double kTermTol = 1e-12;
    constexpr int kPowerCap = 200000;

    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
    double sum = 0.0;
    double contraction = -1.0;      // first norm below one
    double prefix_to_anchor = 0.0;  // sum of terms up to and incl. the anchor
    for (int s = 0; s < kPowerCap; ++s) {
        const double term = operator_norm(S * power * Si);
        if (term < kTermTol) {
            // tail <= term * (terms within one anchor block) / (1 - q); when
            // no earlier power contracted, this term itself anchors.
            const double q = contraction >= 0.0 ? contraction : term;
            const double block = contraction >= 0.0 ? prefix_to_anchor : sum;
            sum += term * block / (1.0 - q);
            return sum;
        }
        sum += term;
        if (contraction < 0.0) {
            prefix_to_anchor += term;
            // anchor on a clear contraction; the s = 0 term is the identity
            // norm, which round-off can land a hair below one, and a q that
            // close to one makes the geometric tail useless
            if (s >= 1 && term < 0.5) contraction = term;
        }
        power = A1 * power;
    }
    throw ConvergenceError("weighted power series did not decay below tolerance",
                           0.0);
}

}  // namespace

SwitchAnalysis analyze_switching(const LinearPlant& plant, const LQWeights& weights,
                                 const Eigen::MatrixXd& K0, const Eigen::MatrixXd& K1,
                                 const FallbackCertificate& cert0,
                                 const CommonCertificate& cert) {
    require_valid_fallback(plant, K0, cert0);
    require_valid_common(plant, K0, K1, cert);

    const Eigen::MatrixXd A0 = closed_loop(plant, K0, "K0");
    const Eigen::MatrixXd A1 = closed_loop(plant, K1, "K1");
    const int n = plant.state_dim();

    SwitchAnalysis out;
    out.gramian = process_gramian(plant, K0);
    out.threshold_floor = threshold_floor(out.gramian, cert.P, cert.rho);
    out.cl_norm_max = std::max(operator_norm(A0), operator_norm(A1));
    out.stage_weight_primary =
        symmetrize(weights.Q() + K1.transpose() * weights.R() * K1);
    out.stage_weight_both =
        symmetrize(out.stage_weight_primary + K0.transpose() * weights.R() * K0);
    out.primary_loop = A1;
    out.loop_shift = plant.B() * (K0 - K1);
    out.stage_shift = symmetrize(K0.transpose() * weights.R() * K0 -
                                 K1.transpose() * weights.R() * K1);

    const FourthMomentBound fm =
        fourth_moment_bound(n, cert.P, cert.rho, cert0.P0, out.gramian);
    out.moment_const = fm.moment_const;
    out.fourth_moment = fm.bound;
    out.c4 = std::pow(fm.bound, 0.25);

    out.c1 = std::sqrt((plant.W() * cert.P).trace() *
                       weighted_matrix_norm(out.stage_weight_primary, cert.P) /
                       (1.0 - cert.rho));
    out.loop_shift_norm = operator_norm(out.loop_shift);
    out.loop_shift_wnorm =
        weighted_operator_norm(out.loop_shift, out.stage_weight_primary);
    out.power_series = weighted_power_series(A1, out.stage_weight_primary);
    out.c2 = out.loop_shift_norm *
             weighted_matrix_norm(out.stage_weight_primary, cert0.P0) *
             out.power_series;
    out.c3 = operator_norm(out.stage_shift) / detail::min_eigenvalue(cert0.P0);
    out.decay_rate = gap_decay_rate(cert.rho, cert.P, out.gramian);
    return out;
}

GapBound switching_gap_bound(const LinearPlant& plant, const LQWeights& weights,
                             const Eigen::MatrixXd& K0, const Eigen::MatrixXd& K1,
                             double threshold, int dwell,
                             const FallbackCertificate& cert0,
                             const CommonCertificate& cert) {
    GapBound out;
    out.analysis = analyze_switching(plant, weights, K0, K1, cert0, cert);
    if (dwell < cert.min_dwell) {
        std::ostringstream os;
        os << "dwell time " << dwell << " is below the certified minimum "
           << cert.min_dwell;
        throw PreconditionError(os.str());
    }
    if (threshold < out.analysis.threshold_floor) {
        std::ostringstream os;
        os << "threshold " << threshold << " is below the analysis floor "
           << out.analysis.threshold_floor;
        throw PreconditionError(os.str());
    }
    out.tail = fallback_probability_bound(threshold, dwell, plant.state_dim(),
                                          cert.P, cert.rho, out.analysis.gramian);
    out.perturbation_level = out.analysis.c4 * std::pow(out.tail, 0.25);
    const double g = out.perturbation_level;
    out.bound = 2.0 * out.analysis.c1 * out.analysis.c2 * g +
                (out.analysis.c2 * out.analysis.c2 + out.analysis.c3) * g * g;
    return out;
}

}  // namespace safelqr
