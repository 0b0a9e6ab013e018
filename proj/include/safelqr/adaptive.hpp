#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "safelqr/montecarlo.hpp"
#include "safelqr/types.hpp"

namespace safelqr {

/// Default hyper-parameter schedules: threshold M_k = max(ln(k+1), floor)
/// and dwell t_k = max(floor(ln(k+1)), 1). Both are nondecreasing; the
/// floors cover small k where the logarithm is below one.
double log_threshold_schedule(std::uint64_t k, double floor = 1.0);
int log_dwell_schedule(std::uint64_t k);

/// (M_k, t_k) under the default schedules.
std::pair<double, int> schedule(std::uint64_t k, double threshold_floor = 1.0);

/// One observed plant transition.
struct Transition {
    Eigen::VectorXd x;
    Eigen::VectorXd u;
    Eigen::VectorXd x_next;
};

/// Ridge-regularized least squares for [A B]: minimizes
/// sum |x_next - A x - B u|^2 + ridge |[A B]|_F^2. With ridge = 0 a singular
/// regressor Gram matrix raises RankError.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> least_squares_fit(
    std::span<const Transition> history, double ridge);

/// Riccati gain treating the estimates as the truth. Returns nullopt when
/// the solve fails (unstabilizable or non-convergent estimates); callers
/// keep their previous gain.
std::optional<Eigen::MatrixXd> certainty_equivalent_gain(
    const Eigen::MatrixXd& A_hat, const Eigen::MatrixXd& B_hat,
    const LQWeights& weights);

struct AdaptiveConfig {
    Eigen::MatrixXd fallback_gain;  ///< K0, also the primary gain before the first update
    double exploration_exponent = -0.25;
    double ridge = 1e-6;
    bool switching_enabled = true;
    /// Per-step hyper-parameters; defaults are the logarithmic schedules.
    /// Constant lambdas give the fixed-(M, t) variant.
    std::function<double(std::uint64_t)> threshold_schedule =
        [](std::uint64_t k) { return log_threshold_schedule(k); };
    std::function<int(std::uint64_t)> dwell_schedule =
        [](std::uint64_t k) { return log_dwell_schedule(k); };
    double divergence_guard = 1e300;
};

/// Log entry for one certainty-equivalence gain refresh.
struct GainUpdate {
    std::uint64_t step = 0;
    Eigen::MatrixXd A_hat;
    Eigen::MatrixXd B_hat;
    Eigen::MatrixXd gain;     ///< gain in force from this step on
    bool solver_ok = false;   ///< false: Riccati failed, previous gain kept
    bool stabilizing = false; ///< whether `gain` stabilizes the true plant
    double threshold = 0.0;   ///< M_k at the update step
    int dwell = 1;            ///< t_k at the update step
};

struct AdaptiveStep {
    std::uint64_t step = 0;
    Eigen::VectorXd state;
    Eigen::VectorXd input;              ///< applied input incl. exploration
    Eigen::VectorXd noise;              ///< w_k
    Eigen::VectorXd exploration_noise;  ///< raw zeta_k
    double exploration_scale = 0.0;     ///< max(k,1)^exponent
    Mode mode = Mode::Primary;
    bool triggered = false;
    double threshold = 0.0;
    int dwell = 1;
    double stage_cost = 0.0;
};

struct AdaptiveRecord {
    std::vector<AdaptiveStep> steps;
    std::vector<GainUpdate> updates;
    Eigen::MatrixXd fallback_gain;
    std::uint64_t seed = 0;
    bool diverged = false;
    double max_state_norm = 0.0;
    int trigger_count = 0;
};

/// Runs the learning loop: least-squares estimates from all past data,
/// certainty-equivalent gain refreshed at steps k = 1, 2, 4, 8, ...,
/// switching per the scheduled (M_k, t_k) (or plain linear feedback when
/// switching is disabled), and exploration input max(k,1)^a * zeta_k added
/// after the switching decision. Process noise and exploration draw from
/// streams (seed, 0) and (seed, 1) indexed by step, so runs with equal
/// seeds see identical realizations regardless of controller behavior.
AdaptiveRecord adaptive_run(const LinearPlant& plant, const LQWeights& weights,
                            const AdaptiveConfig& config, std::uint64_t horizon,
                            std::uint64_t seed);

/// One gap-curve row: the frozen switched controller (gain, M_k, t_k)
/// evaluated by Monte Carlo against the exact linear-feedback cost of the
/// same gain. The gap is the mean of paired per-trajectory differences
/// (switched minus linear, equal noise), and is reported as infinite when
/// the linear cost is infinite (destabilizing gain).
struct GapCurvePoint {
    std::uint64_t step = 0;
    Cost switched_cost;
    double switched_stderr = 0.0;
    Cost linear_cost;
    Cost gap;
    double gap_stderr = 0.0;
    double threshold = 0.0;
    int dwell = 1;
};

std::vector<GapCurvePoint> gap_curve(const LinearPlant& plant,
                                     const LQWeights& weights,
                                     const AdaptiveRecord& record,
                                     std::size_t eval_horizon,
                                     std::size_t eval_trajectories,
                                     std::uint64_t seed, int threads = 0);

}  // namespace safelqr
