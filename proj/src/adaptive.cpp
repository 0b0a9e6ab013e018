#include "safelqr/adaptive.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "safelqr/control.hpp"
#include "safelqr/errors.hpp"

namespace safelqr {

double log_threshold_schedule(std::uint64_t k, double floor) {
    return std::max(std::log(static_cast<double>(k) + 1.0), floor);
}

int log_dwell_schedule(std::uint64_t k) {
    const double value = std::floor(std::log(static_cast<double>(k) + 1.0));
    return std::max(static_cast<int>(value), 1);
}

std::pair<double, int> schedule(std::uint64_t k, double threshold_floor) {
    return {log_threshold_schedule(k, threshold_floor), log_dwell_schedule(k)};
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> least_squares_fit(
    std::span<const Transition> history, double ridge) {
    if (history.empty()) throw DomainError("least squares needs at least one sample");
    if (ridge < 0.0) throw DomainError("ridge must be nonnegative");
    const int n = static_cast<int>(history[0].x.size());
    const int m = static_cast<int>(history[0].u.size());
    const int d = n + m;

    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d, d);
    Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(d, n);
    Eigen::VectorXd z(d);
    for (const Transition& tr : history) {
        if (tr.x.size() != n || tr.u.size() != m || tr.x_next.size() != n) {
            throw DimensionError("inconsistent transition dimensions");
        }
        z.head(n) = tr.x;
        z.tail(m) = tr.u;
        gram.noalias() += z * z.transpose();
        cross.noalias() += z * tr.x_next.transpose();
    }
    if (ridge == 0.0) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
        if (es.eigenvalues().minCoeff() <= 1e-12 * std::max(1.0, es.eigenvalues().maxCoeff())) {
            throw RankError("regressor Gram matrix is singular; pass a positive ridge");
        }
    }
    gram.diagonal().array() += ridge;
    const Eigen::MatrixXd theta_t = gram.ldlt().solve(cross);  // (n+m) x n
    Eigen::MatrixXd theta = theta_t.transpose();               // n x (n+m)
    return {theta.leftCols(n), theta.rightCols(m)};
}

std::optional<Eigen::MatrixXd> certainty_equivalent_gain(
    const Eigen::MatrixXd& A_hat, const Eigen::MatrixXd& B_hat,
    const LQWeights& weights) {
    try {
        return dare_gain(A_hat, B_hat, weights.Q(), weights.R()).K;
    } catch (const StabilizabilityError&) {
        return std::nullopt;
    } catch (const ConvergenceError&) {
        return std::nullopt;
    }
}

AdaptiveRecord adaptive_run(const LinearPlant& plant, const LQWeights& weights,
                            const AdaptiveConfig& config, std::uint64_t horizon,
                            std::uint64_t seed) {
    if (horizon < 1) throw DomainError("horizon must be at least 1");
    const int n = plant.state_dim();
    const int m = plant.input_dim();
    if (config.fallback_gain.rows() != m || config.fallback_gain.cols() != n) {
        throw DimensionError("fallback gain must be m x n");
    }

    const RngStream process_noise(seed, 0);
    const RngStream exploration(seed, 1);

    AdaptiveRecord record;
    record.fallback_gain = config.fallback_gain;
    record.seed = seed;
    record.steps.reserve(horizon);

    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd gain = config.fallback_gain;  // primary gain before the first update
    SwitchState switch_state;
    std::vector<Transition> history;
    history.reserve(horizon);

    for (std::uint64_t k = 0; k < horizon; ++k) {
        if (!x.allFinite() || x.norm() > config.divergence_guard) {
            record.diverged = true;
            break;
        }
        const double threshold = config.threshold_schedule(k);
        const int dwell = config.dwell_schedule(k);

        // Gain refresh at powers of two, fitted on all data so far.
        if (k >= 1 && (k & (k - 1)) == 0) {
            auto [A_hat, B_hat] = least_squares_fit(history, config.ridge);
            std::optional<Eigen::MatrixXd> next =
                certainty_equivalent_gain(A_hat, B_hat, weights);
            if (next.has_value()) gain = *next;
            GainUpdate update;
            update.step = k;
            update.A_hat = std::move(A_hat);
            update.B_hat = std::move(B_hat);
            update.gain = gain;
            update.solver_ok = next.has_value();
            update.stabilizing =
                spectral_radius(plant.A() + plant.B() * gain) < 1.0;
            update.threshold = threshold;
            update.dwell = dwell;
            record.updates.push_back(std::move(update));
        }

        AdaptiveStep step;
        step.step = k;
        step.state = x;
        step.threshold = threshold;
        step.dwell = dwell;

        Eigen::VectorXd u_feedback;
        if (config.switching_enabled) {
            SwitchConfig sc{config.fallback_gain, gain, threshold, dwell};
            ControlDecision decision = switch_step(x, switch_state, sc);
            switch_state = decision.next;
            u_feedback = std::move(decision.u);
            step.mode = decision.mode;
            step.triggered = decision.triggered;
            if (decision.triggered) ++record.trigger_count;
        } else {
            u_feedback = gain * x;
            step.mode = Mode::Primary;
        }

        // Exploration enters after the switching decision; the k = 0 scale
        // takes the k = 1 value since the power law is undefined at zero.
        step.exploration_scale =
            std::pow(static_cast<double>(std::max<std::uint64_t>(k, 1)),
                     config.exploration_exponent);
        step.exploration_noise = exploration.normal_vector(k, m);
        step.input = u_feedback + step.exploration_scale * step.exploration_noise;

        step.stage_cost = x.dot(weights.Q() * x) +
                          step.input.dot(weights.R() * step.input);
        if (!std::isfinite(step.stage_cost)) {
            record.diverged = true;
            break;
        }

        step.noise = sample_noise(plant.noise_factor(), process_noise, k);
        Eigen::VectorXd x_next =
            plant.A() * x + plant.B() * step.input + step.noise;
        history.push_back(Transition{x, step.input, x_next});
        record.steps.push_back(std::move(step));

        x = std::move(x_next);
        record.max_state_norm = std::max(record.max_state_norm, x.norm());
    }
    return record;
}

std::vector<GapCurvePoint> gap_curve(const LinearPlant& plant,
                                     const LQWeights& weights,
                                     const AdaptiveRecord& record,
                                     std::size_t eval_horizon,
                                     std::size_t eval_trajectories,
                                     std::uint64_t seed, int threads) {
    std::vector<GapCurvePoint> curve;
    curve.reserve(record.updates.size());
    std::uint64_t point_index = 0;
    for (const GainUpdate& update : record.updates) {
        GapCurvePoint point;
        point.step = update.step;
        point.threshold = update.threshold;
        point.dwell = update.dwell;
        point.linear_cost = linear_feedback_cost(plant, weights, update.gain);

        SwitchConfig sc{record.fallback_gain, update.gain, update.threshold,
                        update.dwell};
        const std::uint64_t point_seed = seed + point_index++;
        if (point.linear_cost.is_finite()) {
            PairedComparison cmp = paired_compare(
                plant, weights, switched_policy(sc), linear_policy(update.gain),
                eval_horizon, eval_trajectories, point_seed, threads);
            point.switched_cost = cmp.first.mean;
            point.switched_stderr = cmp.first.std_error;
            point.gap = Cost::finite(cmp.mean_difference);
            point.gap_stderr = cmp.stderr_difference;
        } else {
            CostEstimate est =
                estimate_cost(plant, weights, switched_policy(sc), eval_horizon,
                              eval_trajectories, point_seed, threads);
            point.switched_cost = est.mean;
            point.switched_stderr = est.std_error;
            point.gap = Cost::infinite();
        }
        curve.push_back(std::move(point));
    }
    return curve;
}

}  // namespace safelqr
