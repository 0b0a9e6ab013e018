#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "safelqr/rng.hpp"
#include "safelqr/switching.hpp"
#include "safelqr/types.hpp"

namespace safelqr {

/// A (possibly stateful) feedback law driven step by step. Simulation code
/// never shares one instance across trajectories; estimate_cost builds a
/// fresh controller per trajectory from a factory.
class Controller {
  public:
    virtual ~Controller() = default;
    virtual ControlDecision act(std::size_t step, const Eigen::VectorXd& x) = 0;
};

using ControllerFactory = std::function<std::unique_ptr<Controller>()>;

/// Stateless linear feedback u = K x; mode is always Primary.
ControllerFactory linear_policy(Eigen::MatrixXd K);

/// The switched law of SwitchConfig, with the dwell counter owned by the
/// controller instance.
ControllerFactory switched_policy(SwitchConfig config);

/// One process-noise draw w = L z with z standard normal at the given step
/// index. L is any square factor with L L' equal to the noise covariance
/// (cholesky_factor for PD W, the plant's PSD factor otherwise).
Eigen::VectorXd sample_noise(const Eigen::MatrixXd& factor, const RngStream& rng,
                             std::uint64_t step);

struct TrajectoryRecord {
    std::vector<Eigen::VectorXd> states;  ///< length horizon + 1 unless truncated
    std::vector<Eigen::VectorXd> inputs;
    std::vector<Mode> modes;
    std::vector<double> stage_costs;  ///< x'Qx + u'Ru per step
    int trigger_count = 0;
    double max_state_norm = 0.0;
    bool diverged = false;  ///< hit the overflow guard; record truncated
};

struct RolloutOptions {
    /// Test hook; trajectories start from the origin by default.
    std::optional<Eigen::VectorXd> initial_state;
    double divergence_guard = 1e300;
};

/// Simulates x' = Ax + Bu + w for `horizon` steps with w_k = L z_k drawn
/// from the stream at step index k.
TrajectoryRecord rollout(const LinearPlant& plant, const LQWeights& weights,
                         Controller& controller, std::size_t horizon,
                         const RngStream& rng, const RolloutOptions& options = {});

struct CostEstimate {
    Cost mean;                ///< infinite when any trajectory diverged
    double std_error = 0.0;   ///< stddev of per-trajectory averages / sqrt(n)
    std::size_t horizon = 0;
    std::size_t n_trajectories = 0;
    std::uint64_t seed = 0;
    double fallback_fraction = 0.0;  ///< fallback steps / total steps
    bool diverged = false;
    std::vector<double> per_trajectory;  ///< per-trajectory average costs
};

/// Monte Carlo estimate of the time-averaged LQ cost. Trajectory i draws
/// from stream (seed, i) and results reduce in index order, so the estimate
/// is bit-identical for any thread count. threads = 0 picks the hardware
/// default.
CostEstimate estimate_cost(const LinearPlant& plant, const LQWeights& weights,
                           const ControllerFactory& make_controller,
                           std::size_t horizon, std::size_t n_trajectories,
                           std::uint64_t seed, int threads = 0);

/// Two controllers fed identical noise realizations, with per-trajectory
/// cost differences for paired statistics.
struct PairedComparison {
    CostEstimate first;
    CostEstimate second;
    std::vector<double> differences;  ///< first minus second, per trajectory
    double mean_difference = 0.0;
    double stderr_difference = 0.0;
};
PairedComparison paired_compare(const LinearPlant& plant, const LQWeights& weights,
                                const ControllerFactory& make_first,
                                const ControllerFactory& make_second,
                                std::size_t horizon, std::size_t n_trajectories,
                                std::uint64_t seed, int threads = 0);

}  // namespace safelqr
