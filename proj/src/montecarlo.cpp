#include "safelqr/montecarlo.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "safelqr/errors.hpp"

namespace safelqr {

namespace {

class LinearController final : public Controller {
  public:
    explicit LinearController(Eigen::MatrixXd K) : K_(std::move(K)) {}

    ControlDecision act(std::size_t, const Eigen::VectorXd& x) override {
        if (x.size() != K_.cols()) {
            throw DimensionError("state dimension does not match the gain");
        }
        ControlDecision out;
        out.u = K_ * x;
        out.mode = Mode::Primary;
        return out;
    }

  private:
    Eigen::MatrixXd K_;
};

class SwitchedController final : public Controller {
  public:
    explicit SwitchedController(SwitchConfig config) : config_(std::move(config)) {
        config_.validate();
    }

    ControlDecision act(std::size_t, const Eigen::VectorXd& x) override {
        ControlDecision out = switch_step(x, state_, config_);
        state_ = out.next;
        return out;
    }

  private:
    SwitchConfig config_;
    SwitchState state_;
};

}  // namespace

ControllerFactory linear_policy(Eigen::MatrixXd K) {
    return [K = std::move(K)] { return std::make_unique<LinearController>(K); };
}

ControllerFactory switched_policy(SwitchConfig config) {
    config.validate();
    return [config = std::move(config)] {
        return std::make_unique<SwitchedController>(config);
    };
}

Eigen::VectorXd sample_noise(const Eigen::MatrixXd& factor, const RngStream& rng,
                             std::uint64_t step) {
    if (factor.rows() != factor.cols() || factor.rows() == 0) {
        throw DimensionError("noise factor must be square");
    }
    return factor * rng.normal_vector(step, static_cast<int>(factor.cols()));
}

TrajectoryRecord rollout(const LinearPlant& plant, const LQWeights& weights,
                         Controller& controller, std::size_t horizon,
                         const RngStream& rng, const RolloutOptions& options) {
    if (horizon < 1) throw DomainError("horizon must be at least 1");
    const int n = plant.state_dim();
    if (weights.state_dim() != n || weights.input_dim() != plant.input_dim()) {
        throw DimensionError("weight dimensions do not match the plant");
    }

    TrajectoryRecord record;
    record.states.reserve(horizon + 1);
    record.inputs.reserve(horizon);
    record.modes.reserve(horizon);
    record.stage_costs.reserve(horizon);

    Eigen::VectorXd x = options.initial_state.value_or(Eigen::VectorXd::Zero(n));
    if (x.size() != n) throw DimensionError("initial state has wrong dimension");
    record.states.push_back(x);
    record.max_state_norm = x.norm();

    for (std::size_t k = 0; k < horizon; ++k) {
        if (!x.allFinite() || x.norm() > options.divergence_guard) {
            record.diverged = true;
            break;
        }
        ControlDecision decision = controller.act(k, x);
        const double cost = x.dot(weights.Q() * x) + decision.u.dot(weights.R() * decision.u);
        if (!std::isfinite(cost)) {
            record.diverged = true;
            break;
        }
        record.inputs.push_back(decision.u);
        record.modes.push_back(decision.mode);
        record.stage_costs.push_back(cost);
        if (decision.triggered) ++record.trigger_count;

        x = plant.A() * x + plant.B() * decision.u +
            sample_noise(plant.noise_factor(), rng, k);
        record.states.push_back(x);
        record.max_state_norm = std::max(record.max_state_norm, x.norm());
    }
    if (!record.diverged && (!x.allFinite() || x.norm() > options.divergence_guard)) {
        record.diverged = true;
    }
    return record;
}

namespace {

struct TrajectorySummary {
    double average_cost = 0.0;
    bool diverged = false;
    std::size_t fallback_steps = 0;
    std::size_t total_steps = 0;
};

TrajectorySummary summarize(const TrajectoryRecord& record, std::size_t horizon) {
    TrajectorySummary s;
    s.diverged = record.diverged;
    double total = 0.0;
    for (double c : record.stage_costs) total += c;
    s.average_cost = total / static_cast<double>(horizon);
    for (Mode m : record.modes) {
        if (m == Mode::Fallback) ++s.fallback_steps;
    }
    s.total_steps = record.modes.size();
    return s;
}

int resolve_threads(int threads, std::size_t jobs) {
    if (threads <= 0) {
        threads = static_cast<int>(std::thread::hardware_concurrency());
        if (threads <= 0) threads = 1;
    }
    return static_cast<int>(std::min<std::size_t>(threads, jobs));
}

// Runs one summary per trajectory index; the work partition never affects
// the stored results, so reductions below are thread-count invariant. The
// first exception a worker raises is rethrown on the calling thread.
template <typename PerTrajectory>
void run_indexed(std::size_t n_jobs, int threads, PerTrajectory&& body) {
    const int n_threads = resolve_threads(threads, n_jobs);
    if (n_threads <= 1) {
        for (std::size_t i = 0; i < n_jobs; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) {
        pool.emplace_back([&] {
            try {
                for (std::size_t i = next.fetch_add(1); i < n_jobs;
                     i = next.fetch_add(1)) {
                    body(i);
                }
            } catch (...) {
                const std::scoped_lock lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(n_jobs);  // stop handing out work
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

CostEstimate reduce(const std::vector<TrajectorySummary>& all, std::size_t horizon,
                    std::uint64_t seed) {
    CostEstimate est;
    est.horizon = horizon;
    est.n_trajectories = all.size();
    est.seed = seed;
    est.per_trajectory.reserve(all.size());

    std::size_t fallback = 0;
    std::size_t total = 0;
    double sum = 0.0;
    for (const auto& s : all) {
        est.per_trajectory.push_back(s.average_cost);
        est.diverged = est.diverged || s.diverged;
        fallback += s.fallback_steps;
        total += s.total_steps;
        sum += s.average_cost;
    }
    est.fallback_fraction =
        total == 0 ? 0.0 : static_cast<double>(fallback) / static_cast<double>(total);
    if (est.diverged) {
        est.mean = Cost::infinite();
        est.std_error = 0.0;
        return est;
    }
    const double n = static_cast<double>(all.size());
    const double mean = sum / n;
    est.mean = Cost::finite(mean);
    double ss = 0.0;
    for (const auto& s : all) {
        const double d = s.average_cost - mean;
        ss += d * d;
    }
    est.std_error = all.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
    return est;
}

}  // namespace

CostEstimate estimate_cost(const LinearPlant& plant, const LQWeights& weights,
                           const ControllerFactory& make_controller,
                           std::size_t horizon, std::size_t n_trajectories,
                           std::uint64_t seed, int threads) {
    if (horizon < 1) throw DomainError("horizon must be at least 1");
    if (n_trajectories < 2) throw DomainError("need at least 2 trajectories");
    std::vector<TrajectorySummary> all(n_trajectories);
    run_indexed(n_trajectories, threads, [&](std::size_t i) {
        auto controller = make_controller();
        const RngStream stream(seed, i);
        all[i] = summarize(rollout(plant, weights, *controller, horizon, stream),
                           horizon);
    });
    return reduce(all, horizon, seed);
}

PairedComparison paired_compare(const LinearPlant& plant, const LQWeights& weights,
                                const ControllerFactory& make_first,
                                const ControllerFactory& make_second,
                                std::size_t horizon, std::size_t n_trajectories,
                                std::uint64_t seed, int threads) {
    if (horizon < 1) throw DomainError("horizon must be at least 1");
    if (n_trajectories < 2) throw DomainError("need at least 2 trajectories");
    std::vector<TrajectorySummary> first(n_trajectories);
    std::vector<TrajectorySummary> second(n_trajectories);
    run_indexed(n_trajectories, threads, [&](std::size_t i) {
        const RngStream stream(seed, i);
        auto a = make_first();
        first[i] = summarize(rollout(plant, weights, *a, horizon, stream), horizon);
        auto b = make_second();
        second[i] = summarize(rollout(plant, weights, *b, horizon, stream), horizon);
    });

    PairedComparison out;
    out.first = reduce(first, horizon, seed);
    out.second = reduce(second, horizon, seed);
    out.differences.reserve(n_trajectories);
    double sum = 0.0;
    for (std::size_t i = 0; i < n_trajectories; ++i) {
        const double d = first[i].average_cost - second[i].average_cost;
        out.differences.push_back(d);
        sum += d;
    }
    const double n = static_cast<double>(n_trajectories);
    out.mean_difference = sum / n;
    double ss = 0.0;
    for (double d : out.differences) {
        const double e = d - out.mean_difference;
        ss += e * e;
    }
    out.stderr_difference = std::sqrt(ss / (n - 1.0) / n);
    return out;
}

}  // namespace safelqr
