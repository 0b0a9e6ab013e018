// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Each criterion is self-contained and prints the numbers
// it was judged on.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <vector>

#include "safelqr/adaptive.hpp"
#include "safelqr/certificates.hpp"
#include "safelqr/control.hpp"
#include "safelqr/errors.hpp"
#include "safelqr/montecarlo.hpp"
#include "safelqr/systems.hpp"

using namespace safelqr;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct CheckFailure {
    std::string message;
};

void require(bool condition, const std::string& message) {
    if (!condition) throw CheckFailure{message};
}

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

Eigen::MatrixXd random_gaussian(std::mt19937_64& gen, int rows, int cols) {
    std::normal_distribution<double> normal;
    Eigen::MatrixXd M(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) M(r, c) = normal(gen);
    }
    return M;
}

struct RandomSystem {
    LinearPlant plant;
    LQWeights weights;
};

RandomSystem random_system(std::mt19937_64& gen, int max_state_dim = 6) {
    std::uniform_int_distribution<int> state_dist(1, max_state_dim);
    std::uniform_int_distribution<int> input_dist(1, 3);
    std::uniform_real_distribution<double> radius_dist(0.2, 0.95);
    for (;;) {
        const int n = state_dist(gen);
        const int m = input_dist(gen);
        Eigen::MatrixXd A = random_gaussian(gen, n, n);
        const double radius = spectral_radius(A);
        if (radius > 1e-9) A *= radius_dist(gen) / radius;
        const Eigen::MatrixXd B = random_gaussian(gen, n, m);
        try {
            return RandomSystem{LinearPlant(A, B, Eigen::MatrixXd::Identity(n, n)),
                                LQWeights(Eigen::MatrixXd::Identity(n, n),
                                          Eigen::MatrixXd::Identity(m, m))};
        } catch (const Error&) {
        }
    }
}

double theil_sen_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    std::vector<double> slopes;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        for (std::size_t j = i + 1; j < xs.size(); ++j) {
            slopes.push_back((ys[j] - ys[i]) / (xs[j] - xs[i]));
        }
    }
    std::sort(slopes.begin(), slopes.end());
    return slopes[slopes.size() / 2];
}

const Eigen::MatrixXd kZeroGain = Eigen::MatrixXd::Zero(1, 2);

Eigen::MatrixXd demo_destabilizing_gain() {
    Eigen::MatrixXd K(1, 2);
    K << 0.0, 0.7;  // triangular closed loop, eigenvalue 1.5
    return K;
}

// --------------------------------------------------------------------------

std::string criterion_dare() {
    const auto start = Clock::now();
    const auto sol = dare_solve(
        LinearPlant(Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(1, 1),
                    Eigen::MatrixXd::Ones(1, 1)),
        LQWeights(Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(1, 1)));
    const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
    require(std::abs(sol.P(0, 0) - golden) <= 1e-12,
            "scalar golden case off by " + fmt(sol.P(0, 0) - golden));

    std::mt19937_64 gen(1);
    double worst_residual = 0.0;
    for (int i = 0; i < 100; ++i) {
        const auto sys = random_system(gen);
        const auto s = dare_solve(sys.plant, sys.weights);
        worst_residual = std::max(worst_residual, s.residual);
        require(s.residual <= 1e-9, "residual " + fmt(s.residual));
        require(spectral_radius(sys.plant.A() + sys.plant.B() * s.K) < 1.0,
                "closed loop unstable");
    }
    const double elapsed = seconds_since(start);
    require(elapsed < 5.0, "runtime " + fmt(elapsed) + "s exceeds 5s");
    return "golden |dP|<=1e-12, 100 random plants worst residual " +
           fmt(worst_residual) + ", " + fmt(elapsed) + "s";
}

std::string criterion_safety() {
    const auto start = Clock::now();
    const auto plant = demo_plant();
    const auto weights = demo_weights();
    const Eigen::MatrixXd K1 = demo_destabilizing_gain();
    const double M = 10.0;
    const int dwell = 30;

    const auto cert = build_fallback_certificate(plant, kZeroGain);
    const double bound = switched_cost_bound(plant, weights, kZeroGain, K1, M, cert);

    SwitchConfig config{kZeroGain, K1, M, dwell};
    const auto est = estimate_cost(plant, weights, switched_policy(config), 10000,
                                   200, 42);
    require(est.mean.is_finite(), "switched cost estimate diverged");
    require(est.mean.value() <= bound,
            "mean " + fmt(est.mean.value()) + " above bound " + fmt(bound));

    const auto unswitched =
        estimate_cost(plant, weights, linear_policy(K1), 10000, 4, 42);
    require(unswitched.diverged, "unswitched destabilizing run did not diverge");

    const double elapsed = seconds_since(start);
    require(elapsed < 60.0, "runtime " + fmt(elapsed) + "s exceeds 60s");
    return "switched mean " + fmt(est.mean.value()) + " <= bound " + fmt(bound) +
           ", unswitched diverged, " + fmt(elapsed) + "s";
}

std::string criterion_dwell_effect() {
    const auto plant = demo_plant();
    const auto weights = demo_weights();
    const int seeds = 100;
    std::vector<double> diffs;
    for (int s = 0; s < seeds; ++s) {
        AdaptiveConfig config;
        config.fallback_gain = kZeroGain;
        config.threshold_schedule = [](std::uint64_t) { return 10.0; };
        config.dwell_schedule = [](std::uint64_t) { return 1; };
        const auto fast = adaptive_run(plant, weights, config, 800, s);
        config.dwell_schedule = [](std::uint64_t) { return 30; };
        const auto slow = adaptive_run(plant, weights, config, 800, s);
        diffs.push_back(static_cast<double>(fast.trigger_count) -
                        static_cast<double>(slow.trigger_count));
    }
    double mean = 0.0;
    for (double d : diffs) mean += d;
    mean /= seeds;
    double ss = 0.0;
    for (double d : diffs) ss += (d - mean) * (d - mean);
    const double se = std::sqrt(ss / (seeds - 1.0) / seeds);
    const double t_stat = mean / se;
    // one-sided 95% quantile of t(99)
    require(t_stat > 1.6604, "paired t statistic " + fmt(t_stat) + " below 1.66");
    return "mean trigger difference " + fmt(mean) + " (t = " + fmt(t_stat) + ")";
}

struct CertifiedDemo {
    LinearPlant plant = demo_plant();
    LQWeights weights = demo_weights();
    Eigen::MatrixXd K1;
    FallbackCertificate cert0;
    CommonCertificate cert;
    Eigen::MatrixXd gramian;
    double floor = 0.0;

    CertifiedDemo() {
        K1 = dare_solve(plant, weights).K;
        cert0 = build_fallback_certificate(plant, kZeroGain);
        cert = build_common_certificate(plant, kZeroGain, K1);
        gramian = process_gramian(plant, kZeroGain);
        floor = threshold_floor(gramian, cert.P, cert.rho);
    }
};

std::string criterion_tail_bound() {
    CertifiedDemo d;
    std::ostringstream detail;
    detail << "M0 = " << d.floor;
    for (double offset : {0.0, 1.0, 2.0}) {
        const double M = d.floor + offset;
        const double bound = fallback_probability_bound(
            M, d.cert.min_dwell, d.plant.state_dim(), d.cert.P, d.cert.rho,
            d.gramian);
        SwitchConfig config{kZeroGain, d.K1, M, d.cert.min_dwell};
        const auto est = estimate_cost(d.plant, d.weights, switched_policy(config),
                                       2000, 200, 7);
        const double steps = 2000.0 * 200.0;
        const double p = est.fallback_fraction;
        const double se = std::sqrt(std::max(p * (1.0 - p), 0.0) / steps);
        require(p <= bound + 3.0 * se,
                "fallback fraction " + fmt(p) + " above bound " + fmt(bound));
        detail << ", p(" << M << ") = " << p << " <= " << bound;
    }
    return detail.str();
}

std::string criterion_fourth_moment() {
    CertifiedDemo d;
    const double M = d.floor;
    SwitchConfig config{kZeroGain, d.K1, M, d.cert.min_dwell};
    const auto fm = fourth_moment_bound(d.plant.state_dim(), d.cert.P, d.cert.rho,
                                        d.cert0.P0, d.gramian);
    std::ostringstream detail;
    detail << "bound " << fm.bound;
    const std::size_t n_traj = 1000;
    for (std::size_t k : {10u, 100u, 1000u}) {
        double sum = 0.0, sum_sq = 0.0;
        for (std::size_t i = 0; i < n_traj; ++i) {
            auto controller = switched_policy(config)();
            const auto record = rollout(d.plant, d.weights, *controller, k + 1,
                                        RngStream(13, i));
            const double energy = record.states[k].dot(d.cert0.P0 * record.states[k]);
            const double fourth = energy * energy;
            sum += fourth;
            sum_sq += fourth * fourth;
        }
        const double mean = sum / n_traj;
        const double se = std::sqrt(
            std::max(sum_sq / n_traj - mean * mean, 0.0) / (n_traj - 1.0));
        require(mean <= fm.bound + 3.0 * se,
                "fourth moment " + fmt(mean) + " at k=" + fmt(k) + " above bound");
        detail << ", E|x|^4(k=" << k << ") = " << mean;
    }
    return detail.str();
}

std::string criterion_gap_bound() {
    CertifiedDemo d;
    std::ostringstream detail;

    // (a) measured paired gap below the bound across the (M, t) sweep
    for (int dwell : {d.cert.min_dwell, d.cert.min_dwell + 5}) {
        for (double offset : {0.0, 1.0, 2.0}) {
            const double M = d.floor + offset;
            const auto gap = switching_gap_bound(d.plant, d.weights, kZeroGain,
                                                 d.K1, M, dwell, d.cert0, d.cert);
            SwitchConfig config{kZeroGain, d.K1, M, dwell};
            const auto cmp =
                paired_compare(d.plant, d.weights, switched_policy(config),
                               linear_policy(d.K1), 5000, 200, 11);
            require(cmp.mean_difference <= gap.bound + 3.0 * cmp.stderr_difference,
                    "measured gap " + fmt(cmp.mean_difference) + " above bound " +
                        fmt(gap.bound) + " at M=" + fmt(M) +
                        " t=" + fmt(dwell));
        }
    }
    detail << "paired gaps below bounds over {t_min, t_min+5} x {M0..M0+2}";

    // (b) the exact formula: log(bound) affine in M^2 with slope -decay_rate
    const auto analysis =
        analyze_switching(d.plant, d.weights, kZeroGain, d.K1, d.cert0, d.cert);
    double M = d.floor;
    const double g_cap = 1e-10 * 2.0 * analysis.c1 * analysis.c2 /
                         (analysis.c2 * analysis.c2 + analysis.c3);
    for (; M < d.floor + 1e5; M += 1.0) {
        const auto gb = switching_gap_bound(d.plant, d.weights, kZeroGain, d.K1, M,
                                            d.cert.min_dwell, d.cert0, d.cert);
        if (gb.perturbation_level <= g_cap) break;
    }
    std::vector<double> xs, ys;
    for (int i = 0; i < 5; ++i) {
        const double Mi = M + 0.5 * i;
        const auto gb = switching_gap_bound(d.plant, d.weights, kZeroGain, d.K1, Mi,
                                            d.cert.min_dwell, d.cert0, d.cert);
        xs.push_back(Mi * Mi);
        ys.push_back(std::log(gb.bound));
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= xs.size();
    my /= ys.size();
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    const double slope = sxy / sxx;
    const double r2 = (sxy * sxy) / (sxx * syy);
    require(std::abs(slope + analysis.decay_rate) <= 1e-6 * analysis.decay_rate,
            "slope " + fmt(slope) + " vs -decay_rate " + fmt(-analysis.decay_rate));
    require(r2 >= 0.99, "R^2 " + fmt(r2));
    detail << "; log-bound slope " << slope << " = -decay_rate, R^2 = " << r2;
    return detail.str();
}

std::string criterion_certificates() {
    std::mt19937_64 gen(17);
    for (int i = 0; i < 50; ++i) {
        const auto sys = random_system(gen, 5);
        const auto sol = dare_solve(sys.plant, sys.weights);
        const LQWeights conservative(
            sys.weights.Q(),
            10.0 * Eigen::MatrixXd::Identity(sys.plant.input_dim(),
                                             sys.plant.input_dim()));
        const auto fallback = dare_solve(sys.plant, conservative);

        const auto cert0 = build_fallback_certificate(sys.plant, fallback.K);
        require(fallback_certificate_margin(sys.plant, fallback.K, cert0) >= 1e-8,
                "fallback margin below 1e-8");
        const auto cert = build_common_certificate(sys.plant, fallback.K, sol.K);
        require(common_certificate_margins(sys.plant, fallback.K, sol.K, cert)
                    .pass(),
                "common certificate margins fail");
        const auto below = common_certificate_margins(sys.plant, fallback.K, sol.K,
                                                      cert, cert.min_dwell - 1);
        require(below.dwell < 1e-8, "dwell " + fmt(cert.min_dwell - 1) +
                                        " should fail the power inequality");
    }
    return "50 random loops: margins >= 1e-8 and t_min minimal";
}

std::string criterion_estimator() {
    const auto plant = demo_plant();
    const auto weights = demo_weights();
    const auto sol = dare_solve(plant, weights);
    const auto est =
        estimate_cost(plant, weights, linear_policy(sol.K), 10000, 200, 3, 1);
    require(est.mean.is_finite(), "estimate diverged");
    require(std::abs(est.mean.value() - sol.cost) <= 3.0 * est.std_error,
            "mean " + fmt(est.mean.value()) + " vs exact " + fmt(sol.cost) +
                " outside 3 stderr " + fmt(est.std_error));
    const auto parallel =
        estimate_cost(plant, weights, linear_policy(sol.K), 10000, 200, 3, 4);
    require(std::memcmp(est.per_trajectory.data(), parallel.per_trajectory.data(),
                        sizeof(double) * est.per_trajectory.size()) == 0,
            "thread counts changed the per-trajectory results");
    require(est.mean.value() == parallel.mean.value(),
            "thread counts changed the mean");
    return "mean " + fmt(est.mean.value()) + " within 3 stderr of " +
           fmt(sol.cost) + ", bit-identical across 1 and 4 threads";
}

std::string criterion_adaptive_experiment() {
    const auto start = Clock::now();
    const auto plant = standin_plant();
    const auto weights = standin_weights();
    AdaptiveConfig config;
    config.fallback_gain = Eigen::MatrixXd::Zero(4, 8);

    const std::uint64_t horizon = (1u << 14) + 1;  // include the update at 2^14
    const auto record = adaptive_run(plant, weights, config, horizon, 1);
    require(!record.diverged, "switched learning run diverged");
    require(record.updates.size() == 15, "expected 15 updates, got " +
                                             fmt(record.updates.size()));

    const auto curve = gap_curve(plant, weights, record, 100, 1000, 5);
    bool any_destabilizing = false;
    for (const auto& point : curve) {
        require(point.switched_cost.is_finite(),
                "switched cost infinite at k=" + fmt(point.step));
        if (!point.linear_cost.is_finite()) any_destabilizing = true;
    }

    std::vector<double> log_k, log_gap;
    for (std::size_t i = curve.size() - 5; i < curve.size(); ++i) {
        require(curve[i].gap.is_finite(),
                "gap infinite among the final 5 points (k=" + fmt(curve[i].step) +
                    ")");
        require(curve[i].gap.value() > 0.0,
                "gap not positive at k=" + fmt(curve[i].step));
        log_k.push_back(std::log(static_cast<double>(curve[i].step)));
        log_gap.push_back(std::log(curve[i].gap.value()));
    }
    const double slope = theil_sen_slope(log_k, log_gap);
    require(slope < 0.0, "Theil-Sen slope " + fmt(slope) + " not negative");

    const double elapsed = seconds_since(start);
    require(elapsed < 900.0, "runtime " + fmt(elapsed) + "s exceeds 15 min");
    std::ostringstream detail;
    detail << "15 update points, Theil-Sen slope " << slope
           << (any_destabilizing ? ", destabilizing rows present" : "") << ", "
           << fmt(elapsed) << "s";
    return detail.str();
}

struct Criterion {
    int id;
    const char* title;
    std::function<std::string()> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "DARE correctness", criterion_dare},
        {2, "safety under a destabilizing primary gain", criterion_safety},
        {3, "dwell-time effect on trigger counts", criterion_dwell_effect},
        {4, "fallback-probability tail bound", criterion_tail_bound},
        {5, "fourth-moment bound", criterion_fourth_moment},
        {6, "gap bound and its decay rate", criterion_gap_bound},
        {7, "certificate validity and dwell minimality", criterion_certificates},
        {8, "cost estimator consistency and determinism", criterion_estimator},
        {9, "adaptive schedule experiment", criterion_adaptive_experiment},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        try {
            const std::string detail = criterion.run();
            std::cout << "[PASS] criterion " << criterion.id << ": "
                      << criterion.title << " (" << detail << ")\n";
        } catch (const CheckFailure& f) {
            ++failures;
            std::cout << "[FAIL] criterion " << criterion.id << ": "
                      << criterion.title << " (" << f.message << ")\n";
        } catch (const std::exception& e) {
            ++failures;
            std::cout << "[FAIL] criterion " << criterion.id << ": "
                      << criterion.title << " (exception: " << e.what() << ")\n";
        }
        std::cout.flush();
    }
    if (failures > 0) {
        std::cout << failures << " criterion(s) failed\n";
        return 1;
    }
    std::cout << "all acceptance criteria passed\n";
    return 0;
}
