// Python bindings for the main operations: Riccati design, certificates and
// bounds, the switching law, and seeded Monte Carlo cost estimation.

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <limits>

#include "safelqr/adaptive.hpp"
#include "safelqr/certificates.hpp"
#include "safelqr/control.hpp"
#include "safelqr/errors.hpp"
#include "safelqr/montecarlo.hpp"
#include "safelqr/switching.hpp"
#include "safelqr/systems.hpp"

namespace py = pybind11;
using namespace safelqr;

namespace {

double cost_to_double(const Cost& cost) {
    return cost.is_finite() ? cost.value()
                            : std::numeric_limits<double>::infinity();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Switched LQR safety toolkit";
#ifdef SAFELQR_VERSION
    m.attr("__version__") = SAFELQR_VERSION;
#else
    m.attr("__version__") = "dev";
#endif

    py::register_exception<Error>(m, "SafelqrError", PyExc_RuntimeError);

    py::class_<LinearPlant>(m, "LinearPlant")
        .def(py::init<Eigen::MatrixXd, Eigen::MatrixXd, Eigen::MatrixXd>(),
             py::arg("A"), py::arg("B"), py::arg("W"))
        .def_property_readonly("A", &LinearPlant::A)
        .def_property_readonly("B", &LinearPlant::B)
        .def_property_readonly("W", &LinearPlant::W)
        .def_property_readonly("state_dim", &LinearPlant::state_dim)
        .def_property_readonly("input_dim", &LinearPlant::input_dim);

    py::class_<LQWeights>(m, "LQWeights")
        .def(py::init<Eigen::MatrixXd, Eigen::MatrixXd>(), py::arg("Q"),
             py::arg("R"))
        .def_property_readonly("Q", &LQWeights::Q)
        .def_property_readonly("R", &LQWeights::R);

    py::class_<RiccatiSolution>(m, "RiccatiSolution")
        .def_readonly("P", &RiccatiSolution::P)
        .def_readonly("K", &RiccatiSolution::K)
        .def_readonly("cost", &RiccatiSolution::cost)
        .def_readonly("residual", &RiccatiSolution::residual)
        .def_readonly("iterations", &RiccatiSolution::iterations);

    m.def("demo_plant", &demo_plant);
    m.def("demo_weights", &demo_weights);
    m.def("standin_plant", &standin_plant);
    m.def("standin_weights", &standin_weights);

    m.def("spectral_radius", &spectral_radius, py::arg("M"));
    py::enum_<SteinForm>(m, "SteinForm")
        .value("FORWARD", SteinForm::Forward)
        .value("ADJOINT", SteinForm::Adjoint);
    m.def("solve_stein", &solve_stein, py::arg("A"), py::arg("C"), py::arg("form"),
          py::arg("tol") = 1e-10);
    m.def(
        "dare_solve",
        [](const LinearPlant& plant, const LQWeights& weights) {
            return dare_solve(plant, weights);
        },
        py::arg("plant"), py::arg("weights"));
    m.def(
        "linear_feedback_cost",
        [](const LinearPlant& plant, const LQWeights& weights,
           const Eigen::MatrixXd& K) {
            return cost_to_double(linear_feedback_cost(plant, weights, K));
        },
        py::arg("plant"), py::arg("weights"), py::arg("K"),
        "Exact LQ cost of u = Kx; +inf when the closed loop is unstable.");
    m.def("weighted_matrix_norm", &weighted_matrix_norm, py::arg("Q"), py::arg("P"));
    m.def("weighted_operator_norm", &weighted_operator_norm, py::arg("A"),
          py::arg("P"));
    m.def("cholesky_factor", &cholesky_factor, py::arg("W"));

    py::enum_<Mode>(m, "Mode")
        .value("PRIMARY", Mode::Primary)
        .value("FALLBACK", Mode::Fallback);

    py::class_<SwitchConfig>(m, "SwitchConfig")
        .def(py::init([](Eigen::MatrixXd K0, Eigen::MatrixXd K1, double threshold,
                         int dwell) {
                 SwitchConfig config{std::move(K0), std::move(K1), threshold, dwell};
                 config.validate();
                 return config;
             }),
             py::arg("fallback_gain"), py::arg("primary_gain"), py::arg("threshold"),
             py::arg("dwell"))
        .def_readonly("fallback_gain", &SwitchConfig::fallback_gain)
        .def_readonly("primary_gain", &SwitchConfig::primary_gain)
        .def_readonly("threshold", &SwitchConfig::threshold)
        .def_readonly("dwell", &SwitchConfig::dwell);

    py::class_<SwitchState>(m, "SwitchState")
        .def(py::init<>())
        .def(py::init([](int remaining) { return SwitchState{remaining}; }),
             py::arg("remaining"))
        .def_readonly("remaining", &SwitchState::remaining);

    py::class_<ControlDecision>(m, "ControlDecision")
        .def_readonly("u", &ControlDecision::u)
        .def_readonly("mode", &ControlDecision::mode)
        .def_readonly("triggered", &ControlDecision::triggered)
        .def_readonly("next", &ControlDecision::next);

    m.def("switch_step", &switch_step, py::arg("x"), py::arg("state"),
          py::arg("config"));

    py::class_<FallbackCertificate>(m, "FallbackCertificate")
        .def_readonly("P0", &FallbackCertificate::P0)
        .def_readonly("rho0", &FallbackCertificate::rho0);
    py::class_<CommonCertificate>(m, "CommonCertificate")
        .def_readonly("P", &CommonCertificate::P)
        .def_readonly("rho", &CommonCertificate::rho)
        .def_readonly("min_dwell", &CommonCertificate::min_dwell);

    m.def("build_fallback_certificate", &build_fallback_certificate,
          py::arg("plant"), py::arg("K0"), py::arg("rho0") = std::nullopt);
    m.def("build_common_certificate", &build_common_certificate, py::arg("plant"),
          py::arg("K0"), py::arg("K1"), py::arg("rho") = std::nullopt);
    m.def("fallback_certificate_margin", &fallback_certificate_margin,
          py::arg("plant"), py::arg("K0"), py::arg("cert"));
    m.def(
        "common_certificate_margins",
        [](const LinearPlant& plant, const Eigen::MatrixXd& K0,
           const Eigen::MatrixXd& K1, const CommonCertificate& cert,
           std::optional<int> dwell) {
            const auto margins =
                common_certificate_margins(plant, K0, K1, cert, dwell);
            return std::make_pair(margins.primary, margins.dwell);
        },
        py::arg("plant"), py::arg("K0"), py::arg("K1"), py::arg("cert"),
        py::arg("dwell") = std::nullopt);
    m.def("process_gramian", &process_gramian, py::arg("plant"), py::arg("K0"));
    m.def("threshold_floor", &threshold_floor, py::arg("gramian"), py::arg("P"),
          py::arg("rho"));
    m.def("lyapunov_energy_bound", &lyapunov_energy_bound, py::arg("threshold"),
          py::arg("cl_norm_max"), py::arg("P0"), py::arg("rho0"), py::arg("W"));
    m.def("switched_cost_bound", &switched_cost_bound, py::arg("plant"),
          py::arg("weights"), py::arg("K0"), py::arg("K1"), py::arg("threshold"),
          py::arg("cert"));
    m.def(
        "fourth_moment_bound",
        [](int n, const Eigen::MatrixXd& P, double rho, const Eigen::MatrixXd& P0,
           const Eigen::MatrixXd& gramian) {
            const auto fm = fourth_moment_bound(n, P, rho, P0, gramian);
            return std::make_pair(fm.moment_const, fm.bound);
        },
        py::arg("n"), py::arg("P"), py::arg("rho"), py::arg("P0"),
        py::arg("gramian"));
    m.def("fallback_probability_bound", &fallback_probability_bound,
          py::arg("threshold"), py::arg("dwell"), py::arg("n"), py::arg("P"),
          py::arg("rho"), py::arg("gramian"));
    m.def("gap_decay_rate", &gap_decay_rate, py::arg("rho"), py::arg("P"),
          py::arg("gramian"));

    py::class_<SwitchAnalysis>(m, "SwitchAnalysis")
        .def_readonly("gramian", &SwitchAnalysis::gramian)
        .def_readonly("threshold_floor", &SwitchAnalysis::threshold_floor)
        .def_readonly("cl_norm_max", &SwitchAnalysis::cl_norm_max)
        .def_readonly("moment_const", &SwitchAnalysis::moment_const)
        .def_readonly("fourth_moment", &SwitchAnalysis::fourth_moment)
        .def_readonly("c1", &SwitchAnalysis::c1)
        .def_readonly("c2", &SwitchAnalysis::c2)
        .def_readonly("c3", &SwitchAnalysis::c3)
        .def_readonly("c4", &SwitchAnalysis::c4)
        .def_readonly("decay_rate", &SwitchAnalysis::decay_rate)
        .def_readonly("loop_shift_norm", &SwitchAnalysis::loop_shift_norm)
        .def_readonly("loop_shift_wnorm", &SwitchAnalysis::loop_shift_wnorm)
        .def_readonly("power_series", &SwitchAnalysis::power_series);

    m.def("analyze_switching", &analyze_switching, py::arg("plant"),
          py::arg("weights"), py::arg("K0"), py::arg("K1"), py::arg("cert0"),
          py::arg("cert"));
    m.def(
        "switching_gap_bound",
        [](const LinearPlant& plant, const LQWeights& weights,
           const Eigen::MatrixXd& K0, const Eigen::MatrixXd& K1, double threshold,
           int dwell, const FallbackCertificate& cert0,
           const CommonCertificate& cert) {
            const auto gap = switching_gap_bound(plant, weights, K0, K1, threshold,
                                                 dwell, cert0, cert);
            py::dict out;
            out["bound"] = gap.bound;
            out["perturbation_level"] = gap.perturbation_level;
            out["tail"] = gap.tail;
            out["analysis"] = gap.analysis;
            return out;
        },
        py::arg("plant"), py::arg("weights"), py::arg("K0"), py::arg("K1"),
        py::arg("threshold"), py::arg("dwell"), py::arg("cert0"), py::arg("cert"));

    py::class_<CostEstimate>(m, "CostEstimate")
        .def_property_readonly(
            "mean", [](const CostEstimate& e) { return cost_to_double(e.mean); })
        .def_readonly("stderr", &CostEstimate::std_error)
        .def_readonly("horizon", &CostEstimate::horizon)
        .def_readonly("n_trajectories", &CostEstimate::n_trajectories)
        .def_readonly("seed", &CostEstimate::seed)
        .def_readonly("fallback_fraction", &CostEstimate::fallback_fraction)
        .def_readonly("diverged", &CostEstimate::diverged)
        .def_readonly("per_trajectory", &CostEstimate::per_trajectory);

    m.def(
        "estimate_cost_linear",
        [](const LinearPlant& plant, const LQWeights& weights,
           const Eigen::MatrixXd& K, std::size_t horizon, std::size_t n_traj,
           std::uint64_t seed, int threads) {
            return estimate_cost(plant, weights, linear_policy(K), horizon, n_traj,
                                 seed, threads);
        },
        py::arg("plant"), py::arg("weights"), py::arg("K"), py::arg("horizon"),
        py::arg("n_trajectories"), py::arg("seed"), py::arg("threads") = 0);
    m.def(
        "estimate_cost_switched",
        [](const LinearPlant& plant, const LQWeights& weights,
           const SwitchConfig& config, std::size_t horizon, std::size_t n_traj,
           std::uint64_t seed, int threads) {
            return estimate_cost(plant, weights, switched_policy(config), horizon,
                                 n_traj, seed, threads);
        },
        py::arg("plant"), py::arg("weights"), py::arg("config"), py::arg("horizon"),
        py::arg("n_trajectories"), py::arg("seed"), py::arg("threads") = 0);
    m.def(
        "rollout_switched",
        [](const LinearPlant& plant, const LQWeights& weights,
           const SwitchConfig& config, std::size_t horizon, std::uint64_t seed,
           std::uint64_t stream) {
            auto controller = switched_policy(config)();
            const auto record = rollout(plant, weights, *controller, horizon,
                                        RngStream(seed, stream));
            py::dict out;
            Eigen::MatrixXd states(record.states.size(), plant.state_dim());
            for (std::size_t k = 0; k < record.states.size(); ++k) {
                states.row(static_cast<Eigen::Index>(k)) = record.states[k];
            }
            Eigen::MatrixXd inputs(record.inputs.size(), plant.input_dim());
            for (std::size_t k = 0; k < record.inputs.size(); ++k) {
                inputs.row(static_cast<Eigen::Index>(k)) = record.inputs[k];
            }
            std::vector<int> modes;
            modes.reserve(record.modes.size());
            for (Mode mode : record.modes) {
                modes.push_back(mode == Mode::Fallback ? 1 : 0);
            }
            out["states"] = states;
            out["inputs"] = inputs;
            out["fallback"] = modes;
            out["stage_costs"] = record.stage_costs;
            out["trigger_count"] = record.trigger_count;
            out["max_state_norm"] = record.max_state_norm;
            out["diverged"] = record.diverged;
            return out;
        },
        py::arg("plant"), py::arg("weights"), py::arg("config"), py::arg("horizon"),
        py::arg("seed"), py::arg("stream") = 0);

    m.def(
        "sample_noise",
        [](const Eigen::MatrixXd& factor, std::uint64_t seed, std::uint64_t stream,
           std::uint64_t step) {
            return sample_noise(factor, RngStream(seed, stream), step);
        },
        py::arg("factor"), py::arg("seed"), py::arg("stream"), py::arg("step"));
    m.def("schedule", &schedule, py::arg("k"), py::arg("threshold_floor") = 1.0,
          "Logarithmic hyper-parameter schedules (M_k, t_k).");
    m.def(
        "least_squares_fit",
        [](const std::vector<Eigen::VectorXd>& xs,
           const std::vector<Eigen::VectorXd>& us,
           const std::vector<Eigen::VectorXd>& x_nexts, double ridge) {
            if (xs.size() != us.size() || xs.size() != x_nexts.size()) {
                throw DimensionError("history sequences must share one length");
            }
            std::vector<Transition> history;
            history.reserve(xs.size());
            for (std::size_t i = 0; i < xs.size(); ++i) {
                history.push_back({xs[i], us[i], x_nexts[i]});
            }
            return least_squares_fit(history, ridge);
        },
        py::arg("states"), py::arg("inputs"), py::arg("next_states"),
        py::arg("ridge") = 0.0);
    m.def(
        "certainty_equivalent_gain",
        [](const Eigen::MatrixXd& A_hat, const Eigen::MatrixXd& B_hat,
           const LQWeights& weights) -> std::optional<Eigen::MatrixXd> {
            return certainty_equivalent_gain(A_hat, B_hat, weights);
        },
        py::arg("A_hat"), py::arg("B_hat"), py::arg("weights"));
}
