// safelqr command-line tool: certificates, bounds, and reproducible
// switching experiments over plants stored in the shared matrix text format.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "safelqr/adaptive.hpp"
#include "safelqr/certificates.hpp"
#include "safelqr/control.hpp"
#include "safelqr/errors.hpp"
#include "safelqr/matrix_io.hpp"
#include "safelqr/montecarlo.hpp"
#include "safelqr/switching.hpp"
#include "safelqr/systems.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace safelqr;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNumerical = 1;
constexpr int kExitInput = 2;

std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open output file '" + path.string() + "'");
    return out;
}

void print_kv(std::ostream& out, const std::string& key, double value) {
    out << key << " = " << format_double(value) << "\n";
}

void print_kv(std::ostream& out, const std::string& key, const std::string& value) {
    out << key << " = " << value << "\n";
}

std::string csv_header_comment(const std::string& command, std::uint64_t seed,
                               const std::string& params) {
    std::ostringstream os;
    os << "# command=" << command << " seed=" << seed;
    if (!params.empty()) os << ' ' << params;
    return os.str();
}

struct CommonArgs {
    std::string plant_path;
    std::string weights_path;
};

LinearPlant arg_plant(const CommonArgs& args) { return load_plant(args.plant_path); }
LQWeights arg_weights(const CommonArgs& args) { return load_weights(args.weights_path); }

// ---------------------------------------------------------------------------
// dare
// ---------------------------------------------------------------------------

struct DareArgs : CommonArgs {
    std::string out_path;
};

int run_dare(const DareArgs& args) {
    const LinearPlant plant = arg_plant(args);
    const LQWeights weights = arg_weights(args);
    const RiccatiSolution sol = dare_solve(plant, weights);

    std::ostringstream report;
    report << "# safelqr dare plant=" << args.plant_path
           << " weights=" << args.weights_path << "\n";
    print_kv(report, "residual", sol.residual);
    print_kv(report, "iterations", static_cast<double>(sol.iterations));
    print_kv(report, "rho_closed_loop",
             spectral_radius(plant.A() + plant.B() * sol.K));
    print_kv(report, "J_star", sol.cost);
    write_matrix_block(report, "P", sol.P);
    write_matrix_block(report, "K", sol.K);

    std::cout << report.str();
    if (!args.out_path.empty()) open_output(args.out_path) << report.str();
    return kExitOk;
}

// ---------------------------------------------------------------------------
// certify / bound
// ---------------------------------------------------------------------------

struct CertifyArgs : CommonArgs {
    std::string k0_path;
    std::string k1_path;
    std::optional<double> rho0;
    std::optional<double> rho;
    std::optional<double> threshold;
    std::optional<int> dwell;
    std::string out_path;
};

void emit_certify_report(std::ostream& out, const CertifyArgs& args) {
    const LinearPlant plant = arg_plant(args);
    const LQWeights weights = arg_weights(args);
    const Eigen::MatrixXd K0 = load_gain(args.k0_path, "K0");
    std::optional<Eigen::MatrixXd> K1;
    if (!args.k1_path.empty()) K1 = load_gain(args.k1_path, "K1");

    out << "# safelqr certify plant=" << args.plant_path << "\n";
    const double rho_cl0 = spectral_radius(plant.A() + plant.B() * K0);
    print_kv(out, "rho_cl_fallback", rho_cl0);

    const auto cert0 = build_fallback_certificate(plant, K0, args.rho0);
    print_kv(out, "rho0", cert0.rho0);
    print_kv(out, "fallback_margin",
             fallback_certificate_margin(plant, K0, cert0));

    if (args.threshold) {
        // the safety bound needs a primary gain; without one the fallback
        // gain itself is reported (K1 = K0 gives the pure-fallback bound)
        const Eigen::MatrixXd& primary = K1 ? *K1 : K0;
        print_kv(out, "safety_bound",
                 switched_cost_bound(plant, weights, K0, primary, *args.threshold,
                                     cert0));
        const double norm0 = detail::operator_norm(plant.A() + plant.B() * K0);
        const double norm1 =
            detail::operator_norm(plant.A() + plant.B() * primary);
        print_kv(out, "energy_bound",
                 lyapunov_energy_bound(*args.threshold, std::max(norm0, norm1),
                                       cert0.P0, cert0.rho0, plant.W()));
    }

    if (!K1) return;
    const double rho_cl1 = spectral_radius(plant.A() + plant.B() * *K1);
    print_kv(out, "rho_cl_primary", rho_cl1);
    if (rho_cl1 >= 1.0) {
        print_kv(out, "common_certificate",
                 std::string("inapplicable (primary gain not stabilizing)"));
        return;
    }

    const auto cert = build_common_certificate(plant, K0, *K1, args.rho);
    const auto margins = common_certificate_margins(plant, K0, *K1, cert);
    print_kv(out, "common_certificate", std::string("ok"));
    print_kv(out, "rho", cert.rho);
    print_kv(out, "t_min", static_cast<double>(cert.min_dwell));
    print_kv(out, "primary_margin", margins.primary);
    print_kv(out, "dwell_margin", margins.dwell);

    const SwitchAnalysis analysis =
        analyze_switching(plant, weights, K0, *K1, cert0, cert);
    print_kv(out, "M0", analysis.threshold_floor);
    print_kv(out, "cl_norm_max", analysis.cl_norm_max);
    print_kv(out, "moment_const", analysis.moment_const);
    print_kv(out, "fourth_moment_bound", analysis.fourth_moment);
    print_kv(out, "c1", analysis.c1);
    print_kv(out, "c2", analysis.c2);
    print_kv(out, "c3", analysis.c3);
    print_kv(out, "c4", analysis.c4);
    print_kv(out, "decay_rate", analysis.decay_rate);
    print_kv(out, "loop_shift_norm", analysis.loop_shift_norm);
    print_kv(out, "loop_shift_wnorm", analysis.loop_shift_wnorm);
    print_kv(out, "power_series", analysis.power_series);

    if (args.threshold && args.dwell) {
        print_kv(out, "tail_bound",
                 fallback_probability_bound(*args.threshold, *args.dwell,
                                            plant.state_dim(), cert.P, cert.rho,
                                            analysis.gramian));
        if (*args.threshold >= analysis.threshold_floor &&
            *args.dwell >= cert.min_dwell) {
            const auto gap = switching_gap_bound(plant, weights, K0, *K1,
                                                 *args.threshold, *args.dwell,
                                                 cert0, cert);
            print_kv(out, "gap_bound", gap.bound);
            print_kv(out, "perturbation_level", gap.perturbation_level);
        } else {
            print_kv(out, "gap_bound",
                     std::string("inapplicable (threshold or dwell below floor)"));
        }
    }
}

int run_certify(const CertifyArgs& args) {
    std::ostringstream report;
    emit_certify_report(report, args);
    std::cout << report.str();
    if (!args.out_path.empty()) open_output(args.out_path) << report.str();
    return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateArgs : CommonArgs {
    std::string gain_path;  // plain linear feedback when set
    std::string k0_path;
    std::string k1_path;
    double threshold = 0.0;
    int dwell = 1;
    std::size_t horizon = 100;
    std::size_t trajectories = 2;
    std::uint64_t seed = 0;
    int threads = 0;
    std::string out_prefix;
};

ControllerFactory simulate_controller(const SimulateArgs& args,
                                      std::string& description) {
    if (!args.gain_path.empty()) {
        description = "linear";
        return linear_policy(load_gain(args.gain_path, "K"));
    }
    if (args.k0_path.empty() || args.k1_path.empty()) {
        throw ParseError("simulate needs either --gain or both --k0 and --k1");
    }
    SwitchConfig config{load_gain(args.k0_path, "K0"), load_gain(args.k1_path, "K1"),
                        args.threshold, args.dwell};
    config.validate();
    description = "switched";
    return switched_policy(config);
}

void write_trajectory_csv(const fs::path& path, const std::string& header,
                          const LinearPlant& plant, const TrajectoryRecord& record) {
    auto out = open_output(path);
    out << header << "\n";
    out << "k";
    for (int i = 1; i <= plant.state_dim(); ++i) out << ",x_" << i;
    for (int i = 1; i <= plant.input_dim(); ++i) out << ",u_" << i;
    out << ",mode,stage_cost\n";
    for (std::size_t k = 0; k < record.inputs.size(); ++k) {
        out << k;
        for (int i = 0; i < plant.state_dim(); ++i) {
            out << ',' << format_double(record.states[k](i));
        }
        for (int i = 0; i < plant.input_dim(); ++i) {
            out << ',' << format_double(record.inputs[k](i));
        }
        out << ',' << mode_name(record.modes[k]) << ','
            << format_double(record.stage_costs[k]) << "\n";
    }
}

int run_simulate(const SimulateArgs& args) {
    const LinearPlant plant = arg_plant(args);
    const LQWeights weights = arg_weights(args);
    std::string description;
    const ControllerFactory factory = simulate_controller(args, description);

    const std::string header = csv_header_comment(
        "simulate", args.seed,
        "controller=" + description + " horizon=" + std::to_string(args.horizon) +
            " trajectories=" + std::to_string(args.trajectories));

    auto controller = factory();
    const auto record =
        rollout(plant, weights, *controller, args.horizon, RngStream(args.seed, 0));
    write_trajectory_csv(args.out_prefix + "_trajectory.csv", header, plant, record);

    const CostEstimate est =
        estimate_cost(plant, weights, factory, args.horizon,
                      std::max<std::size_t>(args.trajectories, 2), args.seed,
                      args.threads);
    json j;
    j["command"] = "simulate";
    j["controller"] = description;
    if (est.mean.is_finite()) {
        j["mean"] = est.mean.value();
    } else {
        j["mean"] = "inf";
    }
    j["stderr"] = est.std_error;
    j["horizon"] = est.horizon;
    j["n_traj"] = est.n_trajectories;
    j["seed"] = est.seed;
    j["fallback_fraction"] = est.fallback_fraction;
    j["diverged"] = est.diverged;
    open_output(args.out_prefix + "_estimate.json") << j.dump(2) << "\n";
    std::cout << j.dump(2) << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// gap-sweep
// ---------------------------------------------------------------------------

struct GapSweepArgs : CommonArgs {
    std::string k0_path;
    std::string k1_path;
    std::optional<double> m_start;
    double m_step = 1.0;
    int m_count = 7;
    std::optional<int> dwell;
    std::size_t horizon = 10000;
    std::size_t trajectories = 200;
    std::uint64_t seed = 0;
    int threads = 0;
    std::string out_prefix;
};

int run_gap_sweep(const GapSweepArgs& args) {
    const LinearPlant plant = arg_plant(args);
    const LQWeights weights = arg_weights(args);
    const Eigen::MatrixXd K0 = load_gain(args.k0_path, "K0");
    const Eigen::MatrixXd K1 = load_gain(args.k1_path, "K1");

    const auto cert0 = build_fallback_certificate(plant, K0);
    const auto cert = build_common_certificate(plant, K0, K1);
    const auto analysis = analyze_switching(plant, weights, K0, K1, cert0, cert);
    const int dwell = args.dwell.value_or(cert.min_dwell);
    const double m_start = args.m_start.value_or(analysis.threshold_floor);

    const Cost linear_cost = linear_feedback_cost(plant, weights, K1);

    struct Row {
        double threshold;
        bool skipped;
        double bound;
        double mc_gap;
        double mc_stderr;
    };
    std::vector<Row> rows;
    std::vector<double> fit_m2, fit_log;
    for (int i = 0; i < args.m_count; ++i) {
        Row row{m_start + i * args.m_step, false, 0.0, 0.0, 0.0};
        if (row.threshold < analysis.threshold_floor || dwell < cert.min_dwell) {
            row.skipped = true;
        } else {
            const auto gap = switching_gap_bound(plant, weights, K0, K1,
                                                 row.threshold, dwell, cert0, cert);
            row.bound = gap.bound;
            SwitchConfig config{K0, K1, row.threshold, dwell};
            const auto cmp =
                paired_compare(plant, weights, switched_policy(config),
                               linear_policy(K1), args.horizon, args.trajectories,
                               args.seed, args.threads);
            row.mc_gap = cmp.mean_difference;
            row.mc_stderr = cmp.stderr_difference;
            if (row.bound > 0.0) {
                fit_m2.push_back(row.threshold * row.threshold);
                fit_log.push_back(std::log(row.bound));
            }
        }
        rows.push_back(row);
    }

    // least-squares slope of log(bound) against M^2 over the usable rows
    double slope = 0.0;
    if (fit_m2.size() >= 2) {
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < fit_m2.size(); ++i) {
            mx += fit_m2[i];
            my += fit_log[i];
        }
        mx /= fit_m2.size();
        my /= fit_m2.size();
        double sxx = 0.0, sxy = 0.0;
        for (std::size_t i = 0; i < fit_m2.size(); ++i) {
            sxx += (fit_m2[i] - mx) * (fit_m2[i] - mx);
            sxy += (fit_m2[i] - mx) * (fit_log[i] - my);
        }
        slope = sxy / sxx;
    }

    auto out = open_output(args.out_prefix + "_sweep.csv");
    out << csv_header_comment(
               "gap-sweep", args.seed,
               "dwell=" + std::to_string(dwell) +
                   " t_min=" + std::to_string(cert.min_dwell) +
                   " M0=" + format_double(analysis.threshold_floor) +
                   " J_linear=" + linear_cost.str() +
                   " log_bound_slope_vs_M2=" + format_double(slope) +
                   " decay_rate=" + format_double(analysis.decay_rate))
        << "\n";
    out << "M,t,bound,mc_gap,mc_stderr,status\n";
    for (const Row& row : rows) {
        out << format_double(row.threshold) << ',' << dwell << ',';
        if (row.skipped) {
            out << ",,,skipped\n";
        } else {
            out << format_double(row.bound) << ',' << format_double(row.mc_gap)
                << ',' << format_double(row.mc_stderr) << ",ok\n";
        }
    }
    std::cout << "wrote " << args.out_prefix << "_sweep.csv (slope "
              << format_double(slope) << ")\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// adaptive
// ---------------------------------------------------------------------------

struct AdaptiveArgs : CommonArgs {
    std::string k0_path;  // default: zero gain
    std::uint64_t horizon = 1024;
    std::uint64_t seed = 0;
    std::string switch_mode = "on";
    std::string threshold = "schedule";
    std::string dwell = "schedule";
    std::size_t eval_horizon = 100;
    std::size_t eval_trajectories = 1000;
    bool gap = true;
    int threads = 0;
    std::string out_prefix;
};

void write_adaptive_steps_csv(const fs::path& path, const std::string& header,
                              const LinearPlant& plant,
                              const AdaptiveRecord& record) {
    auto out = open_output(path);
    out << header << "\n";
    out << "k";
    for (int i = 1; i <= plant.state_dim(); ++i) out << ",x_" << i;
    for (int i = 1; i <= plant.input_dim(); ++i) out << ",u_" << i;
    out << ",mode,M_k,t_k,stage_cost";
    for (int i = 1; i <= plant.state_dim(); ++i) out << ",w_" << i;
    for (int i = 1; i <= plant.input_dim(); ++i) out << ",zeta_" << i;
    out << ",exploration_scale\n";
    for (const auto& step : record.steps) {
        out << step.step;
        for (int i = 0; i < plant.state_dim(); ++i) {
            out << ',' << format_double(step.state(i));
        }
        for (int i = 0; i < plant.input_dim(); ++i) {
            out << ',' << format_double(step.input(i));
        }
        out << ',' << mode_name(step.mode) << ',' << format_double(step.threshold)
            << ',' << step.dwell << ',' << format_double(step.stage_cost);
        for (int i = 0; i < plant.state_dim(); ++i) {
            out << ',' << format_double(step.noise(i));
        }
        for (int i = 0; i < plant.input_dim(); ++i) {
            out << ',' << format_double(step.exploration_noise(i));
        }
        out << ',' << format_double(step.exploration_scale) << "\n";
    }
}

void write_updates_csv(const fs::path& path, const std::string& header,
                       const AdaptiveRecord& record) {
    auto flat = [](const Eigen::MatrixXd& M) {
        std::ostringstream os;
        for (Eigen::Index r = 0; r < M.rows(); ++r) {
            for (Eigen::Index c = 0; c < M.cols(); ++c) {
                if (r + c > 0) os << ' ';
                os << format_double(M(r, c));
            }
        }
        return os.str();
    };
    auto out = open_output(path);
    out << header << "\n";
    out << "k,solver_ok,stabilizing,M_k,t_k,gain,A_hat,B_hat\n";
    for (const auto& update : record.updates) {
        out << update.step << ',' << (update.solver_ok ? 1 : 0) << ','
            << (update.stabilizing ? 1 : 0) << ',' << format_double(update.threshold)
            << ',' << update.dwell << ',' << flat(update.gain) << ','
            << flat(update.A_hat) << ',' << flat(update.B_hat) << "\n";
    }
}

void write_gap_csv(const fs::path& path, const std::string& header,
                   const std::vector<GapCurvePoint>& curve) {
    auto out = open_output(path);
    out << header << "\n";
    out << "k,J_switched,stderr,J_linear,gap,gap_stderr,M_k,t_k\n";
    for (const auto& point : curve) {
        out << point.step << ',' << point.switched_cost.str() << ','
            << format_double(point.switched_stderr) << ',' << point.linear_cost.str()
            << ',' << point.gap.str() << ',' << format_double(point.gap_stderr)
            << ',' << format_double(point.threshold) << ',' << point.dwell << "\n";
    }
}

AdaptiveConfig make_adaptive_config(const AdaptiveArgs& args, const LinearPlant& plant) {
    AdaptiveConfig config;
    config.fallback_gain = args.k0_path.empty()
                               ? Eigen::MatrixXd::Zero(plant.input_dim(),
                                                       plant.state_dim())
                               : load_gain(args.k0_path, "K0");
    config.switching_enabled = args.switch_mode == "on";
    try {
        if (args.threshold != "schedule") {
            const double fixed = std::stod(args.threshold);
            config.threshold_schedule = [fixed](std::uint64_t) { return fixed; };
        }
        if (args.dwell != "schedule") {
            const int fixed = std::stoi(args.dwell);
            config.dwell_schedule = [fixed](std::uint64_t) { return fixed; };
        }
    } catch (const std::logic_error&) {
        throw ParseError("--M and --dwell take a number or 'schedule'");
    }
    return config;
}

int run_adaptive(const AdaptiveArgs& args) {
    if (args.switch_mode != "on" && args.switch_mode != "off") {
        throw ParseError("--switch must be 'on' or 'off'");
    }
    const LinearPlant plant = arg_plant(args);
    const LQWeights weights = arg_weights(args);
    const AdaptiveConfig config = make_adaptive_config(args, plant);

    const auto record = adaptive_run(plant, weights, config, args.horizon, args.seed);
    const std::string header = csv_header_comment(
        "adaptive", args.seed,
        "switch=" + args.switch_mode + " M=" + args.threshold +
            " dwell=" + args.dwell + " horizon=" + std::to_string(args.horizon) +
            " diverged=" + (record.diverged ? std::string("1") : std::string("0")));
    write_adaptive_steps_csv(args.out_prefix + "_steps.csv", header, plant, record);
    write_updates_csv(args.out_prefix + "_updates.csv", header, record);

    if (args.gap) {
        const auto curve = gap_curve(plant, weights, record, args.eval_horizon,
                                     args.eval_trajectories, args.seed + 1,
                                     args.threads);
        write_gap_csv(args.out_prefix + "_gap.csv", header, curve);
    }
    std::cout << "adaptive run: " << record.steps.size() << " steps, "
              << record.updates.size() << " updates, triggers "
              << record.trigger_count
              << (record.diverged ? ", diverged" : "") << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// experiments
// ---------------------------------------------------------------------------

struct BundleArgs {
    std::string plant_path;    // optional override of the bundled stand-in
    std::string weights_path;
    std::string out_dir = "experiments";
    std::uint64_t seed = 1;
    std::uint64_t dwell_horizon = 1000;
    std::uint64_t learning_horizon = 16385;  // one past 2^14: includes that update
    std::size_t eval_horizon = 100;
    std::size_t eval_trajectories = 1000;
    int threads = 0;
};

int run_bundle(const BundleArgs& args) {
    const fs::path dir(args.out_dir);
    fs::create_directories(dir);

    // Part 1: dwell-time comparison on the 2-state demo system. Three
    // learners on one noise realization: no switching, dwell 1, dwell 30.
    {
        const LinearPlant plant = demo_plant();
        const LQWeights weights = demo_weights();
        struct Variant {
            const char* name;
            bool switching;
            int dwell;
        };
        for (const Variant v : {Variant{"dwell_noswitch", false, 1},
                                Variant{"dwell_t1", true, 1},
                                Variant{"dwell_t30", true, 30}}) {
            AdaptiveConfig config;
            config.fallback_gain = Eigen::MatrixXd::Zero(1, 2);
            config.switching_enabled = v.switching;
            config.threshold_schedule = [](std::uint64_t) { return 10.0; };
            const int dwell = v.dwell;
            config.dwell_schedule = [dwell](std::uint64_t) { return dwell; };
            const auto record =
                adaptive_run(plant, weights, config, args.dwell_horizon, args.seed);
            const std::string header = csv_header_comment(
                "experiments", args.seed,
                std::string("variant=") + v.name + " M=10 dwell=" +
                    std::to_string(v.dwell) +
                    " switch=" + (v.switching ? "on" : "off") +
                    " diverged=" + (record.diverged ? "1" : "0"));
            write_adaptive_steps_csv(dir / (std::string(v.name) + ".csv"), header,
                                     plant, record);
        }
    }

    // Part 2: logarithmic schedules on the 8-state stand-in, with the
    // per-update switching gap evaluated by Monte Carlo.
    {
        const LinearPlant plant = args.plant_path.empty()
                                      ? standin_plant()
                                      : load_plant(args.plant_path);
        const LQWeights weights = args.weights_path.empty()
                                      ? standin_weights()
                                      : load_weights(args.weights_path);
        AdaptiveConfig config;
        config.fallback_gain =
            Eigen::MatrixXd::Zero(plant.input_dim(), plant.state_dim());
        const auto record = adaptive_run(plant, weights, config,
                                         args.learning_horizon, args.seed);
        const std::string header = csv_header_comment(
            "experiments", args.seed,
            "variant=learning M=schedule dwell=schedule horizon=" +
                std::to_string(args.learning_horizon) +
                " diverged=" + (record.diverged ? std::string("1") : "0"));
        write_adaptive_steps_csv(dir / "learning_steps.csv", header, plant, record);
        write_updates_csv(dir / "learning_updates.csv", header, record);
        const auto curve =
            gap_curve(plant, weights, record, args.eval_horizon,
                      args.eval_trajectories, args.seed + 1, args.threads);
        write_gap_csv(dir / "learning_gap.csv", header, curve);
    }
    std::cout << "wrote bundle under " << dir.string() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Switched LQR safety toolkit"};
    app.set_version_flag("--version", "safelqr 0.1.0");
    app.require_subcommand(1);

    DareArgs dare_args;
    auto* dare_cmd = app.add_subcommand("dare", "Solve the Riccati equation");
    dare_cmd->add_option("--plant", dare_args.plant_path, "plant file")->required();
    dare_cmd->add_option("--weights", dare_args.weights_path, "weights file")
        ->required();
    dare_cmd->add_option("--out", dare_args.out_path, "also write the report here");

    CertifyArgs certify_args;
    auto* certify_cmd =
        app.add_subcommand("certify", "Build and check stability certificates");
    certify_cmd->add_option("--plant", certify_args.plant_path)->required();
    certify_cmd->add_option("--weights", certify_args.weights_path)->required();
    certify_cmd->add_option("--k0", certify_args.k0_path, "fallback gain file")
        ->required();
    certify_cmd->add_option("--k1", certify_args.k1_path, "primary gain file");
    certify_cmd->add_option("--rho0", certify_args.rho0, "fallback rate override");
    certify_cmd->add_option("--rho", certify_args.rho, "common rate override");
    certify_cmd->add_option("--threshold", certify_args.threshold);
    certify_cmd->add_option("--dwell", certify_args.dwell);
    certify_cmd->add_option("--out", certify_args.out_path);

    CertifyArgs bound_args;
    auto* bound_cmd =
        app.add_subcommand("bound", "Evaluate every bound at a given (M, t)");
    bound_cmd->add_option("--plant", bound_args.plant_path)->required();
    bound_cmd->add_option("--weights", bound_args.weights_path)->required();
    bound_cmd->add_option("--k0", bound_args.k0_path)->required();
    bound_cmd->add_option("--k1", bound_args.k1_path)->required();
    double bound_threshold = 0.0;
    int bound_dwell = 1;
    bound_cmd->add_option("--threshold", bound_threshold)->required();
    bound_cmd->add_option("--dwell", bound_dwell)->required();
    bound_cmd->add_option("--rho0", bound_args.rho0);
    bound_cmd->add_option("--rho", bound_args.rho);
    bound_cmd->add_option("--out", bound_args.out_path);

    SimulateArgs sim_args;
    auto* sim_cmd = app.add_subcommand("simulate", "Roll out and estimate the cost");
    sim_cmd->add_option("--plant", sim_args.plant_path)->required();
    sim_cmd->add_option("--weights", sim_args.weights_path)->required();
    sim_cmd->add_option("--gain", sim_args.gain_path, "plain linear feedback");
    sim_cmd->add_option("--k0", sim_args.k0_path);
    sim_cmd->add_option("--k1", sim_args.k1_path);
    sim_cmd->add_option("--threshold", sim_args.threshold);
    sim_cmd->add_option("--dwell", sim_args.dwell);
    sim_cmd->add_option("--horizon", sim_args.horizon);
    sim_cmd->add_option("--trajectories", sim_args.trajectories);
    sim_cmd->add_option("--seed", sim_args.seed);
    sim_cmd->add_option("--threads", sim_args.threads);
    sim_cmd->add_option("--out", sim_args.out_prefix, "output prefix")->required();

    GapSweepArgs sweep_args;
    auto* sweep_cmd =
        app.add_subcommand("gap-sweep", "Sweep the threshold: bound vs Monte Carlo");
    sweep_cmd->add_option("--plant", sweep_args.plant_path)->required();
    sweep_cmd->add_option("--weights", sweep_args.weights_path)->required();
    sweep_cmd->add_option("--k0", sweep_args.k0_path)->required();
    sweep_cmd->add_option("--k1", sweep_args.k1_path)->required();
    sweep_cmd->add_option("--m-start", sweep_args.m_start,
                          "first threshold (default: the analysis floor)");
    sweep_cmd->add_option("--m-step", sweep_args.m_step);
    sweep_cmd->add_option("--m-count", sweep_args.m_count);
    sweep_cmd->add_option("--dwell", sweep_args.dwell,
                          "dwell time (default: certified minimum)");
    sweep_cmd->add_option("--horizon", sweep_args.horizon);
    sweep_cmd->add_option("--trajectories", sweep_args.trajectories);
    sweep_cmd->add_option("--seed", sweep_args.seed);
    sweep_cmd->add_option("--threads", sweep_args.threads);
    sweep_cmd->add_option("--out", sweep_args.out_prefix)->required();

    AdaptiveArgs adaptive_args;
    auto* adaptive_cmd =
        app.add_subcommand("adaptive", "Least-squares learning with switching");
    adaptive_cmd->add_option("--plant", adaptive_args.plant_path)->required();
    adaptive_cmd->add_option("--weights", adaptive_args.weights_path)->required();
    adaptive_cmd->add_option("--k0", adaptive_args.k0_path,
                             "fallback gain file (default: zero)");
    adaptive_cmd->add_option("--horizon", adaptive_args.horizon);
    adaptive_cmd->add_option("--seed", adaptive_args.seed);
    adaptive_cmd->add_option("--switch", adaptive_args.switch_mode, "on|off");
    adaptive_cmd->add_option("--M", adaptive_args.threshold, "FLOAT or 'schedule'");
    adaptive_cmd->add_option("--dwell", adaptive_args.dwell, "INT or 'schedule'");
    adaptive_cmd->add_option("--eval-horizon", adaptive_args.eval_horizon);
    adaptive_cmd->add_option("--eval-trajectories", adaptive_args.eval_trajectories);
    adaptive_cmd->add_flag("--gap,!--no-gap", adaptive_args.gap,
                           "evaluate the per-update switching gap");
    adaptive_cmd->add_option("--threads", adaptive_args.threads);
    adaptive_cmd->add_option("--out", adaptive_args.out_prefix)->required();

    BundleArgs bundle_args;
    auto* bundle_cmd = app.add_subcommand(
        "experiments", "One-command experiment bundle on the bundled systems");
    bundle_cmd->add_option("--plant", bundle_args.plant_path,
                           "override the stand-in plant");
    bundle_cmd->add_option("--weights", bundle_args.weights_path);
    bundle_cmd->add_option("--out", bundle_args.out_dir);
    bundle_cmd->add_option("--seed", bundle_args.seed);
    bundle_cmd->add_option("--dwell-horizon", bundle_args.dwell_horizon);
    bundle_cmd->add_option("--learning-horizon", bundle_args.learning_horizon);
    bundle_cmd->add_option("--eval-horizon", bundle_args.eval_horizon);
    bundle_cmd->add_option("--eval-trajectories", bundle_args.eval_trajectories);
    bundle_cmd->add_option("--threads", bundle_args.threads);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (dare_cmd->parsed()) return run_dare(dare_args);
        if (certify_cmd->parsed()) return run_certify(certify_args);
        if (bound_cmd->parsed()) {
            bound_args.threshold = bound_threshold;
            bound_args.dwell = bound_dwell;
            return run_certify(bound_args);
        }
        if (sim_cmd->parsed()) return run_simulate(sim_args);
        if (sweep_cmd->parsed()) return run_gap_sweep(sweep_args);
        if (adaptive_cmd->parsed()) return run_adaptive(adaptive_args);
        if (bundle_cmd->parsed()) return run_bundle(bundle_args);
    } catch (const ParseError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitInput;
}
