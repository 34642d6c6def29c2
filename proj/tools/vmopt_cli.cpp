// Command-line surface for the incentive-timing toolkit: forward simulation,
// the three optimizers, the agent-based validation experiment, named
// scenarios, parameter sweeps and the end-to-end validation suite.
//
// Exit codes: 0 success, 2 configuration error, 3 solver non-convergence,
// 4 validation failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vmopt/abm.hpp"
#include "vmopt/optimize.hpp"
#include "vmopt/pmp.hpp"
#include "vmopt/scenario.hpp"
#include "vmopt/validate.hpp"

namespace fs = std::filesystem;
using namespace vmopt;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNoConvergence = 3;
constexpr int kExitValidation = 4;

struct CommonOpts {
    std::string config_path;
    std::string scenario_name;
    std::string out_dir;
    std::int64_t seed = -1;
    double dt = 0.0;
    double control_dt = 0.0;
    int starts = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "Path to a scenario config file");
    cmd->add_option("--scenario", opts.scenario_name, "Named scenario (see `scenario --list`)");
    cmd->add_option("--out", opts.out_dir, "Output directory (default $VMOPT_OUT_DIR or '.')");
    cmd->add_option("--seed", opts.seed, "Base seed for all derived random streams");
    cmd->add_option("--dt", opts.dt, "Integration step");
    cmd->add_option("--control-dt", opts.control_dt, "Control grid step");
    cmd->add_option("--starts", opts.starts, "Multi-start count for the optimizers");
}

ScenarioConfig load_scenario(const CommonOpts& opts, const std::string& fallback = "base") {
    if (!opts.config_path.empty() && !opts.scenario_name.empty())
        throw std::invalid_argument("use either --config or --scenario, not both");
    ScenarioConfig cfg = !opts.config_path.empty() ? parse_config_file(opts.config_path)
                         : named_scenario(opts.scenario_name.empty() ? fallback : opts.scenario_name);
    if (opts.seed >= 0)
        cfg.solver.seed = std::uint64_t(opts.seed);
    if (opts.dt > 0.0)
        cfg.solver.dt = opts.dt;
    if (opts.control_dt > 0.0)
        cfg.solver.control_dt = opts.control_dt;
    if (opts.starts > 0) {
        cfg.solver.nlp_starts = opts.starts;
        cfg.solver.switch_starts = opts.starts;
    }
    cfg.validate();
    return cfg;
}

fs::path output_dir(const CommonOpts& opts) {
    if (!opts.out_dir.empty())
        return opts.out_dir;
    if (const char* env = std::getenv("VMOPT_OUT_DIR"); env && *env)
        return env;
    return ".";
}

fs::path write_file(const fs::path& dir, const std::string& name,
                    const std::function<void(std::ostream&)>& writer) {
    fs::create_directories(dir);
    const fs::path path = dir / name;
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("cannot open output file " + path.string());
    writer(os);
    return path;
}

void set_model_param(ModelParams& p, const std::string& name, double value) {
    if (name == "alpha") p.alpha = value;
    else if (name == "beta") p.beta = value;
    else if (name == "gamma") p.gamma = value;
    else if (name == "delta") p.delta = value;
    else if (name == "eps1") p.eps1 = value;
    else if (name == "eps2") p.eps2 = value;
    else if (name == "cost_referral") p.cost_referral = value;
    else if (name == "cost_direct") p.cost_direct = value;
    else if (name == "horizon") p.horizon = value;
    else throw std::invalid_argument("unknown sweep parameter '" + name + "'");
}

FbsOptions fbs_options(const ScenarioConfig& cfg) {
    FbsOptions o;
    o.dt = cfg.solver.fbs_dt;
    o.max_iters = cfg.solver.fbs_max_iters;
    o.damping = cfg.solver.fbs_damping;
    return o;
}

SwitchTimeOptions switch_options(const ScenarioConfig& cfg) {
    SwitchTimeOptions o;
    o.dt = cfg.solver.dt;
    o.starts = cfg.solver.switch_starts;
    o.seed = cfg.solver.seed;
    return o;
}

NlpOptions nlp_options(const ScenarioConfig& cfg) {
    NlpOptions o;
    o.dt = cfg.solver.dt;
    o.control_dt = cfg.solver.control_dt;
    o.starts = cfg.solver.nlp_starts;
    o.seed = cfg.solver.seed;
    return o;
}

std::string solver_for(const ScenarioConfig& cfg) {
    if (cfg.solver.solver != "auto")
        return cfg.solver.solver;
    return cfg.net.num_classes() == 1 ? "fbs" : "nlp";
}

// On-intervals of every program in time units, e.g. "u1=[0,1.6]+(5.8,10]".
std::string describe_windows(const ControlSchedule& sched) {
    std::ostringstream os;
    os << std::setprecision(3);
    auto one = [&](const char* tag, std::size_t k, const std::vector<double>& row) {
        const auto pat = program_pattern(row);
        os << ' ' << tag << k + 1 << '=';
        if (pat.runs.empty()) {
            os << "off";
            return;
        }
        for (std::size_t r = 0; r < pat.runs.size(); ++r) {
            const auto [a, b] = pat.runs[r];
            os << (r ? "+" : "") << '[' << double(a) * sched.control_dt << ','
               << double(b + 1) * sched.control_dt << ']';
        }
    };
    for (std::size_t k = 0; k < sched.num_classes(); ++k) {
        one("u", k, sched.u[k]);
        one("v", k, sched.v[k]);
    }
    return os.str();
}

// Runs the configured solver and returns (schedule, profit, converged, label).
struct SolveOutcome {
    ControlSchedule schedule;
    double profit = 0.0;
    bool converged = false;
    std::string solver;
};

SolveOutcome run_solver(const ScenarioConfig& cfg, const std::string& which) {
    SolveOutcome out;
    out.solver = which;
    if (which == "fbs") {
        auto res = fbs_solve(cfg.x0, cfg.net, cfg.params, fbs_options(cfg));
        out.schedule = res.schedule;
        out.profit = res.profit;
        out.converged = res.converged;
    } else if (which == "switch") {
        auto res = optimize_switch_times(cfg.x0, cfg.net, cfg.params, switch_options(cfg));
        out.schedule = res.schedule;
        out.profit = res.profit;
        out.converged = res.converged;
    } else if (which == "nlp") {
        auto res = nlp_solve(cfg.x0, cfg.net, cfg.params, nlp_options(cfg));
        out.schedule = res.schedule;
        out.profit = res.profit;
        out.converged = res.converged;
    } else {
        throw std::invalid_argument("unknown solver '" + which + "'");
    }
    return out;
}

int cmd_simulate(const CommonOpts& common, double u_const, double v_const) {
    auto cfg = load_scenario(common);
    auto sched = ControlSchedule::constant(cfg.net.num_classes(), cfg.params.horizon,
                                           cfg.solver.control_dt, u_const, v_const);
    auto traj = integrate(cfg.x0, sched, cfg.net, cfg.params, cfg.solver.dt);
    auto path = write_file(output_dir(common), cfg.name + "_trajectory.csv",
                           [&](std::ostream& os) { write_trajectory_csv(os, traj); });
    std::cout << "simulate " << cfg.name << ": profit=" << std::setprecision(12)
              << profit(traj, cfg.net) << " -> " << path.string() << "\n";
    return kExitOk;
}

int cmd_pmp(const CommonOpts& common) {
    auto cfg = load_scenario(common);
    auto res = fbs_solve(cfg.x0, cfg.net, cfg.params, fbs_options(cfg));
    auto dir = output_dir(common);
    write_file(dir, cfg.name + "_trajectory.csv",
               [&](std::ostream& os) { write_trajectory_csv(os, res.trajectory); });
    write_file(dir, cfg.name + "_costate.csv",
               [&](std::ostream& os) { write_costate_csv(os, res.costates); });
    write_file(dir, cfg.name + "_schedule.csv", [&](std::ostream& os) {
        write_schedule_csv(os, res.schedule, cfg.x0, cfg.net, cfg.params, "fbs", 1, cfg.solver.seed,
                           cfg.solver.fbs_dt);
    });
    auto report = verify_lemmas(res.trajectory, res.costates, cfg.params);
    std::cout << "pmp " << cfg.name << ": profit=" << std::setprecision(12) << res.profit
              << " label=" << to_string(classify(res.schedule)) << " iterations=" << res.iterations
              << (res.converged ? "" : " NOT-CONVERGED") << "\n"
              << report.to_string();
    return res.converged ? kExitOk : kExitNoConvergence;
}

int cmd_switch_opt(const CommonOpts& common) {
    auto cfg = load_scenario(common);
    auto res = optimize_switch_times(cfg.x0, cfg.net, cfg.params, switch_options(cfg));
    auto dir = output_dir(common);
    write_file(dir, cfg.name + "_schedule.csv", [&](std::ostream& os) {
        write_schedule_csv(os, res.schedule, cfg.x0, cfg.net, cfg.params, "switch",
                           cfg.solver.switch_starts, cfg.solver.seed, cfg.solver.dt);
    });
    std::cout << "switch-opt " << cfg.name << ": profit=" << std::setprecision(12) << res.profit
              << " label=" << to_string(classify(res.schedule));
    for (std::size_t k = 0; k < res.switch_times.size(); ++k) {
        const auto& st = res.switch_times[k];
        std::cout << " class" << k + 1 << "=(" << std::setprecision(4) << st.tau1 << "," << st.tau2
                  << "," << st.tau3 << "," << st.tau4 << ")";
    }
    std::cout << (res.converged ? "" : " NOT-CONVERGED") << "\n";
    return res.converged ? kExitOk : kExitNoConvergence;
}

int cmd_nlp(const CommonOpts& common) {
    auto cfg = load_scenario(common);
    auto res = nlp_solve(cfg.x0, cfg.net, cfg.params, nlp_options(cfg));
    auto dir = output_dir(common);
    write_file(dir, cfg.name + "_schedule.csv", [&](std::ostream& os) {
        write_schedule_csv(os, res.schedule, cfg.x0, cfg.net, cfg.params, "nlp",
                           cfg.solver.nlp_starts, cfg.solver.seed, cfg.solver.dt);
    });
    std::cout << "nlp " << cfg.name << ": profit=" << std::setprecision(12) << res.profit
              << " label=" << to_string(classify(res.schedule))
              << " interior=" << res.interior_fraction
              << (res.rounding_loss_flagged ? " ROUNDING-LOSS" : "")
              << (res.converged ? "" : " NOT-CONVERGED") << "\n";
    return res.converged ? kExitOk : kExitNoConvergence;
}

int cmd_abm(const CommonOpts& common, const std::vector<std::size_t>& n_list, int replicas,
            double u_const, double v_const) {
    auto cfg = load_scenario(common);
    auto sched = ControlSchedule::constant(cfg.net.num_classes(), cfg.params.horizon,
                                           cfg.solver.control_dt, u_const, v_const);
    auto report = compare_abm_ode(cfg.net, cfg.params, sched, cfg.x0, n_list, replicas,
                                  cfg.solver.seed, cfg.solver.dt);
    auto path = write_file(output_dir(common), cfg.name + "_convergence.csv",
                           [&](std::ostream& os) { write_convergence_csv(os, report, cfg.solver.seed); });
    for (const auto& row : report.rows) {
        std::cout << "N=" << row.n_agents << " replicas=" << row.replicas << " sup-err";
        for (std::size_t k = 0; k < row.mean_sup_err.size(); ++k)
            std::cout << " class" << k + 1 << "=" << std::setprecision(4) << row.mean_sup_err[k]
                      << "(se " << row.stderr_sup[k] << ")";
        std::cout << " profit-err=" << row.mean_profit_err << "\n";
    }
    std::cout << (report.monotone_ok ? "convergence monotone in N" : "WARNING: " + report.note)
              << " -> " << path.string() << "\n";
    return kExitOk;
}

int cmd_scenario(const CommonOpts& common, const std::string& name, bool list) {
    if (list) {
        for (const auto& n : scenario_names())
            std::cout << n << "\n";
        return kExitOk;
    }
    CommonOpts opts = common;
    if (!name.empty())
        opts.scenario_name = name;
    auto cfg = load_scenario(opts);
    const std::string which = solver_for(cfg);
    auto dir = output_dir(common);

    if (which == "fbs" || (which == "all" && cfg.net.num_classes() == 1)) {
        // PMP bundle carries trajectory and co-states as well.
        auto res = fbs_solve(cfg.x0, cfg.net, cfg.params, fbs_options(cfg));
        write_file(dir, cfg.name + "_trajectory.csv",
                   [&](std::ostream& os) { write_trajectory_csv(os, res.trajectory); });
        write_file(dir, cfg.name + "_costate.csv",
                   [&](std::ostream& os) { write_costate_csv(os, res.costates); });
        write_file(dir, cfg.name + "_schedule.csv", [&](std::ostream& os) {
            write_schedule_csv(os, res.schedule, cfg.x0, cfg.net, cfg.params, "fbs", 1,
                               cfg.solver.seed, cfg.solver.fbs_dt);
        });
        std::cout << cfg.name << ": profit=" << std::setprecision(12) << res.profit
                  << " label=" << to_string(classify(res.schedule)) << " solver=fbs"
                  << (res.converged ? "" : " NOT-CONVERGED") << "\n";
        return res.converged ? kExitOk : kExitNoConvergence;
    }
    auto out = run_solver(cfg, which == "all" ? "nlp" : which);
    auto traj = integrate(cfg.x0, out.schedule, cfg.net, cfg.params, cfg.solver.dt);
    write_file(dir, cfg.name + "_trajectory.csv",
               [&](std::ostream& os) { write_trajectory_csv(os, traj); });
    write_file(dir, cfg.name + "_schedule.csv", [&](std::ostream& os) {
        write_schedule_csv(os, out.schedule, cfg.x0, cfg.net, cfg.params, out.solver,
                           out.solver == "nlp" ? cfg.solver.nlp_starts : cfg.solver.switch_starts,
                           cfg.solver.seed, cfg.solver.dt);
    });
    std::cout << cfg.name << ": profit=" << std::setprecision(12) << out.profit
              << " label=" << to_string(classify(out.schedule)) << " solver=" << out.solver
              << describe_windows(out.schedule) << (out.converged ? "" : " NOT-CONVERGED") << "\n";
    return out.converged ? kExitOk : kExitNoConvergence;
}

int cmd_sweep(const CommonOpts& common, const std::string& param, const std::vector<double>& values) {
    auto base_cfg = load_scenario(common);
    const std::string which = solver_for(base_cfg) == "fbs" ? "nlp" : solver_for(base_cfg);
    std::ostringstream table;
    table << "value,profit,label\n" << std::setprecision(12);
    for (double value : values) {
        auto cfg = base_cfg;
        set_model_param(cfg.params, param, value);
        cfg.validate();
        auto out = run_solver(cfg, which == "all" ? "nlp" : which);
        table << value << ',' << out.profit << ',' << to_string(classify(out.schedule)) << '\n';
    }
    auto path = write_file(output_dir(common), base_cfg.name + "_sweep_" + param + ".csv",
                           [&](std::ostream& os) { os << table.str(); });
    std::cout << table.str() << "-> " << path.string() << "\n";
    return kExitOk;
}

int cmd_validate(const CommonOpts& common, bool skip_abm) {
    ValidationOptions opts;
    opts.skip_abm = skip_abm;
    if (common.seed >= 0)
        opts.seed = std::uint64_t(common.seed);
    auto results = run_validation(opts);
    print_validation(std::cout, results);
    return all_pass(results) ? kExitOk : kExitValidation;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimal timing of referral rewards and direct incentives for product diffusion "
                 "on social networks"};
    app.require_subcommand(1);

    CommonOpts common;
    double u_const = 0.0, v_const = 0.0;
    std::vector<std::size_t> n_list{1000, 10000};
    int replicas = 50;
    std::string scenario_arg, sweep_param;
    std::vector<double> sweep_values;
    bool list_scenarios = false, skip_abm = false;

    auto* simulate = app.add_subcommand("simulate", "Integrate the ODE under constant controls");
    add_common(simulate, common);
    simulate->add_option("--u", u_const, "Referral program level in [0,1]");
    simulate->add_option("--v", v_const, "Direct-incentive program level in [0,1]");

    auto* pmp = app.add_subcommand("pmp", "Forward-backward sweep solver (single class)");
    add_common(pmp, common);

    auto* switch_opt = app.add_subcommand("switch-opt", "Switching-time optimization");
    add_common(switch_opt, common);

    auto* nlp = app.add_subcommand("nlp", "Discretized NLP with projected gradient ascent");
    add_common(nlp, common);

    auto* abm = app.add_subcommand("abm", "Agent-based chain vs ODE convergence experiment");
    add_common(abm, common);
    abm->add_option("--n-list", n_list, "Population sizes (increasing)");
    abm->add_option("--replicas", replicas, "Replicas per population size");
    abm->add_option("--u", u_const, "Referral program level {0,1}");
    abm->add_option("--v", v_const, "Direct-incentive program level {0,1}");

    auto* scenario = app.add_subcommand("scenario", "Run a named study end to end");
    add_common(scenario, common);
    scenario->add_option("name", scenario_arg, "Scenario name");
    scenario->add_flag("--list", list_scenarios, "List scenario names and exit");

    auto* sweep = app.add_subcommand("sweep", "Optimize across values of one model parameter");
    add_common(sweep, common);
    sweep->add_option("--param", sweep_param, "Model parameter name")->required();
    sweep->add_option("--values", sweep_values, "Parameter values");

    auto* validate = app.add_subcommand("validate", "Run the full validation suite");
    add_common(validate, common);
    validate->add_flag("--skip-abm", skip_abm, "Skip the agent-based criterion");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (simulate->parsed())
            return cmd_simulate(common, u_const, v_const);
        if (pmp->parsed())
            return cmd_pmp(common);
        if (switch_opt->parsed())
            return cmd_switch_opt(common);
        if (nlp->parsed())
            return cmd_nlp(common);
        if (abm->parsed())
            return cmd_abm(common, n_list, replicas, u_const, v_const);
        if (scenario->parsed())
            return cmd_scenario(common, scenario_arg, list_scenarios);
        if (sweep->parsed())
            return cmd_sweep(common, sweep_param, sweep_values);
        if (validate->parsed())
            return cmd_validate(common, skip_abm);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
