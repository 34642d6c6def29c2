#ifndef VMOPT_VALIDATE_HPP
#define VMOPT_VALIDATE_HPP

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "vmopt/abm.hpp"
#include "vmopt/optimize.hpp"
#include "vmopt/pmp.hpp"
#include "vmopt/scenario.hpp"

/**
 * @file   validate.hpp
 * @brief  The end-to-end validation suite: bang-bang structure, the lemma
 *         checks, three-solver agreement, figure-pattern reproduction,
 *         mean-field validity, gradient correctness, conservation bounds
 *         and the balance-equation arithmetic. Used by both the acceptance
 *         binary and the CLI `validate` subcommand.
 */

namespace vmopt {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

struct ValidationOptions {
    bool skip_abm = false;
    std::uint64_t seed = 42;
};

namespace detail {

class Stopwatch {
  public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

} // namespace detail

inline std::vector<CriterionResult> run_validation(const ValidationOptions& opts = {}) {
    std::vector<CriterionResult> results;
    const std::vector<std::string> single_class_names{"base", "fig2-beta013", "fig3-alpha009",
                                                      "fig4-payouts", "fig5-payouts"};

    // Shared artifacts: one cross-check per single-class study.
    std::map<std::string, CrosscheckReport> checks;
    detail::Stopwatch shared_clock;
    for (const auto& name : single_class_names) {
        auto cfg = named_scenario(name);
        CrosscheckOptions copts;
        copts.nlp.seed = opts.seed;
        copts.switch_opt.seed = opts.seed;
        checks.emplace(name, crosscheck(cfg.x0, cfg.net, cfg.params, copts));
    }
    const double shared_seconds = shared_clock.seconds();

    { // 1. bang-bang structure of the NLP solutions
        detail::Stopwatch clock;
        bool pass = true;
        std::ostringstream detail_os;
        for (const auto& name : single_class_names) {
            const auto& nlp = checks.at(name).nlp;
            const auto up = program_pattern(nlp.schedule.u[0]);
            const auto vp = program_pattern(nlp.schedule.v[0]);
            const bool ok =
                up.runs.size() <= 2 && vp.runs.size() <= 2 && nlp.interior_fraction < 0.05;
            pass = pass && ok;
            detail_os << name << "(u:" << up.runs.size() << " v:" << vp.runs.size()
                      << " int:" << nlp.interior_fraction << (ok ? ") " : " BAD) ");
        }
        results.push_back({1, "bang-bang structure (<=2 on-intervals, interior <5%)", pass,
                           detail_os.str(), clock.seconds()});
    }
    { // 2. lemma suite on the converged base sweep solution
        detail::Stopwatch clock;
        auto cfg = named_scenario("base");
        auto fbs = fbs_solve(cfg.x0, cfg.net, cfg.params);
        auto report = verify_lemmas(fbs.trajectory, fbs.costates, cfg.params);
        std::ostringstream detail_os;
        for (const auto& check : report.checks)
            if (!check.pass)
                detail_os << check.name << " FAILED (" << check.detail << "); ";
        if (report.all_pass)
            detail_os << "H, costates, zeta, switching counts all within tolerance";
        results.push_back({2, "lemma suite on the converged base PMP solution",
                           fbs.converged && report.all_pass, detail_os.str(), clock.seconds()});
    }
    { // 3. three-solver profit and label agreement
        detail::Stopwatch clock;
        bool pass = true;
        std::ostringstream detail_os;
        for (const auto& name : single_class_names) {
            const auto& report = checks.at(name);
            pass = pass && report.pass;
            detail_os << name << "(gap " << std::setprecision(3) << report.max_profit_gap
                      << (report.pass ? ") " : " DISAGREE) ");
        }
        results.push_back({3, "three-solver agreement (profits within 1e-3, same labels)", pass,
                           detail_os.str(), clock.seconds() + shared_seconds});
    }
    { // 4. figure-pattern reproduction
        detail::Stopwatch clock;
        std::ostringstream detail_os;
        bool pass = true;
        auto expect = [&](bool ok, const std::string& what) {
            pass = pass && ok;
            detail_os << what << (ok ? " ok; " : " MISMATCH; ");
        };
        {
            const auto& nlp = checks.at("base").nlp;
            const auto up = program_pattern(nlp.schedule.u[0]);
            const auto vp = program_pattern(nlp.schedule.v[0]);
            expect(up.runs.size() == 2 && up.on_at_start && up.runs.back().second + 1 == up.grid_size &&
                       vp.runs.size() == 2 && vp.on_at_start &&
                       vp.runs.back().second + 1 == vp.grid_size &&
                       classify(nlp.schedule) == StrategyLabel::both_phases,
                   "base on-off-on");
        }
        {
            const auto& report = checks.at("fig2-beta013");
            expect(program_pattern(report.nlp.schedule.u[0]).terminal_only &&
                       report.nlp_label == StrategyLabel::influence_and_exploit,
                   "fig2 referral terminal-only");
        }
        {
            const auto& report = checks.at("fig3-alpha009");
            expect(program_pattern(report.nlp.schedule.v[0]).terminal_only &&
                       report.nlp_label == StrategyLabel::exploit_and_influence,
                   "fig3 direct terminal-only");
        }
        expect(checks.at("fig4-payouts").nlp_label == StrategyLabel::influence_and_exploit,
               "fig4 influence-and-exploit");
        expect(checks.at("fig5-payouts").nlp_label == StrategyLabel::exploit_and_influence,
               "fig5 exploit-and-influence");
        for (const char* name : {"fig6-disassortative", "fig7-assortative"}) {
            auto cfg = named_scenario(name);
            NlpOptions nopts;
            nopts.seed = opts.seed;
            auto res = nlp_solve(cfg.x0, cfg.net, cfg.params, nopts);
            const auto a_pat = program_pattern(res.schedule.u[0]);
            const auto b_pat = program_pattern(res.schedule.u[1]);
            if (std::string(name) == "fig6-disassortative")
                expect(b_pat.always_on && a_pat.runs.size() == 2 && a_pat.on_at_start,
                       "fig6 B always-on, A two windows");
            else
                expect(a_pat.always_on && b_pat.runs.size() == 2 && b_pat.on_at_start,
                       "fig7 A always-on, B two windows");
        }
        results.push_back({4, "figure-pattern reproduction (Figs. 1-7, structural)", pass,
                           detail_os.str(), clock.seconds()});
    }
    { // 5. mean-field validity
        if (opts.skip_abm) {
            results.push_back({5, "mean-field validity (ABM vs ODE)", true, "skipped on request", 0.0});
        } else {
            detail::Stopwatch clock;
            auto cfg = named_scenario("base");
            auto sched = ControlSchedule::constant(1, cfg.params.horizon, 0.1, 0.0, 0.0);
            auto report = compare_abm_ode(cfg.net, cfg.params, sched, cfg.x0, {1000, 10000}, 50,
                                          opts.seed);
            const double err_small = report.rows[0].mean_sup_err[0];
            const double err_large = report.rows[1].mean_sup_err[0];
            const bool pass = err_large < 0.02 && err_large < err_small;
            std::ostringstream detail_os;
            detail_os << std::setprecision(4) << "sup err: N=1000 -> " << err_small
                      << ", N=10000 -> " << err_large;
            results.push_back(
                {5, "mean-field validity (ABM vs ODE, N=10000)", pass, detail_os.str(), clock.seconds()});
        }
    }
    { // 6. gradient correctness
        detail::Stopwatch clock;
        auto cfg = named_scenario("base");
        bool pass = true;
        double worst = 0.0;
        const double h = 1e-6;
        for (int point = 0; point < 10; ++point) {
            auto rng = make_rng(opts.seed, "gradcheck", std::uint64_t(point));
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            auto sched = ControlSchedule::constant(1, cfg.params.horizon, 0.1, 0.0, 0.0);
            for (std::size_t n = 0; n < sched.num_intervals(); ++n) {
                sched.u[0][n] = unit(rng);
                sched.v[0][n] = unit(rng);
            }
            auto grad = nlp_gradient(cfg.x0, sched, cfg.net, cfg.params, 0.01);
            double sup_fd = 0.0, sup_diff = 0.0;
            for (std::size_t n = 0; n < sched.num_intervals(); ++n)
                for (int which = 0; which < 2; ++which) {
                    auto& row = which ? sched.v[0] : sched.u[0];
                    const double saved = row[n];
                    row[n] = saved + h;
                    const double fp = profit(integrate(cfg.x0, sched, cfg.net, cfg.params, 0.01), cfg.net);
                    row[n] = saved - h;
                    const double fm = profit(integrate(cfg.x0, sched, cfg.net, cfg.params, 0.01), cfg.net);
                    row[n] = saved;
                    const double fd = (fp - fm) / (2.0 * h);
                    const double an = which ? grad.dv[0][n] : grad.du[0][n];
                    sup_fd = std::max(sup_fd, std::abs(fd));
                    sup_diff = std::max(sup_diff, std::abs(an - fd));
                }
            const double rel = sup_diff / sup_fd;
            worst = std::max(worst, rel);
            pass = pass && rel < 1e-4;
        }
        std::ostringstream detail_os;
        detail_os << std::setprecision(3) << "worst relative error " << worst;
        results.push_back({6, "adjoint gradient vs central differences (10 points)", pass,
                           detail_os.str(), clock.seconds()});
    }
    { // 7. conservation and the exponential decay bound
        detail::Stopwatch clock;
        auto cfg = named_scenario("base");
        bool pass = true;
        double worst_simplex = 0.0, worst_bound = -1.0;
        auto rng = make_rng(opts.seed, "bounds-schedule");
        std::bernoulli_distribution coin(0.5);
        for (int variant = 0; variant < 5; ++variant) {
            auto sched = ControlSchedule::constant(1, cfg.params.horizon, 0.1,
                                                   variant == 1 ? 1.0 : 0.0, variant == 1 ? 1.0 : 0.0);
            if (variant >= 2)
                for (std::size_t n = 0; n < sched.num_intervals(); ++n) {
                    sched.u[0][n] = coin(rng) ? 1.0 : 0.0;
                    sched.v[0][n] = coin(rng) ? 1.0 : 0.0;
                }
            auto traj = integrate(cfg.x0, sched, cfg.net, cfg.params, 0.01);
            const double decay = cfg.params.alpha + cfg.params.delta;
            for (std::size_t m = 0; m < traj.t.size(); ++m) {
                const auto& s = traj.x[m][0];
                worst_simplex = std::max(worst_simplex, std::abs(s.i + s.r + s.theta - 1.0));
                worst_bound = std::max(worst_bound,
                                       s.i - cfg.x0[0].i * std::exp(-decay * traj.t[m]));
            }
        }
        pass = worst_simplex <= 1e-10 && worst_bound <= 1e-12;
        std::ostringstream detail_os;
        detail_os << std::setprecision(3) << "worst simplex drift " << worst_simplex
                  << ", worst decay-bound margin " << worst_bound;
        results.push_back({7, "conservation and exponential decay bound", pass, detail_os.str(),
                           clock.seconds()});
    }
    { // 8. balance-equation arithmetic and its sampled realization
        detail::Stopwatch clock;
        auto net = balance_complete(10, 2, 0.1, 0.9, 0.9);
        const double p_a_given_b = net.mixing[1][0];
        auto g = sample_graph(net, 10000, derive_seed(opts.seed, "balance-graph"));
        const double realized = g.realized_mixing[1][0];
        const bool pass = std::abs(p_a_given_b - 0.5) <= 1e-12 && std::abs(realized - 0.5) < 0.02;
        std::ostringstream detail_os;
        detail_os << std::setprecision(6) << "P(A|B)=" << p_a_given_b << ", realized " << realized;
        results.push_back(
            {8, "balance equation: P(A|B)=0.5 and sampled realization", pass, detail_os.str(),
             clock.seconds()});
    }
    return results;
}

inline bool all_pass(const std::vector<CriterionResult>& results) {
    for (const auto& r : results)
        if (!r.pass)
            return false;
    return true;
}

inline void print_validation(std::ostream& os, const std::vector<CriterionResult>& results) {
    for (const auto& r : results) {
        std::ostringstream line;
        line << (r.pass ? "[PASS] " : "[FAIL] ") << r.id << ". " << r.name << " (" << std::fixed
             << std::setprecision(1) << r.seconds << "s)";
        os << line.str() << "\n       " << r.detail << "\n";
    }
}

} // namespace vmopt

#endif // VMOPT_VALIDATE_HPP
