#ifndef VMOPT_OPTIMIZE_HPP
#define VMOPT_OPTIMIZE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vmopt/integrate.hpp"
#include "vmopt/model.hpp"
#include "vmopt/parallel.hpp"
#include "vmopt/pmp.hpp"
#include "vmopt/rng.hpp"

/**
 * @file   optimize.hpp
 * @brief  Direct schedule optimizers and the strategy classifier:
 *         switching-time search (derivative-free simplex over the per-class
 *         tau boxes), discretized NLP (projected gradient ascent with an
 *         exact discrete-adjoint gradient and multi-start), and a
 *         three-solver cross-check against the sweep solver.
 */

namespace vmopt {

// ---------------------------------------------------------------------------
// Strategy classification

enum class StrategyLabel {
    none,
    always_on,
    both_phases,
    influence_and_exploit,
    exploit_and_influence,
};

inline const char* to_string(StrategyLabel label) {
    switch (label) {
    case StrategyLabel::none: return "none";
    case StrategyLabel::always_on: return "always-on";
    case StrategyLabel::both_phases: return "both-phases";
    case StrategyLabel::influence_and_exploit: return "influence-and-exploit";
    case StrategyLabel::exploit_and_influence: return "exploit-and-influence";
    }
    return "?";
}

/// Shape summary of one binary program signal.
/// always_on means on for at least 95% of the grid; terminal_only means the
/// earliest on-index falls in the last 30% of the grid. Both thresholds are
/// the documented classification constants.
struct ProgramPattern {
    std::vector<std::pair<std::size_t, std::size_t>> runs; // maximal on-runs
    std::size_t grid_size = 0;
    double on_fraction = 0.0;
    bool any_on = false;
    bool on_at_start = false;
    bool always_on = false;
    bool terminal_only = false;
};

inline ProgramPattern program_pattern(const std::vector<double>& row) {
    ProgramPattern pat;
    pat.grid_size = row.size();
    std::size_t on_count = 0;
    for (std::size_t n = 0; n < row.size(); ++n) {
        if (row[n] != 0.0 && row[n] != 1.0)
            throw std::invalid_argument("program_pattern: binary schedule required");
        if (row[n] != 1.0)
            continue;
        ++on_count;
        if (!pat.runs.empty() && pat.runs.back().second + 1 == n)
            pat.runs.back().second = n;
        else
            pat.runs.emplace_back(n, n);
    }
    pat.any_on = on_count > 0;
    pat.on_fraction = row.empty() ? 0.0 : double(on_count) / double(row.size());
    pat.on_at_start = !row.empty() && row.front() == 1.0;
    pat.always_on = pat.on_fraction >= 0.95;
    pat.terminal_only = pat.any_on && pat.runs.front().first >= (row.size() * 7) / 10;
    return pat;
}

/// Strategy label of the (u, v) program pair of one class. Deterministic
/// tie rules beyond the canonical shapes: with neither program on at t=0,
/// the earlier starter names the phase order; a shared start names
/// both-phases.
inline StrategyLabel classify(const ControlSchedule& sched, std::size_t class_idx = 0) {
    if (class_idx >= sched.num_classes())
        throw std::invalid_argument("classify: class index out of range");
    const auto u = program_pattern(sched.u[class_idx]);
    const auto v = program_pattern(sched.v[class_idx]);
    if (!u.any_on && !v.any_on)
        return StrategyLabel::none;
    if (u.always_on && v.always_on)
        return StrategyLabel::always_on;
    if (u.on_at_start && v.on_at_start)
        return StrategyLabel::both_phases;
    if (v.on_at_start)
        return StrategyLabel::influence_and_exploit;
    if (u.on_at_start)
        return StrategyLabel::exploit_and_influence;
    if (!v.any_on)
        return StrategyLabel::exploit_and_influence;
    if (!u.any_on)
        return StrategyLabel::influence_and_exploit;
    if (u.runs.front().first < v.runs.front().first)
        return StrategyLabel::exploit_and_influence;
    if (v.runs.front().first < u.runs.front().first)
        return StrategyLabel::influence_and_exploit;
    return StrategyLabel::both_phases;
}

// ---------------------------------------------------------------------------
// Discrete-adjoint gradient of the discretized objective

struct ScheduleGradient {
    double objective = 0.0;
    std::vector<std::vector<double>> du; // [class][interval]
    std::vector<std::vector<double>> dv;
};

namespace detail {

// Accumulates J_x^T w into gx and the control parts into gu/gv, where the
// Jacobians are of the augmented rates (drift plus the two cost rates) and
// w carries the drift weights wx and cost-rate weights wcr/wcd.
inline void stage_vjp(const StateVector& x, const ClassNetwork& net, const ModelParams& p,
                      const std::vector<double>& u, const std::vector<double>& v,
                      const StateVector& wx, double wcr, double wcd,
                      const std::vector<double>& r_agg, const std::vector<double>& th_agg,
                      StateVector& gx, std::vector<double>& gu, std::vector<double>& gv) {
    const std::size_t n = x.size();
    gx.assign(n, ClassState{0.0, 0.0, 0.0});
    if (p.reward_target == RewardTarget::buyer) {
        for (std::size_t k = 0; k < n; ++k) {
            const double soc = p.beta + u[k] * p.eps1;
            const double ext = p.alpha + v[k] * p.eps2;
            const double ref_pay = net.weights[k] * p.cost_referral * (p.beta + p.eps1);
            const double dir_pay = net.weights[k] * p.cost_direct * (p.alpha + p.eps2);
            gx[k].i = wx[k].i * (-(soc * r_agg[k]) - ext - p.gamma * th_agg[k] - p.delta) +
                      wx[k].r * (soc * r_agg[k] + ext) + wx[k].theta * (p.gamma * th_agg[k] + p.delta) +
                      wcr * u[k] * ref_pay * r_agg[k] + wcd * v[k] * dir_pay;
            gu[k] += p.eps1 * x[k].i * r_agg[k] * (wx[k].r - wx[k].i) + wcr * ref_pay * x[k].i * r_agg[k];
            gv[k] += p.eps2 * x[k].i * (wx[k].r - wx[k].i) + wcd * dir_pay * x[k].i;
        }
        for (std::size_t k = 0; k < n; ++k) {
            const double soc = p.beta + u[k] * p.eps1;
            const double ref_pay = net.weights[k] * u[k] * p.cost_referral * (p.beta + p.eps1);
            for (std::size_t j = 0; j < n; ++j) {
                gx[j].r += net.mixing[k][j] * x[k].i * (soc * (wx[k].r - wx[k].i) + wcr * ref_pay);
                gx[j].theta += net.mixing[k][j] * x[k].i * p.gamma * (wx[k].theta - wx[k].i);
            }
        }
        return;
    }
    // Recommender targeting: the boost and the pay-out ride on the
    // rewarded-class share of each link average.
    const double pay = p.cost_referral * (p.beta + p.eps1);
    for (std::size_t k = 0; k < n; ++k) {
        double boosted = 0.0, rewarded = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            boosted += net.mixing[k][j] * (p.beta + u[j] * p.eps1) * x[j].r;
            rewarded += net.mixing[k][j] * u[j] * x[j].r;
        }
        const double ext = p.alpha + v[k] * p.eps2;
        const double dir_pay = net.weights[k] * p.cost_direct * (p.alpha + p.eps2);
        gx[k].i = wx[k].i * (-boosted - ext - p.gamma * th_agg[k] - p.delta) +
                  wx[k].r * (boosted + ext) + wx[k].theta * (p.gamma * th_agg[k] + p.delta) +
                  wcr * net.weights[k] * pay * rewarded + wcd * v[k] * dir_pay;
        gv[k] += p.eps2 * x[k].i * (wx[k].r - wx[k].i) + wcd * dir_pay * x[k].i;
        for (std::size_t j = 0; j < n; ++j) {
            gx[j].r += net.mixing[k][j] * x[k].i *
                       ((p.beta + u[j] * p.eps1) * (wx[k].r - wx[k].i) + wcr * net.weights[k] * pay * u[j]);
            gx[j].theta += net.mixing[k][j] * x[k].i * p.gamma * (wx[k].theta - wx[k].i);
            gu[j] += net.mixing[k][j] * x[k].i * x[j].r *
                     (p.eps1 * (wx[k].r - wx[k].i) + wcr * net.weights[k] * pay);
        }
    }
}

} // namespace detail

/// Objective (profit of the discretized system) and its exact gradient with
/// respect to every relaxed control value, by reverse-mode differentiation
/// through the RK4 steps. The forward pass is integrate() itself, so the
/// objective value equals profit(integrate(...)).
inline ScheduleGradient nlp_gradient(const StateVector& x0, const ControlSchedule& sched,
                                     const ClassNetwork& net, const ModelParams& p, double dt = 0.01) {
    auto traj = integrate(x0, sched, net, p, dt);
    const std::size_t n = net.num_classes();
    const std::size_t steps = traj.num_steps();
    const std::size_t per_interval = detail::exact_ratio(sched.control_dt, dt, "dt must divide control_dt");

    ScheduleGradient grad;
    grad.objective = profit(traj, net);
    grad.du.assign(n, std::vector<double>(sched.num_intervals(), 0.0));
    grad.dv.assign(n, std::vector<double>(sched.num_intervals(), 0.0));

    // Adjoint of the augmented state; the cost components stay at -1 because
    // the dynamics never read the accumulated costs.
    StateVector lambda(n);
    for (std::size_t k = 0; k < n; ++k)
        lambda[k] = ClassState{0.0, net.weights[k], 0.0};
    const double wc = -1.0;

    StateVector y2, y3, y4, k1, k2, k3;
    StateVector vjp1, vjp2, vjp3, vjp4, wx;
    std::vector<double> u(n), v(n), r_agg, th_agg;
    std::vector<double> gu(n), gv(n);

    for (std::size_t m = steps; m-- > 0;) {
        const std::size_t interval = std::min(m / per_interval, sched.num_intervals() - 1);
        for (std::size_t k = 0; k < n; ++k) {
            u[k] = sched.u[k][interval];
            v[k] = sched.v[k][interval];
        }
        // Recompute the forward stages of this step from the stored state.
        const StateVector& y1 = traj.x[m];
        detail::neighbor_aggregates(y1, net, r_agg, th_agg);
        detail::drift_unchecked(y1, net, p, u, v, r_agg, th_agg, k1);
        detail::axpy_state(y2, y1, 0.5 * dt, k1);
        detail::neighbor_aggregates(y2, net, r_agg, th_agg);
        detail::drift_unchecked(y2, net, p, u, v, r_agg, th_agg, k2);
        detail::axpy_state(y3, y1, 0.5 * dt, k2);
        detail::neighbor_aggregates(y3, net, r_agg, th_agg);
        detail::drift_unchecked(y3, net, p, u, v, r_agg, th_agg, k3);
        detail::axpy_state(y4, y1, dt, k3);

        std::fill(gu.begin(), gu.end(), 0.0);
        std::fill(gv.begin(), gv.end(), 0.0);
        const double w16 = dt / 6.0, w13 = dt / 3.0;

        detail::neighbor_aggregates(y4, net, r_agg, th_agg);
        wx.assign(n, ClassState{});
        for (std::size_t k = 0; k < n; ++k) {
            wx[k].i = w16 * lambda[k].i;
            wx[k].r = w16 * lambda[k].r;
            wx[k].theta = w16 * lambda[k].theta;
        }
        detail::stage_vjp(y4, net, p, u, v, wx, wc * w16, wc * w16, r_agg, th_agg, vjp4, gu, gv);

        detail::neighbor_aggregates(y3, net, r_agg, th_agg);
        for (std::size_t k = 0; k < n; ++k) {
            wx[k].i = w13 * lambda[k].i + dt * vjp4[k].i;
            wx[k].r = w13 * lambda[k].r + dt * vjp4[k].r;
            wx[k].theta = w13 * lambda[k].theta + dt * vjp4[k].theta;
        }
        detail::stage_vjp(y3, net, p, u, v, wx, wc * w13, wc * w13, r_agg, th_agg, vjp3, gu, gv);

        detail::neighbor_aggregates(y2, net, r_agg, th_agg);
        for (std::size_t k = 0; k < n; ++k) {
            wx[k].i = w13 * lambda[k].i + 0.5 * dt * vjp3[k].i;
            wx[k].r = w13 * lambda[k].r + 0.5 * dt * vjp3[k].r;
            wx[k].theta = w13 * lambda[k].theta + 0.5 * dt * vjp3[k].theta;
        }
        detail::stage_vjp(y2, net, p, u, v, wx, wc * w13, wc * w13, r_agg, th_agg, vjp2, gu, gv);

        detail::neighbor_aggregates(y1, net, r_agg, th_agg);
        for (std::size_t k = 0; k < n; ++k) {
            wx[k].i = w16 * lambda[k].i + 0.5 * dt * vjp2[k].i;
            wx[k].r = w16 * lambda[k].r + 0.5 * dt * vjp2[k].r;
            wx[k].theta = w16 * lambda[k].theta + 0.5 * dt * vjp2[k].theta;
        }
        detail::stage_vjp(y1, net, p, u, v, wx, wc * w16, wc * w16, r_agg, th_agg, vjp1, gu, gv);

        for (std::size_t k = 0; k < n; ++k) {
            lambda[k].i += vjp1[k].i + vjp2[k].i + vjp3[k].i + vjp4[k].i;
            lambda[k].r += vjp1[k].r + vjp2[k].r + vjp3[k].r + vjp4[k].r;
            lambda[k].theta += vjp1[k].theta + vjp2[k].theta + vjp3[k].theta + vjp4[k].theta;
            grad.du[k][interval] += gu[k];
            grad.dv[k][interval] += gv[k];
        }
    }
    return grad;
}

// ---------------------------------------------------------------------------
// Optimizer results

struct OptimizationResult {
    ControlSchedule schedule; // binary
    SwitchTimes switch_times; // filled by the switching-time solver
    bool has_switch_times = false;
    double profit = 0.0; // of `schedule`, via integrate + profit
    std::vector<double> start_profits;
    int best_start = 0;
    long long iterations = 0;
    bool converged = false;
    // NLP diagnostics
    double gradient_norm = 0.0;
    double interior_fraction = 0.0;
    double unrounded_profit = 0.0;
    bool rounding_loss_flagged = false;
};

// ---------------------------------------------------------------------------
// Switching-time optimization (Nelder-Mead over the ordered tau boxes)

struct SwitchTimeOptions {
    double dt = 0.01; // integration step; also the rasterization grid
    int starts = 50;
    std::uint64_t seed = 42;
    int max_evals_per_start = 4000;
    double simplex_tol = 1e-9; // f-spread termination
};

namespace detail {

inline void project_tau(std::vector<double>& tau, double horizon) {
    for (std::size_t pair = 0; pair + 1 < tau.size(); pair += 2) {
        double a = tau[pair], b = tau[pair + 1];
        if (a > b)
            a = b = 0.5 * (a + b);
        tau[pair] = std::clamp(a, 0.0, horizon);
        tau[pair + 1] = std::clamp(b, 0.0, horizon);
    }
}

inline SwitchTimes tau_to_switch_times(const std::vector<double>& tau, std::size_t classes) {
    SwitchTimes st(classes);
    for (std::size_t k = 0; k < classes; ++k) {
        st[k].tau1 = tau[4 * k];
        st[k].tau2 = tau[4 * k + 1];
        st[k].tau3 = tau[4 * k + 2];
        st[k].tau4 = tau[4 * k + 3];
    }
    return st;
}

} // namespace detail

/// Derivative-free search over per-class switch-time quadruples
/// (tau1..tau4), constrained to the ordered boxes by projection. Objective
/// evaluations rasterize the switch times onto the integration grid and run
/// integrate + profit. Multi-start from random feasible tau draws.
inline OptimizationResult optimize_switch_times(const StateVector& x0, const ClassNetwork& net,
                                                const ModelParams& p,
                                                const SwitchTimeOptions& opts = {}) {
    if (opts.starts <= 0)
        throw std::invalid_argument("optimize_switch_times: at least one start required");
    const std::size_t classes = net.num_classes();
    const std::size_t dim = 4 * classes;
    const double horizon = p.horizon;

    auto evaluate = [&](std::vector<double> tau) {
        detail::project_tau(tau, horizon);
        auto sched = ControlSchedule::from_switch_times(detail::tau_to_switch_times(tau, classes),
                                                        horizon, opts.dt);
        return profit(integrate(x0, sched, net, p, opts.dt), net);
    };

    struct StartOutcome {
        std::vector<double> tau;
        double profit = -std::numeric_limits<double>::infinity();
        long long evals = 0;
        bool converged = false;
    };
    std::vector<StartOutcome> outcomes(std::size_t(opts.starts));

    parallel_for(std::size_t(opts.starts), [&](std::size_t start) {
        auto rng = make_rng(opts.seed, "switch-start", start);
        std::uniform_real_distribution<double> ut(0.0, horizon);

        std::vector<std::vector<double>> simplex;
        std::vector<double> fvals;
        std::vector<double> seed_point(dim);
        for (std::size_t pair = 0; pair < dim; pair += 2) {
            double a = ut(rng), b = ut(rng);
            if (a > b)
                std::swap(a, b);
            seed_point[pair] = a;
            seed_point[pair + 1] = b;
        }
        simplex.push_back(seed_point);
        for (std::size_t d = 0; d < dim; ++d) {
            auto vertex = seed_point;
            vertex[d] += (vertex[d] > horizon / 2 ? -1.5 : 1.5);
            detail::project_tau(vertex, horizon);
            simplex.push_back(vertex);
        }
        long long evals = 0;
        fvals.resize(simplex.size());
        for (std::size_t s = 0; s < simplex.size(); ++s) {
            fvals[s] = -evaluate(simplex[s]);
            ++evals;
        }

        // Nelder-Mead on -profit with standard coefficients.
        bool converged = false;
        while (evals < opts.max_evals_per_start) {
            std::vector<std::size_t> order(simplex.size());
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(),
                      [&](std::size_t a, std::size_t b) { return fvals[a] < fvals[b]; });
            const std::size_t best = order.front(), worst = order.back(),
                              second_worst = order[order.size() - 2];
            if (fvals[worst] - fvals[best] < opts.simplex_tol) {
                converged = true;
                break;
            }
            std::vector<double> centroid(dim, 0.0);
            for (std::size_t s : order)
                if (s != worst)
                    for (std::size_t d = 0; d < dim; ++d)
                        centroid[d] += simplex[s][d];
            for (double& cval : centroid)
                cval /= double(dim);

            auto blend = [&](double coef) {
                std::vector<double> point(dim);
                for (std::size_t d = 0; d < dim; ++d)
                    point[d] = centroid[d] + coef * (centroid[d] - simplex[worst][d]);
                detail::project_tau(point, horizon);
                return point;
            };
            auto reflected = blend(1.0);
            const double f_ref = -evaluate(reflected);
            ++evals;
            if (f_ref < fvals[order[0]]) {
                auto expanded = blend(2.0);
                const double f_exp = -evaluate(expanded);
                ++evals;
                if (f_exp < f_ref) {
                    simplex[worst] = expanded;
                    fvals[worst] = f_exp;
                } else {
                    simplex[worst] = reflected;
                    fvals[worst] = f_ref;
                }
            } else if (f_ref < fvals[second_worst]) {
                simplex[worst] = reflected;
                fvals[worst] = f_ref;
            } else {
                const bool outside = f_ref < fvals[worst];
                auto contracted = blend(outside ? 0.5 : -0.5);
                const double f_con = -evaluate(contracted);
                ++evals;
                if (f_con < (outside ? f_ref : fvals[worst])) {
                    simplex[worst] = contracted;
                    fvals[worst] = f_con;
                } else {
                    for (std::size_t s : order)
                        if (s != best) {
                            for (std::size_t d = 0; d < dim; ++d)
                                simplex[s][d] =
                                    simplex[best][d] + 0.5 * (simplex[s][d] - simplex[best][d]);
                            detail::project_tau(simplex[s], horizon);
                            fvals[s] = -evaluate(simplex[s]);
                            ++evals;
                        }
                }
            }
        }
        std::size_t best_vertex = 0;
        for (std::size_t s = 1; s < simplex.size(); ++s)
            if (fvals[s] < fvals[best_vertex])
                best_vertex = s;
        auto tau = simplex[best_vertex];
        detail::project_tau(tau, horizon);
        outcomes[start] = StartOutcome{tau, -fvals[best_vertex], evals, converged};
    });

    OptimizationResult result;
    result.start_profits.reserve(outcomes.size());
    std::size_t best = 0;
    for (std::size_t s = 0; s < outcomes.size(); ++s) {
        result.start_profits.push_back(outcomes[s].profit);
        result.iterations += outcomes[s].evals;
        if (outcomes[s].profit > outcomes[best].profit)
            best = s;
    }
    result.best_start = int(best);
    result.converged = outcomes[best].converged;
    result.switch_times = detail::tau_to_switch_times(outcomes[best].tau, classes);
    result.has_switch_times = true;
    result.schedule = ControlSchedule::from_switch_times(result.switch_times, horizon, opts.dt);
    result.profit = profit(integrate(x0, result.schedule, net, p, opts.dt), net);
    return result;
}

// ---------------------------------------------------------------------------
// Discretized NLP (projected gradient ascent, multi-start)

struct NlpOptions {
    double dt = 0.01;
    double control_dt = 0.1;
    int starts = 20;
    std::uint64_t seed = 42;
    int max_iters = 400;
    double stationarity_tol = 1e-8; // sup-norm of the projected gradient step
    double f_tol = 1e-10;           // objective settled when gains stay below this
    double armijo_slope = 1e-4;
    double armijo_contraction = 0.5;
    double min_step = 1e-13;
    double rounding_loss_tol = 1e-4;
    double interior_band = 0.01; // values in (band, 1-band) count as interior
};

/// Projected gradient ascent on profit over the relaxed control vectors,
/// with Armijo backtracking and multi-start. The best start is rounded at
/// 0.5 and re-evaluated; a rounding loss beyond tolerance is flagged.
inline OptimizationResult nlp_solve(const StateVector& x0, const ClassNetwork& net,
                                    const ModelParams& p, const NlpOptions& opts = {}) {
    if (opts.starts <= 0)
        throw std::invalid_argument("nlp_solve: at least one start required");
    const std::size_t classes = net.num_classes();
    const auto intervals = static_cast<std::size_t>(std::llround(p.horizon / opts.control_dt));

    auto flatten = [&](const ControlSchedule& s) {
        std::vector<double> z;
        z.reserve(2 * classes * intervals);
        for (std::size_t k = 0; k < classes; ++k) {
            z.insert(z.end(), s.u[k].begin(), s.u[k].end());
            z.insert(z.end(), s.v[k].begin(), s.v[k].end());
        }
        return z;
    };
    auto unflatten = [&](const std::vector<double>& z) {
        ControlSchedule s;
        s.control_dt = opts.control_dt;
        s.u.assign(classes, std::vector<double>(intervals));
        s.v.assign(classes, std::vector<double>(intervals));
        std::size_t pos = 0;
        for (std::size_t k = 0; k < classes; ++k) {
            std::copy_n(z.begin() + long(pos), intervals, s.u[k].begin());
            pos += intervals;
            std::copy_n(z.begin() + long(pos), intervals, s.v[k].begin());
            pos += intervals;
        }
        return s;
    };
    auto objective = [&](const std::vector<double>& z) {
        return profit(integrate(x0, unflatten(z), net, p, opts.dt), net);
    };

    struct StartOutcome {
        std::vector<double> z;
        double objective = 0.0;
        double rounded_profit = -std::numeric_limits<double>::infinity();
        double gradient_norm = 0.0;
        long long iters = 0;
        bool converged = false;
    };
    std::vector<StartOutcome> outcomes(std::size_t(opts.starts));

    auto round_schedule = [&](const std::vector<double>& z) {
        auto zb = z;
        for (double& val : zb)
            val = val >= 0.5 ? 1.0 : 0.0;
        return zb;
    };

    parallel_for(std::size_t(opts.starts), [&](std::size_t start) {
        auto rng = make_rng(opts.seed, "nlp-start", start);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::vector<double> z(2 * classes * intervals);
        for (double& val : z)
            val = unit(rng);

        double fz = objective(z);
        double step = 1.0;
        StartOutcome out;
        bool stationary = false;
        int settled = 0;
        long long iters = 0;
        while (iters < opts.max_iters && !stationary) {
            ++iters;
            auto grad = nlp_gradient(x0, unflatten(z), net, p, opts.dt);
            std::vector<double> g = flatten(ControlSchedule{opts.control_dt, grad.du, grad.dv});
            // Projected-gradient stationarity on the box [0,1]^n.
            double pg_norm = 0.0;
            for (std::size_t d = 0; d < z.size(); ++d) {
                const double moved = std::clamp(z[d] + g[d], 0.0, 1.0) - z[d];
                pg_norm = std::max(pg_norm, std::abs(moved));
            }
            out.gradient_norm = pg_norm;
            if (pg_norm < opts.stationarity_tol) {
                stationary = true;
                break;
            }
            // Armijo backtracking along the projected step.
            bool accepted = false;
            double gain = 0.0;
            for (double s = step; s >= opts.min_step; s *= opts.armijo_contraction) {
                std::vector<double> cand(z.size());
                double predicted = 0.0;
                for (std::size_t d = 0; d < z.size(); ++d) {
                    cand[d] = std::clamp(z[d] + s * g[d], 0.0, 1.0);
                    predicted += g[d] * (cand[d] - z[d]);
                }
                if (predicted <= 0.0)
                    break;
                const double fc = objective(cand);
                if (fc >= fz + opts.armijo_slope * predicted) {
                    gain = fc - fz;
                    z = std::move(cand);
                    fz = fc;
                    step = std::min(s * 2.0, 1e12);
                    accepted = true;
                    break;
                }
            }
            if (!accepted)
                break; // step collapse without improvement
            settled = gain < opts.f_tol ? settled + 1 : 0;
            if (settled >= 2) {
                stationary = true; // objective settled at box resolution
                break;
            }
        }
        out.z = z;
        out.objective = fz;
        out.iters = iters;
        out.converged = stationary;
        out.rounded_profit = objective(round_schedule(z));
        outcomes[start] = std::move(out);
    });

    std::size_t best = 0;
    OptimizationResult result;
    result.start_profits.reserve(outcomes.size());
    for (std::size_t s = 0; s < outcomes.size(); ++s) {
        result.start_profits.push_back(outcomes[s].rounded_profit);
        result.iterations += outcomes[s].iters;
        if (outcomes[s].rounded_profit > outcomes[best].rounded_profit)
            best = s;
    }
    const auto& winner = outcomes[best];
    result.best_start = int(best);
    result.converged = winner.converged;
    result.gradient_norm = winner.gradient_norm;
    result.unrounded_profit = winner.objective;
    std::size_t interior = 0;
    for (double val : winner.z)
        if (val > opts.interior_band && val < 1.0 - opts.interior_band)
            ++interior;
    result.interior_fraction = double(interior) / double(winner.z.size());
    result.schedule = unflatten(round_schedule(winner.z));
    result.profit = winner.rounded_profit;
    result.rounding_loss_flagged = winner.objective - result.profit > opts.rounding_loss_tol;
    return result;
}

// ---------------------------------------------------------------------------
// Three-solver cross-check (single-class instances)

struct CrosscheckOptions {
    FbsOptions fbs;
    SwitchTimeOptions switch_opt;
    NlpOptions nlp;
    double profit_tol = 1e-3;
};

struct CrosscheckReport {
    FbsResult fbs;
    OptimizationResult switch_opt;
    OptimizationResult nlp;
    StrategyLabel fbs_label{}, switch_label{}, nlp_label{};
    double max_profit_gap = 0.0;
    bool profits_agree = false;
    bool labels_agree = false;
    bool pass = false;

    std::string table() const {
        std::ostringstream os;
        os << std::setprecision(9);
        os << "solver          profit        label\n";
        os << "fbs             " << fbs.profit << "  " << to_string(fbs_label) << "\n";
        os << "switch-times    " << switch_opt.profit << "  " << to_string(switch_label) << "\n";
        os << "nlp             " << nlp.profit << "  " << to_string(nlp_label) << "\n";
        os << "max profit gap  " << max_profit_gap << (profits_agree ? "  (agree)" : "  (DISAGREE)")
           << "\n";
        os << "labels          " << (labels_agree ? "identical" : "DIFFER") << "\n";
        return os.str();
    }
};

/// Runs the sweep solver, the switching-time search and the NLP on the same
/// single-class instance and compares profits and strategy labels.
inline CrosscheckReport crosscheck(const StateVector& x0, const ClassNetwork& net,
                                   const ModelParams& p, const CrosscheckOptions& opts = {}) {
    if (net.num_classes() != 1)
        throw std::invalid_argument("crosscheck: single-class instance required");
    CrosscheckReport report;
    report.fbs = fbs_solve(x0, net, p, opts.fbs);
    report.switch_opt = optimize_switch_times(x0, net, p, opts.switch_opt);
    report.nlp = nlp_solve(x0, net, p, opts.nlp);
    report.fbs_label = classify(report.fbs.schedule);
    report.switch_label = classify(report.switch_opt.schedule);
    report.nlp_label = classify(report.nlp.schedule);
    const double lo = std::min({report.fbs.profit, report.switch_opt.profit, report.nlp.profit});
    const double hi = std::max({report.fbs.profit, report.switch_opt.profit, report.nlp.profit});
    report.max_profit_gap = hi - lo;
    report.profits_agree = report.max_profit_gap <= opts.profit_tol;
    report.labels_agree =
        report.fbs_label == report.switch_label && report.switch_label == report.nlp_label;
    report.pass = report.profits_agree && report.labels_agree;
    return report;
}

/// Best-schedule CSV (same layout as the trajectory CSV) with a summary
/// comment line: profit, label, solver, starts, seed.
inline void write_schedule_csv(std::ostream& os, const ControlSchedule& sched, const StateVector& x0,
                               const ClassNetwork& net, const ModelParams& p,
                               const std::string& solver, int starts, std::uint64_t seed,
                               double dt = 0.01) {
    auto traj = integrate(x0, sched, net, p, dt);
    os << "# profit=" << std::setprecision(12) << profit(traj, net)
       << " label=" << to_string(classify(sched)) << " solver=" << solver << " starts=" << starts
       << " seed=" << seed << "\n";
    write_trajectory_csv(os, traj);
}

} // namespace vmopt

#endif // VMOPT_OPTIMIZE_HPP
