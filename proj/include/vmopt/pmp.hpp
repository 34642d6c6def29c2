#ifndef VMOPT_PMP_HPP
#define VMOPT_PMP_HPP

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vmopt/integrate.hpp"
#include "vmopt/model.hpp"

/**
 * @file   pmp.hpp
 * @brief  Maximum-principle machinery for the single-class (regular-network)
 *         problem: Hamiltonian, backward co-state integration, switching
 *         functions, bang-bang control extraction, a forward-backward sweep
 *         solver and structural checks on converged solutions.
 *
 * Co-states p1, p2 carry the marginal value of potential buyers and
 * customers; the switching functions
 *   phi  = (p2 - p1 - c) eps1 - c beta
 *   psi  = (p2 - p1 - c') eps2 - c' alpha
 * determine the optimal controls by sign. Terminal conditions are
 * p1(T) = 0, p2(T) = 1.
 */

namespace vmopt {

/// Co-state path on the trajectory grid, with switching functions,
/// zeta = (p2 - p1) i and the Hamiltonian along the path.
struct CostateTrajectory {
    std::vector<double> t;
    std::vector<double> p1;
    std::vector<double> p2;
    std::vector<double> phi;
    std::vector<double> psi;
    std::vector<double> zeta;
    std::vector<double> hamiltonian;
};

/// Hamiltonian of the single-class problem with theta reconstructed
/// as 1 - i - r.
inline double hamiltonian(double i, double r, double p1, double p2, double u, double v,
                          const ModelParams& p) {
    const double theta = 1.0 - i - r;
    const double seller = (p.beta + u * p.eps1) * i * r + (p.alpha + v * p.eps2) * i;
    const double competitor = p.gamma * i * theta + p.delta * i;
    const double running_payoff =
        -p.cost_referral * u * (p.beta + p.eps1) * i * r - p.cost_direct * v * (p.alpha + p.eps2) * i;
    return running_payoff - p1 * (seller + competitor) + p2 * seller;
}

inline double switching_phi(double p1, double p2, const ModelParams& p) {
    return (p2 - p1 - p.cost_referral) * p.eps1 - p.cost_referral * p.beta;
}

inline double switching_psi(double p1, double p2, const ModelParams& p) {
    return (p2 - p1 - p.cost_direct) * p.eps2 - p.cost_direct * p.alpha;
}

namespace detail {

struct CostateRates {
    double dp1;
    double dp2;
};

// Right-hand side of the co-state equations dp = -dH/dx.
inline CostateRates costate_rhs(double i, double r, double u, double v, double p1, double p2,
                                const ModelParams& p) {
    const double soc = p.beta + u * p.eps1;
    const double ext = p.alpha + v * p.eps2;
    CostateRates out;
    out.dp1 = p.cost_referral * u * (p.beta + p.eps1) * r + p.cost_direct * v * (p.alpha + p.eps2) +
              (p1 - p2) * (soc * r + ext) + p1 * (p.gamma * (1.0 - 2.0 * i - r) + p.delta);
    out.dp2 = p.cost_referral * u * (p.beta + p.eps1) * i + (p1 - p2) * soc * i - p1 * p.gamma * i;
    return out;
}

} // namespace detail

/// Backward co-state integration along a stored single-class trajectory,
/// with the schedule's zero-order-hold controls. RK4 with the trajectory
/// states linearly interpolated at half steps; terminal condition imposed
/// exactly.
inline CostateTrajectory costate_sweep(const Trajectory& traj, const ControlSchedule& sched,
                                       const ModelParams& p) {
    if (traj.num_classes() != 1 || sched.num_classes() != 1)
        throw std::invalid_argument("costate_sweep: single-class instance required");
    sched.validate(p.horizon);
    const std::size_t m_last = traj.num_steps();
    if (m_last == 0 || std::abs(traj.t.back() - p.horizon) > 1e-9)
        throw std::invalid_argument("costate_sweep: trajectory does not span [0, horizon]");
    detail::exact_ratio(sched.control_dt, traj.dt, "costate_sweep: trajectory step must divide control_dt");
    // The stored hold controls must agree with the schedule the trajectory
    // claims to come from.
    for (std::size_t m = 0; m < m_last; ++m) {
        const double t = traj.t[m];
        if (traj.u_applied[m][0] != sched.u_at(0, t) || traj.v_applied[m][0] != sched.v_at(0, t))
            throw std::invalid_argument("costate_sweep: schedule does not match the trajectory controls");
    }

    CostateTrajectory cs;
    cs.t = traj.t;
    cs.p1.assign(m_last + 1, 0.0);
    cs.p2.assign(m_last + 1, 0.0);
    cs.phi.resize(m_last + 1);
    cs.psi.resize(m_last + 1);
    cs.zeta.resize(m_last + 1);
    cs.hamiltonian.resize(m_last + 1);

    cs.p1[m_last] = 0.0;
    cs.p2[m_last] = 1.0;
    const double h = -traj.dt;
    for (std::size_t m = m_last; m-- > 0;) {
        const double u = traj.u_applied[m][0];
        const double v = traj.v_applied[m][0];
        const auto& right = traj.x[m + 1][0];
        const auto& left = traj.x[m][0];
        const double i_mid = 0.5 * (left.i + right.i);
        const double r_mid = 0.5 * (left.r + right.r);
        const double p1 = cs.p1[m + 1], p2 = cs.p2[m + 1];

        const auto k1 = detail::costate_rhs(right.i, right.r, u, v, p1, p2, p);
        const auto k2 =
            detail::costate_rhs(i_mid, r_mid, u, v, p1 + 0.5 * h * k1.dp1, p2 + 0.5 * h * k1.dp2, p);
        const auto k3 =
            detail::costate_rhs(i_mid, r_mid, u, v, p1 + 0.5 * h * k2.dp1, p2 + 0.5 * h * k2.dp2, p);
        const auto k4 = detail::costate_rhs(left.i, left.r, u, v, p1 + h * k3.dp1, p2 + h * k3.dp2, p);

        cs.p1[m] = p1 + h / 6.0 * (k1.dp1 + 2.0 * k2.dp1 + 2.0 * k3.dp1 + k4.dp1);
        cs.p2[m] = p2 + h / 6.0 * (k1.dp2 + 2.0 * k2.dp2 + 2.0 * k3.dp2 + k4.dp2);
    }
    for (std::size_t m = 0; m <= m_last; ++m) {
        cs.phi[m] = switching_phi(cs.p1[m], cs.p2[m], p);
        cs.psi[m] = switching_psi(cs.p1[m], cs.p2[m], p);
        cs.zeta[m] = (cs.p2[m] - cs.p1[m]) * traj.x[m][0].i;
        cs.hamiltonian[m] = hamiltonian(traj.x[m][0].i, traj.x[m][0].r, cs.p1[m], cs.p2[m],
                                        traj.u_applied[m][0], traj.v_applied[m][0], p);
    }
    return cs;
}

/// Bang-bang controls from the switching-function signs, on the co-state
/// grid (one interval per step). An exact zero holds the previous grid
/// value; an exact zero at t=0 keeps the program off.
inline ControlSchedule extract_controls(const CostateTrajectory& cs) {
    if (cs.t.size() < 2)
        throw std::invalid_argument("extract_controls: empty costate trajectory");
    const std::size_t m = cs.t.size() - 1;
    ControlSchedule sched;
    sched.control_dt = cs.t[1] - cs.t[0];
    sched.u.assign(1, std::vector<double>(m, 0.0));
    sched.v.assign(1, std::vector<double>(m, 0.0));
    double prev_u = 0.0, prev_v = 0.0;
    for (std::size_t n = 0; n < m; ++n) {
        if (cs.phi[n] != 0.0)
            prev_u = cs.phi[n] > 0.0 ? 1.0 : 0.0;
        if (cs.psi[n] != 0.0)
            prev_v = cs.psi[n] > 0.0 ? 1.0 : 0.0;
        sched.u[0][n] = prev_u;
        sched.v[0][n] = prev_v;
    }
    return sched;
}

struct FbsOptions {
    double dt = 0.0025; // sweep grid; also the switching-time resolution
    int max_iters = 200;
    double damping = 0.5;
    double profit_tol = 1e-8;
};

struct FbsResult {
    ControlSchedule schedule;
    Trajectory trajectory;
    CostateTrajectory costates;
    double profit = 0.0;
    bool converged = false;
    int iterations = 0;
};

/// Forward-backward sweep for the single-class problem. Each iteration
/// integrates forward under the current relaxed controls, sweeps the
/// co-states backward, extracts bang-bang candidates from the switching
/// signs and blends them into the relaxed controls by the damping factor.
/// Convergence means the thresholded binary sequence repeats and its profit
/// has settled. Non-convergence is reported in the result, not thrown; the
/// best binary iterate encountered is returned, with trajectory and
/// co-states recomputed under it so the returned triple is consistent.
inline FbsResult fbs_solve(const StateVector& x0, const ClassNetwork& net, const ModelParams& p,
                           const FbsOptions& opts = {}) {
    if (net.num_classes() != 1)
        throw std::invalid_argument("fbs_solve: single-class (regular network) instance required");
    if (opts.damping <= 0.0 || opts.damping > 1.0)
        throw std::invalid_argument("fbs_solve: damping must lie in (0,1]");
    const auto m = static_cast<std::size_t>(std::llround(p.horizon / opts.dt));

    auto make_schedule = [&](const std::vector<double>& su, const std::vector<double>& sv) {
        ControlSchedule s;
        s.control_dt = opts.dt;
        s.u = {su};
        s.v = {sv};
        return s;
    };
    auto threshold = [](const std::vector<double>& w) {
        std::vector<double> b(w.size());
        for (std::size_t n = 0; n < w.size(); ++n)
            b[n] = w[n] >= 0.5 ? 1.0 : 0.0;
        return b;
    };

    std::vector<double> w_u(m, 0.0), w_v(m, 0.0); // relaxed control memory
    std::vector<double> best_u, best_v;
    double best_profit = -std::numeric_limits<double>::infinity();
    double prev_profit = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> prev_u = threshold(w_u), prev_v = threshold(w_v);
    bool converged = false;
    int iterations = 0;

    for (int iter = 1; iter <= opts.max_iters; ++iter) {
        iterations = iter;
        auto relaxed = make_schedule(w_u, w_v);
        auto traj = integrate(x0, relaxed, net, p, opts.dt);
        auto cs = costate_sweep(traj, relaxed, p);
        auto extracted = extract_controls(cs);
        for (std::size_t n = 0; n < m; ++n) {
            w_u[n] = (1.0 - opts.damping) * w_u[n] + opts.damping * extracted.u[0][n];
            w_v[n] = (1.0 - opts.damping) * w_v[n] + opts.damping * extracted.v[0][n];
        }

        auto bin_u = threshold(w_u);
        auto bin_v = threshold(w_v);
        auto bin_traj = integrate(x0, make_schedule(bin_u, bin_v), net, p, opts.dt);
        const double bin_profit = profit(bin_traj, net);
        if (bin_profit > best_profit) {
            best_profit = bin_profit;
            best_u = bin_u;
            best_v = bin_v;
        }
        const bool fixed_point = bin_u == prev_u && bin_v == prev_v;
        const bool profit_settled =
            std::isnan(prev_profit) || std::abs(bin_profit - prev_profit) < opts.profit_tol;
        if (fixed_point && profit_settled) {
            converged = true;
            break;
        }
        prev_u = std::move(bin_u);
        prev_v = std::move(bin_v);
        prev_profit = bin_profit;
    }

    FbsResult res;
    res.schedule = make_schedule(best_u, best_v);
    res.trajectory = integrate(x0, res.schedule, net, p, opts.dt);
    res.costates = costate_sweep(res.trajectory, res.schedule, p);
    res.profit = profit(res.trajectory, net);
    res.converged = converged;
    res.iterations = iterations;
    return res;
}

struct LemmaTolerances {
    double hamiltonian_rel = 1e-3; // max |H - mean| / mean
    double costate_floor = 1e-9;   // p1, p2 > -floor and p2 - p1 > -floor
    double zeta_slack = 1e-9;      // zeta[m+1] < zeta[m] + slack
    double switching_band = 1e-4;  // |phi|, |psi| below this do not pin the control
};

struct LemmaCheck {
    std::string name;
    bool pass = false;
    double worst = 0.0;  // magnitude of the worst violation (or margin)
    double at_time = 0.0;
    std::string detail;
};

struct LemmaReport {
    std::vector<LemmaCheck> checks;
    bool all_pass = true;

    std::string to_string() const {
        std::ostringstream os;
        os << std::setprecision(6);
        for (const auto& c : checks)
            os << (c.pass ? "  ok   " : "  FAIL ") << c.name << "  " << c.detail << "\n";
        return os.str();
    }
};

/// Structural checks on a converged sweep solution: Hamiltonian positive
/// and constant, co-states nonnegative with p2 above p1, zeta strictly
/// decreasing, and at most two sign changes per switching function.
/// Violations are listed with time and magnitude; the report never throws.
inline LemmaReport verify_lemmas(const Trajectory& traj, const CostateTrajectory& cs,
                                 const ModelParams& p, const LemmaTolerances& tol = {}) {
    (void)p;
    LemmaReport report;
    const std::size_t n = cs.t.size();
    auto add = [&](LemmaCheck c) {
        report.all_pass = report.all_pass && c.pass;
        report.checks.push_back(std::move(c));
    };

    {
        LemmaCheck c{"terminal co-states p1(T)=0, p2(T)=1", true, 0.0, cs.t.back(), ""};
        c.pass = cs.p1.back() == 0.0 && cs.p2.back() == 1.0;
        c.detail = "p1(T)=" + std::to_string(cs.p1.back()) + " p2(T)=" + std::to_string(cs.p2.back());
        add(std::move(c));
    }
    {
        double mean = 0.0;
        for (double h : cs.hamiltonian)
            mean += h;
        mean /= double(n);
        double worst = 0.0, at = 0.0, minval = cs.hamiltonian[0];
        for (std::size_t m = 0; m < n; ++m) {
            const double dev = std::abs(cs.hamiltonian[m] - mean);
            if (dev > worst) {
                worst = dev;
                at = cs.t[m];
            }
            minval = std::min(minval, cs.hamiltonian[m]);
        }
        LemmaCheck c{"Hamiltonian positive and constant", true, worst / mean, at, ""};
        c.pass = minval > 0.0 && mean > 0.0 && worst / mean < tol.hamiltonian_rel;
        std::ostringstream d;
        d << "min=" << minval << " rel-dev=" << worst / mean << " at t=" << at;
        c.detail = d.str();
        add(std::move(c));
    }
    {
        LemmaCheck c{"co-states nonnegative on [0,T)", true, 0.0, 0.0, ""};
        for (std::size_t m = 0; m + 1 < n; ++m) {
            const double low = std::min(cs.p1[m], cs.p2[m]);
            if (low < -tol.costate_floor && -low > c.worst) {
                c.worst = -low;
                c.at_time = cs.t[m];
                c.pass = false;
            }
        }
        c.detail = c.pass ? "min margin ok" : "worst " + std::to_string(c.worst);
        add(std::move(c));
    }
    {
        LemmaCheck c{"p2 dominates p1", true, 0.0, 0.0, ""};
        for (std::size_t m = 0; m < n; ++m) {
            const double gap = cs.p2[m] - cs.p1[m];
            if (gap < -tol.costate_floor && -gap > c.worst) {
                c.worst = -gap;
                c.at_time = cs.t[m];
                c.pass = false;
            }
        }
        add(std::move(c));
    }
    {
        LemmaCheck c{"zeta strictly decreasing", true, 0.0, 0.0, ""};
        for (std::size_t m = 0; m + 1 < n; ++m) {
            const double rise = cs.zeta[m + 1] - cs.zeta[m];
            if (rise >= tol.zeta_slack && rise > c.worst) {
                c.worst = rise;
                c.at_time = cs.t[m + 1];
                c.pass = false;
            }
        }
        add(std::move(c));
    }
    auto sign_changes = [&](const std::vector<double>& f) {
        int changes = 0;
        double prev = 0.0;
        for (double val : f) {
            if (val == 0.0)
                continue;
            const double s = val > 0.0 ? 1.0 : -1.0;
            if (prev != 0.0 && s != prev)
                ++changes;
            prev = s;
        }
        return changes;
    };
    {
        const int nu = sign_changes(cs.phi);
        LemmaCheck c{"phi changes sign at most twice", nu <= 2, double(nu), 0.0,
                     "sign changes: " + std::to_string(nu)};
        add(std::move(c));
    }
    {
        const int nv = sign_changes(cs.psi);
        LemmaCheck c{"psi changes sign at most twice", nv <= 2, double(nv), 0.0,
                     "sign changes: " + std::to_string(nv)};
        add(std::move(c));
    }
    {
        // Controls must follow the switching signs wherever the sign is clear
        // (inside the band the grid-quantized switch may sit on either side).
        LemmaCheck c{"controls consistent with switching signs", true, 0.0, 0.0, ""};
        const double sign_tol = tol.switching_band;
        for (std::size_t m = 0; m + 1 < n; ++m) {
            const double u = traj.u_applied[m][0];
            const double v = traj.v_applied[m][0];
            if ((cs.phi[m] > sign_tol && u != 1.0) || (cs.phi[m] < -sign_tol && u != 0.0) ||
                (cs.psi[m] > sign_tol && v != 1.0) || (cs.psi[m] < -sign_tol && v != 0.0)) {
                c.pass = false;
                c.at_time = cs.t[m];
                break;
            }
        }
        add(std::move(c));
    }
    return report;
}

/// Co-state CSV: t, p1, p2, phi, psi, zeta, H. 12 significant digits.
inline void write_costate_csv(std::ostream& os, const CostateTrajectory& cs) {
    os << "t,p1,p2,phi,psi,zeta,H\n" << std::setprecision(12);
    for (std::size_t m = 0; m < cs.t.size(); ++m)
        os << cs.t[m] << ',' << cs.p1[m] << ',' << cs.p2[m] << ',' << cs.phi[m] << ',' << cs.psi[m]
           << ',' << cs.zeta[m] << ',' << cs.hamiltonian[m] << '\n';
}

} // namespace vmopt

#endif // VMOPT_PMP_HPP
