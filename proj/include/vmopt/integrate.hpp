#ifndef VMOPT_INTEGRATE_HPP
#define VMOPT_INTEGRATE_HPP

#include <cstdint>
#include <iomanip>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vmopt/model.hpp"

/**
 * @file   integrate.hpp
 * @brief  Fixed-step RK4 trajectory integration of the controlled diffusion
 *         ODE, with the two expenditure integrals accumulated inside the
 *         stepper so profit is consistent with the dynamics to the
 *         integrator's order.
 */

namespace vmopt {

/// Time-indexed states, applied controls and accumulated program costs.
/// u_applied[m][k] is the control held on [t[m], t[m+1]) (zero-order hold);
/// the final entry repeats the last interval's value.
struct Trajectory {
    double dt = 0.01;
    std::vector<double> t;
    std::vector<StateVector> x;
    std::vector<std::vector<double>> u_applied;
    std::vector<std::vector<double>> v_applied;
    std::vector<double> cum_cost_referral;
    std::vector<double> cum_cost_direct;

    std::size_t num_steps() const { return t.empty() ? 0 : t.size() - 1; }
    std::size_t num_classes() const { return x.empty() ? 0 : x[0].size(); }
    const StateVector& final_state() const { return x.back(); }
};

namespace detail {

inline std::size_t exact_ratio(double whole, double part, const char* what) {
    const double ratio = whole / part;
    const auto n = static_cast<std::size_t>(std::llround(ratio));
    if (n == 0 || std::abs(ratio - double(n)) > 1e-9)
        throw std::invalid_argument(std::string("integrate: ") + what);
    return n;
}

inline void axpy_state(StateVector& out, const StateVector& x, double a, const StateVector& d) {
    out.resize(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        out[k].i = x[k].i + a * d[k].i;
        out[k].r = x[k].r + a * d[k].r;
        out[k].theta = x[k].theta + a * d[k].theta;
    }
}

struct StageRates {
    StateVector dx;
    double cost_ref = 0.0;
    double cost_dir = 0.0;
};

inline void eval_stage(const StateVector& x, const ClassNetwork& net, const ModelParams& p,
                       const std::vector<double>& u, const std::vector<double>& v,
                       std::vector<double>& r_agg, std::vector<double>& th_agg, StageRates& out) {
    neighbor_aggregates(x, net, r_agg, th_agg);
    drift_unchecked(x, net, p, u, v, r_agg, th_agg, out.dx);
    out.cost_ref = referral_cost_rate(x, net, p, u, r_agg);
    out.cost_dir = direct_cost_rate(x, net, p, v);
}

} // namespace detail

/// Integrates the controlled system from x0 over [0, T] with internal step dt.
/// dt must divide both the control grid step and T. Controls are held
/// constant over each control interval. Throws if the per-class simplex
/// drifts beyond 1e-8, reporting the offending time.
inline Trajectory integrate(const StateVector& x0, const ControlSchedule& sched,
                            const ClassNetwork& net, const ModelParams& p, double dt = 0.01) {
    p.validate();
    net.validate();
    validate_state(x0);
    sched.validate(p.horizon);
    if (x0.size() != net.num_classes() || sched.num_classes() != net.num_classes())
        throw std::invalid_argument("integrate: class count mismatch between state, network and schedule");
    const std::size_t steps = detail::exact_ratio(p.horizon, dt, "dt must divide the horizon");
    const std::size_t per_interval = detail::exact_ratio(sched.control_dt, dt, "dt must divide control_dt");

    const std::size_t n = net.num_classes();
    Trajectory traj;
    traj.dt = dt;
    traj.t.reserve(steps + 1);
    traj.x.reserve(steps + 1);
    traj.u_applied.reserve(steps + 1);
    traj.v_applied.reserve(steps + 1);
    traj.cum_cost_referral.reserve(steps + 1);
    traj.cum_cost_direct.reserve(steps + 1);

    StateVector x = x0, xs;
    double cref = 0.0, cdir = 0.0;
    std::vector<double> u(n), v(n), r_agg, th_agg;
    detail::StageRates s1, s2, s3, s4;

    for (std::size_t m = 0; m <= steps; ++m) {
        const double t = double(m) * dt;
        const std::size_t interval = std::min(m / per_interval, sched.num_intervals() - 1);
        for (std::size_t k = 0; k < n; ++k) {
            u[k] = sched.u[k][interval];
            v[k] = sched.v[k][interval];
        }
        for (std::size_t k = 0; k < n; ++k) {
            const auto& s = x[k];
            if (std::abs(s.i + s.r + s.theta - 1.0) > 1e-8)
                throw std::runtime_error("integrate: simplex invariant drifted beyond 1e-8 at t=" +
                                         std::to_string(t) + " in class " + std::to_string(k));
        }
        traj.t.push_back(t);
        traj.x.push_back(x);
        traj.u_applied.push_back(u);
        traj.v_applied.push_back(v);
        traj.cum_cost_referral.push_back(cref);
        traj.cum_cost_direct.push_back(cdir);
        if (m == steps)
            break;

        detail::eval_stage(x, net, p, u, v, r_agg, th_agg, s1);
        detail::axpy_state(xs, x, 0.5 * dt, s1.dx);
        detail::eval_stage(xs, net, p, u, v, r_agg, th_agg, s2);
        detail::axpy_state(xs, x, 0.5 * dt, s2.dx);
        detail::eval_stage(xs, net, p, u, v, r_agg, th_agg, s3);
        detail::axpy_state(xs, x, dt, s3.dx);
        detail::eval_stage(xs, net, p, u, v, r_agg, th_agg, s4);

        const double w = dt / 6.0;
        for (std::size_t k = 0; k < n; ++k) {
            x[k].i += w * (s1.dx[k].i + 2.0 * s2.dx[k].i + 2.0 * s3.dx[k].i + s4.dx[k].i);
            x[k].r += w * (s1.dx[k].r + 2.0 * s2.dx[k].r + 2.0 * s3.dx[k].r + s4.dx[k].r);
            x[k].theta += w * (s1.dx[k].theta + 2.0 * s2.dx[k].theta + 2.0 * s3.dx[k].theta + s4.dx[k].theta);
        }
        cref += w * (s1.cost_ref + 2.0 * s2.cost_ref + 2.0 * s3.cost_ref + s4.cost_ref);
        cdir += w * (s1.cost_dir + 2.0 * s2.cost_dir + 2.0 * s3.cost_dir + s4.cost_dir);
    }
    return traj;
}

/// Profit of a completed trajectory: sum_k P(k) r_k(T) minus both
/// accumulated program costs.
inline double profit(const Trajectory& traj, const ClassNetwork& net) {
    if (traj.x.empty() || traj.num_classes() != net.num_classes())
        throw std::invalid_argument("profit: trajectory/network mismatch");
    double revenue = 0.0;
    for (std::size_t k = 0; k < net.num_classes(); ++k)
        revenue += net.weights[k] * traj.final_state()[k].r;
    return revenue - traj.cum_cost_referral.back() - traj.cum_cost_direct.back();
}

/// Writes the trajectory as CSV: t, then per class i_k, r_k, theta_k, u_k,
/// v_k, then the two accumulated costs. 12 significant digits.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    os << "t";
    for (std::size_t k = 1; k <= traj.num_classes(); ++k)
        os << ",i" << k << ",r" << k << ",theta" << k << ",u" << k << ",v" << k;
    os << ",cum_cost_referral,cum_cost_direct\n";
    os << std::setprecision(12);
    for (std::size_t m = 0; m < traj.t.size(); ++m) {
        os << traj.t[m];
        for (std::size_t k = 0; k < traj.num_classes(); ++k)
            os << ',' << traj.x[m][k].i << ',' << traj.x[m][k].r << ',' << traj.x[m][k].theta << ','
               << traj.u_applied[m][k] << ',' << traj.v_applied[m][k];
        os << ',' << traj.cum_cost_referral[m] << ',' << traj.cum_cost_direct[m] << '\n';
    }
}

} // namespace vmopt

#endif // VMOPT_INTEGRATE_HPP
