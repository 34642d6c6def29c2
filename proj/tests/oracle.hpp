#ifndef VMOPT_TESTS_ORACLE_HPP
#define VMOPT_TESTS_ORACLE_HPP

#include <functional>
#include <vector>

// Test-only reference integrators, deliberately independent of the library
// implementation: the single-class dynamics are written out by hand and
// integrated with explicit first-order Euler steps; costs use trapezoidal
// quadrature on the Euler iterates.
namespace oracle {

struct SingleClassParams {
    double alpha, beta, gamma, delta, eps1, eps2, cost_referral, cost_direct;
};

struct SingleClassResult {
    double i, r, theta;
    double cost_referral, cost_direct;
    std::vector<double> t_grid;
    std::vector<double> i_path, r_path, theta_path;
};

// u_of_t / v_of_t are sampled at the left endpoint of each Euler step,
// matching a zero-order hold on any grid the step divides.
inline SingleClassResult euler_single_class(double i0, double r0, double theta0,
                                            const SingleClassParams& p, double horizon, double dt,
                                            const std::function<double(double)>& u_of_t,
                                            const std::function<double(double)>& v_of_t) {
    const auto steps = static_cast<long long>(horizon / dt + 0.5);
    double i = i0, r = r0, theta = theta0;
    double cref = 0.0, cdir = 0.0;
    SingleClassResult out;
    out.t_grid.reserve(steps + 1);
    out.i_path.reserve(steps + 1);
    out.r_path.reserve(steps + 1);
    out.theta_path.reserve(steps + 1);

    auto cost_ref_rate = [&](double ii, double rr, double u) {
        return u * p.cost_referral * (p.beta + p.eps1) * ii * rr;
    };
    auto cost_dir_rate = [&](double ii, double v) {
        return v * p.cost_direct * (p.alpha + p.eps2) * ii;
    };

    for (long long m = 0; m < steps; ++m) {
        const double t = double(m) * dt;
        out.t_grid.push_back(t);
        out.i_path.push_back(i);
        out.r_path.push_back(r);
        out.theta_path.push_back(theta);
        const double u = u_of_t(t);
        const double v = v_of_t(t);
        const double u_next = u_of_t(t + dt);
        const double v_next = v_of_t(t + dt);

        const double di = -(p.beta + u * p.eps1) * i * r - (p.alpha + v * p.eps2) * i - p.gamma * i * theta - p.delta * i;
        const double dr = (p.beta + u * p.eps1) * i * r + (p.alpha + v * p.eps2) * i;
        const double dtheta = p.gamma * i * theta + p.delta * i;

        const double i_next = i + dt * di;
        const double r_next = r + dt * dr;
        const double theta_next = theta + dt * dtheta;

        cref += 0.5 * dt * (cost_ref_rate(i, r, u) + cost_ref_rate(i_next, r_next, u_next));
        cdir += 0.5 * dt * (cost_dir_rate(i, v) + cost_dir_rate(i_next, v_next));

        i = i_next;
        r = r_next;
        theta = theta_next;
    }
    out.t_grid.push_back(horizon);
    out.i_path.push_back(i);
    out.r_path.push_back(r);
    out.theta_path.push_back(theta);
    out.i = i;
    out.r = r;
    out.theta = theta;
    out.cost_referral = cref;
    out.cost_direct = cdir;
    return out;
}

inline double euler_profit(const SingleClassResult& res) {
    return res.r - res.cost_referral - res.cost_direct;
}

} // namespace oracle

#endif // VMOPT_TESTS_ORACLE_HPP
