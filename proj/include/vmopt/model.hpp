#ifndef VMOPT_MODEL_HPP
#define VMOPT_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

/**
 * @file   model.hpp
 * @brief  Domain types and instantaneous dynamics of competitive product
 *         diffusion on a degree-class network, with two incentive programs
 *         (referral rewards and direct incentives) acting on the rates.
 *
 * Per degree class k the population splits into potential buyers (i_k),
 * customers (r_k) and competitor's customers (theta_k), with
 * i_k + r_k + theta_k = 1. The class-level drift couples classes through
 * the conditional link distribution P(k'|k).
 */

namespace vmopt {

/// Which class a running referral program keys on. `buyer` boosts the
/// social conversions of rewarded-class potential buyers; `recommender`
/// boosts conversions along links from rewarded-class customers (the
/// advocate is paid). The two coincide on a single class. Buyer is the
/// model default; the correlated-network scenarios of the two-class
/// studies use recommender targeting.
enum class RewardTarget { buyer, recommender };

/// Rate and cost constants of the diffusion model.
///
/// alpha/delta are external purchase rates (seller/competitor), beta/gamma
/// the social-influence rates. While the referral program runs, beta is
/// boosted by eps1 at pay-out cost_referral per referral conversion; while
/// the direct-incentive program runs, alpha is boosted by eps2 at pay-out
/// cost_direct per externally-driven sale. Pay-outs are normalized to a
/// unit product price. horizon is the campaign length T.
struct ModelParams {
    double alpha = 0.08;
    double beta = 0.1;
    double gamma = 0.1;
    double delta = 0.1;
    double eps1 = 0.05;
    double eps2 = 0.05;
    double cost_referral = 0.25;
    double cost_direct = 0.3;
    double horizon = 10.0;
    RewardTarget reward_target = RewardTarget::buyer;

    void validate() const {
        auto nonneg = [](double x, const char* name) {
            if (!(x >= 0.0))
                throw std::invalid_argument(std::string("ModelParams: ") + name + " must be >= 0");
        };
        nonneg(alpha, "alpha");
        nonneg(beta, "beta");
        nonneg(gamma, "gamma");
        nonneg(delta, "delta");
        nonneg(eps1, "eps1");
        nonneg(eps2, "eps2");
        nonneg(cost_referral, "cost_referral");
        nonneg(cost_direct, "cost_direct");
        if (!(horizon > 0.0))
            throw std::invalid_argument("ModelParams: horizon must be > 0");
        if (alpha + eps2 > 1.0 || beta + eps1 > 1.0 || gamma > 1.0 || delta > 1.0)
            throw std::invalid_argument("ModelParams: boosted rates must stay within [0,1]");
    }
};

/// Degree classes with weights P(k) and conditional link distribution P(k'|k).
///
/// Rows of `mixing` are indexed like `degrees`/`weights`; mixing[a][b] is the
/// probability that a link from a class-a node leads to a class-b node.
/// Undirected-graph consistency requires the detailed-balance relation
/// k_a P(b|a) P(a) = k_b P(a|b) P(b) for every pair.
struct ClassNetwork {
    std::vector<int> degrees;
    std::vector<double> weights;
    std::vector<std::vector<double>> mixing;

    std::size_t num_classes() const { return degrees.size(); }

    void validate() const {
        const std::size_t n = degrees.size();
        if (n == 0)
            throw std::invalid_argument("ClassNetwork: at least one class required");
        if (weights.size() != n || mixing.size() != n)
            throw std::invalid_argument("ClassNetwork: degrees/weights/mixing size mismatch");
        double wsum = 0.0;
        for (std::size_t a = 0; a < n; ++a) {
            if (degrees[a] <= 0)
                throw std::invalid_argument("ClassNetwork: degrees must be positive");
            if (weights[a] < 0.0)
                throw std::invalid_argument("ClassNetwork: weights must be >= 0");
            wsum += weights[a];
            if (mixing[a].size() != n)
                throw std::invalid_argument("ClassNetwork: mixing row size mismatch");
            double rsum = 0.0;
            for (double m : mixing[a]) {
                if (m < 0.0 || m > 1.0)
                    throw std::invalid_argument("ClassNetwork: mixing entries must lie in [0,1]");
                rsum += m;
            }
            if (std::abs(rsum - 1.0) > 1e-12)
                throw std::invalid_argument("ClassNetwork: mixing row must sum to 1");
        }
        if (std::abs(wsum - 1.0) > 1e-12)
            throw std::invalid_argument("ClassNetwork: class weights must sum to 1");
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b) {
                const double lhs = degrees[a] * mixing[a][b] * weights[a];
                const double rhs = degrees[b] * mixing[b][a] * weights[b];
                if (std::abs(lhs - rhs) > 1e-9)
                    throw std::invalid_argument("ClassNetwork: detailed balance violated for pair (" +
                                                std::to_string(a) + "," + std::to_string(b) + ")");
            }
    }

    /// Single class of the given degree (regular network). All links stay
    /// within the class, so the mean-field reduces to the scalar system.
    static ClassNetwork regular(int degree) {
        ClassNetwork net;
        net.degrees = {degree};
        net.weights = {1.0};
        net.mixing = {{1.0}};
        return net;
    }
};

/// Completes a two-class network from degrees, weights and P(B|A), solving
/// the balance equation k_A P(B|A) P(A) = k_B P(A|B) P(B) for P(A|B).
/// Class A is index 0, class B index 1. Rejects specifications whose
/// implied conditional falls outside [0,1].
inline ClassNetwork balance_complete(int k_a, int k_b, double p_a, double p_b, double p_b_given_a) {
    if (p_b_given_a < 0.0 || p_b_given_a > 1.0)
        throw std::invalid_argument("balance_complete: P(B|A) must lie in [0,1]");
    if (k_a <= 0 || k_b <= 0 || p_a <= 0.0 || p_b <= 0.0)
        throw std::invalid_argument("balance_complete: degrees and weights must be positive");
    const double p_a_given_b = double(k_a) * p_b_given_a * p_a / (double(k_b) * p_b);
    if (p_a_given_b > 1.0)
        throw std::invalid_argument("balance_complete: implied P(A|B) exceeds 1, infeasible mixing");
    ClassNetwork net;
    net.degrees = {k_a, k_b};
    net.weights = {p_a, p_b};
    net.mixing = {{1.0 - p_b_given_a, p_b_given_a}, {p_a_given_b, 1.0 - p_a_given_b}};
    net.validate();
    return net;
}

/// Per-class fractions: potential buyers, customers, competitor's customers.
struct ClassState {
    double i = 1.0;
    double r = 0.0;
    double theta = 0.0;
};

using StateVector = std::vector<ClassState>;

inline void validate_state(const StateVector& x, double simplex_tol = 1e-10) {
    if (x.empty())
        throw std::invalid_argument("StateVector: empty state");
    for (std::size_t k = 0; k < x.size(); ++k) {
        const auto& s = x[k];
        const double lo = -1e-12, hi = 1.0 + 1e-12;
        if (s.i < lo || s.i > hi || s.r < lo || s.r > hi || s.theta < lo || s.theta > hi)
            throw std::invalid_argument("StateVector: fractions outside [0,1] in class " + std::to_string(k));
        if (std::abs(s.i + s.r + s.theta - 1.0) > simplex_tol)
            throw std::invalid_argument("StateVector: simplex violated in class " + std::to_string(k));
    }
}

namespace detail {

inline void check_dimensions(const StateVector& x, const ClassNetwork& net,
                             const std::vector<double>& u, const std::vector<double>& v) {
    if (x.size() != net.num_classes())
        throw std::invalid_argument("state/network class count mismatch");
    if (u.size() != net.num_classes() || v.size() != net.num_classes())
        throw std::invalid_argument("control/network class count mismatch");
    for (std::size_t k = 0; k < u.size(); ++k)
        if (u[k] < 0.0 || u[k] > 1.0 || v[k] < 0.0 || v[k] > 1.0)
            throw std::invalid_argument("controls must lie in [0,1]");
}

// R_k = sum_k' P(k'|k) r_k' and likewise for theta.
inline void neighbor_aggregates(const StateVector& x, const ClassNetwork& net,
                                std::vector<double>& r_agg, std::vector<double>& th_agg) {
    const std::size_t n = x.size();
    r_agg.assign(n, 0.0);
    th_agg.assign(n, 0.0);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
            r_agg[a] += net.mixing[a][b] * x[b].r;
            th_agg[a] += net.mixing[a][b] * x[b].theta;
        }
}

// Social-influence rate toward the seller for class k buyers:
// (beta + u_k eps1) R_k under buyer targeting, or the link-wise boosted
// average sum_j P(j|k) (beta + u_j eps1) r_j under recommender targeting.
inline double seller_social_rate(const StateVector& x, const ClassNetwork& net, const ModelParams& p,
                                 const std::vector<double>& u, const std::vector<double>& r_agg,
                                 std::size_t k) {
    if (p.reward_target == RewardTarget::buyer)
        return (p.beta + u[k] * p.eps1) * r_agg[k];
    double rate = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j)
        rate += net.mixing[k][j] * (p.beta + u[j] * p.eps1) * x[j].r;
    return rate;
}

// Referral pay-out rate per unit time. The boosted conversions pay out c
// whichever class the program keys on; under recommender targeting only
// the rewarded-class share of the link average is paid.
inline double referral_cost_rate(const StateVector& x, const ClassNetwork& net, const ModelParams& p,
                                 const std::vector<double>& u, const std::vector<double>& r_agg) {
    double total = 0.0;
    if (p.reward_target == RewardTarget::buyer) {
        for (std::size_t k = 0; k < x.size(); ++k)
            total += net.weights[k] * u[k] * p.cost_referral * (p.beta + p.eps1) * x[k].i * r_agg[k];
        return total;
    }
    for (std::size_t k = 0; k < x.size(); ++k) {
        double rewarded = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j)
            rewarded += net.mixing[k][j] * u[j] * x[j].r;
        total += net.weights[k] * p.cost_referral * (p.beta + p.eps1) * x[k].i * rewarded;
    }
    return total;
}

inline double direct_cost_rate(const StateVector& x, const ClassNetwork& net, const ModelParams& p,
                               const std::vector<double>& v) {
    double total = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k)
        total += net.weights[k] * v[k] * p.cost_direct * (p.alpha + p.eps2) * x[k].i;
    return total;
}

// Drift without precondition checks; callers in hot loops validate at the
// step level instead. Gains and the seller/competitor inflows are shared
// subexpressions so the class components cancel exactly.
inline void drift_unchecked(const StateVector& x, const ClassNetwork& net, const ModelParams& p,
                            const std::vector<double>& u, const std::vector<double>& v,
                            const std::vector<double>& r_agg, const std::vector<double>& th_agg,
                            StateVector& dx) {
    const std::size_t n = x.size();
    dx.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double seller = seller_social_rate(x, net, p, u, r_agg, k) * x[k].i +
                              (p.alpha + v[k] * p.eps2) * x[k].i;
        const double competitor = p.gamma * x[k].i * th_agg[k] + p.delta * x[k].i;
        dx[k].i = -seller - competitor;
        dx[k].r = seller;
        dx[k].theta = competitor;
    }
}

} // namespace detail

/// Instantaneous drift of the controlled mean-field system.
inline StateVector drift(const StateVector& x, const ClassNetwork& net, const ModelParams& p,
                         const std::vector<double>& u, const std::vector<double>& v) {
    detail::check_dimensions(x, net, u, v);
    validate_state(x);
    std::vector<double> r_agg, th_agg;
    detail::neighbor_aggregates(x, net, r_agg, th_agg);
    StateVector dx;
    detail::drift_unchecked(x, net, p, u, v, r_agg, th_agg, dx);
    return dx;
}

/// Instantaneous referral-program expenditure per unit time; under the
/// default buyer targeting this is sum_k P(k) u_k c (beta+eps1) i_k R_k.
inline double cost_rate_referral(const StateVector& x, const ClassNetwork& net, const ModelParams& p,
                                 const std::vector<double>& u) {
    std::vector<double> r_agg, th_agg;
    detail::neighbor_aggregates(x, net, r_agg, th_agg);
    return detail::referral_cost_rate(x, net, p, u, r_agg);
}

/// Instantaneous direct-incentive expenditure per unit time,
/// sum_k P(k) v_k c' (alpha+eps2) i_k.
inline double cost_rate_direct(const StateVector& x, const ClassNetwork& net, const ModelParams& p,
                               const std::vector<double>& v) {
    return detail::direct_cost_rate(x, net, p, v);
}

/// Combined expenditure rate of both programs.
inline double cost_rate(const StateVector& x, const ClassNetwork& net, const ModelParams& p,
                        const std::vector<double>& u, const std::vector<double>& v) {
    detail::check_dimensions(x, net, u, v);
    validate_state(x);
    return cost_rate_referral(x, net, p, u) + cost_rate_direct(x, net, p, v);
}

/// Switching times of one class: the referral program runs on
/// [0,tau1] and (tau2,T], the direct program on [0,tau3] and (tau4,T].
struct ClassSwitchTimes {
    double tau1 = 0.0;
    double tau2 = 0.0;
    double tau3 = 0.0;
    double tau4 = 0.0;
};

using SwitchTimes = std::vector<ClassSwitchTimes>;

inline void validate_switch_times(const SwitchTimes& st, double horizon) {
    for (const auto& s : st) {
        if (!(0.0 <= s.tau1 && s.tau1 <= s.tau2 && s.tau2 <= horizon))
            throw std::invalid_argument("SwitchTimes: need 0 <= tau1 <= tau2 <= T");
        if (!(0.0 <= s.tau3 && s.tau3 <= s.tau4 && s.tau4 <= horizon))
            throw std::invalid_argument("SwitchTimes: need 0 <= tau3 <= tau4 <= T");
    }
}

/// Piecewise-constant per-class control signals on a fixed grid.
/// Interval n covers [n*control_dt, (n+1)*control_dt). Values live in [0,1];
/// final answers are binary, interior values appear only inside the relaxed
/// NLP solver.
struct ControlSchedule {
    double control_dt = 0.1;
    std::vector<std::vector<double>> u; // [class][interval]
    std::vector<std::vector<double>> v;

    std::size_t num_classes() const { return u.size(); }
    std::size_t num_intervals() const { return u.empty() ? 0 : u[0].size(); }

    std::size_t interval_index(double t) const {
        auto idx = static_cast<std::ptrdiff_t>(std::floor(t / control_dt + 1e-9));
        idx = std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(num_intervals()) - 1);
        return static_cast<std::size_t>(idx);
    }

    double u_at(std::size_t k, double t) const { return u[k][interval_index(t)]; }
    double v_at(std::size_t k, double t) const { return v[k][interval_index(t)]; }

    void validate(double horizon) const {
        if (u.size() != v.size() || u.empty())
            throw std::invalid_argument("ControlSchedule: u/v class count mismatch or empty");
        if (!(control_dt > 0.0))
            throw std::invalid_argument("ControlSchedule: control_dt must be > 0");
        const double intervals = horizon / control_dt;
        const auto m = static_cast<std::size_t>(std::llround(intervals));
        if (std::abs(intervals - double(m)) > 1e-9)
            throw std::invalid_argument("ControlSchedule: control_dt must divide the horizon");
        for (std::size_t k = 0; k < u.size(); ++k) {
            if (u[k].size() != m || v[k].size() != m)
                throw std::invalid_argument("ControlSchedule: interval count must equal T/control_dt");
            for (std::size_t n = 0; n < m; ++n)
                if (u[k][n] < 0.0 || u[k][n] > 1.0 || v[k][n] < 0.0 || v[k][n] > 1.0)
                    throw std::invalid_argument("ControlSchedule: values must lie in [0,1]");
        }
    }

    bool is_binary(double tol = 0.0) const {
        for (const auto* prog : {&u, &v})
            for (const auto& row : *prog)
                for (double val : row)
                    if (std::min(val, 1.0 - val) > tol)
                        return false;
        return true;
    }

    static ControlSchedule constant(std::size_t classes, double horizon, double control_dt,
                                    double u_val, double v_val) {
        ControlSchedule s;
        s.control_dt = control_dt;
        const auto m = static_cast<std::size_t>(std::llround(horizon / control_dt));
        s.u.assign(classes, std::vector<double>(m, u_val));
        s.v.assign(classes, std::vector<double>(m, v_val));
        s.validate(horizon);
        return s;
    }

    /// Rasterizes switch times onto the control grid, sampling each interval
    /// at its midpoint (exact for switches aligned to the grid).
    static ControlSchedule from_switch_times(const SwitchTimes& st, double horizon, double control_dt) {
        validate_switch_times(st, horizon);
        ControlSchedule s;
        s.control_dt = control_dt;
        const auto m = static_cast<std::size_t>(std::llround(horizon / control_dt));
        s.u.assign(st.size(), std::vector<double>(m, 0.0));
        s.v.assign(st.size(), std::vector<double>(m, 0.0));
        for (std::size_t k = 0; k < st.size(); ++k)
            for (std::size_t n = 0; n < m; ++n) {
                const double mid = (double(n) + 0.5) * control_dt;
                s.u[k][n] = (mid <= st[k].tau1 || mid > st[k].tau2) ? 1.0 : 0.0;
                s.v[k][n] = (mid <= st[k].tau3 || mid > st[k].tau4) ? 1.0 : 0.0;
            }
        s.validate(horizon);
        return s;
    }
};

} // namespace vmopt

#endif // VMOPT_MODEL_HPP
