#ifndef VMOPT_ABM_HPP
#define VMOPT_ABM_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "vmopt/integrate.hpp"
#include "vmopt/model.hpp"
#include "vmopt/parallel.hpp"
#include "vmopt/rng.hpp"

/**
 * @file   abm.hpp
 * @brief  Agent-based validation of the mean-field ODE: random graphs with
 *         prescribed degree classes and mixing, the discrete-time purchase
 *         chain under a control schedule, and empirical convergence checks
 *         of class fractions and per-capita costs against the ODE.
 *
 * Time scaling: one ODE time unit corresponds to N chain slots, because the
 * per-slot drift of the empirical fractions is F(x)/N. This mapping is what
 * lets the same ControlSchedule drive both simulations.
 */

namespace vmopt {

/// Undirected simple graph over class-labelled agents, CSR adjacency.
struct AgentGraph {
    std::vector<int> class_of;
    std::vector<std::size_t> offsets;
    std::vector<std::uint32_t> neighbors;
    std::vector<std::size_t> class_counts;
    std::vector<std::vector<double>> realized_mixing; // stub fractions per class pair

    std::size_t num_agents() const { return class_of.size(); }
    std::size_t degree(std::size_t a) const { return offsets[a + 1] - offsets[a]; }
};

namespace detail {

inline std::uint64_t edge_key(std::uint32_t a, std::uint32_t b) {
    if (a > b)
        std::swap(a, b);
    return (std::uint64_t(a) << 32) | b;
}

// Largest-remainder apportionment of N agents to class weights.
inline std::vector<std::size_t> apportion_classes(const ClassNetwork& net, std::size_t n_agents) {
    const std::size_t classes = net.num_classes();
    std::vector<std::size_t> counts(classes);
    std::vector<std::pair<double, std::size_t>> remainders(classes);
    std::size_t assigned = 0;
    for (std::size_t k = 0; k < classes; ++k) {
        const double exact = net.weights[k] * double(n_agents);
        counts[k] = std::size_t(exact);
        assigned += counts[k];
        remainders[k] = {exact - double(counts[k]), k};
    }
    std::sort(remainders.begin(), remainders.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t pos = 0; assigned < n_agents; ++pos, ++assigned)
        ++counts[remainders[pos % classes].second];
    return counts;
}

} // namespace detail

/// Stub-matching construction: class sizes by largest remainder, per-pair
/// edge counts from the mixing matrix (rounded, then repaired to consume
/// every stub), random stub pairing per pair, and local edge swaps within
/// each class pair to remove self-loops and duplicates. Swaps preserve the
/// pair counts, so the realized mixing equals the rounded target exactly.
inline AgentGraph sample_graph(const ClassNetwork& net, std::size_t n_agents, std::uint64_t seed) {
    net.validate();
    const std::size_t classes = net.num_classes();
    auto rng = make_rng(seed, "abm-graph");

    AgentGraph g;
    g.class_counts = detail::apportion_classes(net, n_agents);
    g.class_of.resize(n_agents);
    {
        std::size_t next = 0;
        for (std::size_t k = 0; k < classes; ++k)
            for (std::size_t c = 0; c < g.class_counts[k]; ++c)
                g.class_of[next++] = int(k);
    }

    std::vector<std::size_t> stubs(classes);
    std::size_t total_stubs = 0;
    for (std::size_t k = 0; k < classes; ++k) {
        stubs[k] = g.class_counts[k] * std::size_t(net.degrees[k]);
        total_stubs += stubs[k];
    }
    if (total_stubs % 2 != 0)
        throw std::runtime_error("sample_graph: rounded class sizes give an odd stub count");

    // Edge counts per class pair, then integer repair so that every class
    // consumes exactly its stub count.
    std::vector<std::vector<long long>> edges_between(classes, std::vector<long long>(classes, 0));
    for (std::size_t a = 0; a < classes; ++a) {
        edges_between[a][a] = std::llround(0.5 * double(stubs[a]) * net.mixing[a][a]);
        for (std::size_t b = a + 1; b < classes; ++b)
            edges_between[a][b] = std::llround(
                0.5 * (double(stubs[a]) * net.mixing[a][b] + double(stubs[b]) * net.mixing[b][a]));
    }
    auto deficit = [&](std::size_t a) {
        long long used = 2 * edges_between[a][a];
        for (std::size_t b = 0; b < classes; ++b)
            if (b != a)
                used += edges_between[std::min(a, b)][std::max(a, b)];
        return (long long)(stubs[a]) - used;
    };
    // Odd deficits come in pairs; fix them on cross counts first.
    for (std::size_t a = 0; a < classes; ++a) {
        if (deficit(a) % 2 == 0)
            continue;
        bool fixed = false;
        for (std::size_t b = 0; b < classes && !fixed; ++b) {
            if (b == a || deficit(b) % 2 == 0)
                continue;
            auto& cell = edges_between[std::min(a, b)][std::max(a, b)];
            const long long adjust = (deficit(a) + deficit(b) >= 0) ? 1 : -1;
            if (cell + adjust >= 0) {
                cell += adjust;
                fixed = true;
            }
        }
        if (!fixed)
            throw std::runtime_error("sample_graph: infeasible rounding, cannot balance stub parity");
    }
    for (std::size_t a = 0; a < classes; ++a) {
        long long d = deficit(a);
        if (d % 2 != 0 || edges_between[a][a] + d / 2 < 0)
            throw std::runtime_error("sample_graph: infeasible rounding of the mixing matrix");
        edges_between[a][a] += d / 2;
    }

    // Shuffled stub lists, consumed sequentially per pair bucket.
    std::vector<std::vector<std::uint32_t>> stub_list(classes);
    {
        std::size_t node = 0;
        for (std::size_t k = 0; k < classes; ++k) {
            stub_list[k].reserve(stubs[k]);
            for (std::size_t c = 0; c < g.class_counts[k]; ++c, ++node)
                for (int s = 0; s < net.degrees[k]; ++s)
                    stub_list[k].push_back(std::uint32_t(node));
            std::shuffle(stub_list[k].begin(), stub_list[k].end(), rng);
        }
    }
    std::vector<std::size_t> cursor(classes, 0);
    auto pop_stub = [&](std::size_t k) { return stub_list[k][cursor[k]++]; };

    std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> buckets;
    std::vector<std::pair<std::size_t, std::size_t>> bucket_pair;
    for (std::size_t a = 0; a < classes; ++a)
        for (std::size_t b = a; b < classes; ++b) {
            std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
            edges.reserve(std::size_t(edges_between[a][b]));
            for (long long e = 0; e < edges_between[a][b]; ++e)
                edges.emplace_back(pop_stub(a), pop_stub(b));
            buckets.push_back(std::move(edges));
            bucket_pair.emplace_back(a, b);
        }
    for (std::size_t k = 0; k < classes; ++k)
        if (cursor[k] != stubs[k])
            throw std::runtime_error("sample_graph: internal stub accounting error");

    // Local repair: swap partners inside the same bucket until the graph is
    // simple. Budget 100 * N attempted swaps.
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(total_stubs);
    auto is_bad = [&](std::uint32_t s, std::uint32_t t) {
        return s == t || seen.count(detail::edge_key(s, t)) > 0;
    };
    long long budget = 100ll * (long long)(n_agents);
    for (std::size_t bk = 0; bk < buckets.size(); ++bk) {
        auto& edges = buckets[bk];
        for (std::size_t e = 0; e < edges.size(); ++e) {
            auto [s, t] = edges[e];
            while (is_bad(s, t)) {
                if (--budget < 0) {
                    std::ostringstream os;
                    os << "sample_graph: repair budget exhausted for class pair ("
                       << bucket_pair[bk].first << "," << bucket_pair[bk].second << ")";
                    throw std::runtime_error(os.str());
                }
                if (edges.size() < 2)
                    throw std::runtime_error("sample_graph: unresolvable self-loop in a single-edge bucket");
                std::uniform_int_distribution<std::size_t> pick(0, edges.size() - 1);
                const std::size_t other = pick(rng);
                if (other == e)
                    continue;
                auto [os_, ot] = edges[other];
                if (other < e) {
                    // Already committed; must stay simple after the swap.
                    if (is_bad(s, ot) || is_bad(os_, t) || (s == os_ && t == ot))
                        continue;
                    seen.erase(detail::edge_key(os_, ot));
                    seen.insert(detail::edge_key(os_, t));
                    edges[other] = {os_, t};
                    t = ot;
                } else {
                    edges[other] = {os_, t};
                    t = ot;
                }
                edges[e] = {s, t};
            }
            seen.insert(detail::edge_key(s, t));
        }
    }

    // CSR assembly and realized mixing.
    std::vector<std::size_t> deg(n_agents, 0);
    for (const auto& edges : buckets)
        for (auto [s, t] : edges) {
            ++deg[s];
            ++deg[t];
        }
    g.offsets.assign(n_agents + 1, 0);
    for (std::size_t a = 0; a < n_agents; ++a)
        g.offsets[a + 1] = g.offsets[a] + deg[a];
    g.neighbors.resize(total_stubs);
    std::vector<std::size_t> fill = std::vector<std::size_t>(g.offsets.begin(), g.offsets.end() - 1);
    g.realized_mixing.assign(classes, std::vector<double>(classes, 0.0));
    for (const auto& edges : buckets)
        for (auto [s, t] : edges) {
            g.neighbors[fill[s]++] = t;
            g.neighbors[fill[t]++] = s;
            g.realized_mixing[g.class_of[s]][g.class_of[t]] += 1.0;
            g.realized_mixing[g.class_of[t]][g.class_of[s]] += 1.0;
        }
    for (std::size_t a = 0; a < classes; ++a)
        for (std::size_t b = 0; b < classes; ++b)
            if (stubs[a] > 0)
                g.realized_mixing[a][b] /= double(stubs[a]);
    for (std::size_t a = 0; a < n_agents; ++a)
        if (g.degree(a) != std::size_t(net.degrees[g.class_of[a]]))
            throw std::runtime_error("sample_graph: realized degree mismatch after construction");
    return g;
}

/// Per-class empirical fractions and accumulated program pay-outs of one
/// chain realization. Fractions are emitted every N slots (one ODE time
/// unit); integer bookkeeping keeps i+r+theta = 1 exactly per class.
struct ChainSeries {
    std::vector<double> t;
    std::vector<std::vector<ClassState>> fractions; // [emission][class]
    std::vector<double> class_weights;              // realized N_k / N
    long long referral_conversions = 0;
    long long direct_conversions = 0;
    double profit_estimate = 0.0;
};

/// Discrete-time purchase chain on a sampled graph: each slot picks one
/// agent uniformly; a potential buyer purchases from the seller on her own
/// with probability alpha + v eps2 (pay-out c' while v = 1), from the
/// competitor with probability delta, and otherwise consults one uniform
/// neighbor, converting with probability beta + u eps1 if that neighbor is
/// a customer (pay-out c while u = 1) or with probability gamma if a
/// competitor's customer. States 1 and -1 absorb.
inline ChainSeries simulate_chain(const AgentGraph& g, const ClassNetwork& net, const ModelParams& p,
                                  const ControlSchedule& sched, std::uint64_t seed,
                                  std::vector<signed char> initial_states = {}) {
    p.validate();
    sched.validate(p.horizon);
    if (p.reward_target != RewardTarget::buyer)
        throw std::invalid_argument("simulate_chain: only buyer-targeted referral rewards are defined");
    if (!sched.is_binary())
        throw std::invalid_argument("simulate_chain: binary schedule required");
    if (sched.num_classes() != net.num_classes())
        throw std::invalid_argument("simulate_chain: schedule/network class count mismatch");
    if (p.alpha + p.eps2 + p.delta + std::max(p.beta + p.eps1, p.gamma) > 1.0)
        throw std::invalid_argument("simulate_chain: per-slot event probabilities exceed 1");

    const std::size_t n_agents = g.num_agents();
    const std::size_t classes = net.num_classes();
    auto rng = make_rng(seed, "abm-chain");
    std::uniform_int_distribution<std::size_t> pick_agent(0, n_agents - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<signed char> state = initial_states.empty() ? std::vector<signed char>(n_agents, 0)
                                                            : std::move(initial_states);
    if (state.size() != n_agents)
        throw std::invalid_argument("simulate_chain: initial state size mismatch");
    std::vector<long long> count_i(classes, 0), count_r(classes, 0), count_th(classes, 0);
    for (std::size_t a = 0; a < n_agents; ++a) {
        const auto k = std::size_t(g.class_of[a]);
        if (state[a] == 0)
            ++count_i[k];
        else if (state[a] == 1)
            ++count_r[k];
        else
            ++count_th[k];
    }

    ChainSeries series;
    series.class_weights.resize(classes);
    for (std::size_t k = 0; k < classes; ++k)
        series.class_weights[k] = double(g.class_counts[k]) / double(n_agents);

    auto emit = [&](double t) {
        series.t.push_back(t);
        std::vector<ClassState> snap(classes);
        for (std::size_t k = 0; k < classes; ++k) {
            const double members = double(g.class_counts[k]);
            snap[k] = ClassState{double(count_i[k]) / members, double(count_r[k]) / members,
                                 double(count_th[k]) / members};
        }
        series.fractions.push_back(std::move(snap));
    };
    emit(0.0);

    const long long total_slots = (long long)(std::ceil(double(n_agents) * p.horizon));
    for (long long slot = 1; slot <= total_slots; ++slot) {
        const std::size_t agent = pick_agent(rng);
        if (state[agent] == 0) {
            const double t_now = double(slot - 1) / double(n_agents);
            const auto k = std::size_t(g.class_of[agent]);
            const double u_ctrl = sched.u_at(k, t_now);
            const double v_ctrl = sched.v_at(k, t_now);
            const double own_seller = p.alpha + v_ctrl * p.eps2;
            const double own_comp = own_seller + p.delta;
            const double draw = unit(rng);
            if (draw < own_seller) {
                state[agent] = 1;
                --count_i[k];
                ++count_r[k];
                if (v_ctrl == 1.0)
                    ++series.direct_conversions;
            } else if (draw < own_comp) {
                state[agent] = -1;
                --count_i[k];
                ++count_th[k];
            } else {
                std::uniform_int_distribution<std::size_t> pick_nbr(0, g.degree(agent) - 1);
                const auto nbr = g.neighbors[g.offsets[agent] + pick_nbr(rng)];
                if (state[nbr] == 1 && draw < own_comp + p.beta + u_ctrl * p.eps1) {
                    state[agent] = 1;
                    --count_i[k];
                    ++count_r[k];
                    if (u_ctrl == 1.0)
                        ++series.referral_conversions;
                } else if (state[nbr] == -1 && draw < own_comp + p.gamma) {
                    state[agent] = -1;
                    --count_i[k];
                    ++count_th[k];
                }
            }
        }
        if (slot % (long long)(n_agents) == 0 || slot == total_slots)
            emit(double(slot) / double(n_agents));
    }

    double revenue = 0.0;
    for (std::size_t k = 0; k < classes; ++k)
        revenue += series.class_weights[k] * series.fractions.back()[k].r;
    series.profit_estimate = revenue -
                             (p.cost_referral * double(series.referral_conversions) +
                              p.cost_direct * double(series.direct_conversions)) /
                                 double(n_agents);
    return series;
}

/// One population size of the convergence experiment.
struct ConvergenceRow {
    std::size_t n_agents = 0;
    int replicas = 0;
    std::vector<double> mean_sup_err; // per class, sup_t |r_emp - r_ode|
    std::vector<double> stderr_sup;
    double mean_profit_err = 0.0;
    double ode_profit = 0.0;
};

struct ConvergenceReport {
    std::vector<ConvergenceRow> rows;
    bool monotone_ok = true; // mean error nonincreasing in N within one stderr
    std::string note;
};

/// Mean-field validity experiment: for each population size, `replicas`
/// independent chains are compared against the ODE trajectory; reports the
/// per-class sup-norm adoption error and the per-capita profit error, and
/// flags (without failing) if the error does not shrink with N within one
/// standard error.
inline ConvergenceReport compare_abm_ode(const ClassNetwork& net, const ModelParams& p,
                                         const ControlSchedule& sched, const StateVector& x0,
                                         const std::vector<std::size_t>& n_list, int replicas,
                                         std::uint64_t seed, double dt = 0.01) {
    if (n_list.empty() || !std::is_sorted(n_list.begin(), n_list.end()))
        throw std::invalid_argument("compare_abm_ode: population list must be increasing");
    if (replicas <= 0)
        throw std::invalid_argument("compare_abm_ode: at least one replica required");
    for (const auto& s : x0)
        if (s.i != 1.0 || s.r != 0.0 || s.theta != 0.0)
            throw std::invalid_argument("compare_abm_ode: chain initialization supports only i0 = 1");

    auto traj = integrate(x0, sched, net, p, dt);
    const double ode_profit = profit(traj, net);
    auto ode_r_at = [&](double t, std::size_t k) {
        const auto idx = std::min(std::size_t(std::llround(t / dt)), traj.t.size() - 1);
        return traj.x[idx][k].r;
    };

    const std::size_t classes = net.num_classes();
    ConvergenceReport report;
    for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
        ConvergenceRow row;
        row.n_agents = n_list[ni];
        row.replicas = replicas;
        std::vector<std::vector<double>> sup_err(static_cast<std::size_t>(replicas));
        std::vector<double> profit_err(static_cast<std::size_t>(replicas));
        parallel_for(std::size_t(replicas), [&](std::size_t rep) {
            const std::uint64_t stream = ni * 1000003ull + rep;
            auto g = sample_graph(net, row.n_agents, derive_seed(seed, "abm-graph", stream));
            auto series = simulate_chain(g, net, p, sched, derive_seed(seed, "abm-chain", stream));
            std::vector<double> sup(classes, 0.0);
            for (std::size_t e = 0; e < series.t.size(); ++e)
                for (std::size_t k = 0; k < classes; ++k)
                    sup[k] = std::max(sup[k],
                                      std::abs(series.fractions[e][k].r - ode_r_at(series.t[e], k)));
            sup_err[rep] = std::move(sup);
            profit_err[rep] = std::abs(series.profit_estimate - ode_profit);
        });
        row.mean_sup_err.assign(classes, 0.0);
        row.stderr_sup.assign(classes, 0.0);
        for (std::size_t k = 0; k < classes; ++k) {
            double mean = 0.0;
            for (int rep = 0; rep < replicas; ++rep)
                mean += sup_err[std::size_t(rep)][k];
            mean /= double(replicas);
            double var = 0.0;
            for (int rep = 0; rep < replicas; ++rep)
                var += (sup_err[std::size_t(rep)][k] - mean) * (sup_err[std::size_t(rep)][k] - mean);
            var = replicas > 1 ? var / double(replicas - 1) : 0.0;
            row.mean_sup_err[k] = mean;
            row.stderr_sup[k] = std::sqrt(var / double(replicas));
        }
        row.mean_profit_err =
            std::accumulate(profit_err.begin(), profit_err.end(), 0.0) / double(replicas);
        row.ode_profit = ode_profit;
        report.rows.push_back(std::move(row));
    }
    for (std::size_t ni = 0; ni + 1 < report.rows.size(); ++ni)
        for (std::size_t k = 0; k < classes; ++k)
            if (report.rows[ni + 1].mean_sup_err[k] >
                report.rows[ni].mean_sup_err[k] + report.rows[ni].stderr_sup[k]) {
                report.monotone_ok = false;
                report.note = "sup error not monotone in N for class " + std::to_string(k);
            }
    return report;
}

/// Convergence report CSV: N, replicas, per-class mean sup error and
/// standard error, profit error. Seed recorded in the header comment.
inline void write_convergence_csv(std::ostream& os, const ConvergenceReport& report,
                                  std::uint64_t seed) {
    os << "# seed=" << seed << "\n";
    os << "N,replicas";
    if (!report.rows.empty())
        for (std::size_t k = 1; k <= report.rows.front().mean_sup_err.size(); ++k)
            os << ",mean_sup_err" << k << ",stderr" << k;
    os << ",profit_err\n" << std::setprecision(12);
    for (const auto& row : report.rows) {
        os << row.n_agents << ',' << row.replicas;
        for (std::size_t k = 0; k < row.mean_sup_err.size(); ++k)
            os << ',' << row.mean_sup_err[k] << ',' << row.stderr_sup[k];
        os << ',' << row.mean_profit_err << '\n';
    }
}

} // namespace vmopt

#endif // VMOPT_ABM_HPP
