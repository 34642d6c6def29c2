#include <catch2/catch_amalgamated.hpp>

#include "vmopt/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace vmopt;
using Catch::Approx;

namespace {

// Random correlated network with exact detailed balance: draw a symmetric
// edge-mass matrix W, set P(b|a) = W_ab / sum_c W_ac and P(a) proportional
// to (sum_c W_ac)/k_a.
ClassNetwork random_network(std::mt19937_64& rng, std::size_t classes) {
    std::uniform_real_distribution<double> mass(0.1, 2.0);
    std::uniform_int_distribution<int> deg(1, 12);
    std::vector<std::vector<double>> w(classes, std::vector<double>(classes));
    for (std::size_t a = 0; a < classes; ++a)
        for (std::size_t b = a; b < classes; ++b)
            w[a][b] = w[b][a] = mass(rng);

    ClassNetwork net;
    net.degrees.resize(classes);
    net.weights.resize(classes);
    net.mixing.assign(classes, std::vector<double>(classes));
    std::vector<double> row_mass(classes, 0.0);
    for (std::size_t a = 0; a < classes; ++a) {
        net.degrees[a] = deg(rng);
        row_mass[a] = std::accumulate(w[a].begin(), w[a].end(), 0.0);
        for (std::size_t b = 0; b < classes; ++b)
            net.mixing[a][b] = w[a][b] / row_mass[a];
    }
    double total = 0.0;
    for (std::size_t a = 0; a < classes; ++a) {
        net.weights[a] = row_mass[a] / net.degrees[a];
        total += net.weights[a];
    }
    for (auto& p : net.weights)
        p /= total;
    net.validate();
    return net;
}

StateVector random_state(std::mt19937_64& rng, std::size_t classes) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    StateVector x(classes);
    for (auto& s : x) {
        double a = unit(rng), b = unit(rng);
        if (a > b)
            std::swap(a, b);
        s.i = a;
        s.r = b - a;
        s.theta = 1.0 - b;
    }
    return x;
}

std::vector<double> random_controls(std::mt19937_64& rng, std::size_t classes) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> c(classes);
    for (auto& v : c)
        v = unit(rng);
    return c;
}

} // namespace

TEST_CASE("drift matches hand-computed rates", "[model]") {
    ModelParams p;
    auto net = ClassNetwork::regular(6);

    SECTION("no potential buyers means no movement") {
        auto dx = drift({ClassState{0.0, 0.6, 0.4}}, net, p, {0.0}, {0.0});
        CHECK(dx[0].i == 0.0);
        CHECK(dx[0].r == 0.0);
        CHECK(dx[0].theta == 0.0);
    }
    SECTION("fresh market is driven by external rates only") {
        auto dx = drift({ClassState{1.0, 0.0, 0.0}}, net, p, {0.0}, {0.0});
        CHECK(dx[0].i == Approx(-0.18).margin(1e-15));
        CHECK(dx[0].r == Approx(0.08).margin(1e-15));
        CHECK(dx[0].theta == Approx(0.1).margin(1e-15));
    }
    SECTION("referral program boosts the social term") {
        auto dx = drift({ClassState{0.5, 0.3, 0.2}}, net, p, {1.0}, {0.0});
        CHECK(dx[0].i == Approx(-0.1225).margin(1e-15));
        CHECK(dx[0].r == Approx(0.0625).margin(1e-15));
        CHECK(dx[0].theta == Approx(0.06).margin(1e-15));
    }
}

TEST_CASE("drift conserves mass and respects sign structure", "[model][property]") {
    std::mt19937_64 rng(2024);
    ModelParams p;
    for (int trial = 0; trial < 200; ++trial) {
        const auto classes = std::size_t(1 + trial % 4);
        auto net = random_network(rng, classes);
        auto x = random_state(rng, classes);
        auto u = random_controls(rng, classes);
        auto v = random_controls(rng, classes);
        auto dx = drift(x, net, p, u, v);
        for (std::size_t k = 0; k < classes; ++k) {
            CHECK(std::abs(dx[k].i + dx[k].r + dx[k].theta) <= 1e-14);
            CHECK(dx[k].r >= 0.0);
            CHECK(dx[k].theta >= 0.0);
            CHECK(dx[k].i <= 0.0);
        }
    }
}

TEST_CASE("drift is invariant under class relabeling", "[model][property]") {
    std::mt19937_64 rng(7);
    ModelParams p;
    const std::size_t classes = 4;
    auto net = random_network(rng, classes);
    auto x = random_state(rng, classes);
    auto u = random_controls(rng, classes);
    auto v = random_controls(rng, classes);
    auto dx = drift(x, net, p, u, v);

    std::vector<std::size_t> perm{2, 0, 3, 1};
    ClassNetwork pnet;
    pnet.degrees.resize(classes);
    pnet.weights.resize(classes);
    pnet.mixing.assign(classes, std::vector<double>(classes));
    StateVector px(classes);
    std::vector<double> pu(classes), pv(classes);
    for (std::size_t a = 0; a < classes; ++a) {
        pnet.degrees[a] = net.degrees[perm[a]];
        pnet.weights[a] = net.weights[perm[a]];
        for (std::size_t b = 0; b < classes; ++b)
            pnet.mixing[a][b] = net.mixing[perm[a]][perm[b]];
        px[a] = x[perm[a]];
        pu[a] = u[perm[a]];
        pv[a] = v[perm[a]];
    }
    auto pdx = drift(px, pnet, p, pu, pv);
    for (std::size_t a = 0; a < classes; ++a) {
        CHECK(pdx[a].i == Approx(dx[perm[a]].i).margin(1e-15));
        CHECK(pdx[a].r == Approx(dx[perm[a]].r).margin(1e-15));
        CHECK(pdx[a].theta == Approx(dx[perm[a]].theta).margin(1e-15));
    }
}

TEST_CASE("drift rejects inconsistent inputs", "[model]") {
    ModelParams p;
    auto net = ClassNetwork::regular(6);
    CHECK_THROWS_AS(drift({ClassState{1, 0, 0}, ClassState{1, 0, 0}}, net, p, {0.0, 0.0}, {0.0, 0.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(drift({ClassState{1, 0, 0}}, net, p, {0.0, 0.0}, {0.0}), std::invalid_argument);
    CHECK_THROWS_AS(drift({ClassState{0.5, 0.2, 0.2}}, net, p, {0.0}, {0.0}), std::invalid_argument);
    CHECK_THROWS_AS(drift({ClassState{1, 0, 0}}, net, p, {1.5}, {0.0}), std::invalid_argument);
    CHECK_THROWS_AS(drift({ClassState{1, 0, 0}}, net, p, {0.0}, {-0.1}), std::invalid_argument);
}

TEST_CASE("cost rate matches the program expenditure integrands", "[model]") {
    ModelParams p;
    auto net = ClassNetwork::regular(6);

    SECTION("no programs, no spend") {
        CHECK(cost_rate({ClassState{0.5, 0.3, 0.2}}, net, p, {0.0}, {0.0}) == 0.0);
    }
    SECTION("fresh market spends only on direct incentives") {
        CHECK(cost_rate({ClassState{1.0, 0.0, 0.0}}, net, p, {1.0}, {1.0}) == Approx(0.039).margin(1e-15));
    }
    SECTION("referral spend scales with buyers times neighbor customers") {
        CHECK(cost_rate({ClassState{0.5, 0.4, 0.1}}, net, p, {1.0}, {0.0}) == Approx(0.0075).margin(1e-15));
    }
}

TEST_CASE("cost rate is monotone in controls and pay-outs", "[model][property]") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const auto classes = std::size_t(1 + trial % 3);
        auto net = random_network(rng, classes);
        auto x = random_state(rng, classes);
        auto u = random_controls(rng, classes);
        auto v = random_controls(rng, classes);
        ModelParams p;
        const double base = cost_rate(x, net, p, u, v);
        CHECK(base >= 0.0);
        for (std::size_t k = 0; k < classes; ++k) {
            auto u_up = u;
            u_up[k] = std::min(1.0, u[k] + 0.25);
            CHECK(cost_rate(x, net, p, u_up, v) >= base - 1e-15);
            auto v_up = v;
            v_up[k] = std::min(1.0, v[k] + 0.25);
            CHECK(cost_rate(x, net, p, u, v_up) >= base - 1e-15);
        }
        ModelParams pc = p;
        pc.cost_referral += 0.1;
        CHECK(cost_rate(x, net, pc, u, v) >= base - 1e-15);
        ModelParams pd = p;
        pd.cost_direct += 0.1;
        CHECK(cost_rate(x, net, pd, u, v) >= base - 1e-15);
    }
}

TEST_CASE("balance_complete solves the two-class balance equation", "[model]") {
    SECTION("disassortative reference instance") {
        auto net = balance_complete(10, 2, 0.1, 0.9, 0.9);
        CHECK(net.mixing[1][0] == Approx(0.5).margin(1e-15));
        CHECK(net.mixing[0][0] == Approx(0.1).margin(1e-15));
        CHECK(net.mixing[1][1] == Approx(0.5).margin(1e-15));
    }
    SECTION("assortative reference instance") {
        auto net = balance_complete(10, 2, 0.1, 0.9, 0.1);
        CHECK(net.mixing[1][0] == Approx(0.1 / 1.8).margin(1e-15));
    }
    SECTION("symmetric case") {
        auto net = balance_complete(5, 5, 0.5, 0.5, 0.5);
        CHECK(net.mixing[1][0] == Approx(0.5).margin(1e-15));
    }
    SECTION("detailed balance holds on the completed matrix") {
        auto net = balance_complete(10, 2, 0.1, 0.9, 0.7);
        const double lhs = net.degrees[0] * net.mixing[0][1] * net.weights[0];
        const double rhs = net.degrees[1] * net.mixing[1][0] * net.weights[1];
        CHECK(lhs == Approx(rhs).margin(1e-15));
    }
    SECTION("infeasible specification is rejected") {
        CHECK_THROWS_AS(balance_complete(10, 1, 0.5, 0.5, 0.5), std::invalid_argument);
    }
}

TEST_CASE("network validation enforces the structural invariants", "[model]") {
    auto net = balance_complete(10, 2, 0.1, 0.9, 0.9);
    SECTION("weights must sum to one") {
        auto bad = net;
        bad.weights[0] = 0.2;
        CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    }
    SECTION("mixing rows must sum to one") {
        auto bad = net;
        bad.mixing[0][0] = 0.2;
        CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    }
    SECTION("detailed balance is required") {
        auto bad = net;
        bad.mixing[0] = {0.5, 0.5};
        bad.mixing[1] = {0.5, 0.5};
        CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    }
}

TEST_CASE("parameter validation enforces rate bounds", "[model]") {
    ModelParams p;
    p.beta = 0.97;
    p.eps1 = 0.05;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = ModelParams{};
    p.horizon = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = ModelParams{};
    p.alpha = -0.1;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("control schedules are validated against the grid", "[model]") {
    auto sched = ControlSchedule::constant(2, 10.0, 0.1, 1.0, 0.0);
    CHECK(sched.num_intervals() == 100);
    CHECK(sched.is_binary());
    CHECK_NOTHROW(sched.validate(10.0));

    SECTION("interval count must equal T over control_dt") {
        auto bad = sched;
        bad.u[0].pop_back();
        CHECK_THROWS_AS(bad.validate(10.0), std::invalid_argument);
    }
    SECTION("control_dt must divide the horizon") {
        auto bad = sched;
        bad.control_dt = 0.3;
        CHECK_THROWS_AS(bad.validate(10.0), std::invalid_argument);
    }
    SECTION("values outside the unit interval are rejected") {
        auto bad = sched;
        bad.v[1][5] = 1.2;
        CHECK_THROWS_AS(bad.validate(10.0), std::invalid_argument);
    }
}

TEST_CASE("switch times rasterize to on-off-on patterns", "[model]") {
    SwitchTimes st{{2.0, 8.0, 0.0, 10.0}};
    auto sched = ControlSchedule::from_switch_times(st, 10.0, 0.1);
    CHECK(sched.u[0][0] == 1.0);   // [0, tau1]
    CHECK(sched.u[0][19] == 1.0);  // midpoint 1.95 <= 2.0
    CHECK(sched.u[0][20] == 0.0);  // midpoint 2.05 > 2.0
    CHECK(sched.u[0][79] == 0.0);  // midpoint 7.95 <= 8.0
    CHECK(sched.u[0][80] == 1.0);  // midpoint 8.05 > 8.0
    CHECK(sched.u[0][99] == 1.0);
    for (double val : sched.v[0])
        CHECK(val == 0.0); // tau3 = 0, tau4 = T keeps the program off

    CHECK_THROWS_AS(ControlSchedule::from_switch_times({{3.0, 2.0, 0.0, 10.0}}, 10.0, 0.1),
                    std::invalid_argument);
    CHECK_THROWS_AS(ControlSchedule::from_switch_times({{0.0, 10.0, 0.0, 12.0}}, 10.0, 0.1),
                    std::invalid_argument);
}

TEST_CASE("state validation enforces the per-class simplex", "[model]") {
    CHECK_NOTHROW(validate_state({ClassState{0.3, 0.45, 0.25}}));
    CHECK_THROWS_AS(validate_state({ClassState{0.3, 0.45, 0.25 + 1e-6}}), std::invalid_argument);
    CHECK_THROWS_AS(validate_state({ClassState{-0.1, 0.6, 0.5}}), std::invalid_argument);
    CHECK_THROWS_AS(validate_state(StateVector{}), std::invalid_argument);
}
