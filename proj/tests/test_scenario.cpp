#include <catch2/catch_amalgamated.hpp>

#include "vmopt/rng.hpp"
#include "vmopt/scenario.hpp"

#include <sstream>

using namespace vmopt;
using Catch::Approx;

TEST_CASE("named scenarios carry the study parameters exactly", "[scenario]") {
    SECTION("base") {
        auto cfg = named_scenario("base");
        CHECK(cfg.params.alpha == 0.08);
        CHECK(cfg.params.beta == 0.1);
        CHECK(cfg.params.gamma == 0.1);
        CHECK(cfg.params.delta == 0.1);
        CHECK(cfg.params.eps1 == 0.05);
        CHECK(cfg.params.eps2 == 0.05);
        CHECK(cfg.params.cost_referral == 0.25);
        CHECK(cfg.params.cost_direct == 0.3);
        CHECK(cfg.params.horizon == 10.0);
        CHECK(cfg.params.reward_target == RewardTarget::buyer);
        CHECK(cfg.net.num_classes() == 1);
        CHECK(cfg.x0[0].i == 1.0);
        CHECK(cfg.solver.control_dt == 0.1);
        CHECK(cfg.solver.dt == 0.01);
        CHECK(cfg.solver.seed == 42);
    }
    SECTION("single-parameter variants") {
        CHECK(named_scenario("fig2-beta013").params.beta == 0.13);
        CHECK(named_scenario("fig3-alpha009").params.alpha == 0.09);
        CHECK(named_scenario("fig4-payouts").params.cost_referral == 0.3);
        CHECK(named_scenario("fig4-payouts").params.cost_direct == 0.3);
        CHECK(named_scenario("fig5-payouts").params.cost_referral == 0.25);
        CHECK(named_scenario("fig5-payouts").params.cost_direct == 0.35);
    }
    SECTION("two-class correlated studies") {
        auto cfg = named_scenario("fig6-disassortative");
        CHECK(cfg.params.alpha == 0.1);
        CHECK(cfg.params.delta == 0.1);
        CHECK(cfg.params.beta == 0.1);
        CHECK(cfg.params.gamma == 0.15);
        CHECK(cfg.params.eps1 == 0.08);
        CHECK(cfg.params.eps2 == 0.0);
        CHECK(cfg.params.reward_target == RewardTarget::recommender);
        CHECK(cfg.net.degrees == std::vector<int>{10, 2});
        CHECK(cfg.net.weights[0] == Approx(0.1));
        CHECK(cfg.net.mixing[0][1] == Approx(0.9));  // P(B|A)
        CHECK(cfg.net.mixing[1][0] == Approx(0.5));  // P(A|B) via the balance equation
        CHECK(cfg.x0.size() == 2);

        auto ass = named_scenario("fig7-assortative");
        CHECK(ass.net.mixing[0][1] == Approx(0.1));
        CHECK(ass.net.mixing[1][0] == Approx(0.1 / 1.8));
    }
    SECTION("unknown names are rejected") {
        CHECK_THROWS_AS(named_scenario("fig9"), std::invalid_argument);
    }
}

TEST_CASE("config parsing honors every section", "[scenario][config]") {
    std::istringstream in(R"(
# two-class study
[model]
alpha = 0.1
beta = 0.1
gamma = 0.15
delta = 0.1
eps1 = 0.08
eps2 = 0
cost_referral = 0.3
reward_target = recommender

[network]
degrees = 10 2
weights = 0.1 0.9
p_b_given_a = 0.9

[initial]
i0 = 1 1

[solver]
dt = 0.005
control_dt = 0.1
nlp_starts = 6
seed = 7
solver = nlp
)");
    auto cfg = parse_config(in, "test");
    CHECK(cfg.params.gamma == 0.15);
    CHECK(cfg.params.reward_target == RewardTarget::recommender);
    CHECK(cfg.net.num_classes() == 2);
    CHECK(cfg.net.mixing[1][0] == Approx(0.5));
    CHECK(cfg.x0.size() == 2);
    CHECK(cfg.x0[1].i == 1.0);
    CHECK(cfg.solver.dt == 0.005);
    CHECK(cfg.solver.nlp_starts == 6);
    CHECK(cfg.solver.seed == 7);
    CHECK(cfg.solver.solver == "nlp");
}

TEST_CASE("config parsing accepts explicit mixing rows", "[scenario][config]") {
    std::istringstream in(R"(
[network]
degrees = 10 2
weights = 0.1 0.9
mixing_row_1 = 0.1 0.9
mixing_row_2 = 0.5 0.5
)");
    auto cfg = parse_config(in, "test");
    CHECK(cfg.net.mixing[0][0] == 0.1);
    CHECK(cfg.net.mixing[1][0] == 0.5);
}

TEST_CASE("config parsing fails fast on mistakes", "[scenario][config]") {
    auto parse = [](const std::string& text) {
        std::istringstream in(text);
        return parse_config(in, "test");
    };
    // unknown keys, sections, malformed lines
    CHECK_THROWS_AS(parse("[model]\nalpa = 0.1\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse("[modle]\nalpha = 0.1\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse("alpha = 0.1\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse("[model]\nalpha 0.1\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse("[model]\nalpha = zero\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse("[model]\nalpha = 0.1x\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse("[model]\nreward_target = both\n"), std::invalid_argument);
    // inconsistent network blocks
    CHECK_THROWS_AS(parse("[network]\ndegrees = 10 2\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse("[network]\ndegrees = 10 2\nweights = 0.5 0.5\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse("[network]\ndegrees = 10 2 3\nweights = 0.1 0.8 0.1\np_b_given_a = 0.5\n"),
                    std::invalid_argument);
    // invariant violations surface through validation
    CHECK_THROWS_AS(parse("[model]\nbeta = 0.97\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse("[initial]\ni0 = 0.5\nr0 = 0.2\ntheta0 = 0.2\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse("[solver]\nsolver = annealing\n"), std::invalid_argument);
}

TEST_CASE("omitted config fields keep base-scenario defaults", "[scenario][config]") {
    std::istringstream in("[model]\nbeta = 0.13\n");
    auto cfg = parse_config(in, "test");
    CHECK(cfg.params.beta == 0.13);
    CHECK(cfg.params.alpha == 0.08);
    CHECK(cfg.net.num_classes() == 1);
    CHECK(cfg.net.degrees[0] == 6);
    CHECK(cfg.x0[0].i == 1.0);
    CHECK(cfg.solver.nlp_starts == 20);
    CHECK(cfg.solver.switch_starts == 50);
}

TEST_CASE("seed derivation separates purposes and indices", "[scenario][rng]") {
    const auto a = derive_seed(42, "nlp-start", 0);
    CHECK(a == derive_seed(42, "nlp-start", 0));
    CHECK(a != derive_seed(42, "nlp-start", 1));
    CHECK(a != derive_seed(42, "switch-start", 0));
    CHECK(a != derive_seed(43, "nlp-start", 0));
    auto rng1 = make_rng(42, "abm-chain", 3);
    auto rng2 = make_rng(42, "abm-chain", 3);
    CHECK(rng1() == rng2());
}
