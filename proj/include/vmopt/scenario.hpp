#ifndef VMOPT_SCENARIO_HPP
#define VMOPT_SCENARIO_HPP

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vmopt/model.hpp"

/**
 * @file   scenario.hpp
 * @brief  Scenario definitions: the named studies, plus a strict key-value
 *         config format (section headers, unknown keys are errors).
 */

namespace vmopt {

struct SolverSettings {
    double dt = 0.01;          // integration step
    double control_dt = 0.1;   // NLP control grid
    double fbs_dt = 0.0025;    // sweep grid of the PMP solver
    int nlp_starts = 20;
    int switch_starts = 50;
    int fbs_max_iters = 200;
    double fbs_damping = 0.5;
    std::uint64_t seed = 42;
    std::string solver = "auto"; // auto | fbs | switch | nlp | all
};

struct ScenarioConfig {
    std::string name = "custom";
    ModelParams params;
    ClassNetwork net = ClassNetwork::regular(6);
    StateVector x0{ClassState{1.0, 0.0, 0.0}};
    SolverSettings solver;

    void validate() const {
        params.validate();
        net.validate();
        validate_state(x0);
        if (x0.size() != net.num_classes())
            throw std::invalid_argument("ScenarioConfig: initial state/network class count mismatch");
        if (solver.solver != "auto" && solver.solver != "fbs" && solver.solver != "switch" &&
            solver.solver != "nlp" && solver.solver != "all")
            throw std::invalid_argument("ScenarioConfig: unknown solver '" + solver.solver + "'");
    }
};

/// The named studies. Single-class runs use a degree-6 regular network;
/// the two-class runs use the correlated networks completed from the
/// balance equation, with referral rewards targeting the recommender class
/// and a pay-out of 0.3.
inline ScenarioConfig named_scenario(const std::string& name) {
    ScenarioConfig cfg;
    cfg.name = name;
    if (name == "base") {
        return cfg;
    } else if (name == "fig2-beta013") {
        cfg.params.beta = 0.13;
        return cfg;
    } else if (name == "fig3-alpha009") {
        cfg.params.alpha = 0.09;
        return cfg;
    } else if (name == "fig4-payouts") {
        cfg.params.cost_referral = 0.3;
        cfg.params.cost_direct = 0.3;
        return cfg;
    } else if (name == "fig5-payouts") {
        cfg.params.cost_referral = 0.25;
        cfg.params.cost_direct = 0.35;
        return cfg;
    } else if (name == "fig6-disassortative" || name == "fig7-assortative") {
        cfg.params.alpha = 0.1;
        cfg.params.delta = 0.1;
        cfg.params.beta = 0.1;
        cfg.params.gamma = 0.15;
        cfg.params.eps1 = 0.08;
        cfg.params.eps2 = 0.0; // referral program only
        cfg.params.cost_referral = 0.3;
        cfg.params.reward_target = RewardTarget::recommender;
        const double p_b_given_a = name == "fig6-disassortative" ? 0.9 : 0.1;
        cfg.net = balance_complete(10, 2, 0.1, 0.9, p_b_given_a);
        cfg.x0 = {ClassState{1, 0, 0}, ClassState{1, 0, 0}};
        return cfg;
    }
    throw std::invalid_argument("unknown scenario '" + name + "'");
}

inline const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names{
        "base",         "fig2-beta013",        "fig3-alpha009",    "fig4-payouts",
        "fig5-payouts", "fig6-disassortative", "fig7-assortative",
    };
    return names;
}

namespace detail {

inline double parse_double(const std::string& value, const std::string& key) {
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(value, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad numeric value for '" + key + "': " + value);
    }
    if (used != value.size())
        throw std::invalid_argument("config: trailing characters in value for '" + key + "': " + value);
    return out;
}

inline std::vector<double> parse_list(const std::string& value, const std::string& key) {
    std::istringstream is(value);
    std::vector<double> out;
    std::string token;
    while (is >> token)
        out.push_back(parse_double(token, key));
    if (out.empty())
        throw std::invalid_argument("config: empty list for '" + key + "'");
    return out;
}

inline std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    const auto last = s.find_last_not_of(" \t\r");
    return first == std::string::npos ? std::string() : s.substr(first, last - first + 1);
}

} // namespace detail

/// Strict flat config: `[section]` headers and `key = value` lines,
/// `#`/`;` comments. Sections: model, network, initial, solver. Unknown
/// sections or keys are errors. The network accepts either full mixing
/// rows or the two-class shorthand `p_b_given_a`. Omitted fields keep the
/// base-scenario defaults.
inline ScenarioConfig parse_config(std::istream& in, const std::string& origin = "<config>") {
    ScenarioConfig cfg;
    cfg.name = origin;
    std::string section;
    std::string line;
    int line_no = 0;

    std::vector<double> degrees, weights, i0, r0, theta0;
    std::vector<std::vector<double>> mixing_rows(8);
    double p_b_given_a = -1.0;
    bool network_touched = false, initial_touched = false;

    auto fail = [&](const std::string& what) {
        throw std::invalid_argument(origin + ":" + std::to_string(line_no) + ": " + what);
    };

    while (std::getline(in, line)) {
        ++line_no;
        const auto comment = line.find_first_of("#;");
        if (comment != std::string::npos)
            line = line.substr(0, comment);
        line = detail::trim(line);
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                fail("malformed section header");
            section = line.substr(1, line.size() - 2);
            if (section != "model" && section != "network" && section != "initial" && section != "solver")
                fail("unknown section '" + section + "'");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            fail("expected 'key = value'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            fail("expected 'key = value'");

        if (section == "model") {
            auto& p = cfg.params;
            if (key == "alpha") p.alpha = detail::parse_double(value, key);
            else if (key == "beta") p.beta = detail::parse_double(value, key);
            else if (key == "gamma") p.gamma = detail::parse_double(value, key);
            else if (key == "delta") p.delta = detail::parse_double(value, key);
            else if (key == "eps1") p.eps1 = detail::parse_double(value, key);
            else if (key == "eps2") p.eps2 = detail::parse_double(value, key);
            else if (key == "cost_referral") p.cost_referral = detail::parse_double(value, key);
            else if (key == "cost_direct") p.cost_direct = detail::parse_double(value, key);
            else if (key == "horizon") p.horizon = detail::parse_double(value, key);
            else if (key == "reward_target") {
                if (value == "buyer") p.reward_target = RewardTarget::buyer;
                else if (value == "recommender") p.reward_target = RewardTarget::recommender;
                else fail("reward_target must be 'buyer' or 'recommender'");
            } else fail("unknown key 'model." + key + "'");
        } else if (section == "network") {
            network_touched = true;
            if (key == "degrees") degrees = detail::parse_list(value, key);
            else if (key == "weights") weights = detail::parse_list(value, key);
            else if (key == "p_b_given_a") p_b_given_a = detail::parse_double(value, key);
            else if (key.rfind("mixing_row_", 0) == 0) {
                const auto row = std::size_t(detail::parse_double(key.substr(11), key));
                if (row < 1 || row > mixing_rows.size())
                    fail("mixing row index out of range");
                mixing_rows[row - 1] = detail::parse_list(value, key);
            } else fail("unknown key 'network." + key + "'");
        } else if (section == "initial") {
            initial_touched = true;
            if (key == "i0") i0 = detail::parse_list(value, key);
            else if (key == "r0") r0 = detail::parse_list(value, key);
            else if (key == "theta0") theta0 = detail::parse_list(value, key);
            else fail("unknown key 'initial." + key + "'");
        } else if (section == "solver") {
            auto& s = cfg.solver;
            if (key == "dt") s.dt = detail::parse_double(value, key);
            else if (key == "control_dt") s.control_dt = detail::parse_double(value, key);
            else if (key == "fbs_dt") s.fbs_dt = detail::parse_double(value, key);
            else if (key == "nlp_starts") s.nlp_starts = int(detail::parse_double(value, key));
            else if (key == "switch_starts") s.switch_starts = int(detail::parse_double(value, key));
            else if (key == "fbs_max_iters") s.fbs_max_iters = int(detail::parse_double(value, key));
            else if (key == "fbs_damping") s.fbs_damping = detail::parse_double(value, key);
            else if (key == "seed") s.seed = std::uint64_t(detail::parse_double(value, key));
            else if (key == "solver") s.solver = value;
            else fail("unknown key 'solver." + key + "'");
        } else {
            fail("key outside of any section");
        }
    }

    if (network_touched) {
        if (degrees.empty() || weights.empty())
            throw std::invalid_argument(origin + ": network block needs 'degrees' and 'weights'");
        if (degrees.size() != weights.size())
            throw std::invalid_argument(origin + ": degrees/weights length mismatch");
        if (p_b_given_a >= 0.0) {
            if (degrees.size() != 2)
                throw std::invalid_argument(origin + ": p_b_given_a shorthand needs exactly two classes");
            cfg.net = balance_complete(int(degrees[0]), int(degrees[1]), weights[0], weights[1],
                                       p_b_given_a);
        } else {
            ClassNetwork net;
            for (double d : degrees)
                net.degrees.push_back(int(d));
            net.weights = weights;
            for (std::size_t row = 0; row < degrees.size(); ++row) {
                if (mixing_rows[row].empty()) {
                    if (degrees.size() == 1)
                        mixing_rows[row] = {1.0};
                    else
                        throw std::invalid_argument(origin + ": missing mixing_row_" +
                                                    std::to_string(row + 1));
                }
                net.mixing.push_back(mixing_rows[row]);
            }
            net.validate();
            cfg.net = net;
        }
    }
    if (initial_touched || network_touched) {
        const std::size_t classes = cfg.net.num_classes();
        auto fill = [&](std::vector<double>& vec, double fallback) {
            if (vec.empty())
                vec.assign(classes, fallback);
            if (vec.size() != classes)
                throw std::invalid_argument(origin + ": initial-state length mismatch");
        };
        fill(i0, 1.0);
        fill(r0, 0.0);
        fill(theta0, 0.0);
        cfg.x0.clear();
        for (std::size_t k = 0; k < classes; ++k)
            cfg.x0.push_back(ClassState{i0[k], r0[k], theta0[k]});
    }
    cfg.validate();
    return cfg;
}

inline ScenarioConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("cannot open config file '" + path + "'");
    return parse_config(in, path);
}

} // namespace vmopt

#endif // VMOPT_SCENARIO_HPP
