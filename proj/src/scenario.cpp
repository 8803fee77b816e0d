#include "detect/scenario.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace detect {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& reason) {
    throw Error(ErrorCode::ValidationError, field + ": " + reason, field);
}

const json& need(const json& node, const char* key, const std::string& path) {
    auto it = node.find(key);
    if (it == node.end()) fail(path + "." + key, "missing required field");
    return *it;
}

double need_number(const json& node, const char* key, const std::string& path) {
    const json& v = need(node, key, path);
    if (!v.is_number()) fail(path + "." + key, "expected a number");
    return v.get<double>();
}

std::string need_string(const json& node, const char* key, const std::string& path) {
    const json& v = need(node, key, path);
    if (!v.is_string()) fail(path + "." + key, "expected a string");
    return v.get<std::string>();
}

double opt_number(const json& node, const char* key, double fallback) {
    auto it = node.find(key);
    return it == node.end() ? fallback : it->get<double>();
}

TimePath parse_path(const json& node, const std::string& path) {
    const std::string type = need_string(node, "type", path);
    if (type == "constant") return TimePath(ConstantPath{need_number(node, "value", path)});
    if (type == "linear")
        return TimePath(LinearPath{need_number(node, "intercept", path),
                                   need_number(node, "slope", path)});
    if (type == "exponential")
        return TimePath(ExponentialPath{need_number(node, "initial", path),
                                        need_number(node, "rate", path)});
    if (type == "sinusoid")
        return TimePath(SinusoidPath{need_number(node, "base", path),
                                     need_number(node, "amplitude", path),
                                     need_number(node, "period", path),
                                     opt_number(node, "phase", 0.0)});
    if (type == "table") {
        const json& values = need(node, "values", path);
        if (!values.is_array() || values.empty())
            fail(path + ".values", "expected a nonempty array");
        TablePath table;
        for (const auto& v : values) table.values.push_back(v.get<double>());
        return TimePath(std::move(table));
    }
    fail(path + ".type", "unknown path type '" + type + "'");
}

GbmSpec parse_gbm(const json& node, const std::string& path) {
    GbmSpec spec;
    spec.initial = need_number(node, "initial", path);
    spec.drift = opt_number(node, "drift", 0.0);
    spec.volatility = need_number(node, "volatility", path);
    if (!(spec.initial > 0.0)) fail(path + ".initial", "must be positive");
    if (spec.volatility < 0.0) fail(path + ".volatility", "must be nonnegative");
    return spec;
}

DemandModel parse_demand(const json& node, const std::string& path) {
    const std::string type = need_string(node, "type", path);
    if (type == "constant") {
        const double value = need_number(node, "value", path);
        if (value < 0.0) fail(path + ".value", "demand must be nonnegative");
        return DemandConstant{value};
    }
    if (type == "bernoulli") {
        const double p = need_number(node, "p", path);
        if (p < 0.0 || p > 1.0) fail(path + ".p", "probability must lie in [0, 1]");
        const double quantity = opt_number(node, "quantity", 1.0);
        if (quantity < 0.0) fail(path + ".quantity", "must be nonnegative");
        return DemandBernoulli{p, quantity};
    }
    if (type == "binomial") {
        const double trials = need_number(node, "trials", path);
        const double p = need_number(node, "p", path);
        if (trials < 0 || std::floor(trials) != trials)
            fail(path + ".trials", "must be a nonnegative integer");
        if (p < 0.0 || p > 1.0) fail(path + ".p", "probability must lie in [0, 1]");
        return DemandBinomial{long(trials), p};
    }
    if (type == "poisson") {
        const double mean = need_number(node, "mean", path);
        if (mean < 0.0) fail(path + ".mean", "must be nonnegative");
        return DemandPoisson{mean};
    }
    if (type == "uniform_int") {
        const double lo = need_number(node, "lo", path);
        const double hi = need_number(node, "hi", path);
        if (std::floor(lo) != lo || std::floor(hi) != hi || lo < 0 || hi < lo)
            fail(path, "uniform_int needs integers 0 <= lo <= hi");
        return DemandUniformInt{long(lo), long(hi)};
    }
    if (type == "uniform_real") {
        const double lo = need_number(node, "lo", path);
        const double hi = need_number(node, "hi", path);
        if (lo < 0.0 || hi < lo) fail(path, "uniform_real needs 0 <= lo <= hi");
        return DemandUniformReal{lo, hi};
    }
    if (type == "lognormal") {
        const double sigma = need_number(node, "sigma", path);
        if (sigma < 0.0) fail(path + ".sigma", "must be nonnegative");
        return DemandLogNormal{need_number(node, "mu", path), sigma};
    }
    if (type == "pareto") {
        const double alpha = need_number(node, "alpha", path);
        const double xmin = need_number(node, "xmin", path);
        if (!(alpha > 0.0) || !(xmin > 0.0)) fail(path, "pareto needs alpha, xmin > 0");
        return DemandPareto{alpha, xmin};
    }
    if (type == "gbm") return parse_gbm(node, path);
    // remaining types are the deterministic paths
    return DemandPath{parse_path(node, path)};
}

PriceModel parse_price(const json& node, const std::string& path) {
    const std::string type = need_string(node, "type", path);
    if (type == "constant") {
        const double value = need_number(node, "value", path);
        if (value < 0.0) fail(path + ".value", "price must be nonnegative");
        return PriceConstant{value};
    }
    if (type == "gbm") return parse_gbm(node, path);
    return PricePath{parse_path(node, path)};
}

RotationModel parse_rotation(const json& node, const std::string& path) {
    const std::string type = need_string(node, "type", path);
    if (type == "constant") {
        const double rate = need_number(node, "value", path);
        if (rate < 0.0)
            throw Error(ErrorCode::NegativeRotationRate,
                        path + ": rotation rate must be nonnegative", path);
        return RotationConstant{rate};
    }
    if (type == "gbm") return parse_gbm(node, path);
    return RotationPath{parse_path(node, path)};
}

TokenomicTaxonomy parse_taxonomy(const json& node) {
    const json& cats = need(node, "categories", "taxonomy");
    if (!cats.is_array()) fail("taxonomy.categories", "expected an array");

    std::vector<AgentCategory> categories;
    for (const auto& c : cats) {
        AgentCategory cat;
        cat.id = need_string(c, "id", "taxonomy.categories");
        cat.name = c.contains("name") ? c["name"].get<std::string>() : cat.id;
        const std::string kind =
            c.contains("kind") ? c["kind"].get<std::string>() : "normal";
        if (kind == "normal") cat.kind = CategoryKind::Normal;
        else if (kind == "control_mechanism") cat.kind = CategoryKind::ControlMechanism;
        else if (kind == "token_dump") cat.kind = CategoryKind::TokenDump;
        else fail("taxonomy.categories." + cat.id + ".kind", "unknown kind '" + kind + "'");
        categories.push_back(std::move(cat));
    }

    std::vector<InteractionType> interactions;
    if (node.contains("interactions")) {
        for (const auto& i : node["interactions"]) {
            InteractionType it;
            it.id = need_string(i, "id", "taxonomy.interactions");
            const json& between = need(i, "between", "taxonomy.interactions." + it.id);
            if (!between.is_array() || between.size() != 2)
                fail("taxonomy.interactions." + it.id + ".between",
                     "expected [recipient, payer]");
            it.recipient = between[0].get<std::string>();
            it.payer = between[1].get<std::string>();
            const std::string gran =
                i.contains("granularity") ? i["granularity"].get<std::string>()
                                          : "continuous";
            if (gran == "integer") it.granularity = DemandGranularity::Integer;
            else if (gran == "continuous") it.granularity = DemandGranularity::Continuous;
            else fail("taxonomy.interactions." + it.id + ".granularity",
                      "unknown granularity '" + gran + "'");
            interactions.push_back(std::move(it));
        }
    }

    std::vector<RotationChannel> rotations;
    if (node.contains("rotations")) {
        for (const auto& r : node["rotations"]) {
            RotationChannel ch;
            ch.from = need_string(r, "from", "taxonomy.rotations");
            ch.to = need_string(r, "to", "taxonomy.rotations");
            rotations.push_back(std::move(ch));
        }
    }

    return build_taxonomy(std::move(categories), std::move(interactions),
                          std::move(rotations));
}

RateSchedule parse_rates(const json& node, const TokenomicTaxonomy& taxonomy) {
    RateSchedule schedule;
    const std::string mode = need_string(node, "mode", "rates");
    if (mode == "static_deterministic") schedule.mode = RateMode::StaticDeterministic;
    else if (mode == "static_probabilistic") schedule.mode = RateMode::StaticProbabilistic;
    else if (mode == "dynamic_deterministic") schedule.mode = RateMode::DynamicDeterministic;
    else if (mode == "dynamic_probabilistic") schedule.mode = RateMode::DynamicProbabilistic;
    else fail("rates.mode", "unknown mode '" + mode + "'");

    if (node.contains("dynamic_kind")) {
        const std::string kind = node["dynamic_kind"].get<std::string>();
        if (kind == "proactive") schedule.dynamic_kind = DynamicKind::Proactive;
        else if (kind == "reactive") schedule.dynamic_kind = DynamicKind::Reactive;
        else fail("rates.dynamic_kind", "unknown kind '" + kind + "'");
    }

    const json demand = node.contains("demand") ? node["demand"] : json::object();
    const json price = node.contains("price") ? node["price"] : json::object();
    for (const auto& it : taxonomy.interactions()) {
        if (!demand.contains(it.id))
            fail("rates.demand." + it.id, "no demand model for this interaction");
        if (!price.contains(it.id))
            fail("rates.price." + it.id, "no price model for this interaction");
        schedule.demand.push_back(parse_demand(demand[it.id], "rates.demand." + it.id));
        schedule.price.push_back(parse_price(price[it.id], "rates.price." + it.id));
    }

    const json rotation = node.contains("rotation") ? node["rotation"] : json::object();
    for (const auto& ch : taxonomy.rotations()) {
        const std::string key = ch.from + "->" + ch.to;
        if (!rotation.contains(key))
            fail("rates.rotation." + key, "no rotation model for this channel");
        schedule.rotation.push_back(
            parse_rotation(rotation[key], "rates.rotation." + key));
    }

    if (node.contains("beta")) {
        for (const auto& [key, value] : node["beta"].items()) {
            const auto bar = key.find('|');
            if (bar == std::string::npos)
                fail("rates.beta", "entry keys use the form 'row|col'");
            BetaEntry entry;
            entry.row = taxonomy.index_of(key.substr(0, bar));
            entry.col = taxonomy.index_of(key.substr(bar + 1));
            entry.value = value.get<double>();
            schedule.direct_beta.push_back(entry);
        }
    }

    if (node.contains("reactive")) {
        const json& r = node["reactive"];
        const std::string kind = need_string(r, "kind", "rates.reactive");
        if (kind == "affine_circulating") {
            schedule.reactive = ReactiveAffine{need_number(r, "offset", "rates.reactive"),
                                               need_number(r, "slope", "rates.reactive")};
        } else if (kind == "table_circulating") {
            ReactiveTable table;
            for (const auto& p : need(r, "points", "rates.reactive"))
                table.points.emplace_back(p[0].get<double>(), p[1].get<double>());
            if (table.points.empty()) fail("rates.reactive.points", "empty table");
            for (std::size_t i = 1; i < table.points.size(); ++i)
                if (table.points[i].first <= table.points[i - 1].first)
                    fail("rates.reactive.points", "x values must be strictly increasing");
            schedule.reactive = std::move(table);
        } else {
            fail("rates.reactive.kind", "unknown reactive rule '" + kind + "'");
        }
    }
    return schedule;
}

SupplyModel parse_supply(const json& node) {
    const std::string variant = need_string(node, "variant", "supply");
    const double m0 = need_number(node, "m_initial", "supply");
    if (variant == "constant") return ConstantSupply{m0};
    if (variant == "simple") return SimpleIncrement{m0, need_number(node, "rate", "supply")};
    if (variant == "compound")
        return CompoundIncrement{m0, need_number(node, "rate", "supply")};
    if (variant == "stochastic_gbm") {
        GbmSpec process;
        process.initial = 1.0;
        process.drift = opt_number(node, "drift", 0.0);
        process.volatility = need_number(node, "volatility", "supply");
        if (process.volatility < 0.0) fail("supply.volatility", "must be nonnegative");
        return StochasticIncrement{m0, process};
    }
    if (variant == "general")
        return GeneralSupply{m0, parse_path(need(node, "path", "supply"), "supply.path")};
    fail("supply.variant", "unknown variant '" + variant + "'");
}

KineticBlock parse_kinetic(const json& node) {
    KineticBlock block;
    const std::string model = need_string(node, "model", "kinetic");
    if (model == "no_saving") block.model = NoSaving{};
    else if (model == "min_investment") block.model = MinInvestment{};
    else if (model == "global_saving")
        block.model = GlobalSaving{need_number(node, "lambda", "kinetic")};
    else if (model == "individual_saving") {
        IndividualSaving is;
        if (node.contains("lambdas"))
            for (const auto& v : node["lambdas"]) is.lambdas.push_back(v.get<double>());
        block.model = std::move(is);
    } else fail("kinetic.model", "unknown model '" + model + "'");

    const double agents = need_number(node, "agents", "kinetic");
    if (agents < 2 || std::floor(agents) != agents)
        fail("kinetic.agents", "must be an integer >= 2");
    block.agents = std::size_t(agents);
    block.total_wealth = need_number(node, "total_wealth", "kinetic");
    if (!(block.total_wealth > 0.0)) fail("kinetic.total_wealth", "must be positive");
    const double steps = need_number(node, "steps", "kinetic");
    if (steps < 1 || std::floor(steps) != steps)
        fail("kinetic.steps", "must be an integer >= 1");
    block.steps = std::int64_t(steps);
    block.snapshot_every = std::int64_t(opt_number(node, "snapshot_every", 0.0));
    if (block.snapshot_every < 0) fail("kinetic.snapshot_every", "must be >= 0");
    if (node.contains("initial_wealth"))
        for (const auto& v : node["initial_wealth"])
            block.initial_wealth.push_back(v.get<double>());
    block.require_equilibrium =
        node.contains("require_equilibrium") && node["require_equilibrium"].get<bool>();
    block.window = std::size_t(opt_number(node, "window", 5.0));
    block.tolerance = opt_number(node, "tolerance", 0.02);
    validate_kinetic_model(block.model, block.agents);
    return block;
}

InvertBlock parse_invert(const json& node, const TokenomicTaxonomy& taxonomy) {
    InvertBlock block;
    const json& target = need(node, "target", "invert");
    block.target.assign(taxonomy.size(), 0.0);
    for (const auto& [key, value] : target.items())
        block.target[taxonomy.index_of(key)] = value.get<double>();

    auto pair_of = [&](const json& entry, const std::string& path) {
        if (!entry.is_array() || entry.size() != 2) fail(path, "expected [a, b]");
        return std::pair<std::size_t, std::size_t>{
            taxonomy.index_of(entry[0].get<std::string>()),
            taxonomy.index_of(entry[1].get<std::string>())};
    };

    if (node.contains("free_beta")) {
        for (const auto& entry : node["free_beta"]) {
            auto [a, b] = pair_of(entry, "invert.free_beta");
            block.beta.push_back({std::min(a, b), std::max(a, b), true, 0.0});
        }
    }
    if (node.contains("fixed_beta")) {
        for (const auto& [key, value] : node["fixed_beta"].items()) {
            const auto bar = key.find('|');
            if (bar == std::string::npos)
                fail("invert.fixed_beta", "entry keys use the form 'a|b'");
            const std::size_t a = taxonomy.index_of(key.substr(0, bar));
            const std::size_t b = taxonomy.index_of(key.substr(bar + 1));
            // the stored value is beta(a,b); normalize to the lo<hi convention
            const double v = value.get<double>();
            block.beta.push_back(
                {std::min(a, b), std::max(a, b), false, a < b ? v : -v});
        }
    }
    if (node.contains("free_gamma")) {
        for (const auto& entry : node["free_gamma"]) {
            auto [from, to] = pair_of(entry, "invert.free_gamma");
            block.gamma.push_back({from, to, true, 0.0});
        }
    }
    if (node.contains("fixed_gamma")) {
        for (const auto& [key, value] : node["fixed_gamma"].items()) {
            const auto arrow = key.find("->");
            if (arrow == std::string::npos)
                fail("invert.fixed_gamma", "entry keys use the form 'from->to'");
            block.gamma.push_back({taxonomy.index_of(key.substr(0, arrow)),
                                   taxonomy.index_of(key.substr(arrow + 2)), false,
                                   value.get<double>()});
        }
    }
    block.regularization = opt_number(node, "regularization", -1.0);
    block.perturbation = opt_number(node, "perturbation", 0.05);
    block.verify_horizon = std::int64_t(opt_number(node, "verify_horizon", 500.0));
    if (block.verify_horizon < 1) fail("invert.verify_horizon", "must be >= 1");
    return block;
}

}  // namespace

std::string scenario_digest(const std::string& text) {
    char buffer[17];
    std::snprintf(buffer, sizeof buffer, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(text)));
    return buffer;
}

Scenario parse_scenario(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& err) {
        throw Error(ErrorCode::SyntaxError, std::string("scenario: ") + err.what());
    }
    if (!root.is_object())
        throw Error(ErrorCode::SyntaxError, "scenario must be a JSON object");

    Scenario scenario;
    scenario.text = text;
    scenario.digest = scenario_digest(text);

    scenario.taxonomy = parse_taxonomy(need(root, "taxonomy", "scenario"));
    const std::size_t n = scenario.taxonomy.size();

    const json& wealth = need(root, "initial_wealth", "scenario");
    scenario.initial_wealth.values.assign(n, 0.0);
    scenario.initial_wealth.step = 0;
    for (const auto& [key, value] : wealth.items()) {
        const double v = value.get<double>();
        if (v < 0.0) fail("initial_wealth." + key, "wealth must be nonnegative");
        scenario.initial_wealth.values[scenario.taxonomy.index_of(key)] = v;
    }

    const double horizon = need_number(root, "horizon", "scenario");
    if (horizon < 1 || std::floor(horizon) != horizon)
        fail("horizon", "must be an integer >= 1");
    scenario.horizon = std::int64_t(horizon);

    scenario.dt = opt_number(root, "dt", 1.0);
    if (!(scenario.dt > 0.0)) fail("dt", "must be positive");

    const double seed = opt_number(root, "seed", 0.0);
    if (seed < 0 || std::floor(seed) != seed) fail("seed", "must be a nonnegative integer");
    scenario.seed = std::uint64_t(seed);

    const double ensemble = opt_number(root, "ensemble_size", 1.0);
    if (ensemble < 1 || std::floor(ensemble) != ensemble)
        fail("ensemble_size", "must be an integer >= 1");
    scenario.ensemble_size = std::size_t(ensemble);

    scenario.snapshot_every = std::int64_t(opt_number(root, "snapshot_every", 0.0));
    if (scenario.snapshot_every < 0) fail("snapshot_every", "must be >= 0");

    scenario.rates = parse_rates(need(root, "rates", "scenario"), scenario.taxonomy);
    scenario.supply = parse_supply(need(root, "supply", "scenario"));

    if (root.contains("mint_burn_weights")) {
        scenario.allocation.weights.assign(n, 0.0);
        for (const auto& [key, value] : root["mint_burn_weights"].items())
            scenario.allocation.weights[scenario.taxonomy.index_of(key)] =
                value.get<double>();
    } else {
        scenario.allocation = control_mechanism_allocation(scenario.taxonomy);
    }

    if (root.contains("kinetic")) scenario.kinetic = parse_kinetic(root["kinetic"]);
    if (root.contains("invert"))
        scenario.invert = parse_invert(root["invert"], scenario.taxonomy);

    // cross-field validation
    validate_allocation(scenario.allocation, n);
    validate_supply(scenario.supply, scenario.horizon, scenario.dt);
    validate_schedule(scenario.rates, scenario.taxonomy, scenario.horizon);

    SupplyRealization probe(scenario.supply, scenario.dt, 0);
    const double m0 = supply_is_stochastic(scenario.supply)
                          ? supply_initial(scenario.supply)
                          : probe.at_step(0);
    double total = 0.0;
    for (double v : scenario.initial_wealth.values) total += v;
    if (std::abs(total - m0) > 1e-9 * m0)
        fail("initial_wealth", "must sum to the initial maximum supply (conservation)");

    // burn feasibility along the nominal deterministic path: cumulative
    // decrements may not exceed the allocated categories' starting wealth
    if (!supply_is_stochastic(scenario.supply)) {
        std::vector<double> nominal = scenario.initial_wealth.values;
        for (std::int64_t k = 1; k <= scenario.horizon; ++k) {
            const SupplyDelta delta = probe.delta(k, scenario.allocation);
            bool bad = false;
            for (std::size_t i = 0; i < n; ++i) {
                nominal[i] += delta.values[i];
                if (nominal[i] < 0.0) bad = true;
            }
            if (bad)
                fail("mint_burn_weights",
                     "supply decrements exceed the allocated categories' wealth along "
                     "the nominal path (step " +
                         std::to_string(k) + ")");
        }
    }

    if (scenario.invert) {
        double target_total = 0.0;
        for (double v : scenario.invert->target) target_total += v;
        if (std::abs(target_total - m0) > 1e-9 * m0)
            fail("invert.target", "must sum to the maximum supply");
    }

    return scenario;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open scenario file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario(buffer.str());
}

}  // namespace detect
