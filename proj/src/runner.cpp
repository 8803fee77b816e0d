#include "detect/runner.hpp"

#include <json.hpp>

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "detect/analysis.hpp"
#include "detect/macro.hpp"

namespace detect {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// shortest decimal representation that round-trips
std::string format_double(double value) {
    char buffer[32];
    const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
    return std::string(buffer, result.ptr);
}

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << content;
}

void write_json(const fs::path& path, const json& doc) {
    write_text(path, doc.dump(2) + "\n");
}

std::string run_tag(std::size_t index) {
    char buffer[8];
    std::snprintf(buffer, sizeof buffer, "%03zu", index);
    return buffer;
}

json symmetry_to_json(const SymmetryReport& report) {
    return json{{"max_relative_drift", report.max_relative_drift},
                {"worst_step", report.worst_step},
                {"max_discount_drift", report.max_discount_drift},
                {"tolerance", report.tolerance},
                {"passed", report.passed}};
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateRunOutput {
    std::vector<std::string> files;
    json summary;
    json symmetry;
};

SimulateRunOutput simulate_one(const Scenario& scenario, std::uint64_t master_seed,
                               std::size_t run_index, const fs::path& out_dir) {
    SimulateRunOutput output;
    const std::uint64_t seed = run_seed(master_seed, run_index);

    MacroRunConfig config;
    config.horizon = scenario.horizon;
    config.dt = scenario.dt;
    config.run_seed = seed;

    const Trajectory trajectory =
        simulate(scenario.taxonomy, scenario.rates, scenario.supply,
                 scenario.allocation, scenario.initial_wealth, config);

    // trajectory CSV: step, time, M, then one column per category
    std::string csv = "step,time,max_supply";
    for (const auto& cat : scenario.taxonomy.categories()) csv += "," + cat.id;
    csv += "\n";
    for (const auto& state : trajectory.states) {
        csv += std::to_string(state.wealth.step);
        csv += "," + format_double(double(state.wealth.step) * scenario.dt);
        csv += "," + format_double(state.max_supply);
        for (double v : state.wealth.values) csv += "," + format_double(v);
        csv += "\n";
    }
    const std::string csv_name = "trajectory_" + run_tag(run_index) + ".csv";
    write_text(out_dir / csv_name, csv);
    output.files.push_back(csv_name);

    // symmetry check against a replay of the same supply path
    std::vector<WealthVector> wealth_path;
    wealth_path.reserve(trajectory.states.size());
    for (const auto& state : trajectory.states) wealth_path.push_back(state.wealth);
    SupplyRealization replay(scenario.supply, scenario.dt, seed);
    const SymmetryReport symmetry = check_time_translation(wealth_path, replay, 1e-9);

    const auto& final_state = trajectory.states.back();
    json final_wealth = json::object();
    for (std::size_t i = 0; i < scenario.taxonomy.size(); ++i)
        final_wealth[scenario.taxonomy.categories()[i].id] =
            final_state.wealth.values[i];

    output.summary = json{{"run", run_index},
                          {"seed", seed},
                          {"final_step", final_state.wealth.step},
                          {"final_max_supply", final_state.max_supply},
                          {"final_wealth", final_wealth},
                          {"circulating_supply",
                           circulating_supply(final_state.wealth, scenario.taxonomy,
                                              final_state.max_supply)},
                          {"max_relative_drift", symmetry.max_relative_drift},
                          {"max_discount_drift", symmetry.max_discount_drift}};
    output.symmetry = symmetry_to_json(symmetry);
    output.symmetry["run"] = run_index;
    return output;
}

// ---------------------------------------------------------------------------
// kinetic
// ---------------------------------------------------------------------------

struct KineticRunOutput {
    std::vector<std::string> files;
    json fits;
    std::vector<double> final_sample;
    bool converged = true;
};

json fit_min_investment(const KineticResult& result) {
    // condensation metrics: driven-out fraction and top holder's share
    json per_snapshot = json::array();
    bool fraction_monotone = true;
    double previous = -1.0;
    for (const auto& snap : result.snapshots) {
        std::size_t out_count = 0;
        double top = 0.0, total = 0.0;
        for (double w : snap.wealth) {
            if (w < 1e-12) ++out_count;
            top = std::max(top, w);
            total += w;
        }
        const double fraction = double(out_count) / double(snap.wealth.size());
        if (fraction < previous) fraction_monotone = false;
        previous = fraction;
        per_snapshot.push_back(json{{"step", snap.step},
                                    {"driven_out_fraction", fraction},
                                    {"max_wealth_share", top / total}});
    }
    return json{{"condensation", per_snapshot},
                {"driven_out_monotone", fraction_monotone}};
}

KineticRunOutput kinetic_one(const Scenario& scenario, std::uint64_t master_seed,
                             std::size_t run_index, const fs::path& out_dir) {
    const KineticBlock& block = *scenario.kinetic;
    KineticRunOutput output;

    KineticConfig config;
    config.agents = block.agents;
    config.total_wealth = block.total_wealth;
    config.steps = block.steps;
    config.snapshot_every = block.snapshot_every;
    config.seed = run_seed(master_seed, run_index);
    config.initial_wealth = block.initial_wealth;

    const KineticResult result = run_kinetic(block.model, config);

    std::string csv = "step";
    for (std::size_t i = 0; i < block.agents; ++i) csv += ",agent_" + std::to_string(i);
    csv += "\n";
    for (const auto& snap : result.snapshots) {
        csv += std::to_string(snap.step);
        for (double w : snap.wealth) csv += "," + format_double(w);
        csv += "\n";
    }
    const std::string csv_name = "snapshots_" + run_tag(run_index) + ".csv";
    write_text(out_dir / csv_name, csv);
    output.files.push_back(csv_name);

    const std::vector<double>& final_wealth = result.snapshots.back().wealth;
    output.final_sample = final_wealth;

    json fits = json{{"run", run_index}, {"seed", config.seed}};
    fits["gini"] = gini(final_wealth);

    if (std::holds_alternative<NoSaving>(block.model)) {
        const ExponentialFit fit = fit_exponential(final_wealth);
        fits["exponential"] = json{{"mean", fit.mean},
                                   {"ks_statistic", fit.ks_statistic},
                                   {"poor_fit", fit.ks_statistic > 0.1}};
    } else if (const auto* gs = std::get_if<GlobalSaving>(&block.model)) {
        const GammaFit fit = fit_gamma(final_wealth);
        const GammaPrediction prediction =
            gamma_prediction(gs->lambda, block.total_wealth / double(block.agents));
        fits["gamma"] = json{{"shape", fit.shape},
                             {"scale", fit.scale},
                             {"predicted_shape", prediction.shape},
                             {"predicted_temperature", prediction.temperature}};
    } else if (std::holds_alternative<MinInvestment>(block.model)) {
        fits.update(fit_min_investment(result));
    }

    // distribution-stability detection over the run's snapshots
    if (result.snapshots.size() >= 2 * block.window) {
        std::vector<std::vector<double>> samples;
        samples.reserve(result.snapshots.size());
        for (const auto& snap : result.snapshots) samples.push_back(snap.wealth);
        const auto at = equilibrium_detect(samples, block.window, block.tolerance);
        if (at) {
            fits["equilibrium_snapshot"] = *at;
            fits["equilibrium_step"] = result.snapshots[*at].step;
        } else {
            fits["equilibrium_snapshot"] = nullptr;
            output.converged = false;
        }
    }
    output.fits = std::move(fits);
    return output;
}

json pooled_kinetic_fits(const KineticBlock& block,
                         const std::vector<double>& pooled) {
    json out = json{{"samples", pooled.size()}, {"gini", gini(pooled)}};
    if (std::holds_alternative<NoSaving>(block.model)) {
        const ExponentialFit fit = fit_exponential(pooled);
        out["exponential"] = json{{"mean", fit.mean},
                                  {"ks_statistic", fit.ks_statistic},
                                  {"poor_fit", fit.ks_statistic > 0.1}};
    } else if (const auto* gs = std::get_if<GlobalSaving>(&block.model)) {
        const GammaFit fit = fit_gamma(pooled);
        const GammaPrediction prediction =
            gamma_prediction(gs->lambda, block.total_wealth / double(block.agents));
        out["gamma"] = json{{"shape", fit.shape},
                            {"scale", fit.scale},
                            {"predicted_shape", prediction.shape},
                            {"predicted_temperature", prediction.temperature}};
    } else if (std::holds_alternative<IndividualSaving>(block.model)) {
        const double x_min = percentile(pooled, 0.8);
        json pareto = nullptr;
        try {
            const ParetoFit fit = fit_pareto_tail(pooled, x_min);
            pareto = json{{"alpha", fit.alpha},
                          {"x_min", fit.x_min},
                          {"n_tail", fit.n_tail}};
        } catch (const Error&) {
            // tail too small: leave null
        }
        out["pareto_tail"] = pareto;
        out["top_20_share"] = top_share(pooled, 0.2);
    }
    return out;
}

// curve samples for plotting next to the pooled histogram
json write_kinetic_plots(const Scenario& scenario, const std::vector<double>& pooled,
                         const fs::path& out_dir, std::vector<std::string>& files) {
    const KineticBlock& block = *scenario.kinetic;
    const Histogram hist = histogram(pooled, 60);
    std::string csv = "bin_lo,bin_hi,count,density\n";
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
        csv += format_double(hist.edges[i]) + "," + format_double(hist.edges[i + 1]) +
               "," + std::to_string(hist.counts[i]) + "," +
               format_double(hist.density[i]) + "\n";
    }
    write_text(out_dir / "histogram.csv", csv);
    files.push_back("histogram.csv");

    std::string curve = "wealth,fitted_density\n";
    const double mean = block.total_wealth / double(block.agents);
    if (std::holds_alternative<NoSaving>(block.model)) {
        for (std::size_t i = 0; i < hist.counts.size(); ++i) {
            const double x = 0.5 * (hist.edges[i] + hist.edges[i + 1]);
            curve += format_double(x) + "," +
                     format_double(std::exp(-x / mean) / mean) + "\n";
        }
    } else if (const auto* gs = std::get_if<GlobalSaving>(&block.model)) {
        const GammaFit fit = fit_gamma(pooled);
        for (std::size_t i = 0; i < hist.counts.size(); ++i) {
            const double x = 0.5 * (hist.edges[i] + hist.edges[i + 1]);
            const double density =
                std::pow(x / fit.scale, fit.shape - 1.0) *
                std::exp(-x / fit.scale) / (std::tgamma(fit.shape) * fit.scale);
            curve += format_double(x) + "," + format_double(density) + "\n";
        }
        (void)gs;
    } else {
        return json::array({"histogram.csv"});
    }
    write_text(out_dir / "fitted_curve.csv", curve);
    files.push_back("fitted_curve.csv");
    return json::array({"histogram.csv", "fitted_curve.csv"});
}

// ---------------------------------------------------------------------------
// invert
// ---------------------------------------------------------------------------

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.size(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.size(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

const char* attractivity_name(Attractivity a) {
    switch (a) {
        case Attractivity::Attracting: return "attracting";
        case Attractivity::Neutral: return "neutral";
        case Attractivity::Repelling: return "repelling";
    }
    return "unknown";
}

// Patched scenario that simulates the solved system from the target state:
// explicit beta entries, rotation channels with the solved rates, zero-flow
// demand stubs for the declared interactions.
json solved_scenario_json(const Scenario& scenario, const InverseProblem& problem,
                          const InverseSolution& solution) {
    json root = json::parse(scenario.text);
    const auto& categories = scenario.taxonomy.categories();

    json initial = json::object();
    for (std::size_t i = 0; i < problem.n; ++i)
        initial[categories[i].id] = problem.target[i];
    root["initial_wealth"] = initial;

    json beta = json::object();
    for (std::size_t i = 0; i < problem.n; ++i)
        for (std::size_t j = i + 1; j < problem.n; ++j)
            if (solution.interaction(i, j) != 0.0)
                beta[categories[i].id + "|" + categories[j].id] =
                    solution.interaction(i, j);

    json rotation = json::object();
    json channels = json::array();
    for (std::size_t from = 0; from < problem.n; ++from) {
        for (std::size_t to = 0; to < problem.n; ++to) {
            if (from == to) continue;
            const double rate = solution.rotation(to, from);
            if (rate != 0.0) {
                channels.push_back(
                    json{{"from", categories[from].id}, {"to", categories[to].id}});
                rotation[categories[from].id + "->" + categories[to].id] =
                    json{{"type", "constant"}, {"value", rate}};
            }
        }
    }
    root["taxonomy"]["rotations"] = channels;

    json demand = json::object();
    json price = json::object();
    for (const auto& it : scenario.taxonomy.interactions()) {
        demand[it.id] = json{{"type", "constant"}, {"value", 0.0}};
        price[it.id] = json{{"type", "constant"}, {"value", 0.0}};
    }
    root["rates"] = json{{"mode", "static_deterministic"},
                         {"demand", demand},
                         {"price", price},
                         {"rotation", rotation},
                         {"beta", beta}};
    root.erase("invert");
    return root;
}

// ---------------------------------------------------------------------------
// command driver
// ---------------------------------------------------------------------------

json manifest_skeleton(const Scenario& scenario, const char* command,
                       std::uint64_t master_seed, std::size_t runs) {
    return json{{"artifact_version", kArtifactVersion},
                {"command", command},
                {"scenario_digest", scenario.digest},
                {"master_seed", master_seed},
                {"ensemble_size", runs},
                {"runs", json::array()},
                {"shared_files", json::array()}};
}

int do_simulate(const Scenario& scenario, std::uint64_t master_seed, std::size_t runs,
                const fs::path& out_dir) {
    std::vector<SimulateRunOutput> outputs(runs);
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    std::exception_ptr failure;
    std::mutex failure_mutex;

    const std::size_t threads = worker_count(runs);
    for (std::size_t w = 0; w < threads; ++w) {
        workers.emplace_back([&] {
            for (;;) {
                const std::size_t index = next.fetch_add(1);
                if (index >= runs) return;
                try {
                    outputs[index] = simulate_one(scenario, master_seed, index, out_dir);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& worker : workers) worker.join();
    if (failure) std::rethrow_exception(failure);

    json manifest = manifest_skeleton(scenario, "simulate", master_seed, runs);
    json summaries = json::array();
    json symmetries = json::array();
    for (std::size_t r = 0; r < runs; ++r) {
        summaries.push_back(outputs[r].summary);
        symmetries.push_back(outputs[r].symmetry);
        manifest["runs"].push_back(json{{"index", r},
                                        {"seed", run_seed(master_seed, r)},
                                        {"files", outputs[r].files}});
    }

    json summary = json{{"scenario_digest", scenario.digest},
                        {"ensemble_size", runs},
                        {"runs", summaries}};
    write_json(out_dir / "summary.json", summary);
    write_json(out_dir / "symmetry.json",
               json{{"tolerance", 1e-9}, {"runs", symmetries}});
    manifest["shared_files"].push_back("summary.json");
    manifest["shared_files"].push_back("symmetry.json");
    write_json(out_dir / "manifest.json", manifest);
    return kExitOk;
}

int do_kinetic(const Scenario& scenario, std::uint64_t master_seed, std::size_t runs,
               const fs::path& out_dir) {
    std::vector<KineticRunOutput> outputs(runs);
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    std::exception_ptr failure;
    std::mutex failure_mutex;

    const std::size_t threads = worker_count(runs);
    for (std::size_t w = 0; w < threads; ++w) {
        workers.emplace_back([&] {
            for (;;) {
                const std::size_t index = next.fetch_add(1);
                if (index >= runs) return;
                try {
                    outputs[index] = kinetic_one(scenario, master_seed, index, out_dir);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& worker : workers) worker.join();
    if (failure) std::rethrow_exception(failure);

    json manifest = manifest_skeleton(scenario, "kinetic", master_seed, runs);
    const KineticBlock& block = *scenario.kinetic;
    json model = json{{"agents", block.agents},
                      {"total_wealth", block.total_wealth},
                      {"steps", block.steps}};
    if (std::holds_alternative<NoSaving>(block.model)) model["name"] = "no_saving";
    else if (std::holds_alternative<MinInvestment>(block.model))
        model["name"] = "min_investment";
    else if (const auto* gs = std::get_if<GlobalSaving>(&block.model)) {
        model["name"] = "global_saving";
        model["lambda"] = gs->lambda;
    } else {
        model["name"] = "individual_saving";
    }
    manifest["model"] = model;
    json per_run = json::array();
    std::vector<double> pooled;
    bool all_converged = true;
    for (std::size_t r = 0; r < runs; ++r) {
        per_run.push_back(outputs[r].fits);
        pooled.insert(pooled.end(), outputs[r].final_sample.begin(),
                      outputs[r].final_sample.end());
        all_converged = all_converged && outputs[r].converged;
        manifest["runs"].push_back(json{{"index", r},
                                        {"seed", run_seed(master_seed, r)},
                                        {"files", outputs[r].files}});
    }

    json report = json{{"scenario_digest", scenario.digest},
                       {"ensemble_size", runs},
                       {"runs", per_run},
                       {"pooled", pooled_kinetic_fits(*scenario.kinetic, pooled)}};

    std::vector<std::string> shared;
    write_kinetic_plots(scenario, pooled, out_dir, shared);
    write_json(out_dir / "fit_report.json", report);
    shared.push_back("fit_report.json");
    for (const auto& name : shared) manifest["shared_files"].push_back(name);
    write_json(out_dir / "manifest.json", manifest);

    if (scenario.kinetic->require_equilibrium && !all_converged) return kExitNotConverged;
    return kExitOk;
}

int do_invert(const Scenario& scenario, std::uint64_t master_seed,
              const fs::path& out_dir) {
    const InvertBlock& block = *scenario.invert;
    const auto* constant = std::get_if<ConstantSupply>(&scenario.supply);
    if (!constant)
        throw Error(ErrorCode::ValidationError,
                    "inverse propagation requires a constant maximum supply",
                    "supply.variant");

    InverseProblem problem;
    problem.n = scenario.taxonomy.size();
    problem.target = block.target;
    problem.max_supply = constant->m_initial;
    problem.beta = block.beta;
    problem.gamma = block.gamma;
    problem.regularization = block.regularization;

    const InverseSolution solution = solve_equilibrium_rates(problem);
    const VerificationReport verification =
        verify_solution(solution, problem, block.perturbation, block.verify_horizon);

    json report =
        json{{"scenario_digest", scenario.digest},
             {"residual_norm", solution.residual_norm},
             {"converged", solution.converged},
             {"active_clamps", solution.active_clamps},
             {"interaction_matrix", matrix_to_json(solution.interaction)},
             {"rotation_matrix", matrix_to_json(solution.rotation)},
             {"verification",
              json{{"perturbation", block.perturbation},
                   {"horizon", block.verify_horizon},
                   {"initial_distance", verification.initial_distance},
                   {"final_distance", verification.final_distance},
                   {"diverged", verification.diverged},
                   {"attractivity", attractivity_name(verification.attractivity)}}}};
    write_json(out_dir / "invert_report.json", report);
    write_json(out_dir / "solved_scenario.json",
               solved_scenario_json(scenario, problem, solution));

    json manifest = manifest_skeleton(scenario, "invert", master_seed, 1);
    manifest["runs"].push_back(
        json{{"index", 0},
             {"seed", master_seed},
             {"files", json::array({"invert_report.json", "solved_scenario.json"})}});
    write_json(out_dir / "manifest.json", manifest);

    return solution.converged ? kExitOk : kExitNotConverged;
}

int do_check(const Scenario& scenario, std::uint64_t master_seed,
             const fs::path& out_dir) {
    json report = json{{"valid", true},
                       {"scenario_digest", scenario.digest},
                       {"categories", scenario.taxonomy.size()},
                       {"interactions", scenario.taxonomy.interactions().size()},
                       {"rotations", scenario.taxonomy.rotations().size()},
                       {"horizon", scenario.horizon}};
    write_json(out_dir / "check.json", report);
    json manifest = manifest_skeleton(scenario, "check", master_seed, 0);
    manifest["shared_files"].push_back("check.json");
    write_json(out_dir / "manifest.json", manifest);
    return kExitOk;
}

}  // namespace

std::size_t worker_count(std::size_t runs) {
    std::size_t cap = std::thread::hardware_concurrency();
    if (cap == 0) cap = 1;
    if (const char* env = std::getenv("DETECT_THREADS")) {
        const long parsed = std::atol(env);
        if (parsed >= 1) cap = std::size_t(parsed);
    }
    return std::min(cap, std::max<std::size_t>(runs, 1));
}

int run_command(const RunOptions& options) {
    fs::path out_dir(options.out_dir);
    try {
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        if (ec)
            throw Error(ErrorCode::IoError,
                        "cannot create output directory: " + out_dir.string());

        Scenario scenario = load_scenario(options.scenario_path);
        if (options.seed_override) scenario.seed = *options.seed_override;
        if (options.ensemble_override) scenario.ensemble_size = *options.ensemble_override;

        switch (options.command) {
            case Command::Simulate:
                return do_simulate(scenario, scenario.seed, scenario.ensemble_size,
                                   out_dir);
            case Command::Kinetic:
                if (!scenario.kinetic)
                    throw Error(ErrorCode::ValidationError,
                                "scenario has no kinetic block", "kinetic");
                return do_kinetic(scenario, scenario.seed, scenario.ensemble_size,
                                  out_dir);
            case Command::Invert:
                if (!scenario.invert)
                    throw Error(ErrorCode::ValidationError,
                                "scenario has no invert block", "invert");
                return do_invert(scenario, scenario.seed, out_dir);
            case Command::Check:
                return do_check(scenario, scenario.seed, out_dir);
        }
        return kExitRuntime;
    } catch (const Error& err) {
        json diagnostic = json{{"error", std::string(error_code_name(err.code()))},
                               {"message", err.what()}};
        if (!err.field().empty()) diagnostic["field"] = err.field();
        std::cerr << diagnostic.dump() << "\n";
        std::error_code ec;
        if (fs::exists(out_dir, ec))
            write_json(out_dir / "error.json", diagnostic);
        return is_validation_error(err.code()) ? kExitValidation : kExitRuntime;
    } catch (const std::exception& err) {
        json diagnostic = json{{"error", "InternalError"}, {"message", err.what()}};
        std::cerr << diagnostic.dump() << "\n";
        return kExitRuntime;
    }
}

}  // namespace detect
