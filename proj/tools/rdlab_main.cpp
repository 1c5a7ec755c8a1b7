#include "CLI11.hpp"
#include "json.hpp"

#include "rdlab/cohort.hpp"
#include "rdlab/config.hpp"
#include "rdlab/csv.hpp"
#include "rdlab/diagnostics.hpp"
#include "rdlab/errors.hpp"
#include "rdlab/inference.hpp"
#include "rdlab/simulate.hpp"
#include "rdlab/study.hpp"

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kBuildId = "rdlab 1.0.0";
constexpr std::uint64_t kDefaultSeed = 20260824ULL;

struct GlobalOpts {
    std::uint64_t seed = kDefaultSeed;
    bool seed_given = false;
    int jobs = 0;
    std::string out = "out";
};

int default_jobs() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

class Timer {
public:
    Timer() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

void write_manifest(const std::string& out_dir, const std::string& command, const json& config,
                    const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs, std::uint64_t seed,
                    double seconds) {
    json manifest;
    manifest["command"] = command;
    manifest["config"] = config;
    manifest["seed"] = seed;
    manifest["inputs"] = inputs;
    manifest["outputs"] = outputs;
    manifest["build"] = kBuildId;
    manifest["duration_seconds"] = seconds;
    rdlab::csv::write_file((fs::path(out_dir) / "manifest.json").string(),
                           manifest.dump(2) + "\n");
}

json to_json(const rdlab::EstimateSummary& s) {
    return json{{"estimator", s.estimator}, {"point", s.point},
                {"lower", s.lower},         {"upper", s.upper},
                {"ess", s.ess},             {"unstable", s.unstable},
                {"rhat_warning", s.rhat_warning}, {"nonfinite", s.nonfinite}};
}

json to_json(const rdlab::CohortParams& p) {
    return json{{"n", p.n},
                {"age_min", p.age_min},
                {"age_max", p.age_max},
                {"diabetes_prevalence", p.diabetes_prevalence},
                {"hdl_mean", p.hdl_mean},
                {"hdl_sd", p.hdl_sd},
                {"hdl_lower", p.hdl_lower},
                {"hdl_upper", p.hdl_upper},
                {"risk_base", p.risk_base},
                {"risk_age", p.risk_age},
                {"risk_diabetes", p.risk_diabetes},
                {"risk_noise_sd", p.risk_noise_sd},
                {"ldl_intercept", p.ldl_intercept},
                {"ldl_slope", p.ldl_slope},
                {"ldl_noise_sd", p.ldl_noise_sd},
                {"base_corr", p.base_corr},
                {"treat_base", p.treat_base},
                {"treat_z", p.treat_z},
                {"treat_xc", p.treat_xc},
                {"treat_hdl", p.treat_hdl},
                {"seed", p.seed}};
}

json to_json(const rdlab::Scenario& s) {
    return json{{"tau", s.tau},
                {"confounding_level", s.confounding_level},
                {"iv_strength", s.iv_strength},
                {"bandwidth", s.bandwidth},
                {"replicates", s.replicates},
                {"seed", s.seed}};
}

json to_json(const rdlab::McmcConfig& m) {
    return json{{"chains", m.chains}, {"iterations", m.iterations}, {"burnin", m.burnin}};
}

std::string padded_name(const char* stem, long index) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s_%05ld.csv", stem, index);
    return buf;
}

// ------------------------------------------------------------- subcommands

int cmd_cohort(const GlobalOpts& g, const std::string& config_path) {
    const Timer timer;
    rdlab::CohortParams params;
    if (!config_path.empty()) {
        params = rdlab::CohortParams::from_config(rdlab::Config::load(config_path));
    }
    if (g.seed_given) params.seed = g.seed;
    params.validate();
    fs::create_directories(g.out);
    rdlab::RngStream rng(params.seed, 1);
    const auto cohort = rdlab::generate_cohort(params, rng);
    const std::string out_csv = (fs::path(g.out) / "cohort.csv").string();
    rdlab::cohort_to_table(cohort).save(out_csv);
    std::vector<std::string> inputs;
    if (!config_path.empty()) inputs.push_back(config_path);
    write_manifest(g.out, "cohort", to_json(params), inputs, {out_csv}, params.seed,
                   timer.seconds());
    std::cout << "wrote " << out_csv << " (" << cohort.size() << " records)\n";
    return 0;
}

int cmd_simulate(const GlobalOpts& g, const std::string& cohort_path,
                 const std::string& scenario_path) {
    const Timer timer;
    rdlab::Scenario scenario;
    if (!scenario_path.empty()) {
        scenario = rdlab::Scenario::from_config(rdlab::Config::load(scenario_path));
    }
    if (g.seed_given) scenario.seed = g.seed;
    scenario.validate();
    const auto base =
        rdlab::cohort_from_table(rdlab::csv::Table::load(cohort_path, rdlab::cohort_columns()));
    fs::create_directories(g.out);
    std::vector<std::string> outputs;
    for (long r = 0; r < scenario.replicates; ++r) {
        const rdlab::SimulatedDataset dataset = rdlab::simulate_dataset(base, scenario, r);
        const std::string path = (fs::path(g.out) / padded_name("dataset", r)).string();
        rdlab::dataset_to_table(dataset).save(path);
        outputs.push_back(path);
    }
    std::vector<std::string> inputs{cohort_path};
    if (!scenario_path.empty()) inputs.push_back(scenario_path);
    write_manifest(g.out, "simulate", to_json(scenario), inputs, outputs, scenario.seed,
                   timer.seconds());
    std::cout << "wrote " << outputs.size() << " dataset files to " << g.out << "\n";
    return 0;
}

int cmd_estimate(const GlobalOpts& g, const std::string& dataset_path, double bandwidth,
                 const std::vector<std::string>& estimators, const rdlab::McmcConfig& mcmc) {
    const Timer timer;
    const auto dataset =
        rdlab::dataset_from_table(rdlab::csv::Table::load(dataset_path, rdlab::dataset_columns()));
    const rdlab::EstimatorSelection selection = estimators.empty()
                                                    ? rdlab::EstimatorSelection::all()
                                                    : rdlab::EstimatorSelection::from_names(estimators);
    const rdlab::StreamSpec streams{g.seed, std::uint64_t{1} << 62};
    const auto results = rdlab::run_estimators(dataset, bandwidth, mcmc, streams, selection);

    json records = json::array();
    for (const auto& name : rdlab::estimator_names()) {
        const auto it = results.find(name);
        if (it != results.end()) records.push_back(to_json(it->second));
    }
    json out;
    out["dataset"] = dataset_path;
    out["bandwidth"] = bandwidth;
    out["seed"] = g.seed;
    out["mcmc"] = to_json(mcmc);
    out["estimates"] = records;
    fs::create_directories(g.out);
    const std::string out_json = (fs::path(g.out) / "estimates.json").string();
    rdlab::csv::write_file(out_json, out.dump(2) + "\n");
    json config = to_json(mcmc);
    config["bandwidth"] = bandwidth;
    config["estimators"] = estimators.empty() ? rdlab::estimator_names() : estimators;
    write_manifest(g.out, "estimate", config, {dataset_path}, {out_json}, g.seed,
                   timer.seconds());
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_diagnose(const GlobalOpts& g, const std::string& dataset_path, double bandwidth,
                 double bin_width) {
    const Timer timer;
    const auto dataset =
        rdlab::dataset_from_table(rdlab::csv::Table::load(dataset_path, rdlab::dataset_columns()));
    fs::create_directories(g.out);

    const rdlab::BinnedSummary bins = rdlab::binned_summary(dataset, bin_width);
    const std::string binned_csv = (fs::path(g.out) / "binned.csv").string();
    rdlab::binned_summary_table(bins).save(binned_csv);

    const rdlab::AssociationReport a1 = rdlab::check_a1(dataset, bandwidth);
    json checks;
    checks["a1"] = json{{"h", a1.h},
                        {"n_below", a1.n_b},
                        {"n_above", a1.n_a},
                        {"treated_below", a1.s_b},
                        {"treated_above", a1.s_a},
                        {"share_below", a1.p_b},
                        {"share_above", a1.p_a},
                        {"difference", a1.difference},
                        {"se", a1.se},
                        {"lower", a1.lower},
                        {"upper", a1.upper},
                        {"label", a1.label}};
    checks["covariates"] = json::array();
    for (const char* covariate : {"age", "hdl", "diabetes"}) {
        const rdlab::JumpReport rep = rdlab::covariate_continuity(dataset, covariate, bandwidth);
        checks["covariates"].push_back(json{{"covariate", rep.covariate},
                                            {"h", rep.h},
                                            {"point", rep.point},
                                            {"se", rep.se},
                                            {"lower", rep.lower},
                                            {"upper", rep.upper},
                                            {"flagged", rep.flagged}});
    }
    const std::string checks_json = (fs::path(g.out) / "checks.json").string();
    rdlab::csv::write_file(checks_json, checks.dump(2) + "\n");

    json config{{"bandwidth", bandwidth}, {"bin_width", bin_width}};
    write_manifest(g.out, "diagnose", config, {dataset_path}, {binned_csv, checks_json}, g.seed,
                   timer.seconds());
    std::cout << checks.dump(2) << "\n";
    return 0;
}

std::vector<std::string> cell_names(const std::vector<rdlab::StudyCell>& cells) {
    std::vector<std::string> names;
    names.reserve(cells.size());
    for (const auto& cell : cells) names.push_back(cell.name());
    return names;
}

void check_resume_manifest(const fs::path& path, const rdlab::StudyConfig& config) {
    json manifest;
    try {
        manifest = json::parse(rdlab::csv::read_file(path.string()));
    } catch (const json::parse_error& e) {
        throw rdlab::ConfigError("resume: cannot parse " + path.string() + ": " + e.what());
    }
    const auto describe = [](const json& j) { return j.dump(); };
    if (!manifest.contains("seed") || manifest["seed"].get<std::uint64_t>() != config.seed) {
        throw rdlab::ConfigError("resume: existing manifest used seed " +
                                 describe(manifest.value("seed", json())) +
                                 ", current run uses " + std::to_string(config.seed));
    }
    const json& snap = manifest["config"];
    if (snap.value("replicates", -1L) != config.replicates) {
        throw rdlab::ConfigError("resume: existing manifest used replicates=" +
                                 describe(snap.value("replicates", json())) +
                                 ", current run uses " + std::to_string(config.replicates));
    }
    const auto names = cell_names(config.cells);
    if (snap.value("cells", std::vector<std::string>{}) != names) {
        throw rdlab::ConfigError("resume: existing manifest covers a different cell list");
    }
}

int cmd_study(const GlobalOpts& g, const std::string& preset,
              const std::vector<std::string>& cells_filter, long replicates,
              const rdlab::McmcConfig& mcmc, bool resume, const std::string& cohort_config) {
    const Timer timer;
    rdlab::StudyConfig config;
    if (preset == "paper") {
        config.cells = rdlab::paper_grid();
        config.replicates = 100;
    } else if (preset == "smoke") {
        config.cells = rdlab::smoke_grid();
        config.replicates = 5;
    } else {
        throw rdlab::ConfigError("unknown preset '" + preset + "'; valid: paper, smoke");
    }
    if (!cells_filter.empty()) {
        std::vector<rdlab::StudyCell> chosen;
        const auto all = rdlab::paper_grid();
        for (const auto& want : cells_filter) {
            bool found = false;
            for (const auto& cell : all) {
                if (cell.name() == want) {
                    chosen.push_back(cell);
                    found = true;
                    break;
                }
            }
            if (!found) {
                throw rdlab::ConfigError(
                    "unknown cell '" + want +
                    "'; names look like strong_1_tau2_h0.25 over the full grid");
            }
        }
        config.cells = chosen;
    }
    if (replicates > 0) config.replicates = replicates;
    config.seed = g.seed;
    config.jobs = g.jobs;
    config.mcmc = mcmc;
    config.out_dir = g.out;
    config.resume = resume;
    if (!cohort_config.empty()) {
        config.cohort = rdlab::CohortParams::from_config(rdlab::Config::load(cohort_config));
    }

    const fs::path manifest_path = fs::path(g.out) / "manifest.json";
    if (resume && fs::exists(manifest_path)) check_resume_manifest(manifest_path, config);

    const rdlab::StudyResults results = rdlab::run_study(config);
    const std::string table_csv = (fs::path(g.out) / "table.csv").string();
    rdlab::aggregate(results).save(table_csv);

    std::vector<std::string> outputs{table_csv};
    long invalid = 0;
    for (const auto& cell : results.cells) {
        outputs.push_back((fs::path(g.out) / ("cell_" + cell.cell.name() + ".csv")).string());
        if (cell.invalid) ++invalid;
    }
    json snapshot = to_json(mcmc);
    snapshot["preset"] = preset;
    snapshot["cells"] = cell_names(config.cells);
    snapshot["replicates"] = config.replicates;
    snapshot["jobs"] = config.jobs;
    std::vector<std::string> inputs;
    if (!cohort_config.empty()) inputs.push_back(cohort_config);
    write_manifest(g.out, "study", snapshot, inputs, outputs, config.seed, timer.seconds());
    std::cout << "wrote " << table_csv << " (" << config.cells.size() << " cells, "
              << config.replicates << " replicates";
    if (invalid > 0) std::cout << ", " << invalid << " invalid";
    std::cout << ")\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"regression-discontinuity simulation laboratory"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kBuildId);

    GlobalOpts g;
    g.jobs = default_jobs();
    auto* seed_opt =
        app.add_option("--seed", g.seed, "root seed for all randomness")->capture_default_str();
    app.add_option("--jobs", g.jobs, "worker threads for the study harness")
        ->capture_default_str();
    app.add_option("--out", g.out, "output directory")->capture_default_str();

    // cohort
    std::string cohort_config_path;
    auto* cohort_cmd = app.add_subcommand("cohort", "generate a synthetic cohort CSV");
    cohort_cmd->fallthrough();
    cohort_cmd->add_option("--config", cohort_config_path, "cohort parameter file (key=value)");

    // simulate
    std::string sim_cohort_path, sim_scenario_path;
    auto* simulate_cmd =
        app.add_subcommand("simulate", "simulate replicate datasets from a cohort");
    simulate_cmd->fallthrough();
    simulate_cmd->add_option("--cohort", sim_cohort_path, "cohort CSV")->required();
    simulate_cmd->add_option("--scenario", sim_scenario_path, "scenario file (key=value)");

    // estimate
    std::string est_dataset_path;
    double est_bandwidth = 0.25;
    std::vector<std::string> est_names;
    rdlab::McmcConfig mcmc;
    auto* estimate_cmd = app.add_subcommand("estimate", "run estimators on one dataset");
    estimate_cmd->fallthrough();
    estimate_cmd->add_option("--dataset", est_dataset_path, "simulated dataset CSV")->required();
    estimate_cmd->add_option("--bandwidth", est_bandwidth, "window half-width in risk units")
        ->capture_default_str();
    estimate_cmd->add_option("--estimators", est_names,
                             "comma-separated subset of: freq,wip,sip,late-unct,late-flex,late-cnst")
        ->delimiter(',');
    estimate_cmd->add_option("--chains", mcmc.chains, "MCMC chains")->capture_default_str();
    estimate_cmd->add_option("--iterations", mcmc.iterations, "iterations per chain")
        ->capture_default_str();
    estimate_cmd->add_option("--burnin", mcmc.burnin, "discarded iterations per chain")
        ->capture_default_str();

    // diagnose
    std::string diag_dataset_path;
    double diag_bandwidth = 0.25;
    double diag_bin_width = 0.01;
    auto* diagnose_cmd = app.add_subcommand("diagnose", "binned summaries and assumption checks");
    diagnose_cmd->fallthrough();
    diagnose_cmd->add_option("--dataset", diag_dataset_path, "simulated dataset CSV")->required();
    diagnose_cmd->add_option("--bandwidth", diag_bandwidth, "window half-width for checks")
        ->capture_default_str();
    diagnose_cmd->add_option("--bin-width", diag_bin_width, "risk-score bin width")
        ->capture_default_str();

    // study
    std::string study_preset = "smoke";
    std::vector<std::string> study_cells;
    long study_replicates = 0;
    bool study_resume = false;
    std::string study_cohort_config;
    rdlab::McmcConfig study_mcmc;
    auto* study_cmd = app.add_subcommand("study", "run the simulation-study grid");
    study_cmd->fallthrough();
    study_cmd->add_option("--preset", study_preset, "grid preset: paper or smoke")
        ->capture_default_str();
    study_cmd->add_option("--cells", study_cells,
                          "comma-separated cell names (e.g. strong_1_tau2_h0.25)")
        ->delimiter(',');
    study_cmd->add_option("--replicates", study_replicates,
                          "replicates per cell (0 = preset default)");
    study_cmd->add_flag("--resume", study_resume, "reuse per-cell artifacts already in --out");
    study_cmd->add_option("--cohort-config", study_cohort_config, "cohort parameter file");
    study_cmd->add_option("--chains", study_mcmc.chains, "MCMC chains")->capture_default_str();
    study_cmd->add_option("--iterations", study_mcmc.iterations, "iterations per chain")
        ->capture_default_str();
    study_cmd->add_option("--burnin", study_mcmc.burnin, "discarded iterations per chain")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
        g.seed_given = seed_opt->count() > 0;
        if (cohort_cmd->parsed()) return cmd_cohort(g, cohort_config_path);
        if (simulate_cmd->parsed()) return cmd_simulate(g, sim_cohort_path, sim_scenario_path);
        if (estimate_cmd->parsed()) {
            return cmd_estimate(g, est_dataset_path, est_bandwidth, est_names, mcmc);
        }
        if (diagnose_cmd->parsed()) {
            return cmd_diagnose(g, diag_dataset_path, diag_bandwidth, diag_bin_width);
        }
        if (study_cmd->parsed()) {
            return cmd_study(g, study_preset, study_cells, study_replicates, study_mcmc,
                             study_resume, study_cohort_config);
        }
        std::cerr << "no subcommand selected\n";
        return 1;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const rdlab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const rdlab::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const rdlab::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
