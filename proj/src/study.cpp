#include "rdlab/study.hpp"

#include "rdlab/errors.hpp"
#include "rdlab/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <memory>
#include <mutex>
#include <set>
#include <thread>

namespace rdlab {

namespace fs = std::filesystem;

std::string StudyCell::name() const {
    return iv_strength + "_" + std::to_string(confounding_level) + "_tau" +
           csv::format_double(tau) + "_h" + csv::format_double(bandwidth);
}

Scenario StudyCell::scenario(long replicates, std::uint64_t seed) const {
    Scenario s;
    s.tau = tau;
    s.confounding_level = confounding_level;
    s.iv_strength = iv_strength;
    s.bandwidth = bandwidth;
    s.replicates = replicates;
    s.seed = seed;
    s.validate();
    return s;
}

long CellResults::failures() const {
    long n = 0;
    for (const auto& r : replicates) {
        if (!r.ok) ++n;
    }
    return n;
}

void StudyConfig::validate() const {
    if (cells.empty()) throw ConfigError("study grid is empty");
    if (replicates < 1) throw ConfigError("replicates must be >= 1");
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
    mcmc.validate();
    cohort.validate();
    std::set<std::string> seen;
    for (const auto& cell : cells) {
        cell.scenario(replicates, seed); // range-checks every field
        if (!seen.insert(cell.name()).second) {
            throw ConfigError("duplicate study cell: " + cell.name());
        }
    }
    if (resume && out_dir.empty()) {
        throw ConfigError("resume requires an output directory");
    }
}

std::vector<StudyCell> paper_grid() {
    std::vector<StudyCell> grid;
    for (const char* iv : {"strong", "weak"}) {
        for (int level : {1, 2, 3, 4}) {
            for (double tau : {0.5, 1.09, 2.0}) {
                for (double h : {0.05, 0.15, 0.25}) {
                    grid.push_back({iv, level, tau, h});
                }
            }
        }
    }
    return grid;
}

std::vector<StudyCell> smoke_grid() {
    return {
        {"strong", 1, 2.0, 0.25},
        {"weak", 3, 2.0, 0.25},
    };
}

namespace {

// Error text is stored in a CSV field; keep it single-line and comma-free.
std::string sanitize(std::string text) {
    for (auto& ch : text) {
        if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
    }
    return text;
}

fs::path artifact_path(const std::string& out_dir, const StudyCell& cell) {
    return fs::path(out_dir) / ("cell_" + cell.name() + ".csv");
}

ReplicateOutcome run_replicate(const std::vector<CohortRecord>& base, const Scenario& scenario,
                               long replicate, const McmcConfig& mcmc) {
    ReplicateOutcome out;
    out.replicate = replicate;
    try {
        const SimulatedDataset dataset = simulate_dataset(base, scenario, replicate);
        out.estimates = run_estimators(dataset, scenario.bandwidth, mcmc,
                                       replicate_streams(scenario, replicate),
                                       EstimatorSelection::all());
        out.ok = true;
    } catch (const std::exception& e) {
        out.ok = false;
        out.error = sanitize(e.what());
    }
    return out;
}

} // namespace

StudyResults run_study(const StudyConfig& config) {
    config.validate();
    StudyResults results;
    results.config = config;
    results.cells.resize(config.cells.size());
    if (!config.out_dir.empty()) fs::create_directories(config.out_dir);

    std::vector<Scenario> scenarios;
    std::vector<bool> loaded(config.cells.size(), false);
    for (std::size_t i = 0; i < config.cells.size(); ++i) {
        results.cells[i].cell = config.cells[i];
        results.cells[i].replicates.resize(static_cast<std::size_t>(config.replicates));
        scenarios.push_back(config.cells[i].scenario(config.replicates, config.seed));
        if (config.resume) {
            const fs::path artifact = artifact_path(config.out_dir, config.cells[i]);
            if (fs::exists(artifact)) {
                results.cells[i] = cell_from_artifact(
                    config.cells[i], csv::TextTable::load(artifact.string()), config.replicates);
                loaded[i] = true;
            }
        }
    }

    const std::vector<CohortRecord> base = [&] {
        RngStream rng(config.seed, 1);
        return generate_cohort(config.cohort, rng);
    }();

    struct Task {
        std::size_t cell;
        long replicate;
    };
    std::vector<Task> tasks;
    for (std::size_t i = 0; i < config.cells.size(); ++i) {
        if (loaded[i]) continue;
        for (long r = 0; r < config.replicates; ++r) tasks.push_back({i, r});
    }

    auto remaining = std::make_unique<std::atomic<long>[]>(config.cells.size());
    for (std::size_t i = 0; i < config.cells.size(); ++i) {
        remaining[i].store(loaded[i] ? 0 : config.replicates);
    }

    std::mutex fatal_mutex;
    std::string fatal;
    const auto finalize_cell = [&](std::size_t i) {
        CellResults& cell = results.cells[i];
        cell.invalid = 5 * cell.failures() > config.replicates;
        if (!config.out_dir.empty()) {
            cell_artifact(cell).save(artifact_path(config.out_dir, cell.cell).string());
        }
    };

    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (;;) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= tasks.size()) return;
            const Task task = tasks[idx];
            results.cells[task.cell].replicates[static_cast<std::size_t>(task.replicate)] =
                run_replicate(base, scenarios[task.cell], task.replicate, config.mcmc);
            if (remaining[task.cell].fetch_sub(1) == 1) {
                try {
                    finalize_cell(task.cell);
                } catch (const std::exception& e) {
                    const std::lock_guard<std::mutex> lock(fatal_mutex);
                    if (fatal.empty()) fatal = e.what();
                }
            }
        }
    };

    const auto want = std::min<std::size_t>(static_cast<std::size_t>(config.jobs),
                                            std::max<std::size_t>(tasks.size(), 1));
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < want; ++w) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (!fatal.empty()) throw DataError("study artifact write failed: " + fatal);
    return results;
}

csv::TextTable aggregate(const StudyResults& results) {
    csv::TextTable table({"iv", "confounding", "tau", "bandwidth", "estimator", "point", "lower",
                          "upper", "sd_points", "frac_unstable", "n_ok"});
    for (const auto& cell : results.cells) {
        if (cell.invalid) continue;
        for (const auto& name : estimator_names()) {
            std::vector<double> points, lowers, uppers;
            long unstable = 0;
            for (const auto& rep : cell.replicates) {
                if (!rep.ok) continue;
                const EstimateSummary& s = rep.estimates.at(name);
                points.push_back(s.point);
                lowers.push_back(s.lower);
                uppers.push_back(s.upper);
                if (s.unstable) ++unstable;
            }
            if (points.empty()) continue;
            const auto n_ok = static_cast<long>(points.size());
            table.append_row({
                cell.cell.iv_strength,
                std::to_string(cell.cell.confounding_level),
                csv::format_double(cell.cell.tau),
                csv::format_double(cell.cell.bandwidth),
                name,
                csv::format_double(stats::mean(points)),
                csv::format_double(stats::mean(lowers)),
                csv::format_double(stats::mean(uppers)),
                csv::format_double(n_ok > 1 ? stats::sd(points) : 0.0),
                csv::format_double(static_cast<double>(unstable) / static_cast<double>(n_ok)),
                std::to_string(n_ok),
            });
        }
    }
    return table;
}

csv::TextTable cell_artifact(const CellResults& cell) {
    csv::TextTable table({"replicate", "estimator", "ok", "point", "lower", "upper", "ess",
                          "unstable", "rhat_warning", "nonfinite", "error"});
    for (const auto& rep : cell.replicates) {
        if (!rep.ok) {
            table.append_row({std::to_string(rep.replicate), "", "0", "nan", "nan", "nan", "nan",
                              "0", "0", "0", rep.error});
            continue;
        }
        for (const auto& name : estimator_names()) {
            const EstimateSummary& s = rep.estimates.at(name);
            table.append_row({std::to_string(rep.replicate), name, "1",
                              csv::format_double(s.point), csv::format_double(s.lower),
                              csv::format_double(s.upper), csv::format_double(s.ess),
                              s.unstable ? "1" : "0", s.rhat_warning ? "1" : "0",
                              std::to_string(s.nonfinite), ""});
        }
    }
    return table;
}

CellResults cell_from_artifact(const StudyCell& cell, const csv::TextTable& table,
                               long replicates) {
    CellResults out;
    out.cell = cell;
    out.replicates.resize(static_cast<std::size_t>(replicates));
    std::vector<char> seen_ok(static_cast<std::size_t>(replicates), 0);
    std::vector<char> seen_fail(static_cast<std::size_t>(replicates), 0);

    for (std::size_t row = 0; row < table.rows(); ++row) {
        const long rep = std::lround(table.number_at(row, "replicate"));
        if (rep < 0 || rep >= replicates) {
            throw DataError("artifact for cell " + cell.name() + ": replicate " +
                            std::to_string(rep) + " out of range");
        }
        const auto slot = static_cast<std::size_t>(rep);
        ReplicateOutcome& outcome = out.replicates[slot];
        outcome.replicate = rep;
        const bool ok = table.number_at(row, "ok") != 0.0;
        if ((ok && seen_fail[slot]) || (!ok && seen_ok[slot])) {
            throw DataError("artifact for cell " + cell.name() +
                            ": replicate " + std::to_string(rep) +
                            " mixes success and failure rows");
        }
        if (!ok) {
            if (seen_fail[slot]) {
                throw DataError("artifact for cell " + cell.name() + ": replicate " +
                                std::to_string(rep) + " has duplicate failure rows");
            }
            seen_fail[slot] = 1;
            outcome.ok = false;
            outcome.error = table.at(row, "error");
            continue;
        }
        seen_ok[slot] = 1;
        outcome.ok = true;
        EstimateSummary s;
        s.estimator = table.at(row, "estimator");
        s.point = table.number_at(row, "point");
        s.lower = table.number_at(row, "lower");
        s.upper = table.number_at(row, "upper");
        s.ess = table.number_at(row, "ess");
        s.unstable = table.number_at(row, "unstable") != 0.0;
        s.rhat_warning = table.number_at(row, "rhat_warning") != 0.0;
        s.nonfinite = std::lround(table.number_at(row, "nonfinite"));
        if (!outcome.estimates.emplace(s.estimator, s).second) {
            throw DataError("artifact for cell " + cell.name() + ": replicate " +
                            std::to_string(rep) + " repeats estimator '" + s.estimator + "'");
        }
    }

    for (std::size_t i = 0; i < out.replicates.size(); ++i) {
        const ReplicateOutcome& r = out.replicates[i];
        if (r.replicate < 0) {
            throw DataError("artifact for cell " + cell.name() + ": replicate " +
                            std::to_string(i) + " missing");
        }
        if (r.ok && r.estimates.size() != estimator_names().size()) {
            throw DataError("artifact for cell " + cell.name() + ": replicate " +
                            std::to_string(i) + " has " + std::to_string(r.estimates.size()) +
                            " of " + std::to_string(estimator_names().size()) + " estimators");
        }
    }
    out.invalid = 5 * out.failures() > replicates;
    return out;
}

} // namespace rdlab
