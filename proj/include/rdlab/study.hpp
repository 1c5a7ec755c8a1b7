#pragma once

#include "rdlab/cohort.hpp"
#include "rdlab/csv.hpp"
#include "rdlab/inference.hpp"
#include "rdlab/simulate.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace rdlab {

// One grid point of the simulation study.
struct StudyCell {
    std::string iv_strength = "strong"; // strong | weak
    int confounding_level = 1;          // 1..4
    double tau = 2.0;                   // positive magnitude
    double bandwidth = 0.25;

    // Stable label used for artifact file names and --cells filters,
    // e.g. strong_1_tau2_h0.25.
    std::string name() const;
    Scenario scenario(long replicates, std::uint64_t seed) const;
};

// Outcome of one replicate in one cell: either all estimator summaries or a
// recorded failure; a failure never aborts the cell.
struct ReplicateOutcome {
    long replicate = -1;
    bool ok = false;
    std::string error;
    std::map<std::string, EstimateSummary> estimates;
};

struct CellResults {
    StudyCell cell;
    std::vector<ReplicateOutcome> replicates;
    bool invalid = false; // more than 20% of replicates failed

    long failures() const;
};

struct StudyConfig {
    std::vector<StudyCell> cells;
    long replicates = 100;
    std::uint64_t seed = 20260824ULL;
    int jobs = 1;
    McmcConfig mcmc;
    CohortParams cohort;
    std::string out_dir; // when set, per-cell artifact CSVs are written here
    bool resume = false; // reuse artifacts already present in out_dir

    void validate() const;
};

struct StudyResults {
    StudyConfig config;
    std::vector<CellResults> cells;
};

// Full factorial grid reproduced by the tables: {strong,weak} x {1..4}
// x tau {0.5, 1.09, 2} x h {0.05, 0.15, 0.25}.
std::vector<StudyCell> paper_grid();
// Two cells exercising both instrument strengths, for fast end-to-end runs.
std::vector<StudyCell> smoke_grid();

// Simulates and estimates every cell x replicate on a bounded worker pool.
// Results are deterministic in (config.seed, grid) regardless of jobs.
StudyResults run_study(const StudyConfig& config);

// One row per valid cell x estimator:
// iv,confounding,tau,bandwidth,estimator,point,lower,upper,sd_points,
// frac_unstable,n_ok. Means are over successful replicates; invalid cells
// are dropped without disturbing the rest.
csv::TextTable aggregate(const StudyResults& results);

// Replicate-level artifact for one cell; reloading reconstructs the cell
// bit-exactly (numbers round-trip through shortest-form rendering).
csv::TextTable cell_artifact(const CellResults& cell);
CellResults cell_from_artifact(const StudyCell& cell, const csv::TextTable& table,
                               long replicates);

} // namespace rdlab
