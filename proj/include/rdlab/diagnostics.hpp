#pragma once

#include "rdlab/csv.hpp"
#include "rdlab/simulate.hpp"

#include <string>
#include <vector>

namespace rdlab {

// Equal-width bins over the populated risk range, grid anchored so the
// treatment threshold 0.2 is always a bin edge. A record sitting exactly on
// an edge belongs to the bin below it, matching the windowing convention.
struct BinnedSummary {
    double bin_width = 0.0;
    std::vector<double> edges;              // n_bins + 1, ascending, risk units
    std::vector<double> midpoints;          // n_bins
    std::vector<double> mean_outcome;       // nan for empty bins
    std::vector<double> treated_proportion; // nan for empty bins
    std::vector<long> counts;
    long total = 0;

    std::size_t size() const { return midpoints.size(); }
};

BinnedSummary binned_summary(const SimulatedDataset& dataset, double bin_width = 0.01);

// Plot-ready form: bin_mid,mean_y,prop_treated,count.
csv::Table binned_summary_table(const BinnedSummary& summary);

// Observed association between the threshold indicator and treatment within
// a bandwidth window: difference of treated shares with a two-proportion
// normal interval. A share of exactly 0 or 1 gets a +0.5 continuity
// correction for the standard error only.
struct AssociationReport {
    double h = 0.0;
    long n_b = 0, n_a = 0;
    long s_b = 0, s_a = 0;
    double p_b = 0.0, p_a = 0.0;
    double difference = 0.0;
    double se = 0.0;
    double lower = 0.0, upper = 0.0;
    double weak_threshold = 0.3;
    std::string label; // "weak" when difference < weak_threshold, else "strong"
};

AssociationReport check_a1(const SimulatedDataset& dataset, double h,
                           double weak_threshold = 0.3);

// Continuity probe for a background covariate: the local-linear jump
// machinery applied with the covariate as response. A jump exceeding twice
// its standard error flags a suspected assignment-related discontinuity.
struct JumpReport {
    std::string covariate;
    double h = 0.0;
    double point = 0.0;
    double se = 0.0;
    double lower = 0.0, upper = 0.0;
    bool flagged = false;
};

// Valid covariates: age, hdl, diabetes. The running score itself (risk,
// risk_centered) is rejected: its jump is degenerate by construction.
JumpReport covariate_continuity(const SimulatedDataset& dataset, const std::string& covariate,
                                double h);

} // namespace rdlab
