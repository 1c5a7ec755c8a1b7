#pragma once

#include "rdlab/config.hpp"
#include "rdlab/csv.hpp"
#include "rdlab/rng.hpp"

#include <cstdint>
#include <vector>

namespace rdlab {

// One synthetic primary-care individual. `risk` is a 10-year event
// probability; the guideline threshold sits at risk = 0.2, so z = 1
// exactly when risk > 0.2 and risk_centered = risk - 0.2.
struct CohortRecord {
    long id = 0;
    double age = 0.0;          // years
    int diabetes = 0;          // 0/1
    double hdl = 0.0;          // mmol/l
    double ldl = 0.0;          // mmol/l, the outcome variable
    double risk = 0.0;         // (0,1)
    double risk_centered = 0.0;
    int z = 0;                 // 1 iff risk > 0.2
    int t = 0;                 // 0/1 baseline treatment
};

struct CohortParams {
    long n = 5720;
    double age_min = 50.0;
    double age_max = 85.0;
    double diabetes_prevalence = 0.15;
    double hdl_mean = 1.3;
    double hdl_sd = 0.28;
    double hdl_lower = 0.5;
    double hdl_upper = 3.0;
    // risk = expit(risk_base + risk_age * standardized(age)
    //              + risk_diabetes * diabetes + risk_noise_sd * noise)
    double risk_base = -1.606;
    double risk_age = 0.35;
    double risk_diabetes = 0.6;
    double risk_noise_sd = 0.5;
    // ldl = ldl_intercept + ldl_slope * risk_centered + ldl_noise_sd * noise.
    // The slope is kept near zero on purpose: the effect-stripping step of the
    // simulator removes only group means in (t, z), so any marked ldl trend in
    // the risk score would materialize as a spurious jump at the threshold.
    double ldl_intercept = 3.7;
    double ldl_slope = 0.05;
    double ldl_noise_sd = 0.25;
    double base_corr = 0.18;
    // Baseline prescribing rule:
    //   logit Pr(t=1) = treat_base + treat_z * z
    //                 + treat_xc * standardized(risk_centered) + treat_hdl * hdl
    // HDL participates with the same coefficient the simulator later pins, so
    // swapping that coefficient during simulation shifts nothing on average.
    double treat_base = -7.8;
    double treat_z = 1.5;
    double treat_xc = 0.5;
    double treat_hdl = 4.0;
    std::uint64_t seed = 20260824ULL;

    static CohortParams from_config(const Config& cfg);
    void validate() const; // ConfigError on out-of-range parameters
};

// Draws a full cohort; pure function of (params, rng state). Record order is
// the generation order, ids 1..n.
std::vector<CohortRecord> generate_cohort(const CohortParams& params, RngStream& rng);

// Replaces hdl by a blend of standardized ldl and the cohort's own
// residualized hdl so that the sample Corr(ldl, hdl) equals target_r exactly
// while hdl's sample mean/sd are preserved. ldl is untouched. The rng is only
// consulted in the degenerate case where hdl carries no residual variation.
void set_ldl_hdl_correlation(std::vector<CohortRecord>& cohort, double target_r, RngStream& rng);

// Exact CSV schema shared with every downstream artifact.
csv::Table cohort_to_table(const std::vector<CohortRecord>& cohort);
std::vector<CohortRecord> cohort_from_table(const csv::Table& table);

std::vector<std::string> cohort_columns();

// Sample Pearson correlation between ldl and hdl (n-1 convention).
double ldl_hdl_correlation(const std::vector<CohortRecord>& cohort);

} // namespace rdlab
