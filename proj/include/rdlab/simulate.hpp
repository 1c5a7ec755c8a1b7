#pragma once

#include "rdlab/cohort.hpp"
#include "rdlab/config.hpp"
#include "rdlab/csv.hpp"
#include "rdlab/regression.hpp"
#include "rdlab/rng.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace rdlab {

// One simulation cell: effect size, confounding level, instrument strength,
// estimation bandwidth, replicate fan-out, and the root seed.
struct Scenario {
    double tau = 2.0;            // effect magnitude; the injected shift is -tau
    int confounding_level = 1;   // 1..4
    std::string iv_strength = "strong"; // strong | weak
    double bandwidth = 0.25;
    long replicates = 100;
    std::uint64_t seed = 20260824ULL;

    // Confounding level -> (ldl-hdl correlation, pinned hdl coefficient):
    //   1: (0.18, 4)   2: (0.5, 4)   3: (0.18, -2)   4: (0.5, -2)
    double target_correlation() const;
    double hdl_coefficient() const;
    // strong -> 10, weak -> 4
    double threshold_coefficient() const;

    static Scenario from_config(const Config& cfg);
    void validate() const;
};

// Final product of one replicate: the (correlation-adjusted) cohort plus the
// simulated treatment and all three outcome stages, kept for audit.
struct SimulatedDataset {
    std::vector<CohortRecord> records; // hdl reflects the scenario correlation
    std::vector<int> t_hat;
    std::vector<double> p_hat;
    std::vector<double> y_sim1;
    std::vector<double> y_sim2;
    std::vector<double> y_sim3;
    double true_tau = 0.0; // signed effect actually injected (= -|tau|)
    int separation_retries = 0;
    long negative_outcomes = 0; // y_sim3 values below zero (kept, only counted)
};

// Effect stripping: fit ldl = a0 + a1*t + a2*z, keep residuals, recenter at the
// cohort mean with Normal(mean(ldl), noise_sd^2) noise.
std::vector<double> strip_effects(const std::vector<CohortRecord>& cohort, RngStream& rng,
                                  double noise_sd = 0.1);

// Design matrix of the treatment model: [1, age, diabetes, risk_centered, hdl, z].
Eigen::MatrixXd treatment_design(const std::vector<CohortRecord>& cohort);

// Draws coefficients from MultivariateNormal(fit, covariance) via Cholesky.
Eigen::VectorXd redraw_coefficients(const GlmFit& fit, RngStream& rng);

// Treatment reassignment: fit the treatment model on the baseline t, redraw the
// coefficients, pin the hdl and threshold coefficients, then draw t_hat.
std::pair<std::vector<int>, std::vector<double>> assign_treatment(
    const std::vector<CohortRecord>& cohort, double hdl_coefficient,
    double threshold_coefficient, RngStream& rng);

// Confounding distortion: regress y_sim1 on t_hat, regress those residuals on
// (age, diabetes, risk_centered), and add fitted value + prediction standard
// error elementwise.
std::vector<double> distort_outcome(const std::vector<double>& y_sim1,
                                    const std::vector<int>& t_hat,
                                    const std::vector<CohortRecord>& cohort);

// Effect injection: add Normal(0, 0.5^2) to untreated and Normal(-|tau|, 0.5^2)
// to treated records.
std::vector<double> inject_effect(const std::vector<double>& y_sim2,
                                  const std::vector<int>& t_hat, double tau, RngStream& rng);

// Whole pipeline for one replicate, deterministic in (scenario.seed,
// replicate_id). A treatment-model separation failure is retried once on a
// fresh substream before propagating.
SimulatedDataset simulate_dataset(const std::vector<CohortRecord>& base_cohort,
                                  const Scenario& scenario, long replicate_id);

// Stream layout for one replicate of one cell. Chain slots with the default
// two chains:
//   0 simulation stages, 1-2 wip, 3-4 sip, 5-6 unc, 7-8 fix, 9-10 fdp,
//   65535 separation retry.
StreamSpec replicate_streams(const Scenario& scenario, long replicate_id);
std::uint64_t scenario_cell_key(const Scenario& scenario);

csv::Table dataset_to_table(const SimulatedDataset& ds);
SimulatedDataset dataset_from_table(const csv::Table& table);
std::vector<std::string> dataset_columns();

} // namespace rdlab
