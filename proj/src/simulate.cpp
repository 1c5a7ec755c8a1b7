#include "rdlab/simulate.hpp"

#include "rdlab/dist.hpp"
#include "rdlab/errors.hpp"
#include "rdlab/stats.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <cstdint>

namespace rdlab {

double Scenario::target_correlation() const {
    return (confounding_level == 1 || confounding_level == 3) ? 0.18 : 0.5;
}

double Scenario::hdl_coefficient() const {
    return (confounding_level <= 2) ? 4.0 : -2.0;
}

double Scenario::threshold_coefficient() const {
    return iv_strength == "strong" ? 10.0 : 4.0;
}

Scenario Scenario::from_config(const Config& cfg) {
    cfg.require_known_keys(
        {"tau", "confounding_level", "iv_strength", "bandwidth", "replicates", "seed"});
    Scenario s;
    s.tau = cfg.get_double("tau", s.tau);
    s.confounding_level = static_cast<int>(cfg.get_int("confounding_level", s.confounding_level));
    s.iv_strength = cfg.get_string("iv_strength", s.iv_strength);
    s.bandwidth = cfg.get_double("bandwidth", s.bandwidth);
    s.replicates = cfg.get_int("replicates", s.replicates);
    if (cfg.has("seed")) s.seed = static_cast<std::uint64_t>(cfg.get_int("seed"));
    s.validate();
    return s;
}

void Scenario::validate() const {
    if (!(tau > 0.0)) throw ConfigError("tau must be > 0 (magnitude of the injected reduction)");
    if (confounding_level < 1 || confounding_level > 4) {
        throw ConfigError("confounding_level must be 1, 2, 3, or 4; got " +
                          std::to_string(confounding_level));
    }
    if (iv_strength != "strong" && iv_strength != "weak") {
        throw ConfigError("iv_strength must be 'strong' or 'weak'; got '" + iv_strength + "'");
    }
    if (!(bandwidth > 0.0)) throw ConfigError("bandwidth must be > 0");
    if (replicates < 1) throw ConfigError("replicates must be >= 1");
    if (replicates > 65535) throw ConfigError("replicates must be <= 65535");
    if (tau * 1000.0 > 65535.0) throw ConfigError("tau too large for the stream layout");
    if (bandwidth * 1000.0 > 4095.0) throw ConfigError("bandwidth too large for the stream layout");
}

std::uint64_t scenario_cell_key(const Scenario& s) {
    const std::uint64_t iv = s.iv_strength == "strong" ? 0u : 1u;
    const auto level = static_cast<std::uint64_t>(s.confounding_level);
    const auto tau_mill = static_cast<std::uint64_t>(std::llround(s.tau * 1000.0));
    const auto h_mill = static_cast<std::uint64_t>(std::llround(s.bandwidth * 1000.0));
    return (iv << 31) | (level << 28) | (tau_mill << 12) | h_mill;
}

StreamSpec replicate_streams(const Scenario& scenario, long replicate_id) {
    const std::uint64_t cell = scenario_cell_key(scenario);
    const std::uint64_t stream =
        (cell << 32) + (static_cast<std::uint64_t>(replicate_id) << 16);
    return StreamSpec{scenario.seed, stream};
}

std::vector<double> strip_effects(const std::vector<CohortRecord>& cohort, RngStream& rng,
                                  double noise_sd) {
    const auto n = static_cast<Eigen::Index>(cohort.size());
    if (n == 0) throw DataError("strip_effects: empty cohort");
    Eigen::MatrixXd design(n, 3);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& rec = cohort[static_cast<std::size_t>(i)];
        design(i, 0) = 1.0;
        design(i, 1) = rec.t;
        design(i, 2) = rec.z;
        y[i] = rec.ldl;
    }
    const LinearFit fit = ols_fit(design, y);
    const double y_mean = y.mean();
    std::vector<double> out(cohort.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        const double w =
            noise_sd > 0.0 ? dist::normal(rng, y_mean, noise_sd) : y_mean;
        out[static_cast<std::size_t>(i)] = fit.residuals[i] + w;
    }
    return out;
}

Eigen::MatrixXd treatment_design(const std::vector<CohortRecord>& cohort) {
    const auto n = static_cast<Eigen::Index>(cohort.size());
    Eigen::MatrixXd design(n, 6);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& rec = cohort[static_cast<std::size_t>(i)];
        design(i, 0) = 1.0;
        design(i, 1) = rec.age;
        design(i, 2) = rec.diabetes;
        design(i, 3) = rec.risk_centered;
        design(i, 4) = rec.hdl;
        design(i, 5) = rec.z;
    }
    return design;
}

Eigen::VectorXd redraw_coefficients(const GlmFit& fit, RngStream& rng) {
    const auto p = fit.coefficients.size();
    Eigen::LLT<Eigen::MatrixXd> llt(fit.covariance);
    if (llt.info() != Eigen::Success) {
        Eigen::MatrixXd jittered = fit.covariance;
        jittered.diagonal().array() += 1e-10;
        llt.compute(jittered);
        if (llt.info() != Eigen::Success) {
            throw NumericError("coefficient covariance is not positive definite");
        }
    }
    Eigen::VectorXd standard(p);
    for (Eigen::Index i = 0; i < p; ++i) standard[i] = dist::normal(rng, 0.0, 1.0);
    return fit.coefficients + llt.matrixL() * standard;
}

std::pair<std::vector<int>, std::vector<double>> assign_treatment(
    const std::vector<CohortRecord>& cohort, double hdl_coefficient,
    double threshold_coefficient, RngStream& rng) {
    const Eigen::MatrixXd design = treatment_design(cohort);
    Eigen::VectorXd response(design.rows());
    for (Eigen::Index i = 0; i < design.rows(); ++i) {
        response[i] = cohort[static_cast<std::size_t>(i)].t;
    }
    const GlmFit fit = logistic_fit(design, response);
    Eigen::VectorXd coef = redraw_coefficients(fit, rng);
    coef[4] = hdl_coefficient;       // hdl column
    coef[5] = threshold_coefficient; // z column

    const Eigen::VectorXd eta = design * coef;
    std::vector<int> t_hat(cohort.size());
    std::vector<double> p_hat(cohort.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        const double p = dist::expit(eta[i]);
        p_hat[static_cast<std::size_t>(i)] = p;
        t_hat[static_cast<std::size_t>(i)] = dist::bernoulli(rng, p) ? 1 : 0;
    }
    return {std::move(t_hat), std::move(p_hat)};
}

std::vector<double> distort_outcome(const std::vector<double>& y_sim1,
                                    const std::vector<int>& t_hat,
                                    const std::vector<CohortRecord>& cohort) {
    const std::size_t n = cohort.size();
    if (y_sim1.size() != n || t_hat.size() != n) {
        throw DataError("distort_outcome: stage vectors disagree with the cohort size");
    }
    const auto ni = static_cast<Eigen::Index>(n);

    Eigen::MatrixXd treat_design(ni, 2);
    Eigen::VectorXd y(ni);
    for (Eigen::Index i = 0; i < ni; ++i) {
        treat_design(i, 0) = 1.0;
        treat_design(i, 1) = t_hat[static_cast<std::size_t>(i)];
        y[i] = y_sim1[static_cast<std::size_t>(i)];
    }
    const LinearFit treat_fit = ols_fit(treat_design, y);

    Eigen::MatrixXd cov_design(ni, 4);
    for (Eigen::Index i = 0; i < ni; ++i) {
        const auto& rec = cohort[static_cast<std::size_t>(i)];
        cov_design(i, 0) = 1.0;
        cov_design(i, 1) = rec.age;
        cov_design(i, 2) = rec.diabetes;
        cov_design(i, 3) = rec.risk_centered;
    }
    const LinearFit residual_fit = ols_fit(cov_design, treat_fit.residuals);
    const Eigen::VectorXd se = prediction_standard_errors(residual_fit, cov_design);

    std::vector<double> out(n);
    for (Eigen::Index i = 0; i < ni; ++i) {
        out[static_cast<std::size_t>(i)] =
            y_sim1[static_cast<std::size_t>(i)] + residual_fit.fitted[i] + se[i];
    }
    return out;
}

std::vector<double> inject_effect(const std::vector<double>& y_sim2,
                                  const std::vector<int>& t_hat, double tau, RngStream& rng) {
    if (!std::isfinite(tau)) throw ConfigError("tau must be finite");
    if (y_sim2.size() != t_hat.size()) {
        throw DataError("inject_effect: stage vectors have different lengths");
    }
    const double shift = -std::abs(tau);
    std::vector<double> out(y_sim2.size());
    for (std::size_t i = 0; i < y_sim2.size(); ++i) {
        const double mean = t_hat[i] == 1 ? shift : 0.0;
        out[i] = y_sim2[i] + dist::normal(rng, mean, 0.5);
    }
    return out;
}

SimulatedDataset simulate_dataset(const std::vector<CohortRecord>& base_cohort,
                                  const Scenario& scenario, long replicate_id) {
    scenario.validate();
    if (base_cohort.empty()) throw DataError("simulate_dataset: empty base cohort");
    const StreamSpec streams = replicate_streams(scenario, replicate_id);

    SimulatedDataset ds;
    ds.records = base_cohort;
    ds.true_tau = -std::abs(scenario.tau);

    RngStream stage = streams.chain(0);
    set_ldl_hdl_correlation(ds.records, scenario.target_correlation(), stage);
    ds.y_sim1 = strip_effects(ds.records, stage);
    try {
        auto drawn = assign_treatment(ds.records, scenario.hdl_coefficient(),
                                      scenario.threshold_coefficient(), stage);
        ds.t_hat = std::move(drawn.first);
        ds.p_hat = std::move(drawn.second);
    } catch (const SeparationError&) {
        RngStream retry = streams.chain(65535);
        auto drawn = assign_treatment(ds.records, scenario.hdl_coefficient(),
                                      scenario.threshold_coefficient(), retry);
        ds.t_hat = std::move(drawn.first);
        ds.p_hat = std::move(drawn.second);
        ds.separation_retries = 1;
    }
    ds.y_sim2 = distort_outcome(ds.y_sim1, ds.t_hat, ds.records);
    ds.y_sim3 = inject_effect(ds.y_sim2, ds.t_hat, scenario.tau, stage);
    for (const double v : ds.y_sim3) {
        if (v < 0.0) ++ds.negative_outcomes;
    }
    return ds;
}

std::vector<std::string> dataset_columns() {
    auto cols = cohort_columns();
    for (const char* extra : {"t_hat", "p_hat", "y_sim1", "y_sim2", "y_sim3", "true_tau"}) {
        cols.emplace_back(extra);
    }
    return cols;
}

csv::Table dataset_to_table(const SimulatedDataset& ds) {
    csv::Table table(dataset_columns());
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        const auto& rec = ds.records[i];
        table.append_row({static_cast<double>(rec.id), rec.age, static_cast<double>(rec.diabetes),
                          rec.hdl, rec.ldl, rec.risk, rec.risk_centered,
                          static_cast<double>(rec.z), static_cast<double>(rec.t),
                          static_cast<double>(ds.t_hat[i]), ds.p_hat[i], ds.y_sim1[i],
                          ds.y_sim2[i], ds.y_sim3[i], ds.true_tau});
    }
    return table;
}

SimulatedDataset dataset_from_table(const csv::Table& table) {
    for (const auto& col : dataset_columns()) {
        table.column(col); // throws DataError naming any missing column
    }
    SimulatedDataset ds;
    csv::Table cohort_view = table; // cohort reader validates shared columns
    ds.records = cohort_from_table(cohort_view);
    const std::size_t n = table.rows();
    ds.t_hat.resize(n);
    ds.p_hat.resize(n);
    ds.y_sim1.resize(n);
    ds.y_sim2.resize(n);
    ds.y_sim3.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        ds.t_hat[i] = static_cast<int>(table.at(i, "t_hat"));
        ds.p_hat[i] = table.at(i, "p_hat");
        ds.y_sim1[i] = table.at(i, "y_sim1");
        ds.y_sim2[i] = table.at(i, "y_sim2");
        ds.y_sim3[i] = table.at(i, "y_sim3");
        if (ds.y_sim3[i] < 0.0) ++ds.negative_outcomes;
    }
    ds.true_tau = n > 0 ? table.at(0, "true_tau") : 0.0;
    return ds;
}

} // namespace rdlab
