#include "rdlab/cohort.hpp"

#include "rdlab/dist.hpp"
#include "rdlab/errors.hpp"
#include "rdlab/stats.hpp"

#include <cmath>
#include <string>

namespace rdlab {

namespace {

void require_positive(double value, const char* name) {
    if (!(value > 0.0)) {
        throw ConfigError(std::string(name) + " must be > 0");
    }
}

std::vector<double> standardized(const std::vector<double>& v) {
    const double m = stats::mean(v);
    const double s = stats::sd(v);
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = s > 0.0 ? (v[i] - m) / s : 0.0;
    }
    return out;
}

} // namespace

CohortParams CohortParams::from_config(const Config& cfg) {
    cfg.require_known_keys({"n", "age_min", "age_max", "diabetes_prevalence", "hdl_mean", "hdl_sd",
                            "hdl_lower", "hdl_upper", "risk_base", "risk_age", "risk_diabetes",
                            "risk_noise_sd", "ldl_intercept", "ldl_slope", "ldl_noise_sd",
                            "base_corr", "treat_base", "treat_z", "treat_xc", "treat_hdl",
                            "seed"});
    CohortParams p;
    p.n = cfg.get_int("n", p.n);
    p.age_min = cfg.get_double("age_min", p.age_min);
    p.age_max = cfg.get_double("age_max", p.age_max);
    p.diabetes_prevalence = cfg.get_double("diabetes_prevalence", p.diabetes_prevalence);
    p.hdl_mean = cfg.get_double("hdl_mean", p.hdl_mean);
    p.hdl_sd = cfg.get_double("hdl_sd", p.hdl_sd);
    p.hdl_lower = cfg.get_double("hdl_lower", p.hdl_lower);
    p.hdl_upper = cfg.get_double("hdl_upper", p.hdl_upper);
    p.risk_base = cfg.get_double("risk_base", p.risk_base);
    p.risk_age = cfg.get_double("risk_age", p.risk_age);
    p.risk_diabetes = cfg.get_double("risk_diabetes", p.risk_diabetes);
    p.risk_noise_sd = cfg.get_double("risk_noise_sd", p.risk_noise_sd);
    p.ldl_intercept = cfg.get_double("ldl_intercept", p.ldl_intercept);
    p.ldl_slope = cfg.get_double("ldl_slope", p.ldl_slope);
    p.ldl_noise_sd = cfg.get_double("ldl_noise_sd", p.ldl_noise_sd);
    p.base_corr = cfg.get_double("base_corr", p.base_corr);
    p.treat_base = cfg.get_double("treat_base", p.treat_base);
    p.treat_z = cfg.get_double("treat_z", p.treat_z);
    p.treat_xc = cfg.get_double("treat_xc", p.treat_xc);
    p.treat_hdl = cfg.get_double("treat_hdl", p.treat_hdl);
    if (cfg.has("seed")) p.seed = static_cast<std::uint64_t>(cfg.get_int("seed"));
    p.validate();
    return p;
}

void CohortParams::validate() const {
    if (n <= 0) throw ConfigError("n must be > 0");
    if (!(age_max > age_min)) throw ConfigError("age_max must exceed age_min");
    if (!(diabetes_prevalence > 0.0 && diabetes_prevalence < 1.0)) {
        throw ConfigError("diabetes_prevalence must lie in (0,1)");
    }
    require_positive(hdl_sd, "hdl_sd");
    require_positive(hdl_mean, "hdl_mean");
    if (!(hdl_upper > hdl_lower && hdl_lower > 0.0)) {
        throw ConfigError("hdl truncation bounds must satisfy 0 < hdl_lower < hdl_upper");
    }
    require_positive(risk_noise_sd, "risk_noise_sd");
    require_positive(ldl_intercept, "ldl_intercept");
    if (ldl_noise_sd < 0.0) throw ConfigError("ldl_noise_sd must be >= 0");
    if (std::abs(base_corr) >= 0.95) {
        throw ConfigError("base_corr magnitude must be below 0.95");
    }
}

std::vector<CohortRecord> generate_cohort(const CohortParams& params, RngStream& rng) {
    params.validate();
    const long n = params.n;
    std::vector<CohortRecord> cohort(static_cast<std::size_t>(n));

    const double age_mean = 0.5 * (params.age_min + params.age_max);
    const double age_sd = (params.age_max - params.age_min) / std::sqrt(12.0);

    for (long i = 0; i < n; ++i) {
        auto& rec = cohort[static_cast<std::size_t>(i)];
        rec.id = i + 1;
        rec.age = dist::uniform(rng, params.age_min, params.age_max);
        rec.diabetes = dist::bernoulli(rng, params.diabetes_prevalence) ? 1 : 0;
        rec.hdl = dist::truncated_normal(rng, params.hdl_mean, params.hdl_sd, params.hdl_lower,
                                         params.hdl_upper);
        const double age_std = (rec.age - age_mean) / age_sd;
        const double lin = params.risk_base + params.risk_age * age_std +
                           params.risk_diabetes * rec.diabetes +
                           params.risk_noise_sd * dist::normal(rng, 0.0, 1.0);
        rec.risk = dist::expit(lin);
        rec.risk_centered = rec.risk - 0.2;
        rec.z = rec.risk > 0.2 ? 1 : 0;
        rec.ldl = params.ldl_intercept + params.ldl_slope * rec.risk_centered +
                  params.ldl_noise_sd * dist::normal(rng, 0.0, 1.0);
        if (rec.ldl < 0.05) rec.ldl = 0.05; // outcome must stay positive
    }

    set_ldl_hdl_correlation(cohort, params.base_corr, rng);

    // Baseline prescribing: decided after the final hdl values exist, since
    // the rule reads hdl directly.
    std::vector<double> xc(cohort.size());
    for (std::size_t i = 0; i < cohort.size(); ++i) xc[i] = cohort[i].risk_centered;
    const auto xc_std = standardized(xc);
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        auto& rec = cohort[i];
        const double lp = params.treat_base + params.treat_z * rec.z +
                          params.treat_xc * xc_std[i] + params.treat_hdl * rec.hdl;
        rec.t = dist::bernoulli(rng, dist::expit(lp)) ? 1 : 0;
    }
    return cohort;
}

void set_ldl_hdl_correlation(std::vector<CohortRecord>& cohort, double target_r, RngStream& rng) {
    if (std::abs(target_r) >= 0.95) {
        throw ConfigError("correlation target magnitude must be below 0.95");
    }
    const std::size_t n = cohort.size();
    if (n < 3) throw DataError("need at least 3 records to set a correlation");

    std::vector<double> ldl(n);
    std::vector<double> hdl(n);
    for (std::size_t i = 0; i < n; ++i) {
        ldl[i] = cohort[i].ldl;
        hdl[i] = cohort[i].hdl;
    }
    const double ldl_sd = stats::sd(ldl);
    if (!(ldl_sd > 1e-12)) {
        throw DataError("degenerate ldl variance: cannot target an ldl-hdl correlation");
    }
    const double hdl_mean = stats::mean(hdl);
    const double hdl_sd = stats::sd(hdl);
    if (!(hdl_sd > 1e-12)) {
        throw DataError("degenerate hdl variance: cannot target an ldl-hdl correlation");
    }

    const auto ldl_std = standardized(ldl);

    // Residualize hdl on ldl: the noise component of the blend is the
    // cohort's own hdl variation orthogonal to ldl, so re-targeting the
    // current correlation is an exact identity and downstream hdl-driven
    // structure survives the blend.
    const double current_r = stats::correlation(ldl, hdl);
    std::vector<double> residual(n);
    for (std::size_t i = 0; i < n; ++i) {
        residual[i] = hdl[i] - hdl_mean - current_r * hdl_sd * ldl_std[i];
    }
    double res_sd = stats::sd(residual);
    if (!(res_sd > 1e-12)) {
        // hdl is an exact linear function of ldl; fall back to fresh noise.
        for (std::size_t i = 0; i < n; ++i) residual[i] = dist::normal(rng, 0.0, 1.0);
        const double rm = stats::mean(residual);
        res_sd = stats::sd(residual);
        for (std::size_t i = 0; i < n; ++i) residual[i] -= rm;
    }

    const double noise_weight = std::sqrt(1.0 - target_r * target_r);
    for (std::size_t i = 0; i < n; ++i) {
        const double blended = target_r * ldl_std[i] + noise_weight * residual[i] / res_sd;
        double value = hdl_mean + hdl_sd * blended;
        if (value < 0.05) value = 0.05; // keep hdl physically positive
        cohort[i].hdl = value;
    }
}

std::vector<std::string> cohort_columns() {
    return {"id", "age", "diabetes", "hdl", "ldl", "risk", "risk_centered", "z", "t"};
}

csv::Table cohort_to_table(const std::vector<CohortRecord>& cohort) {
    csv::Table table(cohort_columns());
    for (const auto& rec : cohort) {
        table.append_row({static_cast<double>(rec.id), rec.age, static_cast<double>(rec.diabetes),
                          rec.hdl, rec.ldl, rec.risk, rec.risk_centered,
                          static_cast<double>(rec.z), static_cast<double>(rec.t)});
    }
    return table;
}

std::vector<CohortRecord> cohort_from_table(const csv::Table& table) {
    for (const auto& col : cohort_columns()) {
        table.column(col); // throws DataError naming any missing column
    }
    std::vector<CohortRecord> cohort(table.rows());
    for (std::size_t i = 0; i < table.rows(); ++i) {
        auto& rec = cohort[i];
        rec.id = static_cast<long>(table.at(i, "id"));
        rec.age = table.at(i, "age");
        rec.diabetes = static_cast<int>(table.at(i, "diabetes"));
        rec.hdl = table.at(i, "hdl");
        rec.ldl = table.at(i, "ldl");
        rec.risk = table.at(i, "risk");
        rec.risk_centered = table.at(i, "risk_centered");
        rec.z = static_cast<int>(table.at(i, "z"));
        rec.t = static_cast<int>(table.at(i, "t"));
    }
    return cohort;
}

double ldl_hdl_correlation(const std::vector<CohortRecord>& cohort) {
    std::vector<double> ldl(cohort.size());
    std::vector<double> hdl(cohort.size());
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        ldl[i] = cohort[i].ldl;
        hdl[i] = cohort[i].hdl;
    }
    return stats::correlation(ldl, hdl);
}

} // namespace rdlab
