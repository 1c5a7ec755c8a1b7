#include "rdlab/cohort.hpp"
#include "rdlab/config.hpp"
#include "rdlab/errors.hpp"
#include "rdlab/regression.hpp"
#include "rdlab/rng.hpp"
#include "rdlab/simulate.hpp"
#include "rdlab/stats.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <vector>

using namespace rdlab;

namespace {

std::vector<CohortRecord> shared_cohort(long n = 2500) {
    CohortParams params;
    params.n = n;
    RngStream rng(params.seed, 1);
    return generate_cohort(params, rng);
}

} // namespace

TEST_SUITE("simulate") {

TEST_CASE("scenario cell mappings are pinned") {
    Scenario s;
    for (const auto& want : {std::tuple<int, double, double>{1, 0.18, 4.0},
                             std::tuple<int, double, double>{2, 0.5, 4.0},
                             std::tuple<int, double, double>{3, 0.18, -2.0},
                             std::tuple<int, double, double>{4, 0.5, -2.0}}) {
        s.confounding_level = std::get<0>(want);
        CHECK(s.target_correlation() == std::get<1>(want));
        CHECK(s.hdl_coefficient() == std::get<2>(want));
    }
    s.iv_strength = "strong";
    CHECK(s.threshold_coefficient() == 10.0);
    s.iv_strength = "weak";
    CHECK(s.threshold_coefficient() == 4.0);
}

TEST_CASE("scenario validation rejects out-of-range settings") {
    Scenario s;
    s.confounding_level = 5;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = Scenario{};
    s.confounding_level = 0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = Scenario{};
    s.iv_strength = "medium";
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = Scenario{};
    s.tau = 0.0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = Scenario{};
    s.bandwidth = -0.1;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = Scenario{};
    s.replicates = 0;
    CHECK_THROWS_AS(s.validate(), ConfigError);

    const Config cfg = Config::parse("tau = 1.09\nconfounding_level = 3\niv_strength = weak\n"
                                     "bandwidth = 0.05\nreplicates = 7\nseed = 12\n");
    const Scenario parsed = Scenario::from_config(cfg);
    CHECK(parsed.tau == 1.09);
    CHECK(parsed.confounding_level == 3);
    CHECK(parsed.iv_strength == "weak");
    CHECK(parsed.bandwidth == 0.05);
    CHECK(parsed.replicates == 7);
    CHECK(parsed.seed == 12);
    CHECK_THROWS_AS((void)Scenario::from_config(Config::parse("volume = 11\n")), ConfigError);
}

TEST_CASE("stream layout separates cells, replicates, and chains") {
    Scenario a;
    Scenario b = a;
    b.tau = 0.5;
    Scenario c = a;
    c.bandwidth = 0.05;
    Scenario d = a;
    d.iv_strength = "weak";
    CHECK(scenario_cell_key(a) != scenario_cell_key(b));
    CHECK(scenario_cell_key(a) != scenario_cell_key(c));
    CHECK(scenario_cell_key(a) != scenario_cell_key(d));

    const StreamSpec r0 = replicate_streams(a, 0);
    const StreamSpec r1 = replicate_streams(a, 1);
    CHECK(r0.seed == a.seed);
    CHECK(r1.stream - r0.stream == (1ull << 16));
    CHECK(r0.stream == scenario_cell_key(a) << 32);
}

TEST_CASE("strip_effects removes treatment and threshold group effects") {
    const auto cohort = shared_cohort();
    RngStream rng(3, 50);
    const auto y1 = strip_effects(cohort, rng);
    REQUIRE(y1.size() == cohort.size());

    const auto n = static_cast<Eigen::Index>(cohort.size());
    Eigen::MatrixXd design(n, 3);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        design(i, 0) = 1.0;
        design(i, 1) = cohort[static_cast<std::size_t>(i)].t;
        design(i, 2) = cohort[static_cast<std::size_t>(i)].z;
        y[i] = y1[static_cast<std::size_t>(i)];
    }
    const LinearFit refit = ols_fit(design, y);
    CHECK(std::fabs(refit.coefficients[1]) < 3.0 * refit.standard_errors[1]);
    CHECK(std::fabs(refit.coefficients[2]) < 3.0 * refit.standard_errors[2]);

    // level preserved: recentered at the cohort ldl mean
    std::vector<double> ldl;
    for (const auto& rec : cohort) ldl.push_back(rec.ldl);
    CHECK(std::fabs(stats::mean(y1) - stats::mean(ldl)) < 0.02);
}

TEST_CASE("treatment assignment responds to the threshold coefficient") {
    const auto cohort = shared_cohort();
    RngStream rng(4, 60);
    const auto [t_strong, p_strong] = assign_treatment(cohort, 4.0, 10.0, rng);
    REQUIRE(t_strong.size() == cohort.size());
    REQUIRE(p_strong.size() == cohort.size());

    long above = 0, above_treated = 0, below = 0, below_treated = 0;
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        REQUIRE((t_strong[i] == 0 || t_strong[i] == 1));
        REQUIRE(p_strong[i] > 0.0);
        REQUIRE(p_strong[i] < 1.0);
        if (cohort[i].z == 1) {
            ++above;
            above_treated += t_strong[i];
        } else {
            ++below;
            below_treated += t_strong[i];
        }
    }
    const double pa = static_cast<double>(above_treated) / static_cast<double>(above);
    const double pb = static_cast<double>(below_treated) / static_cast<double>(below);
    CHECK(pa > 0.9);  // a strong instrument treats nearly everyone above
    CHECK(pb < 0.35); // and few below
    CHECK(pa - pb > 0.6);

    RngStream rng2(4, 61);
    const auto [t_weak, p_weak] = assign_treatment(cohort, 4.0, 4.0, rng2);
    long weak_above_treated = 0;
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        if (cohort[i].z == 1) weak_above_treated += t_weak[i];
    }
    const double pa_weak = static_cast<double>(weak_above_treated) / static_cast<double>(above);
    CHECK(pa_weak < pa); // weaker instrument, weaker jump
}

TEST_CASE("distort_outcome is deterministic and size-checked") {
    const auto cohort = shared_cohort(800);
    RngStream rng(5, 70);
    const auto y1 = strip_effects(cohort, rng);
    const auto [t_hat, p_hat] = assign_treatment(cohort, 4.0, 10.0, rng);

    const auto y2a = distort_outcome(y1, t_hat, cohort);
    const auto y2b = distort_outcome(y1, t_hat, cohort);
    REQUIRE(y2a.size() == y1.size());
    for (std::size_t i = 0; i < y2a.size(); ++i) {
        REQUIRE(y2a[i] == y2b[i]); // no hidden randomness
        REQUIRE(std::isfinite(y2a[i]));
    }
    bool changed = false;
    for (std::size_t i = 0; i < y2a.size(); ++i) changed = changed || y2a[i] != y1[i];
    CHECK(changed);

    std::vector<double> short_y(y1.begin(), y1.end() - 1);
    CHECK_THROWS_AS((void)distort_outcome(short_y, t_hat, cohort), DataError);
}

TEST_CASE("inject_effect shifts treated records by -|tau|") {
    const std::size_t n = 20000;
    std::vector<double> y2(n, 1.0);
    std::vector<int> t_hat(n, 0);
    for (std::size_t i = 0; i < n; i += 2) t_hat[i] = 1;
    RngStream rng(6, 80);
    const auto y3 = inject_effect(y2, t_hat, 2.0, rng);

    std::vector<double> treated_delta, untreated_delta;
    for (std::size_t i = 0; i < n; ++i) {
        (t_hat[i] == 1 ? treated_delta : untreated_delta).push_back(y3[i] - y2[i]);
    }
    const double se_t = 0.5 / std::sqrt(static_cast<double>(treated_delta.size()));
    const double se_u = 0.5 / std::sqrt(static_cast<double>(untreated_delta.size()));
    CHECK(std::fabs(stats::mean(treated_delta) + 2.0) < 3.0 * se_t);
    CHECK(std::fabs(stats::mean(untreated_delta)) < 3.0 * se_u);
    CHECK(stats::sd(treated_delta) == doctest::Approx(0.5).epsilon(0.05));
    CHECK(stats::sd(untreated_delta) == doctest::Approx(0.5).epsilon(0.05));

    // the sign convention ignores the sign handed in
    RngStream rng2(6, 80);
    const auto y3_neg = inject_effect(y2, t_hat, -2.0, rng2);
    for (std::size_t i = 0; i < n; ++i) REQUIRE(y3_neg[i] == y3[i]);
}

TEST_CASE("simulate_dataset is deterministic and distinct across replicates") {
    const auto cohort = shared_cohort(1200);
    Scenario s;
    s.replicates = 3;
    const auto a = simulate_dataset(cohort, s, 0);
    const auto b = simulate_dataset(cohort, s, 0);
    const auto other = simulate_dataset(cohort, s, 1);

    CHECK(dataset_to_table(a).to_csv() == dataset_to_table(b).to_csv());
    CHECK(dataset_to_table(a).to_csv() != dataset_to_table(other).to_csv());
    CHECK(a.true_tau == -2.0);
    CHECK(a.records.size() == cohort.size());
    CHECK(ldl_hdl_correlation(a.records) == doctest::Approx(0.18).epsilon(1e-9));

    long neg = 0;
    for (const double v : a.y_sim3) {
        if (v < 0.0) ++neg;
    }
    CHECK(a.negative_outcomes == neg);
}

TEST_CASE("confounding level changes hdl, never the outcome stages' seeds") {
    const auto cohort = shared_cohort(1200);
    Scenario level1;
    Scenario level3 = level1;
    level3.confounding_level = 3;
    const auto d1 = simulate_dataset(cohort, level1, 0);
    const auto d3 = simulate_dataset(cohort, level3, 0);
    CHECK(ldl_hdl_correlation(d1.records) == doctest::Approx(0.18).epsilon(1e-9));
    CHECK(ldl_hdl_correlation(d3.records) == doctest::Approx(0.18).epsilon(1e-9));

    Scenario level2 = level1;
    level2.confounding_level = 2;
    const auto d2 = simulate_dataset(cohort, level2, 0);
    CHECK(ldl_hdl_correlation(d2.records) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("dataset table round trip is bit exact") {
    const auto cohort = shared_cohort(300);
    Scenario s;
    const auto ds = simulate_dataset(cohort, s, 2);
    const csv::Table table = dataset_to_table(ds);
    CHECK(table.columns() == dataset_columns());

    const SimulatedDataset back = dataset_from_table(csv::Table::parse(table.to_csv()));
    REQUIRE(back.records.size() == ds.records.size());
    CHECK(back.true_tau == ds.true_tau);
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        CHECK(back.records[i].hdl == ds.records[i].hdl);
        CHECK(back.records[i].risk_centered == ds.records[i].risk_centered);
        CHECK(back.t_hat[i] == ds.t_hat[i]);
        CHECK(back.p_hat[i] == ds.p_hat[i]);
        CHECK(back.y_sim1[i] == ds.y_sim1[i]);
        CHECK(back.y_sim2[i] == ds.y_sim2[i]);
        CHECK(back.y_sim3[i] == ds.y_sim3[i]);
    }
    CHECK(dataset_to_table(back).to_csv() == table.to_csv());
}

} // TEST_SUITE
