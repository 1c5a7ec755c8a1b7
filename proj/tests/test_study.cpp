#include "rdlab/csv.hpp"
#include "rdlab/errors.hpp"
#include "rdlab/study.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

using namespace rdlab;

namespace {

McmcConfig tiny_mcmc() {
    McmcConfig cfg;
    cfg.chains = 2;
    cfg.iterations = 1500;
    cfg.burnin = 500;
    return cfg;
}

StudyConfig tiny_study(long replicates = 2) {
    StudyConfig cfg;
    cfg.cells = {StudyCell{"strong", 1, 2.0, 0.25}};
    cfg.replicates = replicates;
    cfg.seed = 20260824ULL;
    cfg.jobs = 1;
    cfg.mcmc = tiny_mcmc();
    cfg.cohort.n = 1500; // small cohort keeps the unit test fast
    return cfg;
}

EstimateSummary make_summary(const std::string& name, double point, double width,
                             bool unstable) {
    EstimateSummary s;
    s.estimator = name;
    s.point = point;
    s.lower = point - 0.5 * width;
    s.upper = point + 0.5 * width;
    s.ess = 321.5;
    s.unstable = unstable;
    return s;
}

ReplicateOutcome make_outcome(long replicate, double base) {
    ReplicateOutcome out;
    out.replicate = replicate;
    out.ok = true;
    for (const auto& name : estimator_names()) {
        out.estimates[name] = make_summary(name, base, 1.0, false);
        base -= 0.25;
    }
    return out;
}

} // namespace

TEST_SUITE("study") {

TEST_CASE("grids and cell names") {
    const auto grid = paper_grid();
    CHECK(grid.size() == 72);
    std::set<std::string> names;
    for (const auto& cell : grid) names.insert(cell.name());
    CHECK(names.size() == 72);
    CHECK(names.count("strong_1_tau2_h0.25") == 1);
    CHECK(names.count("weak_4_tau0.5_h0.05") == 1);
    CHECK(names.count("strong_3_tau1.09_h0.15") == 1);

    CHECK(StudyCell{"strong", 1, 2.0, 0.25}.name() == "strong_1_tau2_h0.25");
    CHECK(StudyCell{"weak", 3, 1.09, 0.05}.name() == "weak_3_tau1.09_h0.05");

    const auto smoke = smoke_grid();
    REQUIRE(smoke.size() == 2);
    CHECK(smoke[0].iv_strength != smoke[1].iv_strength);

    const Scenario scen = StudyCell{"weak", 2, 0.5, 0.15}.scenario(9, 77);
    CHECK(scen.iv_strength == "weak");
    CHECK(scen.confounding_level == 2);
    CHECK(scen.tau == 0.5);
    CHECK(scen.bandwidth == 0.15);
    CHECK(scen.replicates == 9);
    CHECK(scen.seed == 77);
}

TEST_CASE("study configuration validation") {
    StudyConfig cfg = tiny_study();
    cfg.cells.clear();
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny_study();
    cfg.replicates = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny_study();
    cfg.jobs = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny_study();
    cfg.cells.push_back(cfg.cells.front());
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny_study();
    cfg.resume = true; // resume without out_dir
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("one cell, two replicates: bookkeeping and aggregation") {
    const StudyConfig cfg = tiny_study();
    const StudyResults res = run_study(cfg);
    REQUIRE(res.cells.size() == 1);
    const CellResults& cell = res.cells.front();
    REQUIRE(cell.replicates.size() == 2);
    CHECK_FALSE(cell.invalid);
    CHECK(cell.failures() == 0);
    for (const auto& rep : cell.replicates) {
        REQUIRE(rep.ok);
        REQUIRE(rep.estimates.size() == 6);
        for (const auto& name : estimator_names()) {
            REQUIRE(rep.estimates.count(name) == 1);
        }
    }

    const csv::TextTable table = aggregate(res);
    CHECK(table.columns() ==
          std::vector<std::string>{"iv", "confounding", "tau", "bandwidth", "estimator",
                                   "point", "lower", "upper", "sd_points", "frac_unstable",
                                   "n_ok"});
    REQUIRE(table.rows() == 6);
    for (std::size_t r = 0; r < table.rows(); ++r) {
        CHECK(table.at(r, "iv") == "strong");
        CHECK(table.number_at(r, "confounding") == 1.0);
        CHECK(table.number_at(r, "tau") == 2.0);
        CHECK(table.number_at(r, "bandwidth") == 0.25);
        CHECK(table.number_at(r, "n_ok") == 2.0);
        CHECK(table.at(r, "estimator") == estimator_names()[r]);

        const std::string name = table.at(r, "estimator");
        const double want = 0.5 * (cell.replicates[0].estimates.at(name).point +
                                   cell.replicates[1].estimates.at(name).point);
        CHECK(table.number_at(r, "point") == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("studies are deterministic, including across worker counts") {
    StudyConfig cfg = tiny_study();
    const std::string first = aggregate(run_study(cfg)).to_csv();
    const std::string second = aggregate(run_study(cfg)).to_csv();
    CHECK(first == second);

    cfg.jobs = 3;
    const std::string threaded = aggregate(run_study(cfg)).to_csv();
    CHECK(first == threaded);

    StudyConfig other = tiny_study();
    other.seed = cfg.seed + 1;
    CHECK(aggregate(run_study(other)).to_csv() != first);
}

TEST_CASE("aggregation drops invalid cells and averages over successes only") {
    StudyResults res;
    res.config = tiny_study();

    CellResults good;
    good.cell = StudyCell{"strong", 1, 2.0, 0.25};
    good.replicates = {make_outcome(0, -1.0), make_outcome(1, -3.0)};
    good.replicates[1].estimates["freq"].unstable = true;

    ReplicateOutcome failed;
    failed.replicate = 2;
    failed.ok = false;
    failed.error = "window: no records above the threshold";
    good.replicates.push_back(failed);

    CellResults bad;
    bad.cell = StudyCell{"weak", 3, 2.0, 0.25};
    bad.invalid = true;
    bad.replicates = {make_outcome(0, -2.0)};

    res.cells = {good, bad};
    const csv::TextTable table = aggregate(res);
    REQUIRE(table.rows() == 6); // the invalid cell contributes nothing
    for (std::size_t r = 0; r < table.rows(); ++r) {
        CHECK(table.at(r, "iv") == "strong");
        CHECK(table.number_at(r, "n_ok") == 2.0);
    }
    CHECK(table.number_at(0, "point") == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(table.number_at(0, "frac_unstable") == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(table.number_at(1, "frac_unstable") == 0.0);
    // sd of {-1, -3} is sqrt(2)
    CHECK(table.number_at(0, "sd_points") == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

    CHECK(good.failures() == 1);
    CHECK_FALSE(good.invalid);
}

TEST_CASE("artifact tables round-trip a cell bit for bit") {
    CellResults cell;
    cell.cell = StudyCell{"weak", 2, 1.09, 0.15};
    cell.replicates = {make_outcome(0, -1.0), make_outcome(1, -2.5)};
    cell.replicates[0].estimates["late-unct"].unstable = true;
    cell.replicates[0].estimates["late-unct"].nonfinite = 7;
    cell.replicates[0].estimates["wip"].rhat_warning = true;
    // keep the failure share at 10%, below the 20% invalid threshold the
    // reload recomputes
    for (long r = 2; r < 9; ++r) {
        cell.replicates.push_back(make_outcome(r, -1.0 - 0.1 * static_cast<double>(r)));
    }
    ReplicateOutcome failed;
    failed.replicate = 9;
    failed.ok = false;
    failed.error = "simulated failure; sanitized upstream";
    cell.replicates.push_back(failed);
    cell.invalid = false;

    const csv::TextTable table = cell_artifact(cell);
    const csv::TextTable reparsed = csv::TextTable::parse(table.to_csv());
    const CellResults back = cell_from_artifact(cell.cell, reparsed, 10);

    REQUIRE(back.replicates.size() == 10);
    CHECK(back.invalid == cell.invalid);
    for (std::size_t r = 0; r < 10; ++r) {
        const auto& want = cell.replicates[r];
        const auto& got = back.replicates[r];
        REQUIRE(got.ok == want.ok);
        CHECK(got.replicate == want.replicate);
        if (!want.ok) {
            CHECK(got.error == want.error);
            continue;
        }
        REQUIRE(got.estimates.size() == want.estimates.size());
        for (const auto& [name, s] : want.estimates) {
            const auto& g = got.estimates.at(name);
            CHECK(g.point == s.point);
            CHECK(g.lower == s.lower);
            CHECK(g.upper == s.upper);
            CHECK(g.ess == s.ess);
            CHECK(g.unstable == s.unstable);
            CHECK(g.rhat_warning == s.rhat_warning);
            CHECK(g.nonfinite == s.nonfinite);
        }
    }
}

TEST_CASE("artifact validation rejects gaps, duplicates, and bad ranges") {
    CellResults cell;
    cell.cell = StudyCell{"strong", 1, 2.0, 0.25};
    cell.replicates = {make_outcome(0, -1.0), make_outcome(1, -2.0)};

    const csv::TextTable table = cell_artifact(cell);
    CHECK_THROWS_AS((void)cell_from_artifact(cell.cell, table, 3), DataError);

    // duplicate rows for one replicate
    csv::TextTable dup = table;
    for (std::size_t r = 0; r < table.rows(); ++r) {
        std::vector<std::string> row;
        for (const auto& col : table.columns()) row.push_back(table.at(r, col));
        if (row.front() == "0") {
            dup.append_row(row);
            break;
        }
    }
    CHECK_THROWS_AS((void)cell_from_artifact(cell.cell, dup, 2), DataError);

    // replicate index beyond the declared range
    CHECK_THROWS_AS((void)cell_from_artifact(cell.cell, table, 1), DataError);
}

TEST_CASE("resume reuses artifacts and recomputes missing cells identically") {
    oracle::TempDir dir("rdlab_study");
    StudyConfig cfg = tiny_study();
    cfg.out_dir = dir.path.string();

    const std::string fresh = aggregate(run_study(cfg)).to_csv();
    const std::string artifact = (dir.path / "cell_strong_1_tau2_h0.25.csv").string();
    REQUIRE(std::filesystem::exists(artifact));
    const std::string artifact_bytes = csv::read_file(artifact);

    cfg.resume = true;
    const std::string resumed = aggregate(run_study(cfg)).to_csv();
    CHECK(resumed == fresh);
    CHECK(csv::read_file(artifact) == artifact_bytes);

    std::filesystem::remove(artifact);
    const std::string recomputed = aggregate(run_study(cfg)).to_csv();
    CHECK(recomputed == fresh);
    CHECK(csv::read_file(artifact) == artifact_bytes);
}

} // TEST_SUITE
