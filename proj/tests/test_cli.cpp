#include "rdlab/cohort.hpp"
#include "rdlab/csv.hpp"
#include "rdlab/simulate.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

using namespace rdlab;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string output;
};

CliResult run_cli(const oracle::TempDir& dir, const std::string& tag, const std::string& args) {
    const std::string log = dir.file("cli_" + tag + ".log");
    const std::string cmd =
        std::string(RDLAB_CLI_PATH) + " " + args + " >" + log + " 2>&1";
    const int raw = std::system(cmd.c_str());
    CliResult res;
    if (raw != -1 && WIFEXITED(raw)) res.exit_code = WEXITSTATUS(raw);
    res.output = csv::read_file(log);
    return res;
}

// A ready-made cohort plus two simulated datasets shared by the test cases.
struct Workspace {
    oracle::TempDir dir{"rdlab_cli"};
    std::string cohort_csv;
    std::string dataset_csv;

    Workspace() {
        const std::string out = (dir.path / "base").string();
        const std::string cfg = dir.file("cohort.cfg");
        csv::write_file(cfg, "n = 1200\n");
        CliResult r = run_cli(dir, "setup_cohort",
                              "--out '" + out + "' --seed 20260824 cohort --config '" + cfg +
                                  "'");
        if (r.exit_code != 0) throw std::runtime_error("setup cohort failed: " + r.output);
        cohort_csv = out + "/cohort.csv";

        const std::string scen = dir.file("scenario.cfg");
        csv::write_file(scen, "tau = 2\nconfounding_level = 1\niv_strength = strong\n"
                              "bandwidth = 0.25\nreplicates = 2\n");
        r = run_cli(dir, "setup_sim",
                    "--out '" + out + "' --seed 20260824 simulate --cohort '" + cohort_csv +
                        "' --scenario '" + scen + "'");
        if (r.exit_code != 0) throw std::runtime_error("setup simulate failed: " + r.output);
        dataset_csv = out + "/dataset_00000.csv";
    }
};

Workspace& workspace() {
    static Workspace ws;
    return ws;
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("version and help exit cleanly") {
    oracle::TempDir dir("rdlab_cli_basic");
    const CliResult version = run_cli(dir, "version", "--version");
    CHECK(version.exit_code == 0);
    CHECK(oracle::contains(version.output, "rdlab"));

    const CliResult help = run_cli(dir, "help", "--help");
    CHECK(help.exit_code == 0);
    CHECK(oracle::contains(help.output, "cohort"));
    CHECK(oracle::contains(help.output, "study"));

    CHECK(run_cli(dir, "nosub", "").exit_code != 0);
    CHECK(run_cli(dir, "badsub", "frobnicate").exit_code != 0);
}

TEST_CASE("cohort generation writes schema-stable, reproducible output") {
    Workspace& ws = workspace();
    const std::string first = csv::read_file(ws.cohort_csv);

    std::string header = first.substr(0, first.find('\n'));
    std::string want_header;
    for (const auto& col : cohort_columns()) {
        if (!want_header.empty()) want_header += ',';
        want_header += col;
    }
    CHECK(header == want_header);
    CHECK(csv::Table::parse(first).rows() == 1200);

    // identical invocation in a different directory: byte-identical cohort
    oracle::TempDir dir("rdlab_cli_cohort");
    const std::string cfg = dir.file("cohort.cfg");
    csv::write_file(cfg, "n = 1200\n");
    const std::string out = (dir.path / "again").string();
    const CliResult r = run_cli(dir, "again",
                                "--out '" + out + "' --seed 20260824 cohort --config '" + cfg +
                                    "'");
    REQUIRE(r.exit_code == 0);
    CHECK(csv::read_file(out + "/cohort.csv") == first);
    CHECK(std::filesystem::exists(out + "/manifest.json"));
    const std::string manifest = csv::read_file(out + "/manifest.json");
    CHECK(oracle::contains(manifest, "\"seed\""));
    CHECK(oracle::contains(manifest, "cohort"));

    // a different seed must change the data
    const std::string out2 = (dir.path / "reseeded").string();
    const CliResult r2 = run_cli(dir, "reseeded",
                                 "--out '" + out2 + "' --seed 7 cohort --config '" + cfg + "'");
    REQUIRE(r2.exit_code == 0);
    CHECK(csv::read_file(out2 + "/cohort.csv") != first);
}

TEST_CASE("configuration and data errors map to distinct exit codes") {
    oracle::TempDir dir("rdlab_cli_errors");
    const std::string bad_cfg = dir.file("bad.cfg");
    csv::write_file(bad_cfg, "volume = 11\n");
    CHECK(run_cli(dir, "badkey",
                  "--out '" + (dir.path / "x").string() + "' cohort --config '" + bad_cfg + "'")
              .exit_code == 2);

    // missing required option: usage error
    CHECK(run_cli(dir, "nocohort", "simulate").exit_code == 2);
    // missing input file: data error
    CHECK(run_cli(dir, "nofile",
                  "--out '" + (dir.path / "y").string() + "' simulate --cohort '" +
                      (dir.path / "absent.csv").string() + "'")
              .exit_code == 3);

    Workspace& ws = workspace();
    CHECK(run_cli(dir, "badbw",
                  "estimate --dataset '" + ws.dataset_csv + "' --bandwidth 0")
              .exit_code == 2);
    CHECK(run_cli(dir, "badest",
                  "estimate --dataset '" + ws.dataset_csv + "' --estimators freq,bogus")
              .exit_code == 2);
}

TEST_CASE("degenerate windows produce numeric or data errors") {
    oracle::TempDir dir("rdlab_cli_degenerate");

    csv::Table collinear(dataset_columns());
    csv::Table sparse(dataset_columns());
    long id = 1;
    const auto add_row = [&](csv::Table& t, double xc, int t_hat) {
        const double risk = 0.2 + xc;
        t.append_row({static_cast<double>(id++), 65.0, 0.0, 1.3, 3.5, risk, xc,
                      xc > 0.0 ? 1.0 : 0.0, 0.0, static_cast<double>(t_hat), 0.5, 3.5, 3.5,
                      3.5, -2.0});
    };
    for (int i = 0; i < 40; ++i) add_row(collinear, -0.01, 0); // one x value per side
    for (int i = 0; i < 40; ++i) add_row(collinear, 0.01, 1);
    const std::string collinear_csv = dir.file("collinear.csv");
    collinear.save(collinear_csv);
    CHECK(run_cli(dir, "collinear",
                  "estimate --dataset '" + collinear_csv + "' --estimators freq")
              .exit_code == 4);

    id = 1;
    add_row(sparse, -0.01, 0); // two below-side records: too few to fit a line
    add_row(sparse, -0.02, 0);
    for (int i = 0; i < 40; ++i) add_row(sparse, 0.001 * (i + 1), 1);
    const std::string sparse_csv = dir.file("sparse.csv");
    sparse.save(sparse_csv);
    CHECK(run_cli(dir, "sparse",
                  "estimate --dataset '" + sparse_csv + "' --estimators freq")
              .exit_code == 3);
}

TEST_CASE("estimate honours selections and reruns bit-identically") {
    Workspace& ws = workspace();
    oracle::TempDir dir("rdlab_cli_estimate");
    const std::string common = "--seed 20260824 estimate --dataset '" + ws.dataset_csv +
                               "' --chains 2 --iterations 800 --burnin 300";

    const std::string out1 = (dir.path / "full1").string();
    const CliResult full = run_cli(dir, "full1", "--out '" + out1 + "' " + common);
    REQUIRE(full.exit_code == 0);
    const std::string json1 = csv::read_file(out1 + "/estimates.json");
    for (const char* name : {"freq", "wip", "sip", "late-unct", "late-flex", "late-cnst"}) {
        CHECK(oracle::contains(json1, std::string("\"") + name + "\""));
    }

    const std::string out2 = (dir.path / "full2").string();
    REQUIRE(run_cli(dir, "full2", "--out '" + out2 + "' " + common).exit_code == 0);
    CHECK(csv::read_file(out2 + "/estimates.json") == json1);

    const std::string out3 = (dir.path / "partial").string();
    const CliResult partial = run_cli(dir, "partial", "--out '" + out3 + "' " + common +
                                                          " --estimators freq,wip");
    REQUIRE(partial.exit_code == 0);
    const std::string json3 = csv::read_file(out3 + "/estimates.json");
    CHECK(oracle::contains(json3, "\"freq\""));
    CHECK(oracle::contains(json3, "\"wip\""));
    CHECK_FALSE(oracle::contains(json3, "\"late-unct\""));
}

TEST_CASE("diagnose writes the binned summary and the checks report") {
    Workspace& ws = workspace();
    oracle::TempDir dir("rdlab_cli_diag");
    const std::string out = (dir.path / "diag").string();
    const CliResult r = run_cli(dir, "diag",
                                "--out '" + out + "' diagnose --dataset '" + ws.dataset_csv +
                                    "' --bandwidth 0.1 --bin-width 0.02");
    REQUIRE(r.exit_code == 0);
    const csv::Table binned = csv::Table::load(out + "/binned.csv");
    CHECK(binned.columns() ==
          std::vector<std::string>{"bin_mid", "mean_y", "prop_treated", "count"});
    CHECK(binned.rows() > 5);
    const std::string checks = csv::read_file(out + "/checks.json");
    CHECK(oracle::contains(checks, "\"a1\""));
    CHECK(oracle::contains(checks, "\"covariates\""));
    CHECK(oracle::contains(checks, "\"hdl\""));
}

TEST_CASE("study produces a table and rejects unknown cells") {
    oracle::TempDir dir("rdlab_cli_study");
    const std::string out = (dir.path / "study").string();
    const CliResult r = run_cli(
        dir, "study",
        "--out '" + out + "' --seed 20260824 --jobs 1 study --preset paper --cells "
        "strong_1_tau2_h0.25 --replicates 1 --chains 2 --iterations 800 --burnin 300");
    REQUIRE(r.exit_code == 0);
    const csv::TextTable table = csv::TextTable::load(out + "/table.csv");
    REQUIRE(table.rows() == 6);
    CHECK(table.at(0, "iv") == "strong");
    CHECK(std::filesystem::exists(out + "/cell_strong_1_tau2_h0.25.csv"));
    CHECK(std::filesystem::exists(out + "/manifest.json"));

    CHECK(run_cli(dir, "badcell",
                  "--out '" + (dir.path / "bad").string() +
                      "' study --preset paper --cells not_a_cell --replicates 1")
              .exit_code == 2);
}

} // TEST_SUITE
