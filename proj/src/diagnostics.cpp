#include "rdlab/diagnostics.hpp"

#include "rdlab/errors.hpp"
#include "rdlab/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rdlab {

namespace {

constexpr double kThreshold = 0.2;
constexpr double kZ975 = 1.959963984540054;

// Bin k covers risk in (0.2 + k*w, 0.2 + (k+1)*w]; edges never straddle the
// threshold and an on-edge record falls below, as in window().
long bin_index(double risk, double width) {
    return static_cast<long>(std::ceil((risk - kThreshold) / width)) - 1;
}

} // namespace

BinnedSummary binned_summary(const SimulatedDataset& dataset, double bin_width) {
    if (!(bin_width > 0.0)) throw ConfigError("bin width must be > 0");
    if (dataset.records.empty()) throw DataError("binned_summary: empty dataset");

    long k_min = std::numeric_limits<long>::max();
    long k_max = std::numeric_limits<long>::min();
    for (const auto& rec : dataset.records) {
        const long k = bin_index(rec.risk, bin_width);
        k_min = std::min(k_min, k);
        k_max = std::max(k_max, k);
    }

    const auto n_bins = static_cast<std::size_t>(k_max - k_min + 1);
    BinnedSummary out;
    out.bin_width = bin_width;
    out.counts.assign(n_bins, 0);
    std::vector<double> sum_y(n_bins, 0.0);
    std::vector<double> sum_t(n_bins, 0.0);

    for (std::size_t i = 0; i < dataset.records.size(); ++i) {
        const auto b =
            static_cast<std::size_t>(bin_index(dataset.records[i].risk, bin_width) - k_min);
        ++out.counts[b];
        sum_y[b] += dataset.y_sim3[i];
        sum_t[b] += dataset.t_hat[i];
    }

    out.edges.resize(n_bins + 1);
    out.midpoints.resize(n_bins);
    out.mean_outcome.resize(n_bins);
    out.treated_proportion.resize(n_bins);
    for (std::size_t b = 0; b <= n_bins; ++b) {
        out.edges[b] = kThreshold + static_cast<double>(k_min + static_cast<long>(b)) * bin_width;
    }
    for (std::size_t b = 0; b < n_bins; ++b) {
        out.midpoints[b] = out.edges[b] + 0.5 * bin_width;
        if (out.counts[b] > 0) {
            out.mean_outcome[b] = sum_y[b] / static_cast<double>(out.counts[b]);
            out.treated_proportion[b] = sum_t[b] / static_cast<double>(out.counts[b]);
        } else {
            out.mean_outcome[b] = std::nan("");
            out.treated_proportion[b] = std::nan("");
        }
        out.total += out.counts[b];
    }
    return out;
}

csv::Table binned_summary_table(const BinnedSummary& summary) {
    csv::Table table({"bin_mid", "mean_y", "prop_treated", "count"});
    for (std::size_t b = 0; b < summary.size(); ++b) {
        table.append_row({summary.midpoints[b], summary.mean_outcome[b],
                          summary.treated_proportion[b], static_cast<double>(summary.counts[b])});
    }
    return table;
}

AssociationReport check_a1(const SimulatedDataset& dataset, double h, double weak_threshold) {
    const BandwidthWindow win = window(dataset, h);
    AssociationReport rep;
    rep.h = h;
    rep.n_b = win.n_b;
    rep.n_a = win.n_a;
    rep.s_b = win.s_b;
    rep.s_a = win.s_a;
    rep.p_b = static_cast<double>(win.s_b) / static_cast<double>(win.n_b);
    rep.p_a = static_cast<double>(win.s_a) / static_cast<double>(win.n_a);
    rep.difference = rep.p_a - rep.p_b;

    const auto se_share = [](long s, long n) {
        double p = static_cast<double>(s) / static_cast<double>(n);
        double m = static_cast<double>(n);
        if (s == 0 || s == n) { // degenerate share: continuity correction
            p = (static_cast<double>(s) + 0.5) / (m + 1.0);
            m += 1.0;
        }
        return p * (1.0 - p) / m;
    };
    rep.se = std::sqrt(se_share(win.s_b, win.n_b) + se_share(win.s_a, win.n_a));
    rep.lower = rep.difference - kZ975 * rep.se;
    rep.upper = rep.difference + kZ975 * rep.se;
    rep.weak_threshold = weak_threshold;
    rep.label = rep.difference < weak_threshold ? "weak" : "strong";
    return rep;
}

JumpReport covariate_continuity(const SimulatedDataset& dataset, const std::string& covariate,
                                double h) {
    if (covariate == "risk" || covariate == "risk_centered") {
        throw ConfigError("covariate '" + covariate +
                          "' is the running score; its jump is degenerate by construction");
    }
    std::vector<double> values(dataset.records.size());
    if (covariate == "age") {
        for (std::size_t i = 0; i < values.size(); ++i) values[i] = dataset.records[i].age;
    } else if (covariate == "hdl") {
        for (std::size_t i = 0; i < values.size(); ++i) values[i] = dataset.records[i].hdl;
    } else if (covariate == "diabetes") {
        for (std::size_t i = 0; i < values.size(); ++i) {
            values[i] = static_cast<double>(dataset.records[i].diabetes);
        }
    } else {
        throw ConfigError("unknown covariate '" + covariate + "'; valid: age, hdl, diabetes");
    }

    std::vector<double> xc(dataset.records.size());
    for (std::size_t i = 0; i < xc.size(); ++i) xc[i] = dataset.records[i].risk_centered;

    const BandwidthWindow win = window(xc, values, dataset.t_hat, h);
    const EstimateSummary jump = freq_ate(win);
    JumpReport rep;
    rep.covariate = covariate;
    rep.h = h;
    rep.point = jump.point;
    rep.se = (jump.upper - jump.point) / kZ975;
    rep.lower = jump.lower;
    rep.upper = jump.upper;
    rep.flagged = std::abs(rep.point) > 2.0 * rep.se;
    return rep;
}

} // namespace rdlab
