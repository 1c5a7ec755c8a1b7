#include "rdlab/stats.hpp"

#include "rdlab/errors.hpp"

#include <algorithm>
#include <cmath>

namespace rdlab::stats {

double mean(std::span<const double> v) {
    if (v.empty()) throw NumericError("mean of empty sample");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double variance(std::span<const double> v) {
    if (v.size() < 2) throw NumericError("variance needs at least 2 observations");
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

double sd(std::span<const double> v) {
    return std::sqrt(variance(v));
}

double correlation(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw NumericError("correlation: length mismatch");
    if (x.size() < 2) throw NumericError("correlation needs at least 2 observations");
    const double mx = mean(x);
    const double my = mean(y);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) throw NumericError("correlation: constant input");
    return sxy / std::sqrt(sxx * syy);
}

double quantile(std::vector<double> v, double p) {
    if (v.empty()) throw NumericError("quantile of empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw NumericError("quantile requires p in [0,1]");
    const std::size_t n = v.size();
    const double h = p * static_cast<double>(n - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, n - 1);
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
    const double vlo = v[lo];
    if (hi == lo) return vlo;
    const double vhi = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(lo) + 1, v.end());
    return vlo + (h - static_cast<double>(lo)) * (vhi - vlo);
}

namespace {

// Autocorrelations of one chain up to max_lag; returns rho[0..max_lag].
std::vector<double> autocorrelations(std::span<const double> chain, std::size_t max_lag) {
    const std::size_t n = chain.size();
    const double m = mean(chain);
    double c0 = 0.0;
    for (double x : chain) c0 += (x - m) * (x - m);
    c0 /= static_cast<double>(n);
    std::vector<double> rho(max_lag + 1, 0.0);
    rho[0] = 1.0;
    if (c0 <= 0.0) return rho; // constant chain
    for (std::size_t k = 1; k <= max_lag; ++k) {
        double ck = 0.0;
        for (std::size_t i = 0; i + k < n; ++i) {
            ck += (chain[i] - m) * (chain[i + k] - m);
        }
        ck /= static_cast<double>(n);
        rho[k] = ck / c0;
    }
    return rho;
}

} // namespace

double effective_sample_size(std::span<const double> draws, int chains) {
    if (chains < 1 || draws.size() % static_cast<std::size_t>(chains) != 0) {
        throw NumericError("effective_sample_size: draws not divisible by chains");
    }
    const std::size_t n = draws.size() / static_cast<std::size_t>(chains);
    if (n < 4) throw NumericError("effective_sample_size: chains too short");
    const std::size_t max_lag = std::min<std::size_t>(n / 2, 1000);
    double total = 0.0;
    for (int c = 0; c < chains; ++c) {
        auto chain = draws.subspan(static_cast<std::size_t>(c) * n, n);
        const auto rho = autocorrelations(chain, max_lag);
        // Geyer initial positive sequence: stop at the first nonpositive
        // adjacent pair sum.
        double acc = 0.0;
        for (std::size_t k = 1; k + 1 <= max_lag; k += 2) {
            const double pair = rho[k] + rho[k + 1];
            if (pair <= 0.0) break;
            acc += pair;
        }
        const double ess = static_cast<double>(n) / (1.0 + 2.0 * acc);
        total += std::min(ess, static_cast<double>(n));
    }
    return total;
}

double split_rhat(std::span<const double> draws, int chains) {
    if (chains < 1 || draws.size() % static_cast<std::size_t>(chains) != 0) {
        throw NumericError("split_rhat: draws not divisible by chains");
    }
    const std::size_t n = draws.size() / static_cast<std::size_t>(chains);
    const std::size_t half = n / 2;
    if (half < 2) throw NumericError("split_rhat: chains too short");
    std::vector<double> means;
    std::vector<double> vars;
    for (int c = 0; c < chains; ++c) {
        auto chain = draws.subspan(static_cast<std::size_t>(c) * n, n);
        for (int s = 0; s < 2; ++s) {
            auto seg = chain.subspan(static_cast<std::size_t>(s) * half, half);
            means.push_back(mean(seg));
            double v = 0.0;
            for (double x : seg) v += (x - means.back()) * (x - means.back());
            vars.push_back(v / static_cast<double>(half - 1));
        }
    }
    const double w = mean(vars);
    const std::size_t m = means.size();
    const double grand = mean(means);
    double b = 0.0;
    for (double mu : means) b += (mu - grand) * (mu - grand);
    b *= static_cast<double>(half) / static_cast<double>(m - 1);
    if (w <= 0.0) return 1.0; // all segments constant
    const double var_plus =
        (static_cast<double>(half - 1) / static_cast<double>(half)) * w + b / static_cast<double>(half);
    return std::sqrt(var_plus / w);
}

} // namespace rdlab::stats
