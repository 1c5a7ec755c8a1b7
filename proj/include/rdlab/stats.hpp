#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rdlab::stats {

double mean(std::span<const double> v);

/// Sample standard deviation (n-1 denominator).
double sd(std::span<const double> v);

double variance(std::span<const double> v);

/// Pearson correlation; throws NumericError when either side is constant.
double correlation(std::span<const double> x, std::span<const double> y);

/// Type-7 (linear interpolation) quantile of an unsorted sample, p in [0,1].
double quantile(std::vector<double> v, double p);

/// Effective sample size of MCMC output stored chain-by-chain (equal lengths),
/// using per-chain autocorrelations truncated by Geyer's initial positive
/// sequence rule, summed over chains.
double effective_sample_size(std::span<const double> draws, int chains);

/// Split-chain potential scale reduction factor.
double split_rhat(std::span<const double> draws, int chains);

} // namespace rdlab::stats
