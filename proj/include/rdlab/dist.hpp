#pragma once

#include "rdlab/rng.hpp"

namespace rdlab::dist {

/// Uniform on [a, b).
double uniform(RngStream& rng, double a, double b);

/// Normal via Box-Muller (two uniforms per draw, no cached spare).
double normal(RngStream& rng, double mean, double sd);

/// Normal restricted to (lo, hi) by rejection.
double truncated_normal(RngStream& rng, double mean, double sd, double lo, double hi);

/// Gamma(shape, scale 1), Marsaglia-Tsang squeeze; shape < 1 via boost.
double gamma(RngStream& rng, double shape);

/// Beta(a, b) as Ga/(Ga+Gb).
double beta(RngStream& rng, double a, double b);

/// Binomial(n, p) by Bernoulli summation (small n) or CDF inversion.
long binomial(RngStream& rng, long n, double p);

bool bernoulli(RngStream& rng, double p);

/// Exponential(rate 1).
double exponential(RngStream& rng);

double logit(double p);
double expit(double x);

} // namespace rdlab::dist
