#include "rdlab/dist.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rdlab::dist {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

[[noreturn]] void bad_param(const std::string& what) {
    throw std::invalid_argument("distribution parameter out of domain: " + what);
}

} // namespace

double uniform(RngStream& rng, double a, double b) {
    if (!(a < b)) bad_param("uniform requires a < b");
    return a + (b - a) * rng.next_double();
}

double normal(RngStream& rng, double mean, double sd) {
    if (!(sd > 0.0)) bad_param("normal requires sd > 0");
    const double u1 = 1.0 - rng.next_double(); // (0, 1], keeps log finite
    const double u2 = rng.next_double();
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
    return mean + sd * z;
}

double truncated_normal(RngStream& rng, double mean, double sd, double lo, double hi) {
    if (!(lo < hi)) bad_param("truncated_normal requires lo < hi");
    for (;;) {
        const double x = normal(rng, mean, sd);
        if (x > lo && x < hi) return x;
    }
}

double gamma(RngStream& rng, double shape) {
    if (!(shape > 0.0)) bad_param("gamma requires shape > 0");
    if (shape < 1.0) {
        const double u = 1.0 - rng.next_double();
        return gamma(rng, shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x;
        double v;
        do {
            x = normal(rng, 0.0, 1.0);
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = 1.0 - rng.next_double();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

double beta(RngStream& rng, double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) bad_param("beta requires both shapes > 0");
    const double ga = gamma(rng, a);
    const double gb = gamma(rng, b);
    return ga / (ga + gb);
}

long binomial(RngStream& rng, long n, double p) {
    if (n < 0) bad_param("binomial requires n >= 0");
    if (!(p >= 0.0 && p <= 1.0)) bad_param("binomial requires p in [0,1]");
    if (n == 0 || p == 0.0) return 0;
    if (p == 1.0) return n;
    if (n <= 1024) {
        long k = 0;
        for (long i = 0; i < n; ++i) {
            k += rng.next_double() < p ? 1 : 0;
        }
        return k;
    }
    // CDF inversion with the pmf recurrence; restarts on underflow of q^n.
    const double q = 1.0 - p;
    double pmf = std::exp(static_cast<double>(n) * std::log(q));
    if (pmf <= 0.0) {
        long k = 0;
        for (long i = 0; i < n; ++i) {
            k += rng.next_double() < p ? 1 : 0;
        }
        return k;
    }
    double u = rng.next_double();
    long k = 0;
    double cum = pmf;
    while (u > cum && k < n) {
        pmf *= (static_cast<double>(n - k) / static_cast<double>(k + 1)) * (p / q);
        ++k;
        cum += pmf;
    }
    return k;
}

bool bernoulli(RngStream& rng, double p) {
    if (!(p >= 0.0 && p <= 1.0)) bad_param("bernoulli requires p in [0,1]");
    return rng.next_double() < p;
}

double exponential(RngStream& rng) {
    return -std::log(1.0 - rng.next_double());
}

double logit(double p) {
    return std::log(p / (1.0 - p));
}

double expit(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

} // namespace rdlab::dist
