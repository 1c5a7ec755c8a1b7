#include "rdlab/inference.hpp"

#include "rdlab/dist.hpp"
#include "rdlab/errors.hpp"
#include "rdlab/regression.hpp"
#include "rdlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace rdlab {

namespace {

constexpr double kZ975 = 1.959963984540054;

double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// Exact reflection of a real proposal into [lo, hi]; preserves random-walk
// proposal symmetry.
double reflect(double x, double lo, double hi) {
    const double range = hi - lo;
    double t = std::fmod(x - lo, 2.0 * range);
    if (t < 0.0) t += 2.0 * range;
    return t <= range ? lo + t : hi - (t - range);
}

struct SideStats {
    double n = 0.0, sx = 0.0, sxx = 0.0, sy = 0.0, sxy = 0.0, syy = 0.0;
};

SideStats accumulate(const std::vector<double>& x, const std::vector<double>& y) {
    SideStats s;
    s.n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        s.sx += x[i];
        s.sxx += x[i] * x[i];
        s.sy += y[i];
        s.sxy += x[i] * y[i];
        s.syy += y[i] * y[i];
    }
    return s;
}

// Residual sum of squares of one side's line y = intercept + slope * x,
// from sufficient statistics only.
double side_ssr(const SideStats& s, double intercept, double slope) {
    return s.syy - 2.0 * intercept * s.sy - 2.0 * slope * s.sxy +
           2.0 * intercept * slope * s.sx + s.n * intercept * intercept + slope * slope * s.sxx;
}

// Slice sampler for sigma with target sigma^-n * exp(-ssr / (2 sigma^2))
// on (0, upper); shrinkage from the whole support, no stepping out needed.
double slice_sigma(double current, double n, double ssr, double upper, RngStream& rng) {
    const double lo = 1e-6 * upper;
    const auto logf = [&](double s) { return -n * std::log(s) - ssr / (2.0 * s * s); };
    double cur = std::clamp(current, lo, upper);
    const double threshold = logf(cur) - dist::exponential(rng);
    double left = lo;
    double right = upper;
    for (int k = 0; k < 200; ++k) {
        const double prop = dist::uniform(rng, left, right);
        if (logf(prop) >= threshold) return prop;
        if (prop < cur) {
            left = prop;
        } else {
            right = prop;
        }
    }
    return cur;
}

void require_stream_per_chain(const McmcConfig& cfg, const std::vector<RngStream>& streams) {
    if (static_cast<long>(streams.size()) != cfg.chains) {
        throw ConfigError("need exactly one rng stream per chain (" + std::to_string(cfg.chains) +
                          " chains, " + std::to_string(streams.size()) + " streams)");
    }
}

void finalize_diagnostics(PosteriorDraws& out) {
    const auto& primary = out.get(out.primary);
    for (const double d : primary) {
        if (!std::isfinite(d)) ++out.nonfinite;
    }
    if (out.chains >= 2 && out.nonfinite == 0) {
        out.rhat = stats::split_rhat(primary, static_cast<int>(out.chains));
        out.rhat_warning = out.rhat > 1.1;
    } else {
        out.rhat = 1.0;
    }
}

// Small adaptive random-walk helper: tunes the step toward a 0.3-0.5
// acceptance rate in blocks during burn-in, then freezes.
struct AdaptiveStep {
    double step;
    long accepted = 0;
    long proposed = 0;

    void record(bool accept, bool adapting) {
        ++proposed;
        if (accept) ++accepted;
        if (adapting && proposed == 50) {
            const double rate = static_cast<double>(accepted) / 50.0;
            if (rate > 0.5) step *= 1.2;
            if (rate < 0.3) step /= 1.2;
            accepted = 0;
            proposed = 0;
        }
    }
};

} // namespace

// ---------------------------------------------------------------- window

BandwidthWindow window(const std::vector<double>& risk_centered,
                       const std::vector<double>& outcome, const std::vector<int>& treated,
                       double h, long min_side) {
    if (!(h > 0.0)) throw ConfigError("bandwidth must be > 0");
    if (risk_centered.size() != outcome.size() || risk_centered.size() != treated.size()) {
        throw DataError("window: input vectors have different lengths");
    }
    BandwidthWindow win;
    win.h = h;
    for (std::size_t i = 0; i < risk_centered.size(); ++i) {
        const double xc = risk_centered[i];
        if (xc >= -h && xc <= 0.0) {
            win.x_below.push_back(xc);
            win.y_below.push_back(outcome[i]);
            win.s_b += treated[i];
        } else if (xc > 0.0 && xc <= h) {
            win.x_above.push_back(xc);
            win.y_above.push_back(outcome[i]);
            win.s_a += treated[i];
        }
    }
    win.n_b = static_cast<long>(win.x_below.size());
    win.n_a = static_cast<long>(win.x_above.size());
    if (win.n_b == 0) {
        throw DataError("window: no records below the threshold within bandwidth " +
                        std::to_string(h));
    }
    if (win.n_a == 0) {
        throw DataError("window: no records above the threshold within bandwidth " +
                        std::to_string(h));
    }
    win.small_sample = win.n_b < min_side || win.n_a < min_side;
    return win;
}

BandwidthWindow window(const SimulatedDataset& dataset, double h, long min_side) {
    std::vector<double> xc(dataset.records.size());
    for (std::size_t i = 0; i < dataset.records.size(); ++i) {
        xc[i] = dataset.records[i].risk_centered;
    }
    return window(xc, dataset.y_sim3, dataset.t_hat, h, min_side);
}

// ---------------------------------------------------------------- priors

AtePrior AtePrior::wip() {
    AtePrior p;
    p.kind = "wip";
    p.phi_mean = 0.0;
    p.phi_var = 2.0;
    return p;
}

AtePrior AtePrior::sip() {
    AtePrior p;
    p.kind = "sip";
    p.phi_mean = -2.0;
    p.phi_var = 1.0;
    return p;
}

void AtePrior::validate() const {
    if (!(s0 > 0.0 && s1b > 0.0 && s1a > 0.0)) {
        throw ConfigError("ATE prior sds must be > 0");
    }
    if (!(phi_var > 0.0)) throw ConfigError("phi prior variance must be > 0");
    if (!(sigma_upper > 0.0)) throw ConfigError("sigma upper bound must be > 0");
}

DenomPrior DenomPrior::unc() {
    DenomPrior p;
    p.kind = "unc";
    return p;
}

DenomPrior DenomPrior::fix() {
    DenomPrior p;
    p.kind = "fix";
    return p;
}

DenomPrior DenomPrior::fdp() {
    DenomPrior p;
    p.kind = "fdp";
    return p;
}

void DenomPrior::validate() const {
    if (kind != "unc" && kind != "fix" && kind != "fdp") {
        throw ConfigError("denominator prior kind must be unc, fix, or fdp; got '" + kind + "'");
    }
    if (kind == "unc" && !(beta_a > 0.0 && beta_b > 0.0)) {
        throw ConfigError("Beta shapes must be > 0");
    }
    if (kind == "fix") {
        if (!(alpha_lower > 0.0) || !(alpha_upper > alpha_lower) || !(nu_upper > nu_lower) ||
            !(nu_lower >= 0.0)) {
            throw ConfigError("fix prior supports must be non-degenerate intervals");
        }
    }
    if (kind == "fdp" && !(logit_sd_a > 0.0 && logit_sd_b > 0.0)) {
        throw ConfigError("fdp logit sds must be > 0");
    }
}

void McmcConfig::validate() const {
    if (chains < 1) throw ConfigError("chains must be >= 1");
    if (burnin < 0 || iterations <= burnin) {
        throw ConfigError("iterations must exceed burnin (iterations=" +
                          std::to_string(iterations) + ", burnin=" + std::to_string(burnin) + ")");
    }
}

const std::vector<double>& PosteriorDraws::get(const std::string& name) const {
    const auto it = series.find(name);
    if (it == series.end()) throw DataError("no draw series named '" + name + "'");
    return it->second;
}

// ---------------------------------------------------------------- freq_ate

EstimateSummary freq_ate(const BandwidthWindow& win) {
    if (win.n_b < 3 || win.n_a < 3) {
        throw DataError("freq_ate: need at least 3 records on each side (have " +
                        std::to_string(win.n_b) + " below, " + std::to_string(win.n_a) +
                        " above)");
    }
    const auto fit_side = [](const std::vector<double>& x, const std::vector<double>& y) {
        const auto n = static_cast<Eigen::Index>(x.size());
        Eigen::MatrixXd design(n, 2);
        Eigen::VectorXd response(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            design(i, 0) = 1.0;
            design(i, 1) = x[static_cast<std::size_t>(i)];
            response[i] = y[static_cast<std::size_t>(i)];
        }
        return ols_fit(design, response);
    };
    const LinearFit below = fit_side(win.x_below, win.y_below);
    const LinearFit above = fit_side(win.x_above, win.y_above);
    EstimateSummary s;
    s.estimator = "freq";
    s.point = above.coefficients[0] - below.coefficients[0];
    const double se = std::sqrt(above.standard_errors[0] * above.standard_errors[0] +
                                below.standard_errors[0] * below.standard_errors[0]);
    s.lower = s.point - kZ975 * se;
    s.upper = s.point + kZ975 * se;
    s.ess = static_cast<double>(win.n_b + win.n_a);
    s.unstable = !((s.upper - s.lower) <= 10.0);
    return s;
}

// ---------------------------------------------------------------- sample_ate

PosteriorDraws sample_ate(const BandwidthWindow& win, const AtePrior& prior,
                          const McmcConfig& cfg, const std::vector<RngStream>& chain_streams) {
    prior.validate();
    cfg.validate();
    require_stream_per_chain(cfg, chain_streams);

    const SideStats below = accumulate(win.x_below, win.y_below);
    const SideStats above = accumulate(win.x_above, win.y_above);
    const double n_total = below.n + above.n;

    const long kept = cfg.retained_per_chain();
    PosteriorDraws out;
    out.chains = cfg.chains;
    out.per_chain = kept;
    out.primary = "phi";
    for (const char* name : {"phi", "beta0b", "beta1b", "beta1a", "sigma"}) {
        out.series[name].reserve(static_cast<std::size_t>(out.total()));
    }

    const double prec0 = 1.0 / (prior.s0 * prior.s0);
    const double prec_phi = 1.0 / prior.phi_var;
    const double prec1b = 1.0 / (prior.s1b * prior.s1b);
    const double prec1a = 1.0 / (prior.s1a * prior.s1a);

    for (long c = 0; c < cfg.chains; ++c) {
        RngStream rng = chain_streams[static_cast<std::size_t>(c)];
        const double off = (c % 2 == 0) ? -1.0 : 1.0;
        double b0 = prior.m0 + off * prior.s0;
        double phi = prior.phi_mean + off * std::sqrt(prior.phi_var);
        double b1b = cfg.fixed_slopes ? cfg.fixed_slopes->first : prior.m1b + off * prior.s1b;
        double b1a = cfg.fixed_slopes ? cfg.fixed_slopes->second : prior.m1a + off * prior.s1a;
        double sigma =
            prior.sigma_upper * static_cast<double>(c + 1) / static_cast<double>(cfg.chains + 1);

        for (long iter = 0; iter < cfg.iterations; ++iter) {
            const double inv_var = 1.0 / (sigma * sigma);
            {
                const double prec = n_total * inv_var + prec0;
                const double sum_r = (below.sy - b1b * below.sx) +
                                     (above.sy - above.n * phi - b1a * above.sx);
                const double mean = (sum_r * inv_var + prior.m0 * prec0) / prec;
                b0 = dist::normal(rng, mean, std::sqrt(1.0 / prec));
            }
            {
                const double prec = above.n * inv_var + prec_phi;
                const double sum_r = above.sy - above.n * b0 - b1a * above.sx;
                const double mean = (sum_r * inv_var + prior.phi_mean * prec_phi) / prec;
                phi = dist::normal(rng, mean, std::sqrt(1.0 / prec));
            }
            if (!cfg.fixed_slopes) {
                {
                    const double prec = below.sxx * inv_var + prec1b;
                    const double sum_xr = below.sxy - b0 * below.sx;
                    const double mean = (sum_xr * inv_var + prior.m1b * prec1b) / prec;
                    b1b = dist::normal(rng, mean, std::sqrt(1.0 / prec));
                }
                {
                    const double prec = above.sxx * inv_var + prec1a;
                    const double sum_xr = above.sxy - (b0 + phi) * above.sx;
                    const double mean = (sum_xr * inv_var + prior.m1a * prec1a) / prec;
                    b1a = dist::normal(rng, mean, std::sqrt(1.0 / prec));
                }
            }
            const double ssr =
                std::max(side_ssr(below, b0, b1b) + side_ssr(above, b0 + phi, b1a), 0.0);
            sigma = slice_sigma(sigma, n_total, ssr, prior.sigma_upper, rng);

            if (iter >= cfg.burnin) {
                out.series["phi"].push_back(phi);
                out.series["beta0b"].push_back(b0);
                out.series["beta1b"].push_back(b1b);
                out.series["beta1a"].push_back(b1a);
                out.series["sigma"].push_back(sigma);
            }
        }
    }
    finalize_diagnostics(out);
    return out;
}

// ------------------------------------------------------- sample_denominator

namespace {

PosteriorDraws denominator_shell(const McmcConfig& cfg) {
    PosteriorDraws out;
    out.chains = cfg.chains;
    out.per_chain = cfg.retained_per_chain();
    out.primary = "delta_pi";
    return out;
}

void push_pis(PosteriorDraws& out, double pi_b, double pi_a) {
    out.series["pi_b"].push_back(pi_b);
    out.series["pi_a"].push_back(pi_a);
    out.series["delta_pi"].push_back(pi_a - pi_b);
}

PosteriorDraws sample_denominator_unc(const BandwidthWindow& win, const DenomPrior& prior,
                                      const McmcConfig& cfg,
                                      const std::vector<RngStream>& chain_streams) {
    PosteriorDraws out = denominator_shell(cfg);
    const double nb = static_cast<double>(win.n_b);
    const double na = static_cast<double>(win.n_a);
    const double sb = static_cast<double>(win.s_b);
    const double sa = static_cast<double>(win.s_a);
    for (long c = 0; c < cfg.chains; ++c) {
        RngStream rng = chain_streams[static_cast<std::size_t>(c)];
        for (long i = 0; i < out.per_chain; ++i) {
            const double pi_b = dist::beta(rng, prior.beta_a + sb, prior.beta_b + (nb - sb));
            const double pi_a = dist::beta(rng, prior.beta_a + sa, prior.beta_b + (na - sa));
            push_pis(out, pi_b, pi_a);
        }
    }
    return out;
}

PosteriorDraws sample_denominator_fix(const BandwidthWindow& win, const DenomPrior& prior,
                                      const McmcConfig& cfg,
                                      const std::vector<RngStream>& chain_streams) {
    PosteriorDraws out = denominator_shell(cfg);
    const double nb = static_cast<double>(win.n_b);
    const double na = static_cast<double>(win.n_a);
    const double sb = static_cast<double>(win.s_b);
    const double sa = static_cast<double>(win.s_a);
    const double nb1 = nb + 1.0; // data-dependent second shape of pi_b

    // Rough posterior location of alpha_b, used only for starting values and
    // the initial proposal scale; the adaptive step does the rest.
    const double p_tilt = (sb + 0.5) / (nb + 1.0);
    const double alpha_star =
        std::clamp(nb1 * p_tilt / (1.0 - p_tilt), prior.alpha_lower, prior.alpha_upper);

    for (long c = 0; c < cfg.chains; ++c) {
        RngStream rng = chain_streams[static_cast<std::size_t>(c)];
        const double spread = (c % 2 == 0) ? 0.5 : 2.0;
        double alpha = std::clamp(alpha_star * spread, prior.alpha_lower, prior.alpha_upper);
        double nu = std::clamp(prior.nu_lower * (1.0 + static_cast<double>(c)), prior.nu_lower,
                               prior.nu_upper);
        AdaptiveStep step_alpha{std::max(1.0, alpha_star / std::sqrt(nb1))};
        AdaptiveStep step_nu{std::max(10.0, 0.02 * (prior.nu_upper - prior.nu_lower))};

        for (long iter = 0; iter < cfg.iterations; ++iter) {
            const bool adapting = iter < cfg.burnin;
            const double pi_b = dist::beta(rng, alpha + sb, nb1 + (nb - sb));
            const double pi_a = dist::beta(rng, nu + alpha + sa, 1.0 + (na - sa));
            const double log_pib = std::log(pi_b);
            const double log_pia = std::log(pi_a);

            const auto alpha_target = [&](double al) {
                return std::lgamma(al + nb1) - std::lgamma(al) + (al - 1.0) * log_pib +
                       std::log(nu + al) + (nu + al - 1.0) * log_pia;
            };
            {
                const double prop = reflect(alpha + dist::normal(rng, 0.0, step_alpha.step),
                                            prior.alpha_lower, prior.alpha_upper);
                const bool accept = std::log(dist::uniform(rng, 0.0, 1.0)) <
                                    alpha_target(prop) - alpha_target(alpha);
                if (accept) alpha = prop;
                step_alpha.record(accept, adapting);
            }
            const auto nu_target = [&](double v) {
                return std::log(v + alpha) + (v + alpha - 1.0) * log_pia;
            };
            {
                const double prop = reflect(nu + dist::normal(rng, 0.0, step_nu.step),
                                            prior.nu_lower, prior.nu_upper);
                const bool accept =
                    std::log(dist::uniform(rng, 0.0, 1.0)) < nu_target(prop) - nu_target(nu);
                if (accept) nu = prop;
                step_nu.record(accept, adapting);
            }
            if (iter >= cfg.burnin) {
                push_pis(out, pi_b, pi_a);
                out.series["alpha_b"].push_back(alpha);
                out.series["nu"].push_back(nu);
            }
        }
    }
    return out;
}

PosteriorDraws sample_denominator_fdp(const BandwidthWindow& win, const DenomPrior& prior,
                                      const McmcConfig& cfg,
                                      const std::vector<RngStream>& chain_streams) {
    PosteriorDraws out = denominator_shell(cfg);
    struct Side {
        double prior_mean, prior_sd, successes, n;
    };
    const Side sides[2] = {
        {prior.logit_mean_b, prior.logit_sd_b, static_cast<double>(win.s_b),
         static_cast<double>(win.n_b)},
        {prior.logit_mean_a, prior.logit_sd_a, static_cast<double>(win.s_a),
         static_cast<double>(win.n_a)},
    };
    const auto target = [](const Side& s, double lam) {
        const double z = (lam - s.prior_mean) / s.prior_sd;
        return -0.5 * z * z + s.successes * lam - s.n * softplus(lam);
    };
    for (long c = 0; c < cfg.chains; ++c) {
        RngStream rng = chain_streams[static_cast<std::size_t>(c)];
        const double off = (c % 2 == 0) ? -1.0 : 1.0;
        double lam[2] = {sides[0].prior_mean + off * sides[0].prior_sd,
                         sides[1].prior_mean + off * sides[1].prior_sd};
        AdaptiveStep steps[2] = {AdaptiveStep{0.5}, AdaptiveStep{0.5}};

        for (long iter = 0; iter < cfg.iterations; ++iter) {
            const bool adapting = iter < cfg.burnin;
            for (int k = 0; k < 2; ++k) {
                const double prop = lam[k] + dist::normal(rng, 0.0, steps[k].step);
                const bool accept = std::log(dist::uniform(rng, 0.0, 1.0)) <
                                    target(sides[k], prop) - target(sides[k], lam[k]);
                if (accept) lam[k] = prop;
                steps[k].record(accept, adapting);
            }
            if (iter >= cfg.burnin) {
                push_pis(out, dist::expit(lam[0]), dist::expit(lam[1]));
                out.series["lambda_b"].push_back(lam[0]);
                out.series["lambda_a"].push_back(lam[1]);
            }
        }
    }
    return out;
}

} // namespace

PosteriorDraws sample_denominator(const BandwidthWindow& win, const DenomPrior& prior,
                                  const McmcConfig& cfg,
                                  const std::vector<RngStream>& chain_streams) {
    prior.validate();
    cfg.validate();
    require_stream_per_chain(cfg, chain_streams);
    PosteriorDraws out;
    if (prior.kind == "unc") {
        out = sample_denominator_unc(win, prior, cfg, chain_streams);
    } else if (prior.kind == "fix") {
        out = sample_denominator_fix(win, prior, cfg, chain_streams);
    } else {
        out = sample_denominator_fdp(win, prior, cfg, chain_streams);
    }
    finalize_diagnostics(out);
    return out;
}

// ---------------------------------------------------------------- late

std::pair<PosteriorDraws, EstimateSummary> late(const PosteriorDraws& numerator,
                                                const PosteriorDraws& denominator,
                                                const std::string& name) {
    const auto& phi = numerator.get("phi");
    const auto& dpi = denominator.get("delta_pi");
    if (phi.size() != dpi.size() || numerator.chains != denominator.chains) {
        throw DataError("late: numerator and denominator draws are not aligned");
    }
    PosteriorDraws out;
    out.chains = numerator.chains;
    out.per_chain = numerator.per_chain;
    out.primary = "late";
    auto& ratio = out.series["late"];
    ratio.resize(phi.size());
    for (std::size_t i = 0; i < phi.size(); ++i) {
        ratio[i] = phi[i] / dpi[i];
    }
    out.rhat = std::max(numerator.rhat, denominator.rhat);
    out.rhat_warning = numerator.rhat_warning || denominator.rhat_warning;
    for (const double d : ratio) {
        if (!std::isfinite(d)) ++out.nonfinite;
    }
    EstimateSummary summary = summarize(out, name);
    return {std::move(out), summary};
}

// ---------------------------------------------------------------- summarize

EstimateSummary summarize(const PosteriorDraws& draws, const std::string& name) {
    const auto& v = draws.get(draws.primary);
    if (static_cast<long>(v.size()) < 1000) {
        throw DataError("summarize: need at least 1000 retained draws, have " +
                        std::to_string(v.size()));
    }
    std::vector<double> finite;
    std::vector<double> ordered; // keeps +-inf so extreme tails widen intervals
    finite.reserve(v.size());
    ordered.reserve(v.size());
    long nonfinite = 0;
    for (const double d : v) {
        if (std::isfinite(d)) {
            finite.push_back(d);
            ordered.push_back(d);
        } else {
            ++nonfinite;
            if (!std::isnan(d)) ordered.push_back(d);
        }
    }
    if (finite.empty()) throw NumericError("summarize: no finite draws");

    EstimateSummary s;
    s.estimator = name;
    s.point = stats::mean(finite);
    s.lower = stats::quantile(ordered, 0.025);
    s.upper = stats::quantile(ordered, 0.975);
    s.ess = nonfinite == 0 ? stats::effective_sample_size(v, static_cast<int>(draws.chains))
                           : stats::effective_sample_size(finite, 1);
    s.nonfinite = nonfinite;
    s.rhat_warning = draws.rhat_warning;
    const double width = s.upper - s.lower;
    const bool too_many_nonfinite =
        static_cast<double>(nonfinite) > 0.001 * static_cast<double>(v.size());
    s.unstable = !(width <= 10.0) || s.point < s.lower || s.point > s.upper || too_many_nonfinite;
    return s;
}

// ---------------------------------------------------------------- driver

EstimatorSelection EstimatorSelection::all() {
    return EstimatorSelection{};
}

const std::vector<std::string>& estimator_names() {
    static const std::vector<std::string> names = {"freq",      "wip",       "sip",
                                                   "late-unct", "late-flex", "late-cnst"};
    return names;
}

EstimatorSelection EstimatorSelection::from_names(const std::vector<std::string>& names) {
    EstimatorSelection sel;
    sel.freq = sel.wip = sel.sip = sel.late_unct = sel.late_flex = sel.late_cnst = false;
    for (const auto& name : names) {
        if (name == "freq") {
            sel.freq = true;
        } else if (name == "wip") {
            sel.wip = true;
        } else if (name == "sip") {
            sel.sip = true;
        } else if (name == "late-unct") {
            sel.late_unct = true;
        } else if (name == "late-flex") {
            sel.late_flex = true;
        } else if (name == "late-cnst") {
            sel.late_cnst = true;
        } else {
            throw ConfigError("unknown estimator '" + name +
                              "'; valid names: freq, wip, sip, late-unct, late-flex, late-cnst");
        }
    }
    return sel;
}

std::map<std::string, EstimateSummary> run_estimators(const SimulatedDataset& dataset, double h,
                                                      const McmcConfig& cfg,
                                                      const StreamSpec& streams,
                                                      const EstimatorSelection& selection) {
    cfg.validate();
    const BandwidthWindow win = window(dataset, h);
    const auto chain_streams = [&](long base_slot) {
        std::vector<RngStream> out;
        out.reserve(static_cast<std::size_t>(cfg.chains));
        for (long c = 0; c < cfg.chains; ++c) {
            out.push_back(streams.chain(static_cast<std::uint64_t>(base_slot + c)));
        }
        return out;
    };

    std::map<std::string, EstimateSummary> out;
    if (selection.freq) {
        out["freq"] = freq_ate(win);
    }
    if (selection.wip) {
        const PosteriorDraws draws = sample_ate(win, AtePrior::wip(), cfg, chain_streams(1));
        out["wip"] = summarize(draws, "wip");
    }
    const bool need_sip =
        selection.sip || selection.late_unct || selection.late_flex || selection.late_cnst;
    if (!need_sip) return out;

    const PosteriorDraws sip_draws =
        sample_ate(win, AtePrior::sip(), cfg, chain_streams(1 + cfg.chains));
    if (selection.sip) {
        out["sip"] = summarize(sip_draws, "sip");
    }
    if (selection.late_unct) {
        const PosteriorDraws den =
            sample_denominator(win, DenomPrior::unc(), cfg, chain_streams(1 + 2 * cfg.chains));
        out["late-unct"] = late(sip_draws, den, "late-unct").second;
    }
    if (selection.late_cnst) {
        const PosteriorDraws den =
            sample_denominator(win, DenomPrior::fix(), cfg, chain_streams(1 + 3 * cfg.chains));
        out["late-cnst"] = late(sip_draws, den, "late-cnst").second;
    }
    if (selection.late_flex) {
        const PosteriorDraws den =
            sample_denominator(win, DenomPrior::fdp(), cfg, chain_streams(1 + 4 * cfg.chains));
        out["late-flex"] = late(sip_draws, den, "late-flex").second;
    }
    return out;
}

} // namespace rdlab
