#pragma once

#include "rdlab/rng.hpp"
#include "rdlab/simulate.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rdlab {

// Records within h of the threshold, split by side. The boundary
// risk_centered = 0 belongs below (z = 0 exactly when risk <= 0.2).
struct BandwidthWindow {
    double h = 0.0;
    std::vector<double> x_below, y_below; // risk_centered in [-h, 0]
    std::vector<double> x_above, y_above; // risk_centered in (0, h]
    long n_b = 0, n_a = 0; // side sizes
    long s_b = 0, s_a = 0; // treated counts per side
    bool small_sample = false;
};

BandwidthWindow window(const std::vector<double>& risk_centered,
                       const std::vector<double>& outcome, const std::vector<int>& treated,
                       double h, long min_side = 30);
// Convenience overload reading y_sim3 / t_hat from a simulated dataset.
BandwidthWindow window(const SimulatedDataset& dataset, double h, long min_side = 30);

// Priors for the two-line outcome model
//   below: y ~ Normal(b0b + b1b * x, sigma^2)
//   above: y ~ Normal(b0b + phi + b1a * x, sigma^2)
// phi is the treatment-effect jump; sigma is shared across sides.
struct AtePrior {
    std::string kind = "wip";
    double m0 = 3.7, s0 = 0.5;    // intercept below
    double m1b = 8.0, s1b = 0.75; // slope below
    double m1a = 4.0, s1a = 2.5;  // slope above: flatter and vaguer than below
    double phi_mean = 0.0;
    double phi_var = 2.0;         // variance, not sd
    double sigma_upper = 5.0;     // sigma ~ Uniform(0, sigma_upper)

    static AtePrior wip(); // phi ~ Normal(0, 2)
    static AtePrior sip(); // phi ~ Normal(-2, 1)
    void validate() const;
};

// Priors for the side-specific treatment probabilities (pi_b, pi_a).
struct DenomPrior {
    std::string kind = "unc"; // unc | fix | fdp
    // unc: independent Beta(beta_a, beta_b) on both sides (conjugate).
    double beta_a = 1.0, beta_b = 1.0;
    // fix: pi_b ~ Beta(alpha_b, n_b + 1), pi_a ~ Beta(nu + alpha_b, 1) with
    // alpha_b ~ Uniform(alpha_lower, alpha_upper), nu ~ Uniform(nu_lower,
    // nu_upper); the second shape of pi_b is data-dependent by design.
    double alpha_lower = 1.0, alpha_upper = 100000.0;
    double nu_lower = 200.0, nu_upper = 10000.0;
    // fdp: logit(pi_b) ~ Normal(logit_mean_b, logit_sd_b^2), same above.
    double logit_mean_b = -2.0, logit_sd_b = 1.0;
    double logit_mean_a = 2.0, logit_sd_a = 1.0;

    static DenomPrior unc();
    static DenomPrior fix();
    static DenomPrior fdp();
    void validate() const;
};

struct McmcConfig {
    long chains = 2;
    long iterations = 12500;
    long burnin = 2500;
    // When set, the two slopes are held at these values instead of being
    // sampled (used by low-dimensional validation against grid integration).
    std::optional<std::pair<double, double>> fixed_slopes;

    long retained_per_chain() const { return iterations - burnin; }
    void validate() const;
};

// Aligned MCMC output, chain-major: draw i of chain c sits at
// c * per_chain + i in every series.
struct PosteriorDraws {
    long chains = 0;
    long per_chain = 0;
    std::map<std::string, std::vector<double>> series;
    std::string primary; // series a summary reports on
    double rhat = 0.0;   // split-chain statistic on the primary series
    bool rhat_warning = false;
    long nonfinite = 0; // non-finite values in the primary series

    long total() const { return chains * per_chain; }
    const std::vector<double>& get(const std::string& name) const;
};

struct EstimateSummary {
    std::string estimator;
    double point = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double ess = 0.0;
    bool unstable = false;
    bool rhat_warning = false;
    long nonfinite = 0;
};

// Local-linear jump: separate least-squares lines per side, point estimate is
// the intercept gap, interval from independent-groups normal theory.
EstimateSummary freq_ate(const BandwidthWindow& win);

// Metropolis-within-Gibbs for the two-line model: conjugate normal draws for
// the coefficients, slice sampling for sigma on (0, sigma_upper). A window
// with no records on either side samples the prior. One RngStream per chain.
PosteriorDraws sample_ate(const BandwidthWindow& win, const AtePrior& prior,
                          const McmcConfig& cfg, const std::vector<RngStream>& chain_streams);

// Posterior of (pi_b, pi_a, delta_pi): exact conjugate draws for unc, Gibbs
// plus random-walk Metropolis for fix (reflection keeps the hyperparameters
// on their uniform supports) and fdp (logit scale, step adapted during
// burn-in to a 0.3-0.5 acceptance rate, then frozen).
PosteriorDraws sample_denominator(const BandwidthWindow& win, const DenomPrior& prior,
                                  const McmcConfig& cfg,
                                  const std::vector<RngStream>& chain_streams);

// Pairs numerator phi draws with denominator delta_pi draws index-wise.
// Ratios are never truncated; non-finite draws are counted, excluded from
// moments, and force the unstable flag past a 0.1% share.
std::pair<PosteriorDraws, EstimateSummary> late(const PosteriorDraws& numerator,
                                                const PosteriorDraws& denominator,
                                                const std::string& name);

// Posterior mean, equal-tailed 95% interval, autocorrelation-based effective
// sample size of the primary series. Requires >= 1000 retained draws.
EstimateSummary summarize(const PosteriorDraws& draws, const std::string& name);

// ---- one-dataset estimator driver shared by the CLI and the study harness

struct EstimatorSelection {
    bool freq = true;
    bool wip = true;
    bool sip = true;
    bool late_unct = true;
    bool late_flex = true;
    bool late_cnst = true;

    static EstimatorSelection all();
    // Accepts the documented names; unknown names raise ConfigError listing
    // the valid set.
    static EstimatorSelection from_names(const std::vector<std::string>& names);
};

// Canonical output order: freq, wip, sip, late-unct, late-flex, late-cnst.
const std::vector<std::string>& estimator_names();

// Runs the selected estimators on one dataset at bandwidth h. Chain streams
// are drawn from `streams` at fixed slots (1.. for wip, then sip, unc, fix,
// fdp), so adding or removing estimators never shifts another's draws.
std::map<std::string, EstimateSummary> run_estimators(const SimulatedDataset& dataset, double h,
                                                      const McmcConfig& cfg,
                                                      const StreamSpec& streams,
                                                      const EstimatorSelection& selection);

} // namespace rdlab
