#pragma once

#include <Eigen/Dense>

namespace rdlab {

/// Ordinary least-squares fit. covariance = residual_variance * (X'X)^-1.
struct LinearFit {
    Eigen::VectorXd coefficients;
    Eigen::MatrixXd covariance;
    Eigen::VectorXd residuals;
    Eigen::VectorXd fitted;
    Eigen::VectorXd standard_errors;
    double residual_variance = 0.0;
};

/// Logistic regression fit; covariance is the inverse Fisher information at
/// convergence.
struct GlmFit {
    Eigen::VectorXd coefficients;
    Eigen::MatrixXd covariance;
    bool converged = false;
    int iterations = 0;
};

/// Solves the least-squares normal equations by Cholesky (jitter 1e-10 retry).
/// Throws RankDeficiencyError when the design columns are linearly dependent.
LinearFit ols_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& response);

/// Standard error of the fitted mean at each row of `at`: sqrt(x' Cov x).
Eigen::VectorXd prediction_standard_errors(const LinearFit& fit, const Eigen::MatrixXd& at);

/// IRLS maximum likelihood for a Bernoulli logit model. Stops when the score
/// max-norm drops below `tolerance`; throws SeparationError when the
/// coefficient norm diverges past 1e3 (complete separation) and NumericError
/// on non-convergence within `max_iterations`.
GlmFit logistic_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                    double tolerance = 1e-8, int max_iterations = 100);

/// Bernoulli log-likelihood of `coefficients` on (design, response).
double logistic_log_likelihood(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                               const Eigen::VectorXd& coefficients);

} // namespace rdlab
