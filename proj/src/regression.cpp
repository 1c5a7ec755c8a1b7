#include "rdlab/regression.hpp"

#include "rdlab/dist.hpp"
#include "rdlab/errors.hpp"

#include <cmath>
#include <string>

namespace rdlab {

namespace {

// Inverse of a symmetric positive definite matrix via Cholesky; one retry
// with 1e-10 diagonal jitter before giving up.
Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& m) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) {
        Eigen::MatrixXd jittered = m;
        jittered.diagonal().array() += 1e-10;
        llt.compute(jittered);
        if (llt.info() != Eigen::Success) {
            throw NumericError("Cholesky factorization failed even with jitter");
        }
    }
    const auto p = m.rows();
    return llt.solve(Eigen::MatrixXd::Identity(p, p));
}

void check_rank(const Eigen::MatrixXd& design) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    const int rank = static_cast<int>(qr.rank());
    if (rank < design.cols()) {
        throw RankDeficiencyError(rank, static_cast<int>(design.cols()));
    }
}

} // namespace

LinearFit ols_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& response) {
    const auto n = design.rows();
    const auto p = design.cols();
    if (n != response.size()) {
        throw DataError("ols_fit: design has " + std::to_string(n) + " rows but response has " +
                        std::to_string(response.size()));
    }
    if (n < p) {
        throw DataError("ols_fit: fewer rows than columns");
    }
    check_rank(design);

    const Eigen::MatrixXd xtx_inv = spd_inverse(design.transpose() * design);
    LinearFit fit;
    fit.coefficients = xtx_inv * (design.transpose() * response);
    fit.fitted = design * fit.coefficients;
    fit.residuals = response - fit.fitted;
    const double ssr = fit.residuals.squaredNorm();
    fit.residual_variance = n > p ? ssr / static_cast<double>(n - p) : 0.0;
    fit.covariance = fit.residual_variance * xtx_inv;
    fit.standard_errors = fit.covariance.diagonal().array().max(0.0).sqrt();
    return fit;
}

Eigen::VectorXd prediction_standard_errors(const LinearFit& fit, const Eigen::MatrixXd& at) {
    if (at.cols() != fit.coefficients.size()) {
        throw DataError("prediction_standard_errors: column count mismatch");
    }
    Eigen::VectorXd se(at.rows());
    for (Eigen::Index i = 0; i < at.rows(); ++i) {
        const double v = at.row(i) * fit.covariance * at.row(i).transpose();
        se[i] = std::sqrt(std::max(v, 0.0));
    }
    return se;
}

double logistic_log_likelihood(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                               const Eigen::VectorXd& coefficients) {
    const Eigen::VectorXd eta = design * coefficients;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        // y*eta - log(1 + exp(eta)), stable in both tails
        const double e = eta[i];
        const double log1pexp = e > 0.0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
        ll += response[i] * e - log1pexp;
    }
    return ll;
}

GlmFit logistic_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                    double tolerance, int max_iterations) {
    const auto n = design.rows();
    const auto p = design.cols();
    if (n != response.size()) {
        throw DataError("logistic_fit: design/response length mismatch");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (response[i] != 0.0 && response[i] != 1.0) {
            throw DataError("logistic_fit: response must be 0/1");
        }
    }
    check_rank(design);

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    std::string trace;
    for (int iter = 1; iter <= max_iterations; ++iter) {
        const Eigen::VectorXd eta = (design * beta).cwiseMax(-30.0).cwiseMin(30.0);
        Eigen::VectorXd mu(n);
        Eigen::VectorXd w(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            mu[i] = dist::expit(eta[i]);
            w[i] = mu[i] * (1.0 - mu[i]);
        }
        const Eigen::VectorXd score = design.transpose() * (response - mu);
        const double score_norm = score.cwiseAbs().maxCoeff();
        if (score_norm < tolerance) {
            // A vanishing score with every fitted probability pinned to the
            // correct side means the likelihood is maximized at infinity:
            // the classes are (quasi-)separated, not genuinely fitted.
            bool all_pinned = true;
            for (Eigen::Index i = 0; i < n && all_pinned; ++i) {
                const double correct = response[i] == 1.0 ? mu[i] : 1.0 - mu[i];
                if (correct < 1.0 - 1e-6) all_pinned = false;
            }
            if (all_pinned) {
                throw SeparationError(
                    "logistic_fit: perfect classification (separation)\n" + trace, iter);
            }
            const Eigen::MatrixXd fisher = design.transpose() * w.asDiagonal() * design;
            GlmFit fit;
            fit.coefficients = beta;
            fit.covariance = spd_inverse(fisher);
            fit.converged = true;
            fit.iterations = iter - 1;
            return fit;
        }
        const Eigen::MatrixXd fisher = design.transpose() * w.asDiagonal() * design;
        beta += spd_inverse(fisher) * score;
        trace += "iter " + std::to_string(iter) + ": |score|=" + std::to_string(score_norm) +
                 " |beta|=" + std::to_string(beta.norm()) + "\n";
        if (beta.norm() > 1e3) {
            throw SeparationError("logistic_fit: coefficient norm diverged (separation?)\n" + trace,
                                  iter);
        }
    }
    throw SeparationError("logistic_fit: no convergence in " + std::to_string(max_iterations) +
                              " iterations\n" + trace,
                          max_iterations);
}

} // namespace rdlab
