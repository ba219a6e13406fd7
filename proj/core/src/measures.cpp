#include "filters/measures.hpp"

#include <cmath>
#include <numbers>

namespace filters {

namespace {
constexpr double kPsdRelTol = 1e-10;
constexpr double kWeightSumTol = 1e-12;
} // namespace

GaussianMeasure::GaussianMeasure(Eigen::VectorXd mean, Eigen::MatrixXd cov)
    : mean_(std::move(mean)) {
    const auto r = mean_.size();
    detail::require(cov.rows() == r && cov.cols() == r, ErrorCode::dimension_mismatch,
                    "covariance shape does not match mean dimension");
    cov_ = 0.5 * (cov + cov.transpose());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov_);
    detail::require(eig.info() == Eigen::Success, ErrorCode::numerical,
                    "eigendecomposition of covariance failed");
    Eigen::VectorXd lambda = eig.eigenvalues();
    const double lambda_max = lambda.size() > 0 ? lambda.maxCoeff() : 0.0;
    const double floor = -kPsdRelTol * std::max(lambda_max, 0.0);
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        if (lambda[i] < floor) {
            detail::fail(ErrorCode::not_positive_definite,
                         "covariance has eigenvalue " + std::to_string(lambda[i]) +
                             " below the PSD tolerance");
        }
        if (lambda[i] < 0.0) {
            lambda[i] = 0.0;
            clipped_ = true;
        }
    }
    if (clipped_) {
        cov_ = eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
        cov_ = 0.5 * (cov_ + cov_.transpose());
    }
    factor_ = eig.eigenvectors() * lambda.cwiseSqrt().asDiagonal();

    Eigen::LLT<Eigen::MatrixXd> llt(cov_);
    if (llt.info() == Eigen::Success) {
        chol_ = llt.matrixL();
        double log_det = 0.0;
        for (Eigen::Index i = 0; i < chol_.rows(); ++i) log_det += 2.0 * std::log(chol_(i, i));
        if (std::isfinite(log_det)) {
            log_norm_const_ =
                -0.5 * (static_cast<double>(r) * std::log(2.0 * std::numbers::pi) + log_det);
            has_density_ = true;
        }
    }
}

GaussianMeasure::GaussianMeasure(double mean, double var)
    : GaussianMeasure(Eigen::VectorXd::Constant(1, mean), Eigen::MatrixXd::Constant(1, 1, var)) {}

double GaussianMeasure::log_pdf(const Eigen::VectorXd& v) const {
    detail::require(v.size() == mean_.size(), ErrorCode::dimension_mismatch,
                    "point dimension does not match measure dimension");
    detail::require(has_density_, ErrorCode::not_positive_definite,
                    "density requested for a singular Gaussian");
    const Eigen::VectorXd z =
        chol_.triangularView<Eigen::Lower>().solve(Eigen::VectorXd(v - mean_));
    return log_norm_const_ - 0.5 * z.squaredNorm();
}

double GaussianMeasure::pdf(const Eigen::VectorXd& v) const { return std::exp(log_pdf(v)); }

EmpiricalMeasure::EmpiricalMeasure(Eigen::MatrixXd particles)
    : particles_(std::move(particles)) {
    detail::require(particles_.cols() >= 1, ErrorCode::degenerate_ensemble,
                    "empirical measure needs at least one particle");
    weights_ = Eigen::VectorXd::Constant(particles_.cols(), 1.0 / particles_.cols());
}

EmpiricalMeasure::EmpiricalMeasure(Eigen::MatrixXd particles, Eigen::VectorXd weights)
    : particles_(std::move(particles)), weights_(std::move(weights)) {
    detail::require(particles_.cols() >= 1, ErrorCode::degenerate_ensemble,
                    "empirical measure needs at least one particle");
    detail::require(weights_.size() == particles_.cols(), ErrorCode::dimension_mismatch,
                    "weight count does not match particle count");
    detail::require(weights_.minCoeff() >= 0.0, ErrorCode::config,
                    "weights must be nonnegative");
    detail::require(std::abs(weights_.sum() - 1.0) <= kWeightSumTol, ErrorCode::config,
                    "weights must sum to one within 1e-12");
}

EmpiricalMeasure sample(const GaussianMeasure& g, int n, RngStream rng) {
    detail::require(n >= 1, ErrorCode::config, "sample size must be at least 1");
    const int r = g.dim();
    Eigen::MatrixXd particles(r, n);
    Eigen::VectorXd z(r);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < r; ++i) z[i] = rng.normal();
        particles.col(j) = g.mean() + g.cov_factor() * z;
    }
    return EmpiricalMeasure(std::move(particles));
}

Eigen::VectorXd empirical_mean(const EmpiricalMeasure& m) {
    return m.particles() * m.weights();
}

Moments empirical_moments(const EmpiricalMeasure& m) {
    detail::require(m.size() >= 2, ErrorCode::degenerate_ensemble,
                    "covariance of an empirical measure needs at least two particles");
    Moments out;
    out.mean = empirical_mean(m);
    const Eigen::MatrixXd centered = m.particles().colwise() - out.mean;
    out.cov = centered * m.weights().asDiagonal() * centered.transpose();
    out.cov = 0.5 * (out.cov + out.cov.transpose());
    return out;
}

GaussianMeasure gaussian_project(const EmpiricalMeasure& m) {
    Moments mom = empirical_moments(m);
    return GaussianMeasure(std::move(mom.mean), std::move(mom.cov));
}

} // namespace filters
