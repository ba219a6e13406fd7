#pragma once

#include <Eigen/Dense>

#include "filters/errors.hpp"
#include "filters/rng.hpp"

namespace filters {

struct Moments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

/// Gaussian measure N(mean, cov) on R^r.
///
/// The covariance is symmetrized on construction and checked for positive
/// semi-definiteness: eigenvalues in [-1e-10 * lambda_max, 0) are clipped to
/// zero (the `clipped()` flag records this), anything more negative throws.
class GaussianMeasure {
public:
    GaussianMeasure(Eigen::VectorXd mean, Eigen::MatrixXd cov);

    /// 1D convenience.
    GaussianMeasure(double mean, double var);

    int dim() const { return static_cast<int>(mean_.size()); }
    const Eigen::VectorXd& mean() const { return mean_; }
    const Eigen::MatrixXd& cov() const { return cov_; }

    /// Square-root factor: cov = factor * factor^T. Zero columns where the
    /// covariance is rank deficient.
    const Eigen::MatrixXd& cov_factor() const { return factor_; }

    /// True if PSD repair clipped at least one small negative eigenvalue.
    bool clipped() const { return clipped_; }

    /// Density at a point. Requires a nonsingular covariance.
    double pdf(const Eigen::VectorXd& v) const;
    double log_pdf(const Eigen::VectorXd& v) const;

private:
    Eigen::VectorXd mean_;
    Eigen::MatrixXd cov_;
    Eigen::MatrixXd factor_;
    bool clipped_ = false;

    // Cholesky of cov for density evaluation; empty when cov is singular.
    Eigen::MatrixXd chol_;
    double log_norm_const_ = 0.0;
    bool has_density_ = false;
};

/// Weighted empirical measure sum_j w_j delta_{v_j} on R^r.
///
/// Particles are stored one per column. Weights must be nonnegative and sum
/// to one within 1e-12; omit them for the equal-weight case.
class EmpiricalMeasure {
public:
    explicit EmpiricalMeasure(Eigen::MatrixXd particles);
    EmpiricalMeasure(Eigen::MatrixXd particles, Eigen::VectorXd weights);

    int dim() const { return static_cast<int>(particles_.rows()); }
    int size() const { return static_cast<int>(particles_.cols()); }
    const Eigen::MatrixXd& particles() const { return particles_; }
    const Eigen::VectorXd& weights() const { return weights_; }
    Eigen::VectorXd particle(int j) const { return particles_.col(j); }

private:
    Eigen::MatrixXd particles_;
    Eigen::VectorXd weights_;
};

/// n i.i.d. draws from g with equal weights.
EmpiricalMeasure sample(const GaussianMeasure& g, int n, RngStream rng);

/// Weighted mean (requires at least one particle).
Eigen::VectorXd empirical_mean(const EmpiricalMeasure& m);

/// Weighted mean and population covariance sum_j w_j (v_j - m)(v_j - m)^T.
/// Requires at least two particles.
Moments empirical_moments(const EmpiricalMeasure& m);

/// Moment-matching projection onto Gaussians: N(mean_pi, cov_pi).
GaussianMeasure gaussian_project(const EmpiricalMeasure& m);

} // namespace filters
