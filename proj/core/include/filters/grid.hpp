#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "filters/kalman.hpp"
#include "filters/measures.hpp"
#include "filters/models.hpp"

namespace filters {

/// Uniform 1D grid description.
struct GridSpec {
    double lo = 0.0;
    double hi = 0.0;
    int n = 0;
};

/// Probability density tabulated on a uniform 1D grid, normalized so the
/// trapezoid-rule integral is 1. `mass_lost()` records how much mass the
/// last normalization discarded (off-grid tails plus quadrature defect).
class GridDensity {
public:
    GridDensity(double lo, double hi, Eigen::VectorXd values);

    int n() const { return static_cast<int>(values_.size()); }
    double lo() const { return lo_; }
    double hi() const { return hi_; }
    double step() const { return (hi_ - lo_) / (n() - 1); }
    double node(int i) const { return lo_ + i * step(); }
    Eigen::VectorXd nodes() const;
    const Eigen::VectorXd& values() const { return values_; }
    double mass_lost() const { return mass_lost_; }

    /// Trapezoid integral of the stored values (1 after normalization up to
    /// round-off; exposed so the invariant can be asserted).
    double integral() const;

private:
    double lo_;
    double hi_;
    Eigen::VectorXd values_;
    double mass_lost_ = 0.0;
};

/// Mean and variance of a 1D grid density by trapezoid quadrature.
struct GridMoments {
    double mean = 0.0;
    double var = 0.0;
};
GridMoments grid_moments(const GridDensity& p);

/// Tabulates a 1D Gaussian density on the given grid and normalizes.
GridDensity tabulate(const GaussianMeasure& g, const GridSpec& spec);

/// Re-interpolates a density onto a new grid by monotone cubic (Fritsch-
/// Carlson) interpolation; values outside the old support are zero.
GridDensity regrid(const GridDensity& p, const GridSpec& spec);

/// Grid that covers the one-step-ahead predicted density: mean and std of
/// the pushforward through Psi plus the Sigma noise, widened by `span`
/// standard deviations.
GridSpec predicted_grid_spec(const GridDensity& p, const StateSpaceModel& model, double span,
                             int n);

/// Applies the prediction operator by trapezoid quadrature of the Gaussian
/// transition kernel. Output nodes default to predicted_grid_spec with the
/// input's resolution. Supports d = K = 1 models only. Fails if more than
/// 1e-3 of the mass falls off the output grid.
GridDensity grid_predict(const GridDensity& p, const StateSpaceModel& model,
                         std::optional<GridSpec> out_spec = std::nullopt, int threads = 1);

/// Bayes update on the grid: pointwise multiplication by the observation
/// likelihood followed by renormalization. Fails with a likelihood-underflow
/// error when the normalizer drops below 1e-300.
GridDensity grid_update(const GridDensity& p, const Eigen::VectorXd& y,
                        const StateSpaceModel& model);

struct GridFilterParams {
    int n_points = 4001;
    double span = 10.0;
    int threads = 1;
};

/// The true-filter oracle for d = K = 1: tabulates the initial law, then
/// alternates grid_predict and grid_update, re-centering the grid on the
/// running mean +- span * std each step. Returns mu_0..mu_N.
std::vector<GridDensity> grid_filter(const StateSpaceModel& model, const DataRecord& data,
                                     const GridFilterParams& params = {});

/// Moment-matching Gaussian projection of a 1D grid density.
GaussianMeasure gaussian_project(const GridDensity& p);

/// Probability density tabulated on a uniform 2D grid (state coordinate u by
/// data coordinate y), normalized by the 2D trapezoid rule.
class GridDensity2d {
public:
    GridDensity2d(GridSpec u, GridSpec y, Eigen::MatrixXd values);

    const GridSpec& u() const { return u_; }
    const GridSpec& y() const { return y_; }
    double u_node(int i) const { return u_.lo + i * u_step(); }
    double y_node(int j) const { return y_.lo + j * y_step(); }
    double u_step() const { return (u_.hi - u_.lo) / (u_.n - 1); }
    double y_step() const { return (y_.hi - y_.lo) / (y_.n - 1); }
    const Eigen::MatrixXd& values() const { return values_; }
    double mass_lost() const { return mass_lost_; }
    double integral() const;

private:
    GridSpec u_;
    GridSpec y_;
    Eigen::MatrixXd values_; // (u_.n rows) x (y_.n cols)
    double mass_lost_ = 0.0;
};

/// Lifts a predicted 1D density to the joint (state, data) space using the
/// closed-form Gaussian observation kernel: rho(u, y) = N(y; h(u), Gamma) p(u).
/// The y grid covers the data marginal's mean +- span * std with n_y nodes.
GridDensity2d lift_to_joint(const GridDensity& predicted, const StateSpaceModel& model,
                            int n_y, double span);

/// Tabulates a 2D Gaussian on the given joint grid (not renormalized; the
/// off-grid mass of a +-10 sigma window is negligible).
GridDensity2d tabulate(const GaussianMeasure& g, const GridSpec& u, const GridSpec& y);

/// Moment-matching Gaussian projection of a joint grid density.
GaussianMeasure gaussian_project(const GridDensity2d& p);

} // namespace filters
