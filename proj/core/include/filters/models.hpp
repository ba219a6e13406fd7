#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "filters/measures.hpp"
#include "filters/rng.hpp"

namespace filters {

/// One filtering problem: dynamics Psi with noise covariance Sigma,
/// observation map h with noise covariance Gamma, Gaussian initial law.
///
/// `sigma_zero` / `gamma_zero` turn the corresponding noise off for testing
/// the deterministic parts of the maps; every filter rejects models carrying
/// these flags because Gamma^-1 enters weights and gains.
struct StateSpaceModel {
    int dim_state = 0;
    int dim_obs = 0;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> psi;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> h;
    Eigen::MatrixXd Sigma;
    Eigen::MatrixXd Gamma;
    GaussianMeasure init{0.0, 1.0};

    bool psi_linear = false;
    Eigen::MatrixXd A; // valid when psi_linear
    bool h_linear = false;
    Eigen::MatrixXd H; // valid when h_linear

    bool sigma_zero = false;
    bool gamma_zero = false;

    // Reporting metadata.
    std::string name = "custom";
    double theta = 0.0;
    double psi_sup = std::numeric_limits<double>::infinity();
    double h_sup = std::numeric_limits<double>::infinity();
    double h_lip = std::numeric_limits<double>::infinity();

    // Cholesky factors, cached at construction (zero matrix when the
    // matching *_zero flag is set).
    Eigen::MatrixXd sigma_chol;
    Eigen::MatrixXd gamma_chol;

    /// Squared observation-noise Mahalanobis norm |y - h(v)|^2_Gamma.
    double obs_mahalanobis2(const Eigen::VectorXd& residual) const;
};

/// Validates dimensions and SPD noise covariances and fills in the cached
/// factors. Every model must pass through here before use.
StateSpaceModel finalize_model(StateSpaceModel model);

/// Throws unless the model is usable by a filter (both noises present).
void require_filterable(const StateSpaceModel& model);

/// Truth trajectory v_0..v_N together with the observations y_1..y_N made
/// from it; observations[i] was generated from truth[i + 1].
struct DataRecord {
    std::vector<Eigen::VectorXd> truth;
    std::vector<Eigen::VectorXd> observations;
    std::uint64_t seed = 0;

    int horizon() const { return static_cast<int>(observations.size()); }
};

/// One step of the state dynamics: Psi(v) + xi, xi ~ N(0, Sigma).
Eigen::VectorXd step_state(const StateSpaceModel& model, const Eigen::VectorXd& v, RngStream& rng);

/// One observation: h(v) + eta, eta ~ N(0, Gamma).
Eigen::VectorXd observe(const StateSpaceModel& model, const Eigen::VectorXd& v, RngStream& rng);

/// Simulates truth and data over N steps. The initial draw, the state noise
/// and the observation noise come from distinct substreams of `rng`.
DataRecord simulate(const StateSpaceModel& model, int n_steps, const RngStream& rng);

StateSpaceModel make_linear1d(double a, double sigma2, double gamma2,
                              double init_mean, double init_var);

/// Psi(v) = a * Q v with Q a fixed orthogonal matrix (spectral radius a);
/// h observes the first `dim_obs` coordinates.
StateSpaceModel make_linear_nd(int dim_state, int dim_obs, double a, double sigma2,
                               double gamma2, double init_var);

/// Psi(v) = alpha * sin(v), h(v) = beta * tanh(v), elementwise. Both maps are
/// bounded with known sup norms.
StateSpaceModel make_sin_tanh(double alpha, double beta, double sigma2, double gamma2,
                              double init_mean, double init_var);

/// Psi(v) = a v + theta sin(v), h(v) = v + theta tanh(v); linear-Gaussian at
/// theta = 0 (the linear flags are set in that case).
StateSpaceModel make_interpolated(double theta, double a, double sigma2, double gamma2,
                                  double init_mean, double init_var);

/// Dispatch by name ("linear1d", "linearNd", "sin-tanh", "interpolated")
/// with parameter defaults suitable for the experiment harness. Unknown
/// names or invalid parameters throw a config error.
StateSpaceModel builtin_model(const std::string& name,
                              const std::map<std::string, double>& params);

} // namespace filters
