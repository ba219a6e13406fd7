#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "filters/kalman.hpp"
#include "filters/measures.hpp"
#include "filters/models.hpp"

namespace filters {

/// Equal-weight ensemble of states.
struct Ensemble {
    Eigen::MatrixXd members; // d x J
    int step = 0;

    EmpiricalMeasure measure() const { return EmpiricalMeasure(members); }
};

/// Paired forecast states and perturbed observations (v_hat_j, y_hat_j).
struct JointEnsemble {
    Eigen::MatrixXd state; // d x J
    Eigen::MatrixXd obs;   // K x J
};

/// How C^yy is assembled from the forecast ensemble.
///
/// empirical_noise: both covariances are the plain empirical covariances of
/// the (v_hat, y_hat) pairs, so the observation noise covariance is learned
/// from the drawn perturbations (finite-J cross terms included).
///
/// direct_gamma: C^vy is the empirical cross-covariance of v_hat with
/// h(v_hat) and C^yy = C^hh + Gamma, with Gamma supplied directly.
enum class GainVariant { empirical_noise, direct_gamma };

std::string to_string(GainVariant variant);
GainVariant gain_variant_from_string(const std::string& name);

struct GainSpec {
    GainVariant variant = GainVariant::direct_gamma;
    Eigen::MatrixXd gain; // d x K
    Eigen::MatrixXd Cvy;  // d x K
    Eigen::MatrixXd Cyy;  // K x K
};

/// Assembles the Kalman-style gain C^vy (C^yy)^-1 from a joint forecast
/// ensemble via a Cholesky solve (never an explicit inverse).
GainSpec enkf_gain(const JointEnsemble& joint, const StateSpaceModel& model,
                   GainVariant variant);

/// Deterministic analysis core given the noise draws: propagates members,
/// forms perturbed observations, applies the common gain to every member.
/// Exposed so tests can pin the noise.
Ensemble enkf_step_given_noise(const Ensemble& e, const Eigen::VectorXd& y,
                               const StateSpaceModel& model, GainVariant variant,
                               const Eigen::MatrixXd& state_noise,
                               const Eigen::MatrixXd& obs_noise);

/// One assimilation step of the ensemble Kalman filter. Per-member noise
/// comes from per-member substreams of `rng`.
Ensemble enkf_step(const Ensemble& e, const Eigen::VectorXd& y, const StateSpaceModel& model,
                   GainVariant variant, const RngStream& rng);

/// Full filter pass; returns ensembles for steps 0..N. Step 0 is an i.i.d.
/// sample of the initial law.
std::vector<Ensemble> enkf_filter(const StateSpaceModel& model, const DataRecord& data,
                                  int n_members, GainVariant variant, const RngStream& rng);

/// Applies the affine transport map v + K (y_obs - y) to every atom of the
/// joint ensemble, with K computed from the ensemble's own covariances.
EmpiricalMeasure transport_apply(const JointEnsemble& joint, const Eigen::VectorXd& y_obs);

/// Exact Gaussian pushforward of the transport map: the joint N(m, C) on
/// R^(d+K) maps to N(m_v + K (y_obs - m_y), C_vv - K C_vy^T).
GaussianMeasure transport_apply(const GaussianMeasure& joint, int dim_state,
                                const Eigen::VectorXd& y_obs);

/// Mean-field ensemble Kalman recursion in closed form, available when both
/// model maps are linear: Gaussian prediction, exact joint formation under
/// the observation kernel, then the Gaussian transport. On these models it
/// reproduces the Kalman filter exactly.
std::vector<KalmanState> mf_enkf_gaussian_filter(const StateSpaceModel& model,
                                                 const DataRecord& data);

} // namespace filters
