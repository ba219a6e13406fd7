#pragma once

#include <vector>

#include <Eigen/Dense>

#include "filters/models.hpp"

namespace filters {

/// Mean and covariance of a Gaussian filtering state.
struct KalmanState {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

/// Prediction through linear dynamics: (m, C) -> (A m, A C A^T + Sigma).
/// Requires psi_linear.
KalmanState kalman_predict(const KalmanState& s, const StateSpaceModel& model);

/// Bayes update for a linear observation: S = H C H^T + Gamma,
/// K = C H^T S^-1, m' = m + K (y - H m), C' = (I - K H) C (symmetrized).
/// Requires h_linear.
KalmanState kalman_update(const KalmanState& s, const Eigen::VectorXd& y,
                          const StateSpaceModel& model);

/// Full filter pass; returns the posterior sequence mu_0..mu_N. Covariances
/// are SPD-checked at every step.
std::vector<KalmanState> kalman_filter(const StateSpaceModel& model, const DataRecord& data);

} // namespace filters
