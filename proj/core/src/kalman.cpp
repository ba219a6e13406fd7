#include "filters/kalman.hpp"

namespace filters {

KalmanState kalman_predict(const KalmanState& s, const StateSpaceModel& model) {
    detail::require(model.psi_linear, ErrorCode::unsupported_model,
                    "kalman_predict requires linear dynamics");
    KalmanState out;
    out.mean = model.A * s.mean;
    out.cov = model.A * s.cov * model.A.transpose() + model.Sigma;
    out.cov = 0.5 * (out.cov + out.cov.transpose());
    return out;
}

KalmanState kalman_update(const KalmanState& s, const Eigen::VectorXd& y,
                          const StateSpaceModel& model) {
    detail::require(model.h_linear, ErrorCode::unsupported_model,
                    "kalman_update requires a linear observation map");
    detail::require(y.size() == model.dim_obs, ErrorCode::dimension_mismatch,
                    "observation dimension mismatch");
    const Eigen::MatrixXd& H = model.H;
    Eigen::MatrixXd S = H * s.cov * H.transpose() + model.Gamma;
    S = 0.5 * (S + S.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(S);
    detail::require(llt.info() == Eigen::Success, ErrorCode::numerical,
                    "innovation covariance is not invertible");
    // K = C H^T S^-1, computed through the factorization of S.
    const Eigen::MatrixXd gain = llt.solve(H * s.cov).transpose();

    KalmanState out;
    out.mean = s.mean + gain * (y - H * s.mean);
    out.cov = (Eigen::MatrixXd::Identity(s.cov.rows(), s.cov.cols()) - gain * H) * s.cov;
    out.cov = 0.5 * (out.cov + out.cov.transpose());
    return out;
}

std::vector<KalmanState> kalman_filter(const StateSpaceModel& model, const DataRecord& data) {
    require_filterable(model);
    std::vector<KalmanState> out;
    out.reserve(data.horizon() + 1);
    out.push_back({model.init.mean(), model.init.cov()});
    for (int n = 0; n < data.horizon(); ++n) {
        KalmanState next =
            kalman_update(kalman_predict(out.back(), model), data.observations[n], model);
        Eigen::LLT<Eigen::MatrixXd> llt(next.cov);
        detail::require(llt.info() == Eigen::Success, ErrorCode::numerical,
                        "posterior covariance lost positive definiteness");
        out.push_back(std::move(next));
    }
    return out;
}

} // namespace filters
