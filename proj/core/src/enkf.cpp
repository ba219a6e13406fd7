#include "filters/enkf.hpp"

namespace filters {

namespace {
constexpr std::uint64_t kEnkfInitTag = 0;

/// Population covariance of the columns of x against the columns of y.
Eigen::MatrixXd cross_cov(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    const double j = static_cast<double>(x.cols());
    const Eigen::MatrixXd xc = x.colwise() - Eigen::VectorXd(x.rowwise().mean());
    const Eigen::MatrixXd yc = y.colwise() - Eigen::VectorXd(y.rowwise().mean());
    return xc * yc.transpose() / j;
}

Eigen::MatrixXd solve_gain(const Eigen::MatrixXd& cvy, Eigen::MatrixXd cyy) {
    cyy = 0.5 * (cyy + cyy.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(cyy);
    detail::require(llt.info() == Eigen::Success, ErrorCode::singular_covariance,
                    "C^yy is singular; the gain solve failed");
    return llt.solve(cvy.transpose()).transpose();
}

Eigen::MatrixXd map_columns(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                            const Eigen::MatrixXd& x, int out_rows) {
    Eigen::MatrixXd out(out_rows, x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) out.col(j) = f(x.col(j));
    return out;
}
} // namespace

std::string to_string(GainVariant variant) {
    return variant == GainVariant::empirical_noise ? "empirical-noise" : "direct-gamma";
}

GainVariant gain_variant_from_string(const std::string& name) {
    if (name == "empirical-noise") return GainVariant::empirical_noise;
    if (name == "direct-gamma") return GainVariant::direct_gamma;
    detail::fail(ErrorCode::config, "unknown gain variant '" + name + "'");
}

GainSpec enkf_gain(const JointEnsemble& joint, const StateSpaceModel& model,
                   GainVariant variant) {
    const auto j_count = joint.state.cols();
    detail::require(j_count >= 2, ErrorCode::degenerate_ensemble,
                    "gain estimation needs at least two members");
    detail::require(joint.obs.cols() == j_count, ErrorCode::dimension_mismatch,
                    "joint ensemble state/observation member counts differ");

    GainSpec spec;
    spec.variant = variant;
    if (variant == GainVariant::empirical_noise) {
        spec.Cvy = cross_cov(joint.state, joint.obs);
        spec.Cyy = cross_cov(joint.obs, joint.obs);
    } else {
        const Eigen::MatrixXd h_of_state = map_columns(model.h, joint.state, model.dim_obs);
        spec.Cvy = cross_cov(joint.state, h_of_state);
        spec.Cyy = cross_cov(h_of_state, h_of_state) + model.Gamma;
    }
    spec.gain = solve_gain(spec.Cvy, spec.Cyy);
    return spec;
}

Ensemble enkf_step_given_noise(const Ensemble& e, const Eigen::VectorXd& y,
                               const StateSpaceModel& model, GainVariant variant,
                               const Eigen::MatrixXd& state_noise,
                               const Eigen::MatrixXd& obs_noise) {
    const auto j_count = e.members.cols();
    detail::require(j_count >= 2, ErrorCode::degenerate_ensemble,
                    "ensemble Kalman filter needs at least two members");
    detail::require(y.size() == model.dim_obs, ErrorCode::dimension_mismatch,
                    "observation dimension mismatch");
    detail::require(state_noise.rows() == model.dim_state && state_noise.cols() == j_count &&
                        obs_noise.rows() == model.dim_obs && obs_noise.cols() == j_count,
                    ErrorCode::dimension_mismatch, "noise block shape mismatch");

    JointEnsemble joint;
    joint.state = map_columns(model.psi, e.members, model.dim_state) + state_noise;
    joint.obs = map_columns(model.h, joint.state, model.dim_obs) + obs_noise;

    const GainSpec gain = enkf_gain(joint, model, variant);

    Ensemble out;
    out.step = e.step + 1;
    out.members = joint.state + gain.gain * ((-joint.obs).colwise() + y);
    return out;
}

Ensemble enkf_step(const Ensemble& e, const Eigen::VectorXd& y, const StateSpaceModel& model,
                   GainVariant variant, const RngStream& rng) {
    require_filterable(model);
    const auto j_count = e.members.cols();
    Eigen::MatrixXd state_noise(model.dim_state, j_count);
    Eigen::MatrixXd obs_noise(model.dim_obs, j_count);
    Eigen::VectorXd z_state(model.dim_state);
    Eigen::VectorXd z_obs(model.dim_obs);
    for (Eigen::Index j = 0; j < j_count; ++j) {
        RngStream stream = rng.substream(static_cast<std::uint64_t>(j));
        for (Eigen::Index i = 0; i < z_state.size(); ++i) z_state[i] = stream.normal();
        for (Eigen::Index i = 0; i < z_obs.size(); ++i) z_obs[i] = stream.normal();
        state_noise.col(j) = model.sigma_chol * z_state;
        obs_noise.col(j) = model.gamma_chol * z_obs;
    }
    return enkf_step_given_noise(e, y, model, variant, state_noise, obs_noise);
}

std::vector<Ensemble> enkf_filter(const StateSpaceModel& model, const DataRecord& data,
                                  int n_members, GainVariant variant, const RngStream& rng) {
    require_filterable(model);
    detail::require(n_members >= 2, ErrorCode::degenerate_ensemble,
                    "ensemble Kalman filter needs at least two members");
    std::vector<Ensemble> out;
    out.reserve(data.horizon() + 1);
    out.push_back({sample(model.init, n_members, rng.substream(kEnkfInitTag)).particles(), 0});
    for (int n = 0; n < data.horizon(); ++n) {
        out.push_back(
            enkf_step(out.back(), data.observations[n], model, variant, rng.substream(n + 1)));
    }
    return out;
}

EmpiricalMeasure transport_apply(const JointEnsemble& joint, const Eigen::VectorXd& y_obs) {
    detail::require(joint.state.cols() >= 2, ErrorCode::degenerate_ensemble,
                    "transport of an empirical joint needs at least two atoms");
    detail::require(joint.obs.rows() == y_obs.size(), ErrorCode::dimension_mismatch,
                    "observation dimension mismatch");
    const Eigen::MatrixXd cvy = cross_cov(joint.state, joint.obs);
    const Eigen::MatrixXd cyy = cross_cov(joint.obs, joint.obs);
    const Eigen::MatrixXd gain = solve_gain(cvy, cyy);
    return EmpiricalMeasure(joint.state + gain * ((-joint.obs).colwise() + y_obs));
}

GaussianMeasure transport_apply(const GaussianMeasure& joint, int dim_state,
                                const Eigen::VectorXd& y_obs) {
    const int total = joint.dim();
    const int dim_obs = total - dim_state;
    detail::require(dim_state >= 1 && dim_obs >= 1, ErrorCode::dimension_mismatch,
                    "joint Gaussian must span state and data blocks");
    detail::require(y_obs.size() == dim_obs, ErrorCode::dimension_mismatch,
                    "observation dimension mismatch");

    const Eigen::VectorXd mv = joint.mean().head(dim_state);
    const Eigen::VectorXd my = joint.mean().tail(dim_obs);
    const Eigen::MatrixXd cvv = joint.cov().topLeftCorner(dim_state, dim_state);
    const Eigen::MatrixXd cvy = joint.cov().topRightCorner(dim_state, dim_obs);
    const Eigen::MatrixXd cyy = joint.cov().bottomRightCorner(dim_obs, dim_obs);

    const Eigen::MatrixXd gain = solve_gain(cvy, cyy);
    Eigen::MatrixXd cov = cvv - gain * cvy.transpose();
    return GaussianMeasure(mv + gain * (y_obs - my), std::move(cov));
}

std::vector<KalmanState> mf_enkf_gaussian_filter(const StateSpaceModel& model,
                                                 const DataRecord& data) {
    require_filterable(model);
    detail::require(model.psi_linear && model.h_linear, ErrorCode::unsupported_model,
                    "the closed-form mean-field recursion requires linear psi and h; "
                    "approximate nonlinear models with enkf_filter at large J");

    const int d = model.dim_state;
    const int k = model.dim_obs;
    std::vector<KalmanState> out;
    out.reserve(data.horizon() + 1);
    out.push_back({model.init.mean(), model.init.cov()});

    for (int n = 0; n < data.horizon(); ++n) {
        const KalmanState predicted = kalman_predict(out.back(), model);

        // Joint law of (v, h(v) + eta) for Gaussian v and linear h.
        Eigen::VectorXd mean(d + k);
        mean.head(d) = predicted.mean;
        mean.tail(k) = model.H * predicted.mean;
        Eigen::MatrixXd cov(d + k, d + k);
        cov.topLeftCorner(d, d) = predicted.cov;
        cov.topRightCorner(d, k) = predicted.cov * model.H.transpose();
        cov.bottomLeftCorner(k, d) = model.H * predicted.cov;
        cov.bottomRightCorner(k, k) = model.H * predicted.cov * model.H.transpose() + model.Gamma;

        const GaussianMeasure posterior = transport_apply(
            GaussianMeasure(std::move(mean), std::move(cov)), d, data.observations[n]);
        out.push_back({posterior.mean(), posterior.cov()});
    }
    return out;
}

} // namespace filters
