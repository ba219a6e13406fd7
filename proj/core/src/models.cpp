#include "filters/models.hpp"

#include <cmath>

namespace filters {

namespace {

// Substream tags for simulate().
constexpr std::uint64_t kInitTag = 0;
constexpr std::uint64_t kStateNoiseTag = 1;
constexpr std::uint64_t kObsNoiseTag = 2;

Eigen::MatrixXd spd_chol_or_zero(const Eigen::MatrixXd& m, bool zero_flag, const char* label) {
    if (zero_flag) return Eigen::MatrixXd::Zero(m.rows(), m.cols());
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    detail::require(llt.info() == Eigen::Success, ErrorCode::not_positive_definite,
                    std::string(label) + " must be strictly positive definite");
    return llt.matrixL();
}

Eigen::VectorXd draw_noise(const Eigen::MatrixXd& chol, RngStream& rng) {
    Eigen::VectorXd z(chol.rows());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
    return chol * z;
}

double param_or(const std::map<std::string, double>& params, const std::string& key,
                double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

/// Deterministic orthogonal matrix from the QR factorization of a fixed
/// pseudorandom matrix, with the R diagonal sign fixed so the result does
/// not depend on LAPACK conventions.
Eigen::MatrixXd fixed_orthogonal(int n) {
    RngStream rng(0x0a11ce5u, 17);
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < n; ++i)
        if (r(i, i) < 0) q.col(i) *= -1.0;
    return q;
}

} // namespace

double StateSpaceModel::obs_mahalanobis2(const Eigen::VectorXd& residual) const {
    const Eigen::VectorXd z = gamma_chol.triangularView<Eigen::Lower>().solve(residual);
    return z.squaredNorm();
}

StateSpaceModel finalize_model(StateSpaceModel model) {
    detail::require(model.dim_state >= 1 && model.dim_obs >= 1, ErrorCode::config,
                    "model dimensions must be positive");
    detail::require(static_cast<bool>(model.psi) && static_cast<bool>(model.h),
                    ErrorCode::config, "model maps psi and h must be set");
    detail::require(model.Sigma.rows() == model.dim_state &&
                        model.Sigma.cols() == model.dim_state,
                    ErrorCode::dimension_mismatch, "Sigma shape does not match state dimension");
    detail::require(model.Gamma.rows() == model.dim_obs && model.Gamma.cols() == model.dim_obs,
                    ErrorCode::dimension_mismatch, "Gamma shape does not match data dimension");
    detail::require(model.init.dim() == model.dim_state, ErrorCode::dimension_mismatch,
                    "initial law dimension does not match state dimension");
    model.sigma_chol = spd_chol_or_zero(model.Sigma, model.sigma_zero, "Sigma");
    model.gamma_chol = spd_chol_or_zero(model.Gamma, model.gamma_zero, "Gamma");
    return model;
}

void require_filterable(const StateSpaceModel& model) {
    detail::require(!model.sigma_zero && !model.gamma_zero, ErrorCode::config,
                    "filters require strictly positive definite noise covariances; "
                    "the noise-free flags are for testing deterministic maps only");
}

Eigen::VectorXd step_state(const StateSpaceModel& model, const Eigen::VectorXd& v,
                           RngStream& rng) {
    detail::require(v.size() == model.dim_state, ErrorCode::dimension_mismatch,
                    "state vector dimension mismatch");
    Eigen::VectorXd out = model.psi(v);
    if (!model.sigma_zero) out += draw_noise(model.sigma_chol, rng);
    return out;
}

Eigen::VectorXd observe(const StateSpaceModel& model, const Eigen::VectorXd& v, RngStream& rng) {
    detail::require(v.size() == model.dim_state, ErrorCode::dimension_mismatch,
                    "state vector dimension mismatch");
    Eigen::VectorXd out = model.h(v);
    if (!model.gamma_zero) out += draw_noise(model.gamma_chol, rng);
    return out;
}

DataRecord simulate(const StateSpaceModel& model, int n_steps, const RngStream& rng) {
    detail::require(n_steps >= 1, ErrorCode::config, "horizon must be at least 1");
    RngStream init_rng = rng.substream(kInitTag);
    RngStream state_rng = rng.substream(kStateNoiseTag);
    RngStream obs_rng = rng.substream(kObsNoiseTag);

    DataRecord record;
    record.seed = rng.seed();
    record.truth.reserve(n_steps + 1);
    record.observations.reserve(n_steps);

    Eigen::VectorXd z(model.dim_state);
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = init_rng.normal();
    record.truth.push_back(model.init.mean() + model.init.cov_factor() * z);

    for (int n = 0; n < n_steps; ++n) {
        record.truth.push_back(step_state(model, record.truth.back(), state_rng));
        record.observations.push_back(observe(model, record.truth.back(), obs_rng));
    }
    return record;
}

StateSpaceModel make_linear1d(double a, double sigma2, double gamma2, double init_mean,
                              double init_var) {
    detail::require(std::abs(a) < 1.0, ErrorCode::config,
                    "linear1d requires |a| < 1 for stability");
    detail::require(sigma2 > 0.0 && gamma2 > 0.0, ErrorCode::config,
                    "noise variances must be positive");
    StateSpaceModel m;
    m.name = "linear1d";
    m.dim_state = 1;
    m.dim_obs = 1;
    m.A = Eigen::MatrixXd::Constant(1, 1, a);
    m.H = Eigen::MatrixXd::Identity(1, 1);
    m.psi = [a](const Eigen::VectorXd& v) { return Eigen::VectorXd(a * v); };
    m.h = [](const Eigen::VectorXd& v) { return v; };
    m.psi_linear = true;
    m.h_linear = true;
    m.Sigma = Eigen::MatrixXd::Constant(1, 1, sigma2);
    m.Gamma = Eigen::MatrixXd::Constant(1, 1, gamma2);
    m.init = GaussianMeasure(init_mean, init_var);
    m.h_lip = 1.0;
    return finalize_model(std::move(m));
}

StateSpaceModel make_linear_nd(int dim_state, int dim_obs, double a, double sigma2,
                               double gamma2, double init_var) {
    detail::require(dim_state >= 1 && dim_obs >= 1 && dim_obs <= dim_state, ErrorCode::config,
                    "linearNd requires 1 <= dim_obs <= dim_state");
    detail::require(std::abs(a) < 1.0, ErrorCode::config,
                    "linearNd requires |a| < 1 for stability");
    detail::require(sigma2 > 0.0 && gamma2 > 0.0, ErrorCode::config,
                    "noise variances must be positive");
    StateSpaceModel m;
    m.name = "linearNd";
    m.dim_state = dim_state;
    m.dim_obs = dim_obs;
    m.A = a * fixed_orthogonal(dim_state);
    m.H = Eigen::MatrixXd::Identity(dim_obs, dim_state);
    m.psi = [A = m.A](const Eigen::VectorXd& v) { return Eigen::VectorXd(A * v); };
    m.h = [H = m.H](const Eigen::VectorXd& v) { return Eigen::VectorXd(H * v); };
    m.psi_linear = true;
    m.h_linear = true;
    m.Sigma = sigma2 * Eigen::MatrixXd::Identity(dim_state, dim_state);
    m.Gamma = gamma2 * Eigen::MatrixXd::Identity(dim_obs, dim_obs);
    m.init = GaussianMeasure(Eigen::VectorXd::Zero(dim_state),
                             init_var * Eigen::MatrixXd::Identity(dim_state, dim_state));
    m.h_lip = 1.0;
    return finalize_model(std::move(m));
}

StateSpaceModel make_sin_tanh(double alpha, double beta, double sigma2, double gamma2,
                              double init_mean, double init_var) {
    detail::require(sigma2 > 0.0 && gamma2 > 0.0, ErrorCode::config,
                    "noise variances must be positive");
    StateSpaceModel m;
    m.name = "sin-tanh";
    m.dim_state = 1;
    m.dim_obs = 1;
    m.psi = [alpha](const Eigen::VectorXd& v) {
        return Eigen::VectorXd(alpha * v.array().sin().matrix());
    };
    m.h = [beta](const Eigen::VectorXd& v) {
        return Eigen::VectorXd(beta * v.array().tanh().matrix());
    };
    m.Sigma = Eigen::MatrixXd::Constant(1, 1, sigma2);
    m.Gamma = Eigen::MatrixXd::Constant(1, 1, gamma2);
    m.init = GaussianMeasure(init_mean, init_var);
    m.psi_sup = std::abs(alpha);
    m.h_sup = std::abs(beta);
    m.h_lip = std::abs(beta);
    return finalize_model(std::move(m));
}

StateSpaceModel make_interpolated(double theta, double a, double sigma2, double gamma2,
                                  double init_mean, double init_var) {
    detail::require(theta >= 0.0, ErrorCode::config, "theta must be nonnegative");
    detail::require(std::abs(a) < 1.0, ErrorCode::config,
                    "interpolated requires |a| < 1 for the linear part");
    if (theta == 0.0) {
        StateSpaceModel m = make_linear1d(a, sigma2, gamma2, init_mean, init_var);
        m.name = "interpolated";
        m.theta = 0.0;
        return m;
    }
    detail::require(sigma2 > 0.0 && gamma2 > 0.0, ErrorCode::config,
                    "noise variances must be positive");
    StateSpaceModel m;
    m.name = "interpolated";
    m.theta = theta;
    m.dim_state = 1;
    m.dim_obs = 1;
    m.psi = [a, theta](const Eigen::VectorXd& v) {
        return Eigen::VectorXd(a * v + theta * v.array().sin().matrix());
    };
    m.h = [theta](const Eigen::VectorXd& v) {
        return Eigen::VectorXd(v + theta * v.array().tanh().matrix());
    };
    m.Sigma = Eigen::MatrixXd::Constant(1, 1, sigma2);
    m.Gamma = Eigen::MatrixXd::Constant(1, 1, gamma2);
    m.init = GaussianMeasure(init_mean, init_var);
    m.h_lip = 1.0 + theta;
    return finalize_model(std::move(m));
}

StateSpaceModel builtin_model(const std::string& name,
                              const std::map<std::string, double>& params) {
    if (name == "linear1d") {
        return make_linear1d(param_or(params, "a", 0.9), param_or(params, "sigma2", 0.01),
                             param_or(params, "gamma2", 0.01), param_or(params, "init_mean", 0.0),
                             param_or(params, "init_var", 1.0));
    }
    if (name == "linearNd") {
        const int d = static_cast<int>(param_or(params, "dim_state", 4));
        const int k = static_cast<int>(param_or(params, "dim_obs", d));
        return make_linear_nd(d, k, param_or(params, "a", 0.9),
                              param_or(params, "sigma2", 0.01), param_or(params, "gamma2", 0.01),
                              param_or(params, "init_var", 1.0));
    }
    if (name == "sin-tanh") {
        return make_sin_tanh(param_or(params, "alpha", 2.5), param_or(params, "beta", 2.0),
                             param_or(params, "sigma2", 0.1), param_or(params, "gamma2", 0.1),
                             param_or(params, "init_mean", 0.0),
                             param_or(params, "init_var", 1.0));
    }
    if (name == "interpolated") {
        return make_interpolated(param_or(params, "theta", 1.0), param_or(params, "a", 0.9),
                                 param_or(params, "sigma2", 0.1), param_or(params, "gamma2", 0.1),
                                 param_or(params, "init_mean", 0.0),
                                 param_or(params, "init_var", 1.0));
    }
    detail::fail(ErrorCode::config, "unknown builtin model '" + name + "'");
}

} // namespace filters
