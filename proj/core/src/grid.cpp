#include "filters/grid.hpp"

#include <cmath>
#include <numbers>

#include "filters/parallel.hpp"

namespace filters {

namespace {

constexpr double kOffGridMassTol = 1e-3;
constexpr double kUnderflowTol = 1e-300;

void check_spec(const GridSpec& spec) {
    detail::require(spec.n >= 2, ErrorCode::config, "grid needs at least two nodes");
    detail::require(spec.lo < spec.hi, ErrorCode::config, "grid bounds must satisfy lo < hi");
    detail::require(std::isfinite(spec.lo) && std::isfinite(spec.hi), ErrorCode::numerical,
                    "grid bounds must be finite");
}

/// Trapezoid weights h * [1/2, 1, ..., 1, 1/2].
Eigen::VectorXd trapezoid_weights(int n, double step) {
    Eigen::VectorXd w = Eigen::VectorXd::Constant(n, step);
    w[0] *= 0.5;
    w[n - 1] *= 0.5;
    return w;
}

void require_1d_state(const StateSpaceModel& model) {
    detail::require(model.dim_state == 1, ErrorCode::unsupported_model,
                    "grid filtering supports one-dimensional states only");
}

void require_1d_obs(const StateSpaceModel& model) {
    detail::require(model.dim_obs == 1, ErrorCode::unsupported_model,
                    "grid filtering supports one-dimensional observations only");
}

double scalar_map(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f, double x) {
    Eigen::VectorXd v(1);
    v[0] = x;
    return f(v)[0];
}

/// Fritsch-Carlson monotone slopes for uniformly spaced data.
Eigen::VectorXd monotone_slopes(const Eigen::VectorXd& y, double h) {
    const int n = static_cast<int>(y.size());
    Eigen::VectorXd delta(n - 1);
    for (int i = 0; i < n - 1; ++i) delta[i] = (y[i + 1] - y[i]) / h;

    Eigen::VectorXd d(n);
    for (int i = 1; i < n - 1; ++i) {
        if (delta[i - 1] * delta[i] <= 0.0) {
            d[i] = 0.0;
        } else {
            d[i] = 2.0 * delta[i - 1] * delta[i] / (delta[i - 1] + delta[i]);
        }
    }
    auto endpoint = [](double del0, double del1) {
        double s = (3.0 * del0 - del1) / 2.0;
        if (s * del0 <= 0.0) return 0.0;
        if (del0 * del1 < 0.0 && std::abs(s) > 3.0 * std::abs(del0)) return 3.0 * del0;
        return s;
    };
    d[0] = endpoint(delta[0], n > 2 ? delta[1] : delta[0]);
    d[n - 1] = endpoint(delta[n - 2], n > 2 ? delta[n - 3] : delta[n - 2]);
    return d;
}

} // namespace

GridDensity::GridDensity(double lo, double hi, Eigen::VectorXd values)
    : lo_(lo), hi_(hi), values_(std::move(values)) {
    check_spec({lo_, hi_, static_cast<int>(values_.size())});
    const double vmax = values_.maxCoeff();
    detail::require(std::isfinite(vmax) && vmax > 0.0, ErrorCode::numerical,
                    "grid density values must be finite with positive mass");
    detail::require(values_.minCoeff() >= -1e-12 * vmax, ErrorCode::numerical,
                    "grid density values must be nonnegative");
    values_ = values_.cwiseMax(0.0);
    const Eigen::VectorXd w = trapezoid_weights(n(), step());
    const double raw = w.dot(values_);
    detail::require(raw > 0.0 && std::isfinite(raw), ErrorCode::numerical,
                    "grid density has no mass");
    mass_lost_ = 1.0 - raw;
    values_ /= raw;
}

Eigen::VectorXd GridDensity::nodes() const {
    return Eigen::VectorXd::LinSpaced(n(), lo_, hi_);
}

double GridDensity::integral() const {
    return trapezoid_weights(n(), step()).dot(values_);
}

GridMoments grid_moments(const GridDensity& p) {
    const Eigen::VectorXd w = trapezoid_weights(p.n(), p.step());
    const Eigen::VectorXd v = p.nodes();
    const Eigen::ArrayXd wp = w.array() * p.values().array();
    GridMoments out;
    out.mean = (wp * v.array()).sum();
    out.var = (wp * v.array().square()).sum() - out.mean * out.mean;
    return out;
}

GridDensity tabulate(const GaussianMeasure& g, const GridSpec& spec) {
    detail::require(g.dim() == 1, ErrorCode::dimension_mismatch,
                    "1D tabulation requires a 1D Gaussian");
    check_spec(spec);
    const double m = g.mean()[0];
    const double var = g.cov()(0, 0);
    detail::require(var > 0.0, ErrorCode::not_positive_definite,
                    "cannot tabulate a degenerate Gaussian");
    const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * var);
    const Eigen::ArrayXd v = Eigen::ArrayXd::LinSpaced(spec.n, spec.lo, spec.hi);
    Eigen::VectorXd values = (norm * (-(v - m).square() / (2.0 * var)).exp()).matrix();
    return GridDensity(spec.lo, spec.hi, std::move(values));
}

GridDensity regrid(const GridDensity& p, const GridSpec& spec) {
    check_spec(spec);
    const double h = p.step();
    const Eigen::VectorXd d = monotone_slopes(p.values(), h);
    Eigen::VectorXd out(spec.n);
    const double out_step = (spec.hi - spec.lo) / (spec.n - 1);
    for (int i = 0; i < spec.n; ++i) {
        const double x = spec.lo + i * out_step;
        if (x < p.lo() || x > p.hi()) {
            out[i] = 0.0;
            continue;
        }
        int k = static_cast<int>((x - p.lo()) / h);
        k = std::min(k, p.n() - 2);
        const double t = (x - p.node(k)) / h;
        const double t2 = t * t;
        const double t3 = t2 * t;
        const double value = p.values()[k] * (2 * t3 - 3 * t2 + 1) +
                             h * d[k] * (t3 - 2 * t2 + t) +
                             p.values()[k + 1] * (-2 * t3 + 3 * t2) + h * d[k + 1] * (t3 - t2);
        out[i] = std::max(0.0, value);
    }
    return GridDensity(spec.lo, spec.hi, std::move(out));
}

GridSpec predicted_grid_spec(const GridDensity& p, const StateSpaceModel& model, double span,
                             int n) {
    require_1d_state(model);
    const Eigen::VectorXd w = trapezoid_weights(p.n(), p.step());
    const Eigen::ArrayXd wp = w.array() * p.values().array();
    Eigen::ArrayXd psi_v(p.n());
    for (int j = 0; j < p.n(); ++j) psi_v[j] = scalar_map(model.psi, p.node(j));
    const double mean = (wp * psi_v).sum();
    const double var = (wp * psi_v.square()).sum() - mean * mean + model.Sigma(0, 0);
    detail::require(var > 0.0, ErrorCode::numerical, "predicted variance is not positive");
    const double s = std::sqrt(var);
    return {mean - span * s, mean + span * s, n};
}

GridDensity grid_predict(const GridDensity& p, const StateSpaceModel& model,
                         std::optional<GridSpec> out_spec, int threads) {
    require_1d_state(model);
    detail::require(!model.sigma_zero && model.Sigma(0, 0) > 0.0, ErrorCode::unsupported_model,
                    "grid prediction requires positive state noise");
    const GridSpec spec = out_spec ? *out_spec : predicted_grid_spec(p, model, 10.0, p.n());
    check_spec(spec);

    const double var = model.Sigma(0, 0);
    const double inv_two_var = 1.0 / (2.0 * var);
    const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * var);

    const Eigen::VectorXd w = trapezoid_weights(p.n(), p.step());
    Eigen::ArrayXd psi_v(p.n());
    for (int j = 0; j < p.n(); ++j) psi_v[j] = scalar_map(model.psi, p.node(j));
    const Eigen::ArrayXd contrib = w.array() * p.values().array();

    Eigen::VectorXd raw(spec.n);
    const double out_step = (spec.hi - spec.lo) / (spec.n - 1);
    parallel_for(static_cast<std::size_t>(spec.n), threads, [&](std::size_t i) {
        const double u = spec.lo + static_cast<double>(i) * out_step;
        raw[static_cast<Eigen::Index>(i)] =
            norm * (contrib * (-(u - psi_v).square() * inv_two_var).exp()).sum();
    });

    const double captured = trapezoid_weights(spec.n, out_step).dot(raw);
    const double lost = 1.0 - captured;
    if (lost > kOffGridMassTol) {
        detail::fail(ErrorCode::domain_too_small,
                     "prediction lost " + std::to_string(lost) +
                         " probability mass off the grid; enlarge the domain");
    }
    return GridDensity(spec.lo, spec.hi, std::move(raw));
}

GridDensity grid_update(const GridDensity& p, const Eigen::VectorXd& y,
                        const StateSpaceModel& model) {
    require_1d_state(model);
    require_1d_obs(model);
    detail::require(!model.gamma_zero, ErrorCode::unsupported_model,
                    "grid update requires positive observation noise");
    detail::require(y.size() == 1, ErrorCode::dimension_mismatch,
                    "observation dimension mismatch");

    Eigen::VectorXd weighted(p.n());
    Eigen::VectorXd residual(1);
    for (int i = 0; i < p.n(); ++i) {
        residual[0] = y[0] - scalar_map(model.h, p.node(i));
        weighted[i] = p.values()[i] * std::exp(-0.5 * model.obs_mahalanobis2(residual));
    }
    const double normalizer = trapezoid_weights(p.n(), p.step()).dot(weighted);
    if (!(normalizer >= kUnderflowTol)) {
        detail::fail(ErrorCode::likelihood_underflow,
                     "observation likelihood vanished on the whole grid");
    }
    weighted /= normalizer;
    return GridDensity(p.lo(), p.hi(), std::move(weighted));
}

std::vector<GridDensity> grid_filter(const StateSpaceModel& model, const DataRecord& data,
                                     const GridFilterParams& params) {
    require_1d_state(model);
    require_1d_obs(model);
    require_filterable(model);
    detail::require(params.n_points >= 2 && params.span > 0.0, ErrorCode::config,
                    "invalid grid filter parameters");

    const double m0 = model.init.mean()[0];
    const double s0 = std::sqrt(model.init.cov()(0, 0));
    detail::require(s0 > 0.0, ErrorCode::not_positive_definite,
                    "grid filter requires a nondegenerate initial law");

    std::vector<GridDensity> out;
    out.reserve(data.horizon() + 1);
    out.push_back(
        tabulate(model.init, {m0 - params.span * s0, m0 + params.span * s0, params.n_points}));

    for (int n = 0; n < data.horizon(); ++n) {
        const GridMoments mom = grid_moments(out.back());
        const double s = std::sqrt(std::max(mom.var, 1e-24));
        const GridSpec recentered{mom.mean - params.span * s, mom.mean + params.span * s,
                                  params.n_points};
        const GridDensity current = regrid(out.back(), recentered);
        const GridDensity predicted =
            grid_predict(current, model, std::nullopt, params.threads);
        out.push_back(grid_update(predicted, data.observations[n], model));
    }
    return out;
}

GaussianMeasure gaussian_project(const GridDensity& p) {
    const GridMoments mom = grid_moments(p);
    return GaussianMeasure(mom.mean, mom.var);
}

GridDensity2d::GridDensity2d(GridSpec u, GridSpec y, Eigen::MatrixXd values)
    : u_(u), y_(y), values_(std::move(values)) {
    check_spec(u_);
    check_spec(y_);
    detail::require(values_.rows() == u_.n && values_.cols() == y_.n,
                    ErrorCode::dimension_mismatch, "joint grid value shape mismatch");
    const double vmax = values_.maxCoeff();
    detail::require(std::isfinite(vmax) && vmax > 0.0, ErrorCode::numerical,
                    "joint grid density must be finite with positive mass");
    detail::require(values_.minCoeff() >= -1e-12 * vmax, ErrorCode::numerical,
                    "joint grid density must be nonnegative");
    values_ = values_.cwiseMax(0.0);
    const double raw = trapezoid_weights(u_.n, u_step())
                           .dot(values_ * trapezoid_weights(y_.n, y_step()));
    detail::require(raw > 0.0 && std::isfinite(raw), ErrorCode::numerical,
                    "joint grid density has no mass");
    mass_lost_ = 1.0 - raw;
    values_ /= raw;
}

double GridDensity2d::integral() const {
    return trapezoid_weights(u_.n, u_step()).dot(values_ * trapezoid_weights(y_.n, y_step()));
}

GridDensity2d lift_to_joint(const GridDensity& predicted, const StateSpaceModel& model,
                            int n_y, double span) {
    require_1d_state(model);
    require_1d_obs(model);
    detail::require(!model.gamma_zero && model.Gamma(0, 0) > 0.0, ErrorCode::unsupported_model,
                    "joint lift requires positive observation noise");

    const int nu = predicted.n();
    Eigen::ArrayXd h_u(nu);
    for (int i = 0; i < nu; ++i) h_u[i] = scalar_map(model.h, predicted.node(i));

    const Eigen::VectorXd wu = trapezoid_weights(nu, predicted.step());
    const Eigen::ArrayXd wp = wu.array() * predicted.values().array();
    const double mean_y = (wp * h_u).sum();
    const double var_y = (wp * h_u.square()).sum() - mean_y * mean_y + model.Gamma(0, 0);
    detail::require(var_y > 0.0, ErrorCode::numerical, "data marginal variance is not positive");
    const double s_y = std::sqrt(var_y);
    const GridSpec y_spec{mean_y - span * s_y, mean_y + span * s_y, n_y};

    const double gamma = model.Gamma(0, 0);
    const double inv_two_gamma = 1.0 / (2.0 * gamma);
    const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * gamma);
    const Eigen::ArrayXd y_nodes = Eigen::ArrayXd::LinSpaced(n_y, y_spec.lo, y_spec.hi);

    Eigen::MatrixXd values(nu, n_y);
    for (int i = 0; i < nu; ++i) {
        values.row(i) = (predicted.values()[i] * norm *
                         (-(y_nodes - h_u[i]).square() * inv_two_gamma).exp())
                            .matrix()
                            .transpose();
    }

    GridDensity2d joint(GridSpec{predicted.lo(), predicted.hi(), nu}, y_spec, std::move(values));
    if (joint.mass_lost() > kOffGridMassTol) {
        detail::fail(ErrorCode::domain_too_small,
                     "joint tabulation lost " + std::to_string(joint.mass_lost()) +
                         " probability mass off the grid");
    }
    return joint;
}

GridDensity2d tabulate(const GaussianMeasure& g, const GridSpec& u, const GridSpec& y) {
    detail::require(g.dim() == 2, ErrorCode::dimension_mismatch,
                    "joint tabulation requires a 2D Gaussian");
    check_spec(u);
    check_spec(y);
    Eigen::MatrixXd values(u.n, y.n);
    const double u_step = (u.hi - u.lo) / (u.n - 1);
    const double y_step = (y.hi - y.lo) / (y.n - 1);
    Eigen::VectorXd point(2);
    for (int i = 0; i < u.n; ++i) {
        point[0] = u.lo + i * u_step;
        for (int j = 0; j < y.n; ++j) {
            point[1] = y.lo + j * y_step;
            values(i, j) = g.pdf(point);
        }
    }
    return GridDensity2d(u, y, std::move(values));
}

GaussianMeasure gaussian_project(const GridDensity2d& p) {
    const Eigen::VectorXd wu = trapezoid_weights(p.u().n, p.u_step());
    const Eigen::VectorXd wy = trapezoid_weights(p.y().n, p.y_step());
    const Eigen::ArrayXd u = Eigen::ArrayXd::LinSpaced(p.u().n, p.u().lo, p.u().hi);
    const Eigen::ArrayXd y = Eigen::ArrayXd::LinSpaced(p.y().n, p.y().lo, p.y().hi);

    // Marginal-style accumulations through the weighted value matrix.
    const Eigen::ArrayXd row_mass = (p.values() * wy).array() * wu.array(); // mass per u node
    const Eigen::ArrayXd col_mass =
        (p.values().transpose() * wu).array() * wy.array(); // mass per y node

    Eigen::VectorXd mean(2);
    mean[0] = (row_mass * u).sum();
    mean[1] = (col_mass * y).sum();

    const double e_uu = (row_mass * u.square()).sum();
    const double e_yy = (col_mass * y.square()).sum();
    const double e_uy =
        (u * (p.values() * (wy.array() * y).matrix()).array() * wu.array()).sum();

    Eigen::MatrixXd cov(2, 2);
    cov(0, 0) = e_uu - mean[0] * mean[0];
    cov(1, 1) = e_yy - mean[1] * mean[1];
    cov(0, 1) = cov(1, 0) = e_uy - mean[0] * mean[1];
    return GaussianMeasure(std::move(mean), std::move(cov));
}

} // namespace filters
