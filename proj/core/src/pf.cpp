#include "filters/pf.hpp"

#include <cmath>
#include <limits>

namespace filters {

namespace {
constexpr std::uint64_t kPfInitTag = 0;

int search_ancestor(const std::vector<double>& cumulative, double u) {
    // First index whose cumulative weight exceeds u.
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    const auto idx = static_cast<int>(it - cumulative.begin());
    return std::min(idx, static_cast<int>(cumulative.size()) - 1);
}
} // namespace

Eigen::MatrixXd pf_resample_predict(const PfState& s, const StateSpaceModel& model,
                                    const RngStream& rng) {
    const int j_count = static_cast<int>(s.particles.cols());
    detail::require(j_count >= 1, ErrorCode::degenerate_ensemble, "empty particle set");
    detail::require(s.particles.rows() == model.dim_state, ErrorCode::dimension_mismatch,
                    "particle dimension mismatch");

    std::vector<double> cumulative(j_count);
    double acc = 0.0;
    for (int j = 0; j < j_count; ++j) {
        acc += s.weights[j];
        cumulative[j] = acc;
    }

    const int d = model.dim_state;
    Eigen::MatrixXd out(d, j_count);
    Eigen::VectorXd z(d);
    for (int j = 0; j < j_count; ++j) {
        RngStream stream = rng.substream(j);
        const int ancestor = search_ancestor(cumulative, stream.uniform());
        for (int i = 0; i < d; ++i) z[i] = stream.normal();
        out.col(j) = model.psi(s.particles.col(ancestor)) + model.sigma_chol * z;
    }
    return out;
}

Eigen::VectorXd pf_weights(const Eigen::MatrixXd& predicted, const Eigen::VectorXd& y,
                           const StateSpaceModel& model) {
    const int j_count = static_cast<int>(predicted.cols());
    detail::require(j_count >= 1, ErrorCode::degenerate_ensemble, "empty particle set");
    detail::require(y.size() == model.dim_obs, ErrorCode::dimension_mismatch,
                    "observation dimension mismatch");

    Eigen::VectorXd log_like(j_count);
    for (int j = 0; j < j_count; ++j) {
        const Eigen::VectorXd residual = y - model.h(predicted.col(j));
        log_like[j] = -0.5 * model.obs_mahalanobis2(residual);
    }
    const double max_log = log_like.maxCoeff();
    if (!std::isfinite(max_log)) {
        detail::fail(ErrorCode::likelihood_underflow,
                     "all particle likelihoods vanished; data inconsistent with the ensemble");
    }
    Eigen::VectorXd weights = (log_like.array() - max_log).exp();
    weights /= weights.sum();
    return weights;
}

std::vector<PfState> pf_filter(const StateSpaceModel& model, const DataRecord& data,
                               int n_particles, const RngStream& rng) {
    require_filterable(model);
    detail::require(n_particles >= 2, ErrorCode::degenerate_ensemble,
                    "particle filter needs at least two particles");

    std::vector<PfState> out;
    out.reserve(data.horizon() + 1);
    const EmpiricalMeasure initial =
        sample(model.init, n_particles, rng.substream(kPfInitTag));
    out.push_back({initial.particles(), initial.weights(), 0});

    for (int n = 0; n < data.horizon(); ++n) {
        Eigen::MatrixXd predicted =
            pf_resample_predict(out.back(), model, rng.substream(n + 1));
        Eigen::VectorXd weights = pf_weights(predicted, data.observations[n], model);
        out.push_back({std::move(predicted), std::move(weights), n + 1});
    }
    return out;
}

EssReport effective_sample_size(const Eigen::VectorXd& weights) {
    detail::require(weights.size() >= 1, ErrorCode::degenerate_ensemble, "empty weight vector");
    EssReport report;
    report.ess = 1.0 / weights.squaredNorm();
    report.max_weight = weights.maxCoeff();
    return report;
}

} // namespace filters
