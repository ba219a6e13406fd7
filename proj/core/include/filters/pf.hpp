#pragma once

#include <vector>

#include <Eigen/Dense>

#include "filters/measures.hpp"
#include "filters/models.hpp"

namespace filters {

/// Weighted particle approximation of the filtering distribution at one step.
struct PfState {
    Eigen::MatrixXd particles; // d x J
    Eigen::VectorXd weights;   // nonnegative, sums to 1
    int step = 0;

    EmpiricalMeasure measure() const { return EmpiricalMeasure(particles, weights); }
};

/// Multinomial resampling followed by propagation: draws J i.i.d. ancestor
/// indices from the weights, then pushes each ancestor through Psi plus
/// state noise. Every particle consumes its own substream of `rng`, so the
/// result is independent of evaluation order.
Eigen::MatrixXd pf_resample_predict(const PfState& s, const StateSpaceModel& model,
                                    const RngStream& rng);

/// Normalized importance weights exp(-1/2 |y - h(v_j)|^2_Gamma) / sum, computed
/// in log space with max subtraction.
Eigen::VectorXd pf_weights(const Eigen::MatrixXd& predicted, const Eigen::VectorXd& y,
                           const StateSpaceModel& model);

/// Bootstrap particle filter; returns states for steps 0..N. Step 0 holds an
/// equal-weight i.i.d. sample of the initial law.
std::vector<PfState> pf_filter(const StateSpaceModel& model, const DataRecord& data, int n_particles,
                               const RngStream& rng);

struct EssReport {
    double ess = 0.0;        // 1 / sum of squared weights, in [1, J]
    double max_weight = 0.0; // collapse indicator
};

EssReport effective_sample_size(const Eigen::VectorXd& weights);

} // namespace filters
