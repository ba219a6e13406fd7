#pragma once

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "filters/grid.hpp"
#include "filters/measures.hpp"

namespace filters {

/// Weight of the weighted total-variation metric: g(v) = 1 + |v|^2.
double g_weight(const Eigen::VectorXd& v);

/// One test function together with the structure needed to integrate it
/// against a Gaussian in closed form where possible.
struct DictionaryFunction {
    enum class Kind { constant, linear, quadratic, generic };

    std::function<double(const Eigen::VectorXd&)> eval;
    Kind kind = Kind::generic;
    int i = -1; // coordinate index for linear/quadratic kinds
    int j = -1; // second coordinate for quadratic kind
    std::string label;
};

enum class BoundType {
    tv,      // |f| <= 1
    weighted // |f| <= g
};

struct TestDictionary {
    BoundType bound = BoundType::tv;
    int dim = 0;
    std::vector<DictionaryFunction> members;
};

enum class DictionaryKind { tv_default, weighted_default };

/// Builds the default dictionary for dimension r and verifies every member
/// against its declared bound on 10^4 sampled points.
TestDictionary make_dictionary(DictionaryKind kind, int dim);

/// Spot-checks |f| <= bound on `n_points` samples; throws on violation.
void verify_dictionary_bounds(const TestDictionary& dict, int n_points = 10000);

/// Non-owning reference to any measure the metrics can integrate against.
/// Expectations: weighted particle averages for empirical measures,
/// quadrature for grid densities, closed form (moments) or Gauss-Hermite
/// quadrature for Gaussians.
class MeasureView {
public:
    MeasureView(const EmpiricalMeasure& m) : ref_(&m) {}
    MeasureView(const GaussianMeasure& m) : ref_(&m) {}
    MeasureView(const GridDensity& m) : ref_(&m) {}
    MeasureView(const GridDensity2d& m) : ref_(&m) {}

    int dim() const;
    double expect(const DictionaryFunction& f) const;

private:
    std::variant<const EmpiricalMeasure*, const GaussianMeasure*, const GridDensity*,
                 const GridDensity2d*>
        ref_;
};

/// Exact weighted-TV distance between two densities on the same grid:
/// the supremum over |f| <= g is attained at f = g sign(p - q), so the
/// distance reduces to the quadrature of g |p - q|.
double dg_exact_grid(const GridDensity& p, const GridDensity& q);
double dg_exact_grid(const GridDensity2d& p, const GridDensity2d& q);

/// Dictionary relaxation of the weighted-TV supremum: max over members of
/// |mu[f] - nu[f]|. A lower bound on d_g.
double dg_dictionary(const MeasureView& mu, const MeasureView& nu, const TestDictionary& dict);

/// Per-step dictionary estimate of the random-measure metric
/// d(mu, nu)^2 = sup_f E |mu[f] - nu[f]|^2 from M replicate filter runs
/// against a deterministic per-step reference.
struct DRandomEstimate {
    std::vector<double> per_step;
    bool single_replicate = false; // M = 1: expectation estimated from one run
};

DRandomEstimate d_random_estimate(const std::vector<std::vector<EmpiricalMeasure>>& runs,
                                  const std::vector<MeasureView>& reference,
                                  const TestDictionary& dict);

/// Per-step weighted-TV distance between the lifted filter QP mu_n and its
/// Gaussian projection, and the running maximum epsilon.
struct EpsilonReport {
    std::vector<double> per_step;
    double epsilon = 0.0;
    int joint_nodes_u = 0;
    int joint_nodes_y = 0;
    double span = 0.0;
    int filter_grid_nodes = 0;
};

struct EpsilonParams {
    int n_u = 401;
    int n_y = 401;
    double span = 10.0;
    int threads = 1;
};

/// Measures how close the filter sequence is to Gaussian in the lifted
/// (state, data) space. `posterior` must come from grid_filter on the same
/// model. Supports d = K = 1.
EpsilonReport epsilon_estimate(const StateSpaceModel& model,
                               const std::vector<GridDensity>& posterior,
                               const EpsilonParams& params = {});

} // namespace filters
