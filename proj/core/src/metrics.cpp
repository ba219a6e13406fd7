#include "filters/metrics.hpp"

#include <cmath>
#include <numbers>

namespace filters {

namespace {

/// Gauss-Hermite rule for integral f(x) exp(-x^2) dx via Golub-Welsch.
struct HermiteRule {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
};

const HermiteRule& hermite_rule() {
    static const HermiteRule rule = [] {
        constexpr int n = 40;
        Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
        for (int k = 1; k < n; ++k) {
            const double beta = std::sqrt(k / 2.0);
            jacobi(k, k - 1) = beta;
            jacobi(k - 1, k) = beta;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
        HermiteRule r;
        r.nodes = eig.eigenvalues();
        r.weights = std::sqrt(std::numbers::pi) *
                    eig.eigenvectors().row(0).array().square().matrix().transpose();
        return r;
    }();
    return rule;
}

/// E_{N(m, C)}[f] by tensorized Gauss-Hermite quadrature (dims 1 and 2).
double gauss_expect_quadrature(const GaussianMeasure& g,
                               const std::function<double(const Eigen::VectorXd&)>& f) {
    const HermiteRule& rule = hermite_rule();
    const int n = static_cast<int>(rule.nodes.size());
    const double sqrt2 = std::numbers::sqrt2;
    if (g.dim() == 1) {
        const double scale = sqrt2 * g.cov_factor()(0, 0);
        const double m = g.mean()[0];
        Eigen::VectorXd point(1);
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            point[0] = m + scale * rule.nodes[i];
            acc += rule.weights[i] * f(point);
        }
        return acc / std::sqrt(std::numbers::pi);
    }
    if (g.dim() == 2) {
        const Eigen::MatrixXd scale = sqrt2 * g.cov_factor();
        Eigen::VectorXd point(2);
        Eigen::Vector2d z;
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                z << rule.nodes[i], rule.nodes[j];
                point = g.mean() + scale * z;
                acc += rule.weights[i] * rule.weights[j] * f(point);
            }
        }
        return acc / std::numbers::pi;
    }
    detail::fail(ErrorCode::unsupported_model,
                 "Gaussian quadrature of generic test functions supports dims 1 and 2 only");
}

std::string index_label(const std::string& stem, double a, double b, int i) {
    return stem + "(a=" + std::to_string(a) + ",b=" + std::to_string(b) +
           ",i=" + std::to_string(i) + ")";
}

} // namespace

double g_weight(const Eigen::VectorXd& v) { return 1.0 + v.squaredNorm(); }

TestDictionary make_dictionary(DictionaryKind kind, int dim) {
    detail::require(dim >= 1, ErrorCode::config, "dictionary dimension must be positive");
    TestDictionary dict;
    dict.dim = dim;

    const std::vector<double> shifts = {-2.0, -1.0, 0.0, 1.0, 2.0};
    if (kind == DictionaryKind::tv_default) {
        dict.bound = BoundType::tv;
        for (int i = 0; i < dim; ++i) {
            for (double a : {1.0, 3.0}) {
                for (double b : shifts) {
                    dict.members.push_back({[a, b, i](const Eigen::VectorXd& v) {
                                                return std::tanh(a * (v[i] - b));
                                            },
                                            DictionaryFunction::Kind::generic, i, -1,
                                            index_label("tanh", a, b, i)});
                }
            }
            for (double b : shifts) {
                dict.members.push_back({[b, i](const Eigen::VectorXd& v) {
                                            return std::tanh(10.0 * (v[i] - b));
                                        },
                                        DictionaryFunction::Kind::generic, i, -1,
                                        index_label("indicator", 10.0, b, i)});
            }
        }
        for (double c : {0.5, 1.0, 2.0, 3.0, 4.0}) {
            dict.members.push_back({[c](const Eigen::VectorXd& v) {
                                        return std::tanh(10.0 * (v.norm() - c));
                                    },
                                    DictionaryFunction::Kind::generic, -1, -1,
                                    "radial(c=" + std::to_string(c) + ")"});
        }
    } else {
        dict.bound = BoundType::weighted;
        dict.members.push_back({[](const Eigen::VectorXd&) { return 1.0; },
                                DictionaryFunction::Kind::constant, -1, -1, "1"});
        for (int i = 0; i < dim; ++i) {
            dict.members.push_back({[i](const Eigen::VectorXd& v) { return v[i]; },
                                    DictionaryFunction::Kind::linear, i, -1,
                                    "v" + std::to_string(i)});
        }
        for (int i = 0; i < dim; ++i) {
            for (int j = i; j < dim; ++j) {
                dict.members.push_back(
                    {[i, j](const Eigen::VectorXd& v) { return v[i] * v[j]; },
                     DictionaryFunction::Kind::quadratic, i, j,
                     "v" + std::to_string(i) + "*v" + std::to_string(j)});
            }
        }
        for (int i = 0; i < dim; ++i) {
            // |v_i|^3 / (1 + |v|^2) <= (1 + |v|^2) with slack; detects skewness.
            dict.members.push_back({[i](const Eigen::VectorXd& v) {
                                        const double c = v[i];
                                        return c * c * c / (1.0 + v.squaredNorm());
                                    },
                                    DictionaryFunction::Kind::generic, i, -1,
                                    "cubic(i=" + std::to_string(i) + ")"});
            dict.members.push_back({[i](const Eigen::VectorXd& v) {
                                        const double c2 = v[i] * v[i];
                                        return c2 * c2 / (1.0 + v.squaredNorm());
                                    },
                                    DictionaryFunction::Kind::generic, i, -1,
                                    "quartic(i=" + std::to_string(i) + ")"});
        }
        for (int i = 0; i < dim; ++i) {
            for (double a : {1.0, 3.0}) {
                for (double b : shifts) {
                    dict.members.push_back({[a, b, i](const Eigen::VectorXd& v) {
                                                return (1.0 + v.squaredNorm()) *
                                                       std::tanh(a * (v[i] - b));
                                            },
                                            DictionaryFunction::Kind::generic, i, -1,
                                            index_label("g*tanh", a, b, i)});
                }
            }
        }
    }
    verify_dictionary_bounds(dict);
    return dict;
}

void verify_dictionary_bounds(const TestDictionary& dict, int n_points) {
    RngStream rng(0xd1c7u, 0);
    Eigen::VectorXd v(dict.dim);
    for (int k = 0; k < n_points; ++k) {
        for (int i = 0; i < dict.dim; ++i) v[i] = 3.0 * rng.normal();
        const double bound = dict.bound == BoundType::tv ? 1.0 : g_weight(v);
        for (const auto& member : dict.members) {
            const double value = std::abs(member.eval(v));
            if (value > bound * (1.0 + 1e-9)) {
                detail::fail(ErrorCode::config, "dictionary member '" + member.label +
                                                    "' violates its declared bound");
            }
        }
    }
}

int MeasureView::dim() const {
    return std::visit(
        [](const auto* m) -> int {
            using T = std::decay_t<decltype(*m)>;
            if constexpr (std::is_same_v<T, GridDensity>) {
                return 1;
            } else if constexpr (std::is_same_v<T, GridDensity2d>) {
                return 2;
            } else {
                return m->dim();
            }
        },
        ref_);
}

double MeasureView::expect(const DictionaryFunction& f) const {
    if (const auto* const* emp = std::get_if<const EmpiricalMeasure*>(&ref_)) {
        const EmpiricalMeasure& m = **emp;
        Eigen::VectorXd buf(m.dim());
        double acc = 0.0;
        for (int j = 0; j < m.size(); ++j) {
            buf = m.particles().col(j);
            acc += m.weights()[j] * f.eval(buf);
        }
        return acc;
    }
    if (const auto* const* gau = std::get_if<const GaussianMeasure*>(&ref_)) {
        const GaussianMeasure& g = **gau;
        switch (f.kind) {
            case DictionaryFunction::Kind::constant:
                return 1.0;
            case DictionaryFunction::Kind::linear:
                return g.mean()[f.i];
            case DictionaryFunction::Kind::quadratic:
                return g.cov()(f.i, f.j) + g.mean()[f.i] * g.mean()[f.j];
            case DictionaryFunction::Kind::generic:
                return gauss_expect_quadrature(g, f.eval);
        }
        detail::fail(ErrorCode::numerical, "unreachable dictionary kind");
    }
    if (const auto* const* grid = std::get_if<const GridDensity*>(&ref_)) {
        const GridDensity& p = **grid;
        const double h = p.step();
        Eigen::VectorXd point(1);
        double acc = 0.0;
        for (int i = 0; i < p.n(); ++i) {
            point[0] = p.node(i);
            const double w = (i == 0 || i == p.n() - 1) ? 0.5 * h : h;
            acc += w * p.values()[i] * f.eval(point);
        }
        return acc;
    }
    const GridDensity2d& p = **std::get_if<const GridDensity2d*>(&ref_);
    const double hu = p.u_step();
    const double hy = p.y_step();
    Eigen::VectorXd point(2);
    double acc = 0.0;
    for (int i = 0; i < p.u().n; ++i) {
        point[0] = p.u_node(i);
        const double wu = (i == 0 || i == p.u().n - 1) ? 0.5 * hu : hu;
        for (int j = 0; j < p.y().n; ++j) {
            point[1] = p.y_node(j);
            const double wy = (j == 0 || j == p.y().n - 1) ? 0.5 * hy : hy;
            acc += wu * wy * p.values()(i, j) * f.eval(point);
        }
    }
    return acc;
}

namespace {
void require_same_grid(double lo_a, double lo_b, double hi_a, double hi_b, int na, int nb) {
    const double scale = std::max({std::abs(lo_a), std::abs(hi_a), 1.0});
    detail::require(na == nb && std::abs(lo_a - lo_b) <= 1e-9 * scale &&
                        std::abs(hi_a - hi_b) <= 1e-9 * scale,
                    ErrorCode::config, "weighted-TV quadrature requires identical grids");
}
} // namespace

double dg_exact_grid(const GridDensity& p, const GridDensity& q) {
    require_same_grid(p.lo(), q.lo(), p.hi(), q.hi(), p.n(), q.n());
    const double h = p.step();
    double acc = 0.0;
    for (int i = 0; i < p.n(); ++i) {
        const double v = p.node(i);
        const double w = (i == 0 || i == p.n() - 1) ? 0.5 * h : h;
        acc += w * (1.0 + v * v) * std::abs(p.values()[i] - q.values()[i]);
    }
    return acc;
}

double dg_exact_grid(const GridDensity2d& p, const GridDensity2d& q) {
    require_same_grid(p.u().lo, q.u().lo, p.u().hi, q.u().hi, p.u().n, q.u().n);
    require_same_grid(p.y().lo, q.y().lo, p.y().hi, q.y().hi, p.y().n, q.y().n);
    const double hu = p.u_step();
    const double hy = p.y_step();
    double acc = 0.0;
    for (int i = 0; i < p.u().n; ++i) {
        const double u = p.u_node(i);
        const double wu = (i == 0 || i == p.u().n - 1) ? 0.5 * hu : hu;
        double row = 0.0;
        for (int j = 0; j < p.y().n; ++j) {
            const double y = p.y_node(j);
            const double wy = (j == 0 || j == p.y().n - 1) ? 0.5 * hy : hy;
            row += wy * (1.0 + u * u + y * y) * std::abs(p.values()(i, j) - q.values()(i, j));
        }
        acc += wu * row;
    }
    return acc;
}

double dg_dictionary(const MeasureView& mu, const MeasureView& nu, const TestDictionary& dict) {
    detail::require(mu.dim() == dict.dim && nu.dim() == dict.dim, ErrorCode::dimension_mismatch,
                    "dictionary dimension does not match the measures");
    double best = 0.0;
    for (const auto& member : dict.members) {
        best = std::max(best, std::abs(mu.expect(member) - nu.expect(member)));
    }
    return best;
}

DRandomEstimate d_random_estimate(const std::vector<std::vector<EmpiricalMeasure>>& runs,
                                  const std::vector<MeasureView>& reference,
                                  const TestDictionary& dict) {
    detail::require(!runs.empty(), ErrorCode::config,
                    "random-metric estimation needs at least one replicate run");
    const std::size_t n_steps = reference.size();
    for (const auto& run : runs) {
        detail::require(run.size() == n_steps, ErrorCode::dimension_mismatch,
                        "replicate length does not match the reference length");
    }

    DRandomEstimate out;
    out.single_replicate = runs.size() == 1;
    out.per_step.resize(n_steps, 0.0);
    const double inv_m = 1.0 / static_cast<double>(runs.size());
    for (std::size_t n = 0; n < n_steps; ++n) {
        double best = 0.0;
        for (const auto& member : dict.members) {
            const double ref_value = reference[n].expect(member);
            double mse = 0.0;
            for (const auto& run : runs) {
                const double diff = MeasureView(run[n]).expect(member) - ref_value;
                mse += diff * diff;
            }
            best = std::max(best, std::sqrt(mse * inv_m));
        }
        out.per_step[n] = best;
    }
    return out;
}

EpsilonReport epsilon_estimate(const StateSpaceModel& model,
                               const std::vector<GridDensity>& posterior,
                               const EpsilonParams& params) {
    detail::require(model.dim_state == 1 && model.dim_obs == 1, ErrorCode::unsupported_model,
                    "epsilon estimation supports d = K = 1 models only");
    detail::require(!posterior.empty(), ErrorCode::config, "empty filter sequence");

    EpsilonReport report;
    report.joint_nodes_u = params.n_u;
    report.joint_nodes_y = params.n_y;
    report.span = params.span;
    report.filter_grid_nodes = posterior.front().n();
    report.per_step.reserve(posterior.size());

    for (const auto& mu : posterior) {
        const GridSpec u_spec = predicted_grid_spec(mu, model, params.span, params.n_u);
        const GridDensity predicted = grid_predict(mu, model, u_spec, params.threads);
        const GridDensity2d joint = lift_to_joint(predicted, model, params.n_y, params.span);
        const GaussianMeasure projected = gaussian_project(joint);
        const GridDensity2d gaussian_tab = tabulate(projected, joint.u(), joint.y());
        report.per_step.push_back(dg_exact_grid(joint, gaussian_tab));
    }
    report.epsilon = *std::max_element(report.per_step.begin(), report.per_step.end());
    return report;
}

} // namespace filters
