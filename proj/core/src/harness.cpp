#include "filters/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "filters/grid.hpp"
#include "filters/io.hpp"
#include "filters/kalman.hpp"
#include "filters/metrics.hpp"
#include "filters/parallel.hpp"
#include "filters/pf.hpp"
#include "filters/version.hpp"

namespace filters {

namespace {

using nlohmann::json;

// Substream tags: data simulation and filter runs never share a stream.
constexpr std::uint64_t kDataTag = 1;
constexpr std::uint64_t kFilterTag = 2;

StateSpaceModel build_model(const ExperimentConfig& cfg) {
    return builtin_model(cfg.model_name, cfg.model_params);
}

std::vector<GaussianMeasure> kalman_as_gaussians(const std::vector<KalmanState>& states) {
    std::vector<GaussianMeasure> out;
    out.reserve(states.size());
    for (const auto& s : states) out.emplace_back(s.mean, s.cov);
    return out;
}

double median(std::vector<double> values) {
    detail::require(!values.empty(), ErrorCode::numerical, "median of empty set");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

bool nondecreasing(const std::vector<double>& values) {
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] < values[i - 1]) return false;
    }
    return true;
}

void push_row(RunRecord& rec, std::string metric, double theta, int dim, int j, int replicate,
              int step, double value) {
    rec.rows.push_back({std::move(metric), theta, dim, j, replicate, step, value});
}

/// Shared scaffolding of the two rate experiments: one dataset, a Kalman
/// reference, replicate filter runs per ensemble size, and a log-log fit of
/// the per-size errors.
struct RateContext {
    StateSpaceModel model;
    DataRecord data;
    std::vector<KalmanState> reference;
};

RateContext make_rate_context(const ExperimentConfig& cfg) {
    RateContext ctx{build_model(cfg), {}, {}};
    detail::require(ctx.model.psi_linear && ctx.model.h_linear, ErrorCode::config,
                    "rate experiments need a linear model so the Kalman reference is exact");
    ctx.data = simulate(ctx.model, cfg.horizon, RngStream(cfg.seed, 0).substream(kDataTag));
    ctx.reference = kalman_filter(ctx.model, ctx.data);
    return ctx;
}

void finish_rate_fit(RunRecord& rec, const std::vector<double>& sizes,
                     const std::vector<double>& errors, int dim) {
    const RateFit fit = fit_rate(sizes, errors);
    push_row(rec, "slope", 0.0, dim, 0, -1, -1, fit.slope);
    push_row(rec, "r2", 0.0, dim, 0, -1, -1, fit.r2);
    rec.summary.emplace_back("slope", fit.slope);
    rec.summary.emplace_back("intercept", fit.intercept);
    rec.summary.emplace_back("r2", fit.r2);
    rec.series["J"] = sizes;
    rec.series["error"] = errors;
}

void run_pf_rate(const ExperimentConfig& cfg, RunRecord& rec) {
    const RateContext ctx = make_rate_context(cfg);
    const auto refs = kalman_as_gaussians(ctx.reference);
    const std::vector<MeasureView> views(refs.begin(), refs.end());
    const TestDictionary dict = make_dictionary(DictionaryKind::tv_default, ctx.model.dim_state);
    const RngStream filter_root = RngStream(cfg.seed, 0).substream(kFilterTag);

    std::vector<double> sizes;
    std::vector<double> errors;
    for (std::size_t ji = 0; ji < cfg.ensemble_sizes.size(); ++ji) {
        const int j_count = cfg.ensemble_sizes[ji];
        std::vector<std::vector<EmpiricalMeasure>> slots(cfg.replicates);
        std::vector<int> failures(cfg.replicates, -1);
        parallel_for(cfg.replicates, cfg.threads, [&](std::size_t m) {
            try {
                const auto states = pf_filter(ctx.model, ctx.data, j_count,
                                              filter_root.substream(ji).substream(m));
                slots[m].reserve(states.size());
                for (const auto& s : states) slots[m].push_back(s.measure());
            } catch (const FilterError& e) {
                failures[m] = static_cast<int>(e.code());
                slots[m].clear();
            }
        });

        std::vector<std::vector<EmpiricalMeasure>> runs;
        for (int m = 0; m < cfg.replicates; ++m) {
            if (failures[m] >= 0) {
                push_row(rec, "error_code", 0.0, ctx.model.dim_state, j_count, m, -1,
                         failures[m]);
            } else {
                runs.push_back(std::move(slots[m]));
            }
        }
        detail::require(!runs.empty(), ErrorCode::numerical,
                        "every replicate failed at J = " + std::to_string(j_count));

        const DRandomEstimate estimate = d_random_estimate(runs, views, dict);
        for (std::size_t n = 0; n < estimate.per_step.size(); ++n) {
            push_row(rec, "d_estimate", 0.0, ctx.model.dim_state, j_count, -1,
                     static_cast<int>(n), estimate.per_step[n]);
        }
        const double sup =
            *std::max_element(estimate.per_step.begin(), estimate.per_step.end());
        push_row(rec, "d_sup", 0.0, ctx.model.dim_state, j_count, -1, -1, sup);
        sizes.push_back(j_count);
        errors.push_back(sup);
    }
    finish_rate_fit(rec, sizes, errors, ctx.model.dim_state);
}

void run_enkf_rate(const ExperimentConfig& cfg, RunRecord& rec) {
    const RateContext ctx = make_rate_context(cfg);
    const RngStream filter_root = RngStream(cfg.seed, 0).substream(kFilterTag);
    const int n_steps = ctx.data.horizon();

    std::vector<double> sizes;
    std::vector<double> errors;
    for (std::size_t ji = 0; ji < cfg.ensemble_sizes.size(); ++ji) {
        const int j_count = cfg.ensemble_sizes[ji];
        std::vector<std::vector<double>> per_rep(cfg.replicates);
        std::vector<int> failures(cfg.replicates, -1);
        parallel_for(cfg.replicates, cfg.threads, [&](std::size_t m) {
            try {
                const auto ensembles = enkf_filter(ctx.model, ctx.data, j_count, cfg.variant,
                                                   filter_root.substream(ji).substream(m));
                per_rep[m].resize(n_steps + 1);
                for (int n = 0; n <= n_steps; ++n) {
                    const Moments mom = empirical_moments(ensembles[n].measure());
                    per_rep[m][n] = (mom.mean - ctx.reference[n].mean).norm() +
                                    (mom.cov - ctx.reference[n].cov).norm();
                }
            } catch (const FilterError& e) {
                failures[m] = static_cast<int>(e.code());
                per_rep[m].clear();
            }
        });

        std::vector<double> rms(n_steps + 1, 0.0);
        int successes = 0;
        for (int m = 0; m < cfg.replicates; ++m) {
            if (failures[m] >= 0) {
                push_row(rec, "error_code", 0.0, ctx.model.dim_state, j_count, m, -1,
                         failures[m]);
                continue;
            }
            ++successes;
            for (int n = 0; n <= n_steps; ++n) {
                push_row(rec, "moment_error", 0.0, ctx.model.dim_state, j_count, m, n,
                         per_rep[m][n]);
                rms[n] += per_rep[m][n] * per_rep[m][n];
            }
        }
        detail::require(successes > 0, ErrorCode::numerical,
                        "every replicate failed at J = " + std::to_string(j_count));
        for (int n = 0; n <= n_steps; ++n) {
            rms[n] = std::sqrt(rms[n] / successes);
            push_row(rec, "moment_error_rms", 0.0, ctx.model.dim_state, j_count, -1, n, rms[n]);
        }
        const double sup = *std::max_element(rms.begin(), rms.end());
        push_row(rec, "moment_error_sup", 0.0, ctx.model.dim_state, j_count, -1, -1, sup);
        sizes.push_back(j_count);
        errors.push_back(sup);
    }
    finish_rate_fit(rec, sizes, errors, ctx.model.dim_state);
}

void run_mf_exactness(const ExperimentConfig& cfg, RunRecord& rec) {
    const RateContext ctx = make_rate_context(cfg);
    const auto mean_field = mf_enkf_gaussian_filter(ctx.model, ctx.data);
    double worst = 0.0;
    for (std::size_t n = 0; n < mean_field.size(); ++n) {
        const double dev =
            std::max((mean_field[n].mean - ctx.reference[n].mean).cwiseAbs().maxCoeff(),
                     (mean_field[n].cov - ctx.reference[n].cov).cwiseAbs().maxCoeff());
        push_row(rec, "deviation", 0.0, ctx.model.dim_state, 0, -1, static_cast<int>(n), dev);
        worst = std::max(worst, dev);
    }
    rec.summary.emplace_back("max_deviation", worst);
}

void run_collapse(const ExperimentConfig& cfg, RunRecord& rec) {
    const int j_count = cfg.ensemble_sizes.empty() ? 100 : cfg.ensemble_sizes.front();
    const RngStream root = RngStream(cfg.seed, 0).substream(kFilterTag);

    std::vector<double> medians;
    for (std::size_t di = 0; di < cfg.dims.size(); ++di) {
        const int dim = cfg.dims[di];
        auto params = cfg.model_params;
        params["dim_state"] = dim;
        params["dim_obs"] = dim;
        const StateSpaceModel model = builtin_model("linearNd", params);

        std::vector<double> max_weights(cfg.replicates);
        std::vector<double> ess_values(cfg.replicates);
        std::vector<int> failures(cfg.replicates, -1);
        parallel_for(cfg.replicates, cfg.threads, [&](std::size_t m) {
            try {
                const RngStream sub = root.substream(di).substream(m);
                const DataRecord data = simulate(model, 1, sub.substream(0));
                const EmpiricalMeasure initial =
                    sample(model.init, j_count, sub.substream(1));
                const PfState state{initial.particles(), initial.weights(), 0};
                const Eigen::MatrixXd predicted =
                    pf_resample_predict(state, model, sub.substream(2));
                const Eigen::VectorXd weights =
                    pf_weights(predicted, data.observations[0], model);
                const EssReport report = effective_sample_size(weights);
                max_weights[m] = report.max_weight;
                ess_values[m] = report.ess;
            } catch (const FilterError& e) {
                failures[m] = static_cast<int>(e.code());
            }
        });

        std::vector<double> ok;
        for (int m = 0; m < cfg.replicates; ++m) {
            if (failures[m] >= 0) {
                push_row(rec, "error_code", 0.0, dim, j_count, m, -1, failures[m]);
                continue;
            }
            push_row(rec, "max_weight", 0.0, dim, j_count, m, 1, max_weights[m]);
            push_row(rec, "ess", 0.0, dim, j_count, m, 1, ess_values[m]);
            ok.push_back(max_weights[m]);
        }
        detail::require(!ok.empty(), ErrorCode::numerical,
                        "every replicate failed at dim = " + std::to_string(dim));
        const double med = median(ok);
        push_row(rec, "median_max_weight", 0.0, dim, j_count, -1, 1, med);
        medians.push_back(med);
    }
    rec.series["dim"].assign(cfg.dims.begin(), cfg.dims.end());
    rec.series["median_max_weight"] = medians;
    rec.summary.emplace_back("median_max_weight_final", medians.back());
    rec.summary.emplace_back("median_max_weight_nondecreasing",
                             nondecreasing(medians) ? 1.0 : 0.0);
}

void run_epsilon_trend(const ExperimentConfig& cfg, RunRecord& rec) {
    detail::require(cfg.model_name == "interpolated", ErrorCode::config,
                    "the epsilon-trend experiment sweeps the interpolated family");
    detail::require(!cfg.thetas.empty(), ErrorCode::config, "theta sweep must be nonempty");
    const int j_ref = cfg.ensemble_sizes.empty() ? 100000 : cfg.ensemble_sizes.front();
    const TestDictionary dict = make_dictionary(DictionaryKind::weighted_default, 1);
    const RngStream root = RngStream(cfg.seed, 0);

    std::vector<double> epsilons;
    std::vector<double> dg_errors;
    for (std::size_t ti = 0; ti < cfg.thetas.size(); ++ti) {
        const double theta = cfg.thetas[ti];
        auto params = cfg.model_params;
        params["theta"] = theta;
        const StateSpaceModel model = builtin_model("interpolated", params);

        // The same data substream across theta keeps the sweep smooth: the
        // noise realizations match and only the model changes.
        const DataRecord data = simulate(model, cfg.horizon, root.substream(kDataTag));
        const std::vector<GridDensity> posterior =
            grid_filter(model, data, {cfg.grid_nodes, cfg.span, cfg.threads});
        const EpsilonReport eps =
            epsilon_estimate(model, posterior, {401, 401, cfg.span, cfg.threads});
        const std::vector<Ensemble> ensembles = enkf_filter(
            model, data, j_ref, cfg.variant, root.substream(kFilterTag).substream(ti));

        double err = 0.0;
        for (std::size_t n = 0; n < posterior.size(); ++n) {
            const EmpiricalMeasure ensemble_measure = ensembles[n].measure();
            const double step_err =
                dg_dictionary(posterior[n], ensemble_measure, dict);
            push_row(rec, "epsilon_step", theta, 1, j_ref, -1, static_cast<int>(n),
                     eps.per_step[n]);
            push_row(rec, "dg_err_step", theta, 1, j_ref, -1, static_cast<int>(n), step_err);
            err = std::max(err, step_err);
        }
        push_row(rec, "epsilon", theta, 1, j_ref, -1, -1, eps.epsilon);
        push_row(rec, "dg_err", theta, 1, j_ref, -1, -1, err);
        epsilons.push_back(eps.epsilon);
        dg_errors.push_back(err);
    }
    rec.series["theta"] = cfg.thetas;
    rec.series["epsilon"] = epsilons;
    rec.series["dg_err"] = dg_errors;
    rec.summary.emplace_back("epsilon_nondecreasing", nondecreasing(epsilons) ? 1.0 : 0.0);
    rec.summary.emplace_back("dg_err_nondecreasing", nondecreasing(dg_errors) ? 1.0 : 0.0);
    rec.summary.emplace_back("dg_err_at_theta0", dg_errors.front());
    rec.notes.emplace_back("enkf_route", "mean-field (particle-approximated)");
    if (cfg.thetas.size() > 1) {
        rec.notes.emplace_back("trend_status",
                               "empirical exploration; the linear part of the dynamics is "
                               "unbounded for theta > 0");
    }
}

void run_single(const ExperimentConfig& cfg, RunRecord& rec) {
    const StateSpaceModel model = build_model(cfg);
    const RngStream root(cfg.seed, 0);
    const DataRecord data = simulate(model, cfg.horizon, root.substream(kDataTag));
    const int j_count = cfg.ensemble_sizes.empty() ? 1000 : cfg.ensemble_sizes.front();

    auto push_moments = [&](int step, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
        for (int i = 0; i < mean.size(); ++i) {
            push_row(rec, "mean_" + std::to_string(i), model.theta, model.dim_state, j_count,
                     -1, step, mean[i]);
        }
        push_row(rec, "cov_trace", model.theta, model.dim_state, j_count, -1, step,
                 cov.trace());
    };

    if (cfg.filter == "kalman" || cfg.filter == "mf") {
        const auto states = cfg.filter == "kalman" ? kalman_filter(model, data)
                                                   : mf_enkf_gaussian_filter(model, data);
        for (std::size_t n = 0; n < states.size(); ++n) {
            push_moments(static_cast<int>(n), states[n].mean, states[n].cov);
        }
    } else if (cfg.filter == "grid") {
        const auto posterior = grid_filter(model, data, {cfg.grid_nodes, cfg.span, cfg.threads});
        for (std::size_t n = 0; n < posterior.size(); ++n) {
            const GridMoments mom = grid_moments(posterior[n]);
            push_row(rec, "mean_0", model.theta, 1, 0, -1, static_cast<int>(n), mom.mean);
            push_row(rec, "cov_trace", model.theta, 1, 0, -1, static_cast<int>(n), mom.var);
        }
        rec.artifacts.emplace_back("posterior_grid.csv", to_csv(posterior.back()));
    } else if (cfg.filter == "pf") {
        const auto states = pf_filter(model, data, j_count, root.substream(kFilterTag));
        for (const auto& s : states) {
            const Moments mom = empirical_moments(s.measure());
            push_moments(s.step, mom.mean, mom.cov);
            const EssReport report = effective_sample_size(s.weights);
            push_row(rec, "ess", model.theta, model.dim_state, j_count, -1, s.step, report.ess);
            push_row(rec, "max_weight", model.theta, model.dim_state, j_count, -1, s.step,
                     report.max_weight);
        }
        rec.artifacts.emplace_back("particles.csv", to_csv(states));
    } else if (cfg.filter == "enkf") {
        const auto ensembles =
            enkf_filter(model, data, j_count, cfg.variant, root.substream(kFilterTag));
        for (const auto& e : ensembles) {
            const Moments mom = empirical_moments(e.measure());
            push_moments(e.step, mom.mean, mom.cov);
        }
        rec.artifacts.emplace_back("ensemble.csv", to_csv(ensembles));
    } else {
        detail::fail(ErrorCode::config, "unknown filter '" + cfg.filter +
                                            "' (expected kalman, mf, grid, pf or enkf)");
    }
    rec.artifacts.emplace_back("data.json", data_record_to_json(data) + "\n");
}

void validate(const ExperimentConfig& cfg) {
    detail::require(cfg.horizon >= 1, ErrorCode::config, "horizon must be at least 1");
    detail::require(cfg.replicates >= 1, ErrorCode::config, "replicates must be at least 1");
    if (cfg.experiment == ExperimentKind::pf_rate ||
        cfg.experiment == ExperimentKind::enkf_rate) {
        detail::require(!cfg.ensemble_sizes.empty(), ErrorCode::config,
                        "rate experiments need a nonempty list of ensemble sizes");
    }
    if (cfg.experiment == ExperimentKind::collapse) {
        detail::require(!cfg.dims.empty(), ErrorCode::config,
                        "the collapse experiment needs a nonempty dimension sweep");
    }
    for (int j : cfg.ensemble_sizes) {
        detail::require(j >= 2, ErrorCode::config, "ensemble sizes must be at least 2");
    }
}

} // namespace

std::string to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::pf_rate: return "pf-rate";
        case ExperimentKind::enkf_rate: return "enkf-rate";
        case ExperimentKind::mf_exactness: return "mf-exactness";
        case ExperimentKind::collapse: return "collapse";
        case ExperimentKind::epsilon_trend: return "epsilon-trend";
        case ExperimentKind::single_run: return "single-run";
    }
    detail::fail(ErrorCode::config, "unknown experiment kind");
}

ExperimentKind experiment_from_string(const std::string& name) {
    if (name == "pf-rate") return ExperimentKind::pf_rate;
    if (name == "enkf-rate") return ExperimentKind::enkf_rate;
    if (name == "mf-exactness") return ExperimentKind::mf_exactness;
    if (name == "collapse") return ExperimentKind::collapse;
    if (name == "epsilon-trend") return ExperimentKind::epsilon_trend;
    if (name == "single-run") return ExperimentKind::single_run;
    detail::fail(ErrorCode::config, "unknown experiment '" + name + "'");
}

ExperimentConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        detail::fail(ErrorCode::config, std::string("malformed config JSON: ") + e.what());
    }
    try {
        ExperimentConfig cfg;
        cfg.experiment = experiment_from_string(j.at("experiment").get<std::string>());
        if (j.contains("model")) {
            const json& m = j.at("model");
            cfg.model_name = m.value("name", cfg.model_name);
            for (const auto& [key, value] : m.items()) {
                if (key == "name") continue;
                detail::require(value.is_number(), ErrorCode::config,
                                "model parameter '" + key + "' must be numeric");
                cfg.model_params[key] = value.get<double>();
            }
        }
        cfg.horizon = j.value("N", cfg.horizon);
        if (j.contains("J")) {
            if (j.at("J").is_array()) {
                cfg.ensemble_sizes = j.at("J").get<std::vector<int>>();
            } else {
                cfg.ensemble_sizes = {j.at("J").get<int>()};
            }
        }
        cfg.replicates = j.value("M", cfg.replicates);
        cfg.seed = j.value("seed", cfg.seed);
        if (j.contains("variant")) {
            cfg.variant = gain_variant_from_string(j.at("variant").get<std::string>());
        }
        cfg.out_dir = j.value("out", cfg.out_dir);
        if (j.contains("thetas")) cfg.thetas = j.at("thetas").get<std::vector<double>>();
        if (j.contains("dims")) cfg.dims = j.at("dims").get<std::vector<int>>();
        cfg.filter = j.value("filter", cfg.filter);
        cfg.grid_nodes = j.value("grid_nodes", cfg.grid_nodes);
        cfg.span = j.value("span", cfg.span);
        cfg.threads = j.value("threads", cfg.threads);
        return cfg;
    } catch (const json::exception& e) {
        detail::fail(ErrorCode::config, std::string("bad config field: ") + e.what());
    }
}

ExperimentConfig config_from_json_file(const std::string& path) {
    std::ifstream in(path);
    detail::require(in.good(), ErrorCode::config, "cannot open config file '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return config_from_json(text);
}

std::string config_to_json(const ExperimentConfig& cfg) {
    json model;
    model["name"] = cfg.model_name;
    for (const auto& [key, value] : cfg.model_params) model[key] = value;
    json j;
    j["experiment"] = to_string(cfg.experiment);
    j["model"] = model;
    j["N"] = cfg.horizon;
    j["J"] = cfg.ensemble_sizes;
    j["M"] = cfg.replicates;
    j["seed"] = cfg.seed;
    j["variant"] = to_string(cfg.variant);
    j["out"] = cfg.out_dir;
    j["thetas"] = cfg.thetas;
    j["dims"] = cfg.dims;
    j["filter"] = cfg.filter;
    j["grid_nodes"] = cfg.grid_nodes;
    j["span"] = cfg.span;
    j["threads"] = cfg.threads;
    return j.dump(2);
}

RunRecord run_experiment(const ExperimentConfig& config) {
    ExperimentConfig cfg = config;
    cfg.threads = resolve_threads(cfg.threads);
    validate(cfg);

    RunRecord rec;
    rec.config = cfg;
    rec.library_version = kLibraryVersion;

    const auto start = std::chrono::steady_clock::now();
    switch (cfg.experiment) {
        case ExperimentKind::pf_rate: run_pf_rate(cfg, rec); break;
        case ExperimentKind::enkf_rate: run_enkf_rate(cfg, rec); break;
        case ExperimentKind::mf_exactness: run_mf_exactness(cfg, rec); break;
        case ExperimentKind::collapse: run_collapse(cfg, rec); break;
        case ExperimentKind::epsilon_trend: run_epsilon_trend(cfg, rec); break;
        case ExperimentKind::single_run: run_single(cfg, rec); break;
    }
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

std::string run_record_csv(const RunRecord& record) {
    std::string out = "experiment,model,theta,dim,J,replicate,step,metric_name,value\n";
    const std::string prefix =
        to_string(record.config.experiment) + "," + record.config.model_name + ",";
    for (const auto& row : record.rows) {
        out += prefix;
        out += format_double(row.theta);
        out += ',' + std::to_string(row.dim);
        out += ',' + std::to_string(row.ensemble_size);
        out += ',' + std::to_string(row.replicate);
        out += ',' + std::to_string(row.step);
        out += ',' + row.metric;
        out += ',';
        out += format_double(row.value);
        out += '\n';
    }
    return out;
}

std::string run_record_json(const RunRecord& record) {
    json j;
    j["config"] = json::parse(config_to_json(record.config));
    json summary;
    for (const auto& [key, value] : record.summary) summary[key] = value;
    j["summary"] = summary;
    json series;
    for (const auto& [key, values] : record.series) series[key] = values;
    j["series"] = series;
    json notes;
    for (const auto& [key, value] : record.notes) notes[key] = value;
    j["notes"] = notes;
    j["rows"] = record.rows.size();
    j["library_version"] = record.library_version;
    j["wall_seconds"] = record.wall_seconds;
    return j.dump(2);
}

std::string write_outputs(const RunRecord& record, const std::string& out_dir) {
    const std::string stem = out_dir + "/" + to_string(record.config.experiment);
    write_text_file(stem + ".csv", run_record_csv(record));
    write_text_file(stem + ".json", run_record_json(record) + "\n");
    for (const auto& [name, content] : record.artifacts) {
        write_text_file(out_dir + "/" + name, content);
    }
    return stem + ".csv";
}

RateFit fit_rate(const std::vector<double>& sizes, const std::vector<double>& errors) {
    detail::require(sizes.size() == errors.size(), ErrorCode::config,
                    "size/error arrays must have equal length");
    detail::require(sizes.size() >= 3, ErrorCode::config,
                    "rate fitting needs at least three points");
    const auto n = static_cast<double>(sizes.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::vector<double> xs(sizes.size()), ys(sizes.size());
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        detail::require(sizes[i] > 0.0, ErrorCode::numerical, "ensemble sizes must be positive");
        detail::require(errors[i] > 0.0, ErrorCode::numerical,
                        "rate fitting needs strictly positive errors");
        xs[i] = std::log(sizes[i]);
        ys[i] = std::log(errors[i]);
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    RateFit fit;
    const double denom = n * sxx - sx * sx;
    detail::require(std::abs(denom) > 0.0, ErrorCode::numerical,
                    "degenerate abscissae in rate fit");
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    double ss_res = 0.0, ss_tot = 0.0;
    const double y_mean = sy / n;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        const double fitted = fit.intercept + fit.slope * xs[i];
        ss_res += (ys[i] - fitted) * (ys[i] - fitted);
        ss_tot += (ys[i] - y_mean) * (ys[i] - y_mean);
    }
    fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

} // namespace filters
