#include "filters/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace filters {

namespace {
using nlohmann::json;

std::vector<std::vector<double>> to_nested(const std::vector<Eigen::VectorXd>& vectors) {
    std::vector<std::vector<double>> out;
    out.reserve(vectors.size());
    for (const auto& v : vectors) out.emplace_back(v.data(), v.data() + v.size());
    return out;
}

std::vector<Eigen::VectorXd> from_nested(const std::vector<std::vector<double>>& nested) {
    std::vector<Eigen::VectorXd> out;
    out.reserve(nested.size());
    for (const auto& row : nested) {
        out.push_back(Eigen::Map<const Eigen::VectorXd>(row.data(), row.size()));
    }
    return out;
}
} // namespace

std::string format_double(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

std::string data_record_to_json(const DataRecord& record) {
    json j;
    j["seed"] = record.seed;
    j["truth"] = to_nested(record.truth);
    j["observations"] = to_nested(record.observations);
    return j.dump(2);
}

DataRecord data_record_from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        DataRecord record;
        record.seed = j.at("seed").get<std::uint64_t>();
        record.truth = from_nested(j.at("truth").get<std::vector<std::vector<double>>>());
        record.observations =
            from_nested(j.at("observations").get<std::vector<std::vector<double>>>());
        detail::require(record.truth.size() == record.observations.size() + 1,
                        ErrorCode::config, "data record lengths are inconsistent");
        return record;
    } catch (const json::exception& e) {
        detail::fail(ErrorCode::config, std::string("malformed data record JSON: ") + e.what());
    }
}

void save_data_record(const DataRecord& record, const std::string& path) {
    write_text_file(path, data_record_to_json(record) + "\n");
}

DataRecord load_data_record(const std::string& path) {
    std::ifstream in(path);
    detail::require(in.good(), ErrorCode::config, "cannot open data record '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return data_record_from_json(text);
}

std::string to_csv(const GridDensity& density) {
    std::ostringstream out;
    out << "node,value\n";
    for (int i = 0; i < density.n(); ++i) {
        out << format_double(density.node(i)) << ',' << format_double(density.values()[i])
            << '\n';
    }
    return out.str();
}

std::string to_csv(const std::vector<PfState>& states) {
    std::ostringstream out;
    const int dim = states.empty() ? 0 : static_cast<int>(states.front().particles.rows());
    out << "step,particle";
    for (int i = 0; i < dim; ++i) out << ",component_" << i;
    out << ",weight\n";
    for (const auto& state : states) {
        for (int j = 0; j < state.particles.cols(); ++j) {
            out << state.step << ',' << j;
            for (int i = 0; i < dim; ++i) out << ',' << format_double(state.particles(i, j));
            out << ',' << format_double(state.weights[j]) << '\n';
        }
    }
    return out.str();
}

std::string to_csv(const std::vector<Ensemble>& ensembles) {
    std::ostringstream out;
    const int dim = ensembles.empty() ? 0 : static_cast<int>(ensembles.front().members.rows());
    out << "step,member";
    for (int i = 0; i < dim; ++i) out << ",component_" << i;
    out << '\n';
    for (const auto& ensemble : ensembles) {
        for (int j = 0; j < ensemble.members.cols(); ++j) {
            out << ensemble.step << ',' << j;
            for (int i = 0; i < dim; ++i) out << ',' << format_double(ensemble.members(i, j));
            out << '\n';
        }
    }
    return out.str();
}

std::string epsilon_report_to_json(const EpsilonReport& report) {
    json j;
    j["per_step"] = report.per_step;
    j["epsilon"] = report.epsilon;
    j["grid"] = {{"nodes_u", report.joint_nodes_u},
                 {"nodes_y", report.joint_nodes_y},
                 {"span", report.span},
                 {"filter_grid_nodes", report.filter_grid_nodes}};
    return j.dump(2);
}

void write_text_file(const std::string& path, const std::string& text) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    detail::require(out.good(), ErrorCode::config, "cannot open '" + path + "' for writing");
    out << text;
    detail::require(out.good(), ErrorCode::config, "write to '" + path + "' failed");
}

} // namespace filters
