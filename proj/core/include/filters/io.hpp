#pragma once

#include <string>
#include <vector>

#include "filters/enkf.hpp"
#include "filters/grid.hpp"
#include "filters/metrics.hpp"
#include "filters/models.hpp"
#include "filters/pf.hpp"

namespace filters {

/// Shortest round-trip decimal representation of a double; used by every
/// writer so emitted files are byte-stable.
std::string format_double(double value);

/// DataRecord <-> JSON (arrays of arrays plus the seed used).
std::string data_record_to_json(const DataRecord& record);
DataRecord data_record_from_json(const std::string& text);
void save_data_record(const DataRecord& record, const std::string& path);
DataRecord load_data_record(const std::string& path);

/// GridDensity -> CSV with columns (node, value).
std::string to_csv(const GridDensity& density);

/// Particle filter snapshots -> CSV with columns
/// (step, particle, component_0.., weight).
std::string to_csv(const std::vector<PfState>& states);

/// Ensemble snapshots -> CSV with columns (step, member, component_0..).
std::string to_csv(const std::vector<Ensemble>& ensembles);

/// EpsilonReport -> JSON (per-step array, max, grid metadata).
std::string epsilon_report_to_json(const EpsilonReport& report);

/// Writes text to path, creating parent directories; throws a config error
/// when the file cannot be opened.
void write_text_file(const std::string& path, const std::string& text);

} // namespace filters
