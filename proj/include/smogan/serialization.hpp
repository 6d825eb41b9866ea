#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "smogan/coredata.hpp"
#include "smogan/distgan.hpp"
#include "smogan/harness.hpp"
#include "smogan/metrics.hpp"
#include "smogan/nnengine.hpp"
#include "smogan/smogn.hpp"

namespace smogan {

using Json = nlohmann::json;

inline constexpr const char* kVersion = "1.0.0";
inline constexpr int kConfigSchemaVersion = 1;
inline constexpr const char* kCheckpointVersion = "mlp-v1";

/// Shortest decimal text that parses back to the same double.
std::string format_number(double v);

void write_csv(std::ostream& out, const Dataset& data);

/// Pool rows (already in the units to be written) plus provenance and
/// seed_index columns.
void write_pool_csv(std::ostream& out, const Matrix& rows, const std::vector<std::string>& names,
                    const SyntheticPool& pool);
void write_pool_csv(const std::filesystem::path& path, const Matrix& rows,
                    const std::vector<std::string>& names, const SyntheticPool& pool);

/// Reads a pool CSV. Data columns are matched to `names` by header; the
/// provenance and seed_index columns are optional.
SyntheticPool read_pool_csv(const std::filesystem::path& path, const std::vector<std::string>& names);

void write_history_csv(std::ostream& out, const TrainHistory& history);

Json mlp_to_json(const Mlp& net);
Mlp mlp_from_json(const Json& j);
void save_checkpoint(const std::filesystem::path& path, const Mlp& net);
Mlp load_checkpoint(const std::filesystem::path& path);

void to_json(Json& j, const AdamConfig& c);
void from_json(const Json& j, AdamConfig& c);
void to_json(Json& j, const GanConfig& c);
void from_json(const Json& j, GanConfig& c);
void to_json(Json& j, const SmognParams& p);
void from_json(const Json& j, SmognParams& p);
void to_json(Json& j, const ExperimentConfig& c);
void from_json(const Json& j, ExperimentConfig& c);

/// Overlays a config document onto `base`; keys that are absent keep their
/// current values.
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

Json report_to_json(const ExperimentReport& report, bool include_timings);
void write_report_csv(std::ostream& out, const ExperimentReport& report);

Json diagnostic_to_json(const DiagnosticReport& d);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace smogan
