#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "grem/calibration.hpp"
#include "grem/model.hpp"
#include "grem/rwlab.hpp"
#include "grem/simulate.hpp"
#include "grem/stats.hpp"

namespace grem::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline constexpr const char* kCodeVersion = "1.0.0";

inline constexpr const char* kParamsFormat = "grem.params/1";
inline constexpr const char* kConfigFormat = "grem.config/1";
inline constexpr const char* kManifestFormat = "grem.manifest/1";
inline constexpr const char* kReportFormat = "grem.report/1";
inline constexpr const char* kPointsFormat = "grem.points/1";
inline constexpr const char* kReplicatesFormat = "grem.replicates/1";
inline constexpr const char* kTableFormat = "grem.table/1";

// ModelSpec documents carry exactly offspring, displacement, schedule and hypothesis;
// a "format" member is accepted and ignored on read.
json to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const json& j);

json to_json(const CalibratedParams& p);
CalibratedParams params_from_json(const json& j);

json read_json(const fs::path& path);
// Written to a temporary sibling, then renamed into place.
void write_text(const fs::path& path, const std::string& text);
void write_json(const fs::path& path, const json& j);

std::string sha256_hex(const std::string& data);

// Shortest text that parses back to the same double; inf, -inf and nan spelled out.
std::string format_double(double x);
double parse_double(const std::string& s);

std::string points_csv(std::span<const RunResult> batch);
std::string replicates_csv(std::span<const RunResult> batch);
std::vector<RunResult> read_batch(const fs::path& points_csv, const fs::path& replicates_csv, int k_n);

std::string laplace_csv(const stats::StatsReport& rep);
std::string counts_csv(const stats::StatsReport& rep);
std::string overlap_csv(const stats::StatsReport& rep);
std::string barrier_csv(const stats::StatsReport& rep);
std::string ks_csv(const std::vector<stats::StatsReport>& reports);
json to_json(const stats::StatsReport& rep);

std::string check_csv(const rwlab::CheckReport& rep);

struct ExperimentConfig {
  ModelSpec spec;
  std::vector<int> n_grid = {8};
  std::uint64_t replicates = 10;
  std::uint64_t seed = 1;
  std::optional<double> window;
  PruneConfig prune;
  std::string out_dir = "grem_out";
  unsigned threads = 1;
  stats::AnalyzeOptions analyze;
};

ExperimentConfig config_from_json(const json& j);
json to_json(const ExperimentConfig& c);
void validate_config(const ExperimentConfig& c);

struct ManifestFile {
  std::string path;
  std::string format;
  std::string stage;
};

struct RunManifest {
  std::string config_hash;
  std::string code_version = kCodeVersion;
  std::vector<ManifestFile> files;
  double wall_clock_seconds = 0;
  std::uint64_t seed = 0;
  bool complete = false;
  std::string failed_stage;
  std::string error;
};

json to_json(const RunManifest& m);

// calibrate -> simulate (per n) -> analyze; the manifest is written last, also on failure.
RunManifest run_pipeline(const ExperimentConfig& config);

}  // namespace grem::io
