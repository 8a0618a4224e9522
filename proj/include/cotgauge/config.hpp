#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cotgauge/pipeline.hpp"

namespace cotgauge {

/// Parses the TOML subset the config files use: [section] / [section.sub]
/// headers, key = value pairs (strings, integers, floats, booleans,
/// single-line arrays), and # comments. Returns a json tree keyed by section.
json parse_toml_subset(std::string_view text, const std::string& origin);

struct DatasetConfig {
  std::string id;
  std::string path;
  DatasetFormat format = DatasetFormat::canonical_jsonl;
  std::optional<std::size_t> sample_n;
  std::optional<std::uint64_t> sample_seed;
};

struct RunConfig {
  std::vector<DatasetConfig> datasets;
  std::vector<std::string> thinkers;
  std::vector<std::string> executors;
  std::map<std::string, std::vector<std::string>> committees;
  std::optional<std::string> corruptor;
  int corruption_max_attempts = 3;
  DecodeParams decode;
  std::string templates_dir;    // empty = built-in templates
  std::string cache_dir = "cache";
  std::string run_dir = "runs";
  std::string api_url = "http://127.0.0.1:11434";
  BackendKind backend = BackendKind::http;
  std::string scripted_table;   // path, scripted backend only
  VerifiabilityReference reference = VerifiabilityReference::generation;
  int max_concurrency = 4;
  std::uint64_t seed = 0;
  std::filesystem::path base_dir;  // resolves relative paths

  static RunConfig from_file(const std::filesystem::path& path);
  static RunConfig from_toml(std::string_view text, const std::string& origin,
                             const std::filesystem::path& base_dir);

  /// COT_GAUGE_CACHE_DIR / COT_GAUGE_RUN_DIR / COT_GAUGE_API_URL take
  /// precedence over the file values.
  void apply_env_overrides();

  /// Committee membership, file existence, decode ranges.
  void validate() const;

  std::filesystem::path resolve(const std::string& path) const;

  /// The reference config with every default spelled out.
  static std::string reference_toml();
};

/// Loads and samples the datasets, pins digests and template digests, and
/// assembles the manifest for a run.
RunPlan make_run_plan(const RunConfig& config, const std::string& run_id);

/// Builds the gateway described by the config (scripted table or HTTP).
Gateway make_gateway(const RunConfig& config);

}  // namespace cotgauge
