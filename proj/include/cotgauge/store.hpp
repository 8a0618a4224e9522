#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cotgauge/dataset.hpp"
#include "cotgauge/gateway.hpp"
#include "cotgauge/protocol.hpp"

namespace cotgauge {

enum class Phase { think, corrupt, execute, verify, score };

std::string to_string(Phase p);
const std::vector<Phase>& all_phases();

struct ManifestDataset {
  std::string id;
  std::string path;
  DatasetFormat format = DatasetFormat::canonical_jsonl;
  std::string digest;  // SHA-256 of raw file bytes
  std::optional<std::size_t> sample_n;
  std::uint64_t sample_seed = 0;
};

/// The pinned record that makes a run reproducible: dataset digests, models,
/// committee definitions, decode params, template digests, seeds.
struct RunManifest {
  std::string run_id;
  std::vector<ManifestDataset> datasets;
  std::vector<std::string> thinkers;
  std::vector<std::string> executors;
  std::map<std::string, std::vector<std::string>> committees;  // name -> members
  std::optional<std::string> corruptor;                        // default: the thinker itself
  int corruption_max_attempts = 3;
  DecodeParams decode;
  std::map<std::string, std::string> template_digests;  // condition -> digest
  std::uint64_t seed = 0;                               // run-level seed (default sampling seed)
  BackendKind backend = BackendKind::scripted;
  std::string scripted_table_path;
  VerifiabilityReference reference = VerifiabilityReference::generation;
  int max_concurrency = 4;

  json to_json() const;
  static RunManifest from_json(const json& j);
  std::string digest() const;  // SHA-256 of the canonical dump
};

/// Filesystem layout of one run:
///   <dir>/manifest.json, thinker.jsonl, corrupted.jsonl,
///   trials/<executor>.jsonl, ledgers.json, scores.json, <phase>.done markers.
class RunStore {
 public:
  explicit RunStore(std::filesystem::path run_dir);

  const std::filesystem::path& dir() const { return dir_; }
  bool exists() const;

  /// Creates the store, or verifies the stored manifest matches on reopen.
  void open(const RunManifest& manifest);
  const RunManifest& manifest() const;

  bool phase_done(Phase p) const;
  void mark_phase_done(Phase p);
  /// First phase whose marker is missing; nullopt when the run is complete.
  std::optional<Phase> next_phase() const;

  std::vector<json> load_records(const std::string& relative) const;
  void append_record(const std::string& relative, const json& record);
  /// Atomically replaces the file with the given records, one per line.
  void write_records(const std::string& relative, const std::vector<json>& records);

  void write_json(const std::string& relative, const json& j);
  json read_json(const std::string& relative) const;
  bool file_exists(const std::string& relative) const;

  static std::string trials_file(const std::string& executor) { return "trials/" + executor + ".jsonl"; }

 private:
  std::filesystem::path path_of(const std::string& relative) const;

  std::filesystem::path dir_;
  std::optional<RunManifest> manifest_;
};

}  // namespace cotgauge
