#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cotgauge/metrics.hpp"
#include "cotgauge/store.hpp"

namespace cotgauge {

/// Everything a run needs in memory: the pinned manifest plus the loaded
/// (and already sampled) datasets it describes, and the prompt templates.
struct RunPlan {
  RunManifest manifest;
  std::vector<Dataset> datasets;  // aligned with manifest.datasets
  TemplateSet templates;
};

/// Store-backed, resumable orchestration of the five phases:
/// think -> corrupt -> execute -> verify -> score. Completed phases are never
/// re-executed; partially complete phases resume at the first missing record.
class Pipeline {
 public:
  Pipeline(RunPlan plan, Gateway& gateway, const std::filesystem::path& run_dir);

  std::optional<Phase> next_phase() const { return store_.next_phase(); }
  void run_phase(Phase p);
  void run_all();

  void run_think();
  void run_corrupt();
  void run_execute();
  void run_verify();
  void run_score();

  const RunStore& store() const { return store_; }
  const RunPlan& plan() const { return plan_; }

  /// Recomputes every ledger and score from the stored trial records and
  /// compares with ledgers.json / scores.json; returns the mismatches.
  std::vector<std::string> verify_outputs() const;

 private:
  struct LoadedState;

  void require_done(Phase p) const;
  const Dataset& dataset_at(std::size_t i) const { return plan_.datasets[i]; }
  ModelRef model_ref(const std::string& name, RoleHint role) const;
  const Question& question_by_id(std::size_t dataset_index, const std::string& id) const;

  std::vector<json> sort_thinker_records(std::vector<json> records) const;
  std::vector<json> sort_corrupted_records(std::vector<json> records) const;
  std::vector<json> sort_trial_records(std::vector<json> records) const;

  LoadedState load_state(bool need_corrupted, bool need_trials) const;
  std::pair<json, json> build_outputs(const LoadedState& state) const;

  RunPlan plan_;
  Gateway& gateway_;
  ProtocolEngine engine_;
  RunStore store_;
};

/// Builds the score matrix for the plan's thinkers x datasets x committees
/// from per-executor ledgers.
ScoreMatrix build_score_matrix(
    const RunManifest& manifest,
    const std::map<std::string, std::map<std::string, std::vector<ThinkerOutcome>>>& outcomes,
    const std::vector<ReusabilityLedger>& reusability, const std::vector<VerifiabilityLedger>& verifiability);

}  // namespace cotgauge
