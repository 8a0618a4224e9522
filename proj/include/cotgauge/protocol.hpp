#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cotgauge/dataset.hpp"
#include "cotgauge/extract.hpp"
#include "cotgauge/gateway.hpp"
#include "cotgauge/prompt.hpp"

namespace cotgauge {

/// A reasoning trace for one question: the thinker's original chain or a
/// corrupted rewrite. `text` is what downstream prompts embed (the final
/// answer line is stripped out); `raw_text` keeps the full completion.
struct CoTTrace {
  enum class Kind { original, corrupted };

  ModelRef thinker;
  std::string question_id;
  Kind kind = Kind::original;
  std::string text;
  std::string raw_text;
  ExtractionResult produced_answer;
  int attempts = 0;  // corrupted only; >= 1 once generation ran

  static std::string kind_name(Kind k) { return k == Kind::original ? "original" : "corrupted"; }
};

enum class Partition { correct, wrong, defect };

std::string to_string(Partition p);
Partition partition_from_string(const std::string& s);

/// Thinker pass result for one question. `defect` carries the gateway error
/// when the completion could not be obtained; such questions stay out of
/// Q_correct but still count in the accuracy denominator.
struct ThinkerOutcome {
  std::string question_id;
  std::string dataset_id;
  CoTTrace trace;
  Grade answer_grade = Grade::wrong;
  Partition partition = Partition::wrong;
  std::string defect;

  json to_json() const;
  static ThinkerOutcome from_json(const json& j, const AnswerForm& form);
};

enum class TrialPhase { reusability, verifiability };

std::string to_string(TrialPhase p);
TrialPhase trial_phase_from_string(const std::string& s);

/// One executor observation: (executor, question, condition) within a phase.
/// `thinker_match` is present exactly on verifiability-pass with_cot trials.
struct TrialRecord {
  std::string executor;
  std::string thinker;
  std::string dataset_id;
  std::string question_id;
  TrialPhase phase = TrialPhase::reusability;
  Condition condition = Condition::baseline;
  std::string raw_text;
  ExtractionResult extracted;
  Grade answer_grade = Grade::wrong;
  std::optional<bool> thinker_match;
  std::string defect;

  json to_json() const;
  static TrialRecord from_json(const json& j, const AnswerForm& form);
};

/// Outcome of corrupting one CoT. `valid` means the thinker, re-prompted with
/// the corrupted chain, graded wrong. Failures keep the question in the
/// reusability denominator but it can never be harmed.
struct CorruptionOutcome {
  enum class Status { valid, failed, defect };

  Status status = Status::failed;
  std::string corruptor;
  CoTTrace trace;  // meaningful iff valid
  ExtractionResult validation_answer;
  int attempts = 0;
  std::string defect;

  json to_json(const std::string& dataset_id) const;
  static CorruptionOutcome from_json(const json& j, const AnswerForm& form);
};

/// Counted sets behind the reusability score for one (thinker, executor,
/// dataset) triple.
struct ReusabilityLedger {
  std::string thinker;
  std::string executor;
  std::string dataset_id;
  std::size_t n_correct = 0;
  std::set<std::string> helped_ids;
  std::set<std::string> harmed_ids;
  std::set<std::string> help_eligible_ids;   // baseline wrong
  std::set<std::string> harm_eligible_ids;   // baseline correct
  std::set<std::string> corruption_failures; // harm-eligible, no valid corrupted CoT
  std::set<std::string> defect_ids;          // baseline trial failed

  /// Throws when the set algebra is inconsistent.
  void check_invariants() const;

  json to_json() const;
  static ReusabilityLedger from_json(const json& j);
  bool operator==(const ReusabilityLedger&) const = default;
};

struct VerifiabilityLedger {
  std::string thinker;
  std::string executor;
  std::string dataset_id;
  std::size_t n_total = 0;
  std::set<std::string> match_ids;

  void check_invariants() const;

  json to_json() const;
  static VerifiabilityLedger from_json(const json& j);
  bool operator==(const VerifiabilityLedger&) const = default;
};

enum class VerifiabilityReference { generation, reprompt };

std::string to_string(VerifiabilityReference r);
VerifiabilityReference verifiability_reference_from_string(const std::string& s);

struct EngineConfig {
  DecodeParams decode;
  int corruption_max_attempts = 3;
  std::optional<std::string> corruptor_model;  // default: the thinker itself
  VerifiabilityReference reference = VerifiabilityReference::generation;
  int max_parallel = 4;
};

/// Drives the thinker / corruption / executor / verifiability passes against
/// a gateway. All aggregation is set-based, so question order and scheduling
/// never change the resulting ledgers.
class ProtocolEngine {
 public:
  ProtocolEngine(Gateway& gateway, TemplateSet templates, EngineConfig config);

  const EngineConfig& config() const { return config_; }
  const TemplateSet& templates() const { return templates_; }

  /// One thinker_generate completion per question; CoT and answer come from
  /// the same completion.
  std::vector<ThinkerOutcome> run_thinker_pass(const ModelRef& thinker, const Dataset& d) const;
  ThinkerOutcome think_one(const ModelRef& thinker, const Question& q) const;

  /// Loops corruptor rewrite + thinker validation until the thinker grades
  /// wrong, up to max_attempts. Per-attempt decode seeds step so retries are
  /// distinct cache entries.
  CorruptionOutcome generate_corrupted_cot(const ModelRef& corruptor, const ModelRef& thinker,
                                           const Question& q, const CoTTrace& original,
                                           int max_attempts) const;

  using CorruptedMap = std::map<std::string, CorruptionOutcome>;  // question_id -> outcome

  /// Corrupts every Q_correct question (every executor with a correct
  /// baseline will need it).
  CorruptedMap run_corruption_pass(const ModelRef& thinker, const Dataset& d,
                                   const std::vector<ThinkerOutcome>& outcomes) const;

  /// One (executor, question, condition) trial; the resume path schedules
  /// these individually.
  TrialRecord run_single_trial(const ModelRef& executor, const std::string& thinker_name,
                               const Question& q, TrialPhase phase, Condition condition,
                               const std::optional<std::string>& cot) const;

  /// Baseline + conditioned trials for one (executor, question); one or two
  /// records depending on the baseline branch.
  std::vector<TrialRecord> reusability_trials_for_question(const ThinkerOutcome& outcome,
                                                           const CorruptedMap& corrupted,
                                                           const ModelRef& executor,
                                                           const Question& q) const;

  struct ReusabilityResult {
    ReusabilityLedger ledger;
    std::vector<TrialRecord> trials;
  };
  ReusabilityResult run_reusability_trials(const std::vector<ThinkerOutcome>& outcomes,
                                           const CorruptedMap& corrupted, const ModelRef& executor,
                                           const Dataset& d) const;

  TrialRecord verifiability_trial(const ThinkerOutcome& outcome, const ModelRef& executor,
                                  const Question& q) const;

  struct VerifiabilityResult {
    VerifiabilityLedger ledger;
    std::vector<TrialRecord> trials;
  };
  VerifiabilityResult run_verifiability_pass(const std::vector<ThinkerOutcome>& outcomes,
                                             const ModelRef& executor, const Dataset& d) const;

  ModelRef corruptor_for(const ModelRef& thinker) const;

 private:
  TrialRecord run_trial(const ModelRef& executor, const std::string& thinker_name, const Question& q,
                        TrialPhase phase, Condition condition,
                        const std::optional<std::string>& cot) const;

  Gateway& gateway_;
  TemplateSet templates_;
  EngineConfig config_;
};

/// Rebuilds the reusability ledger for (thinker, executor, dataset) from
/// stored outcomes, corruption results, and trial records. Shared by the
/// in-memory passes and the run store's score phase.
ReusabilityLedger build_reusability_ledger(const std::string& thinker, const std::string& executor,
                                           const Dataset& d, const std::vector<ThinkerOutcome>& outcomes,
                                           const ProtocolEngine::CorruptedMap& corrupted,
                                           const std::vector<TrialRecord>& trials);

VerifiabilityLedger build_verifiability_ledger(const std::string& thinker, const std::string& executor,
                                               const Dataset& d,
                                               const std::vector<TrialRecord>& trials);

/// Strips the line holding the extracted answer marker out of a completion,
/// yielding the reasoning text passed downstream.
std::string strip_answer_line(const std::string& raw, const ExtractionResult& extraction);

}  // namespace cotgauge
