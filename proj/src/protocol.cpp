#include "cotgauge/protocol.hpp"

#include <algorithm>
#include <stdexcept>

namespace cotgauge {

std::string to_string(Partition p) {
  switch (p) {
    case Partition::correct: return "correct";
    case Partition::wrong: return "wrong";
    case Partition::defect: return "defect";
  }
  throw std::logic_error("unknown partition");
}

Partition partition_from_string(const std::string& s) {
  if (s == "correct") return Partition::correct;
  if (s == "wrong") return Partition::wrong;
  if (s == "defect") return Partition::defect;
  throw std::runtime_error("unknown partition: " + s);
}

std::string to_string(TrialPhase p) { return p == TrialPhase::reusability ? "reusability" : "verifiability"; }

TrialPhase trial_phase_from_string(const std::string& s) {
  if (s == "reusability") return TrialPhase::reusability;
  if (s == "verifiability") return TrialPhase::verifiability;
  throw std::runtime_error("unknown trial phase: " + s);
}

std::string to_string(VerifiabilityReference r) {
  return r == VerifiabilityReference::generation ? "generation" : "reprompt";
}

VerifiabilityReference verifiability_reference_from_string(const std::string& s) {
  if (s == "generation") return VerifiabilityReference::generation;
  if (s == "reprompt") return VerifiabilityReference::reprompt;
  throw std::runtime_error("unknown verifiability reference mode: " + s);
}

std::string strip_answer_line(const std::string& raw, const ExtractionResult& extraction) {
  if (!extraction.parsed || extraction.span_begin >= raw.size()) return raw;
  std::size_t line_begin = raw.rfind('\n', extraction.span_begin);
  line_begin = (line_begin == std::string::npos) ? 0 : line_begin + 1;
  std::size_t line_end = raw.find('\n', extraction.span_begin);
  line_end = (line_end == std::string::npos) ? raw.size() : line_end + 1;
  std::string out = raw.substr(0, line_begin) + raw.substr(line_end);
  while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
  if (trim(out).empty()) return raw;
  return out;
}

json ThinkerOutcome::to_json() const {
  json j;
  j["question_id"] = question_id;
  j["dataset"] = dataset_id;
  j["thinker"] = trace.thinker.model_name;
  j["raw_text"] = trace.raw_text;
  j["cot_text"] = trace.text;
  j["answer"] = trace.produced_answer.to_json();
  j["grade"] = to_string(answer_grade);
  j["partition"] = to_string(partition);
  if (!defect.empty()) j["defect"] = defect;
  return j;
}

ThinkerOutcome ThinkerOutcome::from_json(const json& j, const AnswerForm& form) {
  ThinkerOutcome o;
  o.question_id = j.at("question_id").get<std::string>();
  o.dataset_id = j.at("dataset").get<std::string>();
  o.trace.thinker.model_name = j.at("thinker").get<std::string>();
  o.trace.question_id = o.question_id;
  o.trace.kind = CoTTrace::Kind::original;
  o.trace.raw_text = j.at("raw_text").get<std::string>();
  o.trace.text = j.at("cot_text").get<std::string>();
  o.trace.produced_answer = ExtractionResult::from_json(j.at("answer"), form);
  o.answer_grade = grade_from_string(j.at("grade").get<std::string>());
  o.partition = partition_from_string(j.at("partition").get<std::string>());
  o.defect = j.value("defect", "");
  return o;
}

json TrialRecord::to_json() const {
  json j;
  j["executor"] = executor;
  j["thinker"] = thinker;
  j["dataset"] = dataset_id;
  j["question_id"] = question_id;
  j["phase"] = to_string(phase);
  j["condition"] = to_string(condition);
  j["raw_text"] = raw_text;
  j["extracted"] = extracted.to_json();
  j["grade"] = to_string(answer_grade);
  if (thinker_match.has_value()) j["thinker_match"] = *thinker_match;
  if (!defect.empty()) j["defect"] = defect;
  return j;
}

TrialRecord TrialRecord::from_json(const json& j, const AnswerForm& form) {
  TrialRecord r;
  r.executor = j.at("executor").get<std::string>();
  r.thinker = j.at("thinker").get<std::string>();
  r.dataset_id = j.at("dataset").get<std::string>();
  r.question_id = j.at("question_id").get<std::string>();
  r.phase = trial_phase_from_string(j.at("phase").get<std::string>());
  r.condition = condition_from_string(j.at("condition").get<std::string>());
  r.raw_text = j.at("raw_text").get<std::string>();
  r.extracted = ExtractionResult::from_json(j.at("extracted"), form);
  r.answer_grade = grade_from_string(j.at("grade").get<std::string>());
  if (j.contains("thinker_match")) r.thinker_match = j.at("thinker_match").get<bool>();
  r.defect = j.value("defect", "");
  return r;
}

json CorruptionOutcome::to_json(const std::string& dataset_id) const {
  json j;
  j["question_id"] = trace.question_id;
  j["dataset"] = dataset_id;
  j["thinker"] = trace.thinker.model_name;
  j["corruptor"] = corruptor;
  switch (status) {
    case Status::valid: j["status"] = "valid"; break;
    case Status::failed: j["status"] = "failed"; break;
    case Status::defect: j["status"] = "defect"; break;
  }
  j["attempts"] = attempts;
  j["text"] = trace.text;
  j["raw_text"] = trace.raw_text;
  j["validation_answer"] = validation_answer.to_json();
  if (!defect.empty()) j["defect"] = defect;
  return j;
}

CorruptionOutcome CorruptionOutcome::from_json(const json& j, const AnswerForm& form) {
  CorruptionOutcome o;
  std::string status = j.at("status").get<std::string>();
  if (status == "valid") o.status = Status::valid;
  else if (status == "failed") o.status = Status::failed;
  else if (status == "defect") o.status = Status::defect;
  else throw std::runtime_error("unknown corruption status: " + status);
  o.corruptor = j.at("corruptor").get<std::string>();
  o.trace.question_id = j.at("question_id").get<std::string>();
  o.trace.thinker.model_name = j.at("thinker").get<std::string>();
  o.trace.kind = CoTTrace::Kind::corrupted;
  o.trace.text = j.at("text").get<std::string>();
  o.trace.raw_text = j.at("raw_text").get<std::string>();
  o.attempts = j.at("attempts").get<int>();
  o.trace.attempts = o.attempts;
  o.validation_answer = ExtractionResult::from_json(j.at("validation_answer"), form);
  o.trace.produced_answer = o.validation_answer;
  o.defect = j.value("defect", "");
  return o;
}

namespace {

bool is_subset(const std::set<std::string>& a, const std::set<std::string>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

bool disjoint(const std::set<std::string>& a, const std::set<std::string>& b) {
  for (const auto& x : a) {
    if (b.count(x)) return false;
  }
  return true;
}

}  // namespace

void ReusabilityLedger::check_invariants() const {
  auto fail = [&](const std::string& what) {
    throw std::runtime_error("reusability ledger (" + thinker + ", " + executor + ", " + dataset_id +
                             "): " + what);
  };
  if (!is_subset(helped_ids, help_eligible_ids)) fail("helped_ids not a subset of help_eligible_ids");
  if (!is_subset(harmed_ids, harm_eligible_ids)) fail("harmed_ids not a subset of harm_eligible_ids");
  if (!disjoint(help_eligible_ids, harm_eligible_ids)) fail("eligible sets overlap");
  if (!disjoint(defect_ids, help_eligible_ids) || !disjoint(defect_ids, harm_eligible_ids)) {
    fail("defect_ids overlap an eligible set");
  }
  if (!is_subset(corruption_failures, harm_eligible_ids)) {
    fail("corruption_failures not a subset of harm_eligible_ids");
  }
  if (help_eligible_ids.size() + harm_eligible_ids.size() + defect_ids.size() != n_correct) {
    fail("eligible/defect sets do not partition Q_correct");
  }
  if (helped_ids.size() + harmed_ids.size() > n_correct) fail("|helped| + |harmed| exceeds |Q_correct|");
}

json ReusabilityLedger::to_json() const {
  json j;
  j["thinker"] = thinker;
  j["executor"] = executor;
  j["dataset"] = dataset_id;
  j["n_correct"] = n_correct;
  j["helped_ids"] = helped_ids;
  j["harmed_ids"] = harmed_ids;
  j["help_eligible_ids"] = help_eligible_ids;
  j["harm_eligible_ids"] = harm_eligible_ids;
  j["corruption_failures"] = corruption_failures;
  j["defect_ids"] = defect_ids;
  return j;
}

ReusabilityLedger ReusabilityLedger::from_json(const json& j) {
  ReusabilityLedger l;
  l.thinker = j.at("thinker").get<std::string>();
  l.executor = j.at("executor").get<std::string>();
  l.dataset_id = j.at("dataset").get<std::string>();
  l.n_correct = j.at("n_correct").get<std::size_t>();
  l.helped_ids = j.at("helped_ids").get<std::set<std::string>>();
  l.harmed_ids = j.at("harmed_ids").get<std::set<std::string>>();
  l.help_eligible_ids = j.at("help_eligible_ids").get<std::set<std::string>>();
  l.harm_eligible_ids = j.at("harm_eligible_ids").get<std::set<std::string>>();
  l.corruption_failures = j.at("corruption_failures").get<std::set<std::string>>();
  l.defect_ids = j.at("defect_ids").get<std::set<std::string>>();
  return l;
}

void VerifiabilityLedger::check_invariants() const {
  if (match_ids.size() > n_total) {
    throw std::runtime_error("verifiability ledger (" + thinker + ", " + executor + ", " + dataset_id +
                             "): more matches than questions");
  }
}

json VerifiabilityLedger::to_json() const {
  json j;
  j["thinker"] = thinker;
  j["executor"] = executor;
  j["dataset"] = dataset_id;
  j["n_total"] = n_total;
  j["match_ids"] = match_ids;
  return j;
}

VerifiabilityLedger VerifiabilityLedger::from_json(const json& j) {
  VerifiabilityLedger l;
  l.thinker = j.at("thinker").get<std::string>();
  l.executor = j.at("executor").get<std::string>();
  l.dataset_id = j.at("dataset").get<std::string>();
  l.n_total = j.at("n_total").get<std::size_t>();
  l.match_ids = j.at("match_ids").get<std::set<std::string>>();
  return l;
}

ProtocolEngine::ProtocolEngine(Gateway& gateway, TemplateSet templates, EngineConfig config)
    : gateway_(gateway), templates_(std::move(templates)), config_(std::move(config)) {
  config_.decode.validate();
  if (config_.corruption_max_attempts < 0) {
    throw std::runtime_error("corruption_max_attempts must be non-negative");
  }
}

ModelRef ProtocolEngine::corruptor_for(const ModelRef& thinker) const {
  ModelRef corruptor = thinker;
  corruptor.role_hint = RoleHint::corruptor;
  if (config_.corruptor_model) corruptor.model_name = *config_.corruptor_model;
  return corruptor;
}

ThinkerOutcome ProtocolEngine::think_one(const ModelRef& thinker, const Question& q) const {
  ThinkerOutcome outcome;
  outcome.question_id = q.id;
  outcome.dataset_id = q.dataset_id;
  outcome.trace.thinker = thinker;
  outcome.trace.question_id = q.id;
  outcome.trace.kind = CoTTrace::Kind::original;

  std::string prompt = render_prompt(q, Condition::thinker_generate, std::nullopt,
                                     templates_.for_condition(Condition::thinker_generate));
  try {
    Completion completion = gateway_.complete(thinker, prompt, config_.decode);
    outcome.trace.raw_text = completion.text;
    outcome.trace.produced_answer = extract_answer(completion.text, q.form);
    outcome.trace.text = strip_answer_line(completion.text, outcome.trace.produced_answer);
    outcome.answer_grade = grade(outcome.trace.produced_answer, q.gold, q.form);
    outcome.partition = outcome.answer_grade == Grade::correct ? Partition::correct : Partition::wrong;
  } catch (const std::exception& e) {
    outcome.defect = e.what();
    outcome.partition = Partition::defect;
    outcome.answer_grade = Grade::wrong;
  }
  return outcome;
}

std::vector<ThinkerOutcome> ProtocolEngine::run_thinker_pass(const ModelRef& thinker,
                                                             const Dataset& d) const {
  std::vector<ThinkerOutcome> outcomes(d.questions.size());
  parallel_for(d.questions.size(), config_.max_parallel,
               [&](std::size_t i) { outcomes[i] = think_one(thinker, d.questions[i]); });
  return outcomes;
}

CorruptionOutcome ProtocolEngine::generate_corrupted_cot(const ModelRef& corruptor, const ModelRef& thinker,
                                                         const Question& q, const CoTTrace& original,
                                                         int max_attempts) const {
  if (original.kind != CoTTrace::Kind::original) {
    throw std::runtime_error("generate_corrupted_cot: input trace is not an original CoT");
  }

  CorruptionOutcome outcome;
  outcome.corruptor = corruptor.model_name;
  outcome.trace.thinker = thinker;
  outcome.trace.question_id = q.id;
  outcome.trace.kind = CoTTrace::Kind::corrupted;

  std::string corrupt_prompt =
      render_prompt(q, Condition::corruptor, original.text, templates_.for_condition(Condition::corruptor));

  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    outcome.attempts = attempt;
    outcome.trace.attempts = attempt;
    // Step the seed so each retry is a distinct request under caching.
    DecodeParams params = config_.decode;
    if (attempt > 1 && params.seed) *params.seed += attempt - 1;

    try {
      Completion rewritten = gateway_.complete(corruptor, corrupt_prompt, params);
      ExtractionResult candidate_answer = extract_answer(rewritten.text, q.form);
      std::string candidate_text = strip_answer_line(rewritten.text, candidate_answer);

      std::string validation_prompt = render_prompt(q, Condition::thinker_validation, candidate_text,
                                                    templates_.for_condition(Condition::thinker_validation));
      Completion validation = gateway_.complete(thinker, validation_prompt, config_.decode);
      ExtractionResult validation_answer = extract_answer(validation.text, q.form);

      if (grade(validation_answer, q.gold, q.form) == Grade::wrong) {
        outcome.status = CorruptionOutcome::Status::valid;
        outcome.trace.raw_text = rewritten.text;
        outcome.trace.text = candidate_text;
        outcome.trace.produced_answer = validation_answer;
        outcome.validation_answer = validation_answer;
        return outcome;
      }
      outcome.validation_answer = validation_answer;
    } catch (const std::exception& e) {
      outcome.status = CorruptionOutcome::Status::defect;
      outcome.defect = e.what();
      return outcome;
    }
  }
  outcome.status = CorruptionOutcome::Status::failed;
  return outcome;
}

ProtocolEngine::CorruptedMap ProtocolEngine::run_corruption_pass(
    const ModelRef& thinker, const Dataset& d, const std::vector<ThinkerOutcome>& outcomes) const {
  std::vector<const Question*> eligible;
  std::vector<const ThinkerOutcome*> eligible_outcomes;
  for (const auto& q : d.questions) {
    for (const auto& outcome : outcomes) {
      if (outcome.question_id == q.id && outcome.partition == Partition::correct) {
        eligible.push_back(&q);
        eligible_outcomes.push_back(&outcome);
        break;
      }
    }
  }

  ModelRef corruptor = corruptor_for(thinker);
  std::vector<CorruptionOutcome> results(eligible.size());
  parallel_for(eligible.size(), config_.max_parallel, [&](std::size_t i) {
    results[i] = generate_corrupted_cot(corruptor, thinker, *eligible[i], eligible_outcomes[i]->trace,
                                        config_.corruption_max_attempts);
  });

  CorruptedMap map;
  for (std::size_t i = 0; i < eligible.size(); ++i) {
    results[i].trace.question_id = eligible[i]->id;
    map.emplace(eligible[i]->id, std::move(results[i]));
  }
  return map;
}

TrialRecord ProtocolEngine::run_single_trial(const ModelRef& executor, const std::string& thinker_name,
                                             const Question& q, TrialPhase phase, Condition condition,
                                             const std::optional<std::string>& cot) const {
  return run_trial(executor, thinker_name, q, phase, condition, cot);
}

TrialRecord ProtocolEngine::run_trial(const ModelRef& executor, const std::string& thinker_name,
                                      const Question& q, TrialPhase phase, Condition condition,
                                      const std::optional<std::string>& cot) const {
  TrialRecord record;
  record.executor = executor.model_name;
  record.thinker = thinker_name;
  record.dataset_id = q.dataset_id;
  record.question_id = q.id;
  record.phase = phase;
  record.condition = condition;

  try {
    std::string prompt = render_prompt(q, condition, cot, templates_.for_condition(condition));
    Completion completion = gateway_.complete(executor, prompt, config_.decode);
    record.raw_text = completion.text;
    record.extracted = extract_answer(completion.text, q.form);
    record.answer_grade = grade(record.extracted, q.gold, q.form);
  } catch (const std::exception& e) {
    record.defect = e.what();
    record.answer_grade = Grade::wrong;
    record.extracted = ExtractionResult::fail("trial defect: " + std::string(e.what()));
  }
  return record;
}

std::vector<TrialRecord> ProtocolEngine::reusability_trials_for_question(const ThinkerOutcome& outcome,
                                                                         const CorruptedMap& corrupted,
                                                                         const ModelRef& executor,
                                                                         const Question& q) const {
  std::vector<TrialRecord> records;
  if (outcome.partition != Partition::correct) return records;

  TrialRecord baseline =
      run_trial(executor, outcome.trace.thinker.model_name, q, TrialPhase::reusability,
                Condition::baseline, std::nullopt);
  records.push_back(baseline);
  if (!baseline.defect.empty()) return records;

  if (baseline.answer_grade == Grade::wrong) {
    records.push_back(run_trial(executor, outcome.trace.thinker.model_name, q, TrialPhase::reusability,
                                Condition::with_cot, outcome.trace.text));
  } else {
    auto it = corrupted.find(q.id);
    if (it != corrupted.end() && it->second.status == CorruptionOutcome::Status::valid) {
      records.push_back(run_trial(executor, outcome.trace.thinker.model_name, q, TrialPhase::reusability,
                                  Condition::with_corrupted_cot, it->second.trace.text));
    }
    // No valid corrupted CoT: the question stays eligible-but-unharmed.
  }
  return records;
}

ProtocolEngine::ReusabilityResult ProtocolEngine::run_reusability_trials(
    const std::vector<ThinkerOutcome>& outcomes, const CorruptedMap& corrupted, const ModelRef& executor,
    const Dataset& d) const {
  std::map<std::string, const ThinkerOutcome*> by_id;
  for (const auto& outcome : outcomes) by_id[outcome.question_id] = &outcome;

  std::vector<std::vector<TrialRecord>> per_question(d.questions.size());
  parallel_for(d.questions.size(), config_.max_parallel, [&](std::size_t i) {
    auto it = by_id.find(d.questions[i].id);
    if (it == by_id.end()) return;
    per_question[i] = reusability_trials_for_question(*it->second, corrupted, executor, d.questions[i]);
  });

  ReusabilityResult result;
  for (auto& records : per_question) {
    for (auto& record : records) result.trials.push_back(std::move(record));
  }
  std::string thinker_name = outcomes.empty() ? "" : outcomes.front().trace.thinker.model_name;
  result.ledger =
      build_reusability_ledger(thinker_name, executor.model_name, d, outcomes, corrupted, result.trials);
  return result;
}

TrialRecord ProtocolEngine::verifiability_trial(const ThinkerOutcome& outcome, const ModelRef& executor,
                                                const Question& q) const {
  // Without a usable thinker reference the question can never match; the
  // executor call is skipped and the trial is recorded as a non-match.
  auto reference_unavailable = [&](const std::string& why) {
    TrialRecord record;
    record.executor = executor.model_name;
    record.thinker = outcome.trace.thinker.model_name;
    record.dataset_id = q.dataset_id;
    record.question_id = q.id;
    record.phase = TrialPhase::verifiability;
    record.condition = Condition::with_cot;
    record.extracted = ExtractionResult::fail(why);
    record.answer_grade = Grade::wrong;
    record.thinker_match = false;
    record.defect = why;
    return record;
  };

  if (outcome.partition == Partition::defect) {
    return reference_unavailable("thinker pass defect: " + outcome.defect);
  }

  ExtractionResult reference = outcome.trace.produced_answer;
  if (config_.reference == VerifiabilityReference::reprompt) {
    try {
      std::string reprompt = render_prompt(q, Condition::with_cot, outcome.trace.text,
                                           templates_.for_condition(Condition::with_cot));
      Completion completion = gateway_.complete(outcome.trace.thinker, reprompt, config_.decode);
      reference = extract_answer(completion.text, q.form);
    } catch (const std::exception& e) {
      return reference_unavailable("thinker reprompt defect: " + std::string(e.what()));
    }
  }
  if (!reference.parsed) {
    return reference_unavailable("thinker reference answer unparseable: " + reference.reason);
  }

  TrialRecord record = run_trial(executor, outcome.trace.thinker.model_name, q, TrialPhase::verifiability,
                                 Condition::with_cot, outcome.trace.text);
  record.thinker_match = record.defect.empty() && record.extracted.parsed &&
                         answers_equal(record.extracted.value, reference.value, q.form);
  return record;
}

ProtocolEngine::VerifiabilityResult ProtocolEngine::run_verifiability_pass(
    const std::vector<ThinkerOutcome>& outcomes, const ModelRef& executor, const Dataset& d) const {
  std::map<std::string, const ThinkerOutcome*> by_id;
  for (const auto& outcome : outcomes) by_id[outcome.question_id] = &outcome;

  std::vector<TrialRecord> trials(d.questions.size());
  parallel_for(d.questions.size(), config_.max_parallel, [&](std::size_t i) {
    auto it = by_id.find(d.questions[i].id);
    if (it == by_id.end()) throw std::runtime_error("no thinker outcome for question " + d.questions[i].id);
    trials[i] = verifiability_trial(*it->second, executor, d.questions[i]);
  });

  VerifiabilityResult result;
  result.trials = std::move(trials);
  std::string thinker_name = outcomes.empty() ? "" : outcomes.front().trace.thinker.model_name;
  result.ledger = build_verifiability_ledger(thinker_name, executor.model_name, d, result.trials);
  return result;
}

ReusabilityLedger build_reusability_ledger(const std::string& thinker, const std::string& executor,
                                           const Dataset& d, const std::vector<ThinkerOutcome>& outcomes,
                                           const ProtocolEngine::CorruptedMap& corrupted,
                                           const std::vector<TrialRecord>& trials) {
  ReusabilityLedger ledger;
  ledger.thinker = thinker;
  ledger.executor = executor;
  ledger.dataset_id = d.dataset_id;

  std::map<std::string, const ThinkerOutcome*> outcome_by_id;
  for (const auto& outcome : outcomes) outcome_by_id[outcome.question_id] = &outcome;

  std::map<std::pair<std::string, Condition>, const TrialRecord*> trial_by_key;
  for (const auto& trial : trials) {
    if (trial.phase != TrialPhase::reusability) continue;
    if (trial.executor != executor || trial.thinker != thinker || trial.dataset_id != d.dataset_id) continue;
    trial_by_key[{trial.question_id, trial.condition}] = &trial;
  }

  for (const auto& q : d.questions) {
    auto oit = outcome_by_id.find(q.id);
    if (oit == outcome_by_id.end() || oit->second->partition != Partition::correct) continue;
    ++ledger.n_correct;

    auto bit = trial_by_key.find({q.id, Condition::baseline});
    if (bit == trial_by_key.end()) {
      throw std::runtime_error("reusability ledger: missing baseline trial for question " + q.id);
    }
    const TrialRecord& baseline = *bit->second;
    if (!baseline.defect.empty()) {
      ledger.defect_ids.insert(q.id);
      continue;
    }

    if (baseline.answer_grade == Grade::wrong) {
      ledger.help_eligible_ids.insert(q.id);
      auto wit = trial_by_key.find({q.id, Condition::with_cot});
      if (wit == trial_by_key.end()) {
        throw std::runtime_error("reusability ledger: missing with_cot trial for question " + q.id);
      }
      if (wit->second->defect.empty() && wit->second->answer_grade == Grade::correct) {
        ledger.helped_ids.insert(q.id);
      }
    } else {
      ledger.harm_eligible_ids.insert(q.id);
      auto cit = corrupted.find(q.id);
      bool have_corrupted = cit != corrupted.end() && cit->second.status == CorruptionOutcome::Status::valid;
      if (!have_corrupted) {
        ledger.corruption_failures.insert(q.id);
        continue;
      }
      auto hit = trial_by_key.find({q.id, Condition::with_corrupted_cot});
      if (hit == trial_by_key.end()) {
        throw std::runtime_error("reusability ledger: missing with_corrupted_cot trial for question " + q.id);
      }
      if (hit->second->defect.empty() && hit->second->answer_grade == Grade::wrong) {
        ledger.harmed_ids.insert(q.id);
      }
    }
  }

  ledger.check_invariants();
  return ledger;
}

VerifiabilityLedger build_verifiability_ledger(const std::string& thinker, const std::string& executor,
                                               const Dataset& d, const std::vector<TrialRecord>& trials) {
  VerifiabilityLedger ledger;
  ledger.thinker = thinker;
  ledger.executor = executor;
  ledger.dataset_id = d.dataset_id;
  ledger.n_total = d.questions.size();

  std::map<std::string, const TrialRecord*> trial_by_id;
  for (const auto& trial : trials) {
    if (trial.phase != TrialPhase::verifiability) continue;
    if (trial.executor != executor || trial.thinker != thinker || trial.dataset_id != d.dataset_id) continue;
    trial_by_id[trial.question_id] = &trial;
  }

  for (const auto& q : d.questions) {
    auto it = trial_by_id.find(q.id);
    if (it == trial_by_id.end()) {
      throw std::runtime_error("verifiability ledger: missing trial for question " + q.id);
    }
    if (it->second->thinker_match.value_or(false)) ledger.match_ids.insert(q.id);
  }

  ledger.check_invariants();
  return ledger;
}

}  // namespace cotgauge
