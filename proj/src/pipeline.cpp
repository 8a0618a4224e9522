#include "cotgauge/pipeline.hpp"

#include <algorithm>
#include <mutex>
#include <stdexcept>
#include <tuple>

namespace cotgauge {

namespace {

EngineConfig engine_config_from_manifest(const RunManifest& m) {
  EngineConfig cfg;
  cfg.decode = m.decode;
  cfg.corruption_max_attempts = m.corruption_max_attempts;
  cfg.corruptor_model = m.corruptor;
  cfg.reference = m.reference;
  cfg.max_parallel = m.max_concurrency;
  return cfg;
}

int condition_rank(Condition c) {
  switch (c) {
    case Condition::baseline: return 0;
    case Condition::with_cot: return 1;
    case Condition::with_corrupted_cot: return 2;
    default: return 3;
  }
}

}  // namespace

Pipeline::Pipeline(RunPlan plan, Gateway& gateway, const std::filesystem::path& run_dir)
    : plan_(std::move(plan)),
      gateway_(gateway),
      engine_(gateway, plan_.templates, engine_config_from_manifest(plan_.manifest)),
      store_(run_dir) {
  if (plan_.datasets.size() != plan_.manifest.datasets.size()) {
    throw std::runtime_error("run plan: datasets do not match the manifest");
  }
  store_.open(plan_.manifest);
}

void Pipeline::require_done(Phase p) const {
  if (!store_.phase_done(p)) {
    throw std::runtime_error("phase dependency violation: " + to_string(p) + " has not completed");
  }
}

ModelRef Pipeline::model_ref(const std::string& name, RoleHint role) const {
  ModelRef ref;
  ref.backend = plan_.manifest.backend;
  ref.model_name = name;
  ref.role_hint = role;
  return ref;
}

const Question& Pipeline::question_by_id(std::size_t dataset_index, const std::string& id) const {
  for (const auto& q : plan_.datasets[dataset_index].questions) {
    if (q.id == id) return q;
  }
  throw std::runtime_error("unknown question id: " + id);
}

// Canonical record order: thinker (config order), dataset (config order),
// question (dataset order), then phase and condition. Sorted rewrites keep
// run files byte-identical regardless of scheduling.
namespace {

struct OrderIndex {
  std::map<std::string, std::size_t> thinker;
  std::map<std::string, std::size_t> dataset;
  std::map<std::string, std::map<std::string, std::size_t>> question;  // dataset -> id -> index
  std::map<std::string, std::size_t> executor;

  explicit OrderIndex(const RunPlan& plan) {
    for (std::size_t i = 0; i < plan.manifest.thinkers.size(); ++i) thinker[plan.manifest.thinkers[i]] = i;
    for (std::size_t i = 0; i < plan.manifest.executors.size(); ++i) executor[plan.manifest.executors[i]] = i;
    for (std::size_t i = 0; i < plan.datasets.size(); ++i) {
      dataset[plan.datasets[i].dataset_id] = i;
      auto& ids = question[plan.datasets[i].dataset_id];
      for (std::size_t k = 0; k < plan.datasets[i].questions.size(); ++k) {
        ids[plan.datasets[i].questions[k].id] = k;
      }
    }
  }

  std::size_t question_index(const json& record) const {
    auto dit = question.find(record.at("dataset").get<std::string>());
    if (dit == question.end()) return 0;
    auto qit = dit->second.find(record.at("question_id").get<std::string>());
    return qit == dit->second.end() ? 0 : qit->second;
  }
};

}  // namespace

std::vector<json> Pipeline::sort_thinker_records(std::vector<json> records) const {
  OrderIndex order(plan_);
  std::stable_sort(records.begin(), records.end(), [&](const json& a, const json& b) {
    auto key = [&](const json& r) {
      return std::tuple(order.thinker.at(r.at("thinker").get<std::string>()),
                        order.dataset.at(r.at("dataset").get<std::string>()), order.question_index(r));
    };
    return key(a) < key(b);
  });
  return records;
}

std::vector<json> Pipeline::sort_corrupted_records(std::vector<json> records) const {
  return sort_thinker_records(std::move(records));
}

std::vector<json> Pipeline::sort_trial_records(std::vector<json> records) const {
  OrderIndex order(plan_);
  std::stable_sort(records.begin(), records.end(), [&](const json& a, const json& b) {
    auto key = [&](const json& r) {
      return std::tuple(order.thinker.at(r.at("thinker").get<std::string>()),
                        order.dataset.at(r.at("dataset").get<std::string>()), order.question_index(r),
                        trial_phase_from_string(r.at("phase").get<std::string>()) == TrialPhase::reusability
                            ? 0
                            : 1,
                        condition_rank(condition_from_string(r.at("condition").get<std::string>())));
    };
    return key(a) < key(b);
  });
  return records;
}

void Pipeline::run_phase(Phase p) {
  switch (p) {
    case Phase::think: run_think(); return;
    case Phase::corrupt: run_corrupt(); return;
    case Phase::execute: run_execute(); return;
    case Phase::verify: run_verify(); return;
    case Phase::score: run_score(); return;
  }
}

void Pipeline::run_all() {
  while (auto p = next_phase()) run_phase(*p);
}

void Pipeline::run_think() {
  if (store_.phase_done(Phase::think)) return;

  auto existing = store_.load_records("thinker.jsonl");
  std::set<std::string> have;
  for (const auto& r : existing) {
    have.insert(r.at("thinker").get<std::string>() + "\x1f" + r.at("dataset").get<std::string>() + "\x1f" +
                r.at("question_id").get<std::string>());
  }

  struct Item {
    ModelRef thinker;
    const Question* question;
  };
  std::vector<Item> items;
  for (const auto& thinker_name : plan_.manifest.thinkers) {
    for (std::size_t di = 0; di < plan_.datasets.size(); ++di) {
      for (const auto& q : plan_.datasets[di].questions) {
        std::string key = thinker_name + "\x1f" + q.dataset_id + "\x1f" + q.id;
        if (have.count(key)) continue;
        items.push_back({model_ref(thinker_name, RoleHint::thinker), &q});
      }
    }
  }

  std::mutex append_mu;
  parallel_for(items.size(), plan_.manifest.max_concurrency, [&](std::size_t i) {
    ThinkerOutcome outcome = engine_.think_one(items[i].thinker, *items[i].question);
    std::lock_guard<std::mutex> lock(append_mu);
    store_.append_record("thinker.jsonl", outcome.to_json());
  });

  store_.write_records("thinker.jsonl", sort_thinker_records(store_.load_records("thinker.jsonl")));
  store_.mark_phase_done(Phase::think);
}

namespace {

std::string record_key(const json& r) {
  return r.at("thinker").get<std::string>() + "\x1f" + r.at("dataset").get<std::string>() + "\x1f" +
         r.at("question_id").get<std::string>();
}

}  // namespace

void Pipeline::run_corrupt() {
  if (store_.phase_done(Phase::corrupt)) return;
  require_done(Phase::think);

  auto thinker_records = store_.load_records("thinker.jsonl");
  auto corrupted_records = store_.load_records("corrupted.jsonl");
  std::set<std::string> have;
  for (const auto& r : corrupted_records) have.insert(record_key(r));

  struct Item {
    ModelRef thinker;
    std::size_t dataset_index;
    const Question* question;
    ThinkerOutcome outcome;
  };
  std::vector<Item> items;
  for (const auto& r : thinker_records) {
    if (partition_from_string(r.at("partition").get<std::string>()) != Partition::correct) continue;
    if (have.count(record_key(r))) continue;
    std::string dataset_id = r.at("dataset").get<std::string>();
    for (std::size_t di = 0; di < plan_.datasets.size(); ++di) {
      if (plan_.datasets[di].dataset_id != dataset_id) continue;
      const Question& q = question_by_id(di, r.at("question_id").get<std::string>());
      Item item;
      item.thinker = model_ref(r.at("thinker").get<std::string>(), RoleHint::thinker);
      item.dataset_index = di;
      item.question = &q;
      item.outcome = ThinkerOutcome::from_json(r, q.form);
      items.push_back(std::move(item));
      break;
    }
  }

  std::mutex append_mu;
  parallel_for(items.size(), plan_.manifest.max_concurrency, [&](std::size_t i) {
    const Item& item = items[i];
    ModelRef corruptor = engine_.corruptor_for(item.thinker);
    CorruptionOutcome outcome =
        engine_.generate_corrupted_cot(corruptor, item.thinker, *item.question, item.outcome.trace,
                                       plan_.manifest.corruption_max_attempts);
    std::lock_guard<std::mutex> lock(append_mu);
    store_.append_record("corrupted.jsonl", outcome.to_json(item.question->dataset_id));
  });

  store_.write_records("corrupted.jsonl", sort_corrupted_records(store_.load_records("corrupted.jsonl")));
  store_.mark_phase_done(Phase::corrupt);
}

void Pipeline::run_execute() {
  if (store_.phase_done(Phase::execute)) return;
  require_done(Phase::think);
  require_done(Phase::corrupt);

  auto thinker_records = store_.load_records("thinker.jsonl");
  auto corrupted_records = store_.load_records("corrupted.jsonl");
  std::map<std::string, json> corrupted_by_key;
  for (const auto& r : corrupted_records) corrupted_by_key[record_key(r)] = r;

  for (const auto& executor_name : plan_.manifest.executors) {
    std::string trials_file = RunStore::trials_file(executor_name);
    auto existing = store_.load_records(trials_file);
    std::map<std::string, json> have;  // key incl. phase+condition
    for (const auto& r : existing) {
      have[record_key(r) + "\x1f" + r.at("phase").get<std::string>() + "\x1f" +
           r.at("condition").get<std::string>()] = r;
    }

    struct Item {
      std::size_t dataset_index = 0;
      const Question* question = nullptr;
      ThinkerOutcome outcome;
      const json* corrupted = nullptr;  // nullptr when absent
    };
    std::vector<Item> items;
    for (const auto& r : thinker_records) {
      if (partition_from_string(r.at("partition").get<std::string>()) != Partition::correct) continue;
      std::string dataset_id = r.at("dataset").get<std::string>();
      for (std::size_t di = 0; di < plan_.datasets.size(); ++di) {
        if (plan_.datasets[di].dataset_id != dataset_id) continue;
        Item item;
        const Question& q = question_by_id(di, r.at("question_id").get<std::string>());
        item.dataset_index = di;
        item.question = &q;
        item.outcome = ThinkerOutcome::from_json(r, q.form);
        auto cit = corrupted_by_key.find(record_key(r));
        if (cit != corrupted_by_key.end()) item.corrupted = &cit->second;
        items.push_back(std::move(item));
        break;
      }
    }

    ModelRef executor = model_ref(executor_name, RoleHint::executor);
    std::mutex append_mu;
    parallel_for(items.size(), plan_.manifest.max_concurrency, [&](std::size_t i) {
      const Item& item = items[i];
      const Question& q = *item.question;
      const std::string thinker_name = item.outcome.trace.thinker.model_name;
      auto base_key = thinker_name + "\x1f" + q.dataset_id + "\x1f" + q.id + "\x1f" +
                      to_string(TrialPhase::reusability) + "\x1f";

      json baseline_json;
      auto bit = have.find(base_key + to_string(Condition::baseline));
      if (bit != have.end()) {
        baseline_json = bit->second;
      } else {
        TrialRecord baseline = engine_.run_single_trial(executor, thinker_name, q, TrialPhase::reusability,
                                                        Condition::baseline, std::nullopt);
        baseline_json = baseline.to_json();
        std::lock_guard<std::mutex> lock(append_mu);
        store_.append_record(trials_file, baseline_json);
      }

      TrialRecord baseline = TrialRecord::from_json(baseline_json, q.form);
      if (!baseline.defect.empty()) return;

      if (baseline.answer_grade == Grade::wrong) {
        if (have.count(base_key + to_string(Condition::with_cot))) return;
        TrialRecord trial = engine_.run_single_trial(executor, thinker_name, q, TrialPhase::reusability,
                                                     Condition::with_cot, item.outcome.trace.text);
        std::lock_guard<std::mutex> lock(append_mu);
        store_.append_record(trials_file, trial.to_json());
      } else {
        if (!item.corrupted || item.corrupted->at("status").get<std::string>() != "valid") return;
        if (have.count(base_key + to_string(Condition::with_corrupted_cot))) return;
        std::string corrupted_text = item.corrupted->at("text").get<std::string>();
        TrialRecord trial = engine_.run_single_trial(executor, thinker_name, q, TrialPhase::reusability,
                                                     Condition::with_corrupted_cot, corrupted_text);
        std::lock_guard<std::mutex> lock(append_mu);
        store_.append_record(trials_file, trial.to_json());
      }
    });

    store_.write_records(trials_file, sort_trial_records(store_.load_records(trials_file)));
  }
  store_.mark_phase_done(Phase::execute);
}

void Pipeline::run_verify() {
  if (store_.phase_done(Phase::verify)) return;
  require_done(Phase::think);

  auto thinker_records = store_.load_records("thinker.jsonl");

  for (const auto& executor_name : plan_.manifest.executors) {
    std::string trials_file = RunStore::trials_file(executor_name);
    auto existing = store_.load_records(trials_file);
    std::set<std::string> have;
    for (const auto& r : existing) {
      if (r.at("phase").get<std::string>() != to_string(TrialPhase::verifiability)) continue;
      have.insert(record_key(r));
    }

    struct Item {
      const Question* question = nullptr;
      ThinkerOutcome outcome;
    };
    std::vector<Item> items;
    for (const auto& r : thinker_records) {
      if (have.count(record_key(r))) continue;
      std::string dataset_id = r.at("dataset").get<std::string>();
      for (std::size_t di = 0; di < plan_.datasets.size(); ++di) {
        if (plan_.datasets[di].dataset_id != dataset_id) continue;
        const Question& q = question_by_id(di, r.at("question_id").get<std::string>());
        items.push_back({&q, ThinkerOutcome::from_json(r, q.form)});
        break;
      }
    }

    ModelRef executor = model_ref(executor_name, RoleHint::executor);
    std::mutex append_mu;
    parallel_for(items.size(), plan_.manifest.max_concurrency, [&](std::size_t i) {
      TrialRecord record = engine_.verifiability_trial(items[i].outcome, executor, *items[i].question);
      std::lock_guard<std::mutex> lock(append_mu);
      store_.append_record(trials_file, record.to_json());
    });

    store_.write_records(trials_file, sort_trial_records(store_.load_records(trials_file)));
  }
  store_.mark_phase_done(Phase::verify);
}

struct Pipeline::LoadedState {
  // thinker -> dataset -> outcomes in dataset question order
  std::map<std::string, std::map<std::string, std::vector<ThinkerOutcome>>> outcomes;
  // (thinker, dataset) -> question -> corruption outcome
  std::map<std::pair<std::string, std::string>, ProtocolEngine::CorruptedMap> corrupted;
  // executor -> records
  std::map<std::string, std::vector<TrialRecord>> trials;
};

Pipeline::LoadedState Pipeline::load_state(bool need_corrupted, bool need_trials) const {
  LoadedState state;
  OrderIndex order(plan_);

  for (const auto& r : store_.load_records("thinker.jsonl")) {
    std::string dataset_id = r.at("dataset").get<std::string>();
    auto di = order.dataset.at(dataset_id);
    const Question& q = question_by_id(di, r.at("question_id").get<std::string>());
    state.outcomes[r.at("thinker").get<std::string>()][dataset_id].push_back(
        ThinkerOutcome::from_json(r, q.form));
  }
  // Keep outcomes in dataset question order regardless of file order.
  for (auto& [thinker, per_dataset] : state.outcomes) {
    for (auto& [dataset_id, outcomes] : per_dataset) {
      const auto& index = order.question.at(dataset_id);
      std::stable_sort(outcomes.begin(), outcomes.end(),
                       [&](const ThinkerOutcome& a, const ThinkerOutcome& b) {
                         return index.at(a.question_id) < index.at(b.question_id);
                       });
    }
  }

  if (need_corrupted) {
    for (const auto& r : store_.load_records("corrupted.jsonl")) {
      std::string dataset_id = r.at("dataset").get<std::string>();
      auto di = order.dataset.at(dataset_id);
      const Question& q = question_by_id(di, r.at("question_id").get<std::string>());
      state.corrupted[{r.at("thinker").get<std::string>(), dataset_id}].emplace(
          q.id, CorruptionOutcome::from_json(r, q.form));
    }
  }

  if (need_trials) {
    for (const auto& executor_name : plan_.manifest.executors) {
      for (const auto& r : store_.load_records(RunStore::trials_file(executor_name))) {
        std::string dataset_id = r.at("dataset").get<std::string>();
        auto di = order.dataset.at(dataset_id);
        const Question& q = question_by_id(di, r.at("question_id").get<std::string>());
        state.trials[executor_name].push_back(TrialRecord::from_json(r, q.form));
      }
    }
  }
  return state;
}

std::pair<json, json> Pipeline::build_outputs(const LoadedState& state) const {
  std::vector<ReusabilityLedger> reusability;
  std::vector<VerifiabilityLedger> verifiability;

  for (const auto& thinker_name : plan_.manifest.thinkers) {
    for (std::size_t di = 0; di < plan_.datasets.size(); ++di) {
      const Dataset& d = plan_.datasets[di];
      const auto& outcomes = state.outcomes.at(thinker_name).at(d.dataset_id);
      auto corrupted_it = state.corrupted.find({thinker_name, d.dataset_id});
      static const ProtocolEngine::CorruptedMap empty_map;
      const auto& corrupted = corrupted_it == state.corrupted.end() ? empty_map : corrupted_it->second;

      for (const auto& executor_name : plan_.manifest.executors) {
        const auto& trials = state.trials.at(executor_name);
        reusability.push_back(
            build_reusability_ledger(thinker_name, executor_name, d, outcomes, corrupted, trials));
        verifiability.push_back(build_verifiability_ledger(thinker_name, executor_name, d, trials));
      }
    }
  }

  json ledgers;
  ledgers["run_id"] = plan_.manifest.run_id;
  ledgers["manifest_digest"] = plan_.manifest.digest();
  json reusability_json = json::array();
  for (const auto& l : reusability) reusability_json.push_back(l.to_json());
  json verifiability_json = json::array();
  for (const auto& l : verifiability) verifiability_json.push_back(l.to_json());
  ledgers["reusability"] = std::move(reusability_json);
  ledgers["verifiability"] = std::move(verifiability_json);

  ScoreMatrix matrix = build_score_matrix(plan_.manifest, state.outcomes, reusability, verifiability);
  json scores = matrix.to_json();
  scores["run_id"] = plan_.manifest.run_id;
  scores["manifest_digest"] = plan_.manifest.digest();
  return {std::move(ledgers), std::move(scores)};
}

void Pipeline::run_score() {
  if (store_.phase_done(Phase::score)) return;
  require_done(Phase::execute);
  require_done(Phase::verify);

  auto state = load_state(true, true);
  auto [ledgers, scores] = build_outputs(state);
  store_.write_json("ledgers.json", ledgers);
  store_.write_json("scores.json", scores);
  store_.mark_phase_done(Phase::score);
}

std::vector<std::string> Pipeline::verify_outputs() const {
  std::vector<std::string> mismatches;
  if (!store_.file_exists("ledgers.json") || !store_.file_exists("scores.json")) {
    mismatches.push_back("score phase outputs are missing");
    return mismatches;
  }
  auto state = load_state(true, true);
  auto [ledgers, scores] = build_outputs(state);
  if (store_.read_json("ledgers.json") != ledgers) mismatches.push_back("ledgers.json does not match trials");
  if (store_.read_json("scores.json") != scores) mismatches.push_back("scores.json does not match ledgers");

  // Committee cells must equal the mean of their members' sub-scores.
  try {
    ScoreMatrix stored = ScoreMatrix::from_json(store_.read_json("scores.json"));
    stored.check_committee_means(plan_.manifest.committees);
  } catch (const std::exception& e) {
    mismatches.push_back(e.what());
  }
  return mismatches;
}

ScoreMatrix build_score_matrix(
    const RunManifest& manifest,
    const std::map<std::string, std::map<std::string, std::vector<ThinkerOutcome>>>& outcomes,
    const std::vector<ReusabilityLedger>& reusability,
    const std::vector<VerifiabilityLedger>& verifiability) {
  ScoreMatrix matrix;
  matrix.thinkers = manifest.thinkers;
  for (const auto& d : manifest.datasets) matrix.datasets.push_back(d.id);
  matrix.committee_order.push_back("full");
  for (const auto& [name, members] : manifest.committees) {
    if (name != "full") matrix.committee_order.push_back(name);
  }

  for (const auto& thinker : manifest.thinkers) {
    for (const auto& d : manifest.datasets) {
      matrix.accuracy[thinker][d.id] = accuracy(outcomes.at(thinker).at(d.id)).value;
    }
  }

  auto committee_members = [&](const std::string& name) -> std::vector<std::string> {
    if (name == "full" && !manifest.committees.count("full")) return manifest.executors;
    return manifest.committees.at(name);
  };

  auto fill = [&](const std::string& kind_name, ScoreKind kind, auto score_of,
                  const auto& ledgers) {
    for (const auto& ledger : ledgers) {
      CellScores& cell = matrix.metric[kind_name][ledger.thinker][ledger.dataset_id];
      cell.executor[ledger.executor] = score_of(ledger).value;
    }
    for (auto& [thinker, per_dataset] : matrix.metric[kind_name]) {
      for (auto& [dataset, cell] : per_dataset) {
        for (const auto& committee_name : matrix.committee_order) {
          std::vector<std::string> members = committee_members(committee_name);
          CommitteeSpec spec{committee_name, members};
          std::vector<Score> subs;
          for (const auto& member : members) {
            auto it = cell.executor.find(member);
            if (it == cell.executor.end()) {
              throw std::runtime_error("score matrix: missing " + kind_name + " sub-score for " + member);
            }
            subs.emplace_back(it->second, kind);
          }
          cell.committee[committee_name] = committee_score(subs, spec).value;
        }
      }
    }
  };

  fill("reusability", ScoreKind::reusability, [](const ReusabilityLedger& l) { return reusability_score(l); },
       reusability);
  fill("verifiability", ScoreKind::verifiability,
       [](const VerifiabilityLedger& l) { return verifiability_score(l); }, verifiability);
  return matrix;
}

}  // namespace cotgauge
