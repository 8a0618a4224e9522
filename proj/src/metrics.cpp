#include "cotgauge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace cotgauge {

std::string to_string(ScoreKind k) {
  switch (k) {
    case ScoreKind::accuracy: return "accuracy";
    case ScoreKind::reusability: return "reusability";
    case ScoreKind::verifiability: return "verifiability";
  }
  throw std::logic_error("unknown score kind");
}

Score::Score(double v, ScoreKind k) : value(v), kind(k) {
  if (!(v >= 0.0 && v <= 100.0)) {
    throw std::runtime_error("score out of range [0, 100]: " + std::to_string(v));
  }
}

Score accuracy(const std::vector<ThinkerOutcome>& outcomes) {
  if (outcomes.empty()) throw std::runtime_error("accuracy: empty outcome list");
  std::size_t correct = 0;
  for (const auto& o : outcomes) {
    if (o.partition == Partition::correct) ++correct;
  }
  return Score(100.0 * static_cast<double>(correct) / static_cast<double>(outcomes.size()),
               ScoreKind::accuracy);
}

Score reusability_score(const ReusabilityLedger& l) {
  if (l.n_correct == 0) {
    throw std::runtime_error("reusability score undefined: |Q_correct| is 0 for (" + l.thinker + ", " +
                             l.executor + ", " + l.dataset_id + ")");
  }
  double flipped = static_cast<double>(l.helped_ids.size() + l.harmed_ids.size());
  return Score(flipped * 100.0 / static_cast<double>(l.n_correct), ScoreKind::reusability);
}

Score verifiability_score(const VerifiabilityLedger& l) {
  if (l.n_total == 0) {
    throw std::runtime_error("verifiability score undefined: |Q| is 0 for (" + l.thinker + ", " +
                             l.executor + ", " + l.dataset_id + ")");
  }
  return Score(100.0 * static_cast<double>(l.match_ids.size()) / static_cast<double>(l.n_total),
               ScoreKind::verifiability);
}

void CommitteeSpec::validate() const {
  if (members.empty()) throw std::runtime_error("committee " + name + " has no members");
  std::set<std::string> unique(members.begin(), members.end());
  if (unique.size() != members.size()) {
    throw std::runtime_error("committee " + name + " has duplicate members");
  }
}

Score committee_score(const std::vector<Score>& sub_scores, const CommitteeSpec& spec) {
  spec.validate();
  if (sub_scores.size() != spec.members.size()) {
    throw std::runtime_error("committee " + spec.name + ": expected " +
                             std::to_string(spec.members.size()) + " sub-scores, got " +
                             std::to_string(sub_scores.size()));
  }
  double sum = 0.0;
  for (const auto& s : sub_scores) {
    if (s.kind != sub_scores.front().kind) {
      throw std::runtime_error("committee " + spec.name + ": mixed score kinds");
    }
    sum += s.value;
  }
  return Score(sum / static_cast<double>(sub_scores.size()), sub_scores.front().kind);
}

Ranking rank_by_score(const std::vector<std::pair<std::string, double>>& scores) {
  if (scores.size() < 2) throw std::runtime_error("rank_by_score: need at least 2 entries");

  std::vector<RankedEntry> entries;
  entries.reserve(scores.size());
  for (const auto& [name, value] : scores) entries.push_back({name, value, false});
  std::stable_sort(entries.begin(), entries.end(),
                   [](const RankedEntry& a, const RankedEntry& b) { return a.value > b.value; });
  for (std::size_t i = 1; i < entries.size(); ++i) {
    entries[i].tied_with_previous = entries[i].value == entries[i - 1].value;
  }

  Ranking ranking;
  ranking.entries = std::move(entries);
  return ranking;
}

double kendall_tau(const std::vector<std::pair<std::string, double>>& a,
                   const std::vector<std::pair<std::string, double>>& b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw std::runtime_error("kendall_tau: item sets differ in size or have fewer than 2 items");
  }
  std::map<std::string, double> b_by_name(b.begin(), b.end());
  if (b_by_name.size() != b.size()) throw std::runtime_error("kendall_tau: duplicate items");

  std::vector<double> x, y;
  x.reserve(a.size());
  y.reserve(a.size());
  for (const auto& [name, value] : a) {
    auto it = b_by_name.find(name);
    if (it == b_by_name.end()) throw std::runtime_error("kendall_tau: item sets differ: " + name);
    x.push_back(value);
    y.push_back(it->second);
  }

  // tau-b: (C - D) / sqrt((n0 - tx)(n0 - ty)) over all item pairs.
  long long concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
  std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double dx = x[i] - x[j];
      double dy = y[i] - y[j];
      if (dx == 0.0 && dy == 0.0) continue;  // tied in both: excluded from every term
      if (dx == 0.0) {
        ++ties_x;
      } else if (dy == 0.0) {
        ++ties_y;
      } else if ((dx > 0.0) == (dy > 0.0)) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }

  double denom_x = static_cast<double>(concordant + discordant + ties_x);
  double denom_y = static_cast<double>(concordant + discordant + ties_y);
  if (denom_x == 0.0 || denom_y == 0.0) {
    throw std::runtime_error("kendall_tau: degenerate input (all values tied on one side)");
  }
  return static_cast<double>(concordant - discordant) / std::sqrt(denom_x * denom_y);
}

double kendall_tau(const Ranking& a, const Ranking& b) {
  std::vector<std::pair<std::string, double>> xs, ys;
  for (const auto& e : a.entries) xs.emplace_back(e.name, e.value);
  for (const auto& e : b.entries) ys.emplace_back(e.name, e.value);
  return kendall_tau(xs, ys);
}

MeanVariance mean_variance(std::span<const double> values) {
  if (values.size() < 2) throw std::runtime_error("mean_variance: need at least 2 values");
  double sum = 0.0;
  for (double v : values) sum += v;
  double mean = sum / static_cast<double>(values.size());
  double acc = 0.0;
  for (double v : values) acc += (v - mean) * (v - mean);
  return {mean, acc / static_cast<double>(values.size() - 1)};
}

double population_variance(std::span<const double> values) {
  if (values.empty()) throw std::runtime_error("population_variance: empty input");
  double sum = 0.0;
  for (double v : values) sum += v;
  double mean = sum / static_cast<double>(values.size());
  double acc = 0.0;
  for (double v : values) acc += (v - mean) * (v - mean);
  return acc / static_cast<double>(values.size());
}

json ScoreMatrix::to_json() const {
  json j;
  j["thinkers"] = thinkers;
  j["datasets"] = datasets;
  j["committee_order"] = committee_order;
  j["accuracy"] = accuracy;
  json metrics_json = json::object();
  for (const auto& [kind, per_thinker] : metric) {
    json thinker_json = json::object();
    for (const auto& [thinker, per_dataset] : per_thinker) {
      json dataset_json = json::object();
      for (const auto& [dataset, cell] : per_dataset) {
        dataset_json[dataset] = {{"committees", cell.committee}, {"executors", cell.executor}};
      }
      thinker_json[thinker] = std::move(dataset_json);
    }
    metrics_json[kind] = std::move(thinker_json);
  }
  j["metrics"] = std::move(metrics_json);
  return j;
}

ScoreMatrix ScoreMatrix::from_json(const json& j) {
  ScoreMatrix m;
  m.thinkers = j.at("thinkers").get<std::vector<std::string>>();
  m.datasets = j.at("datasets").get<std::vector<std::string>>();
  m.committee_order = j.at("committee_order").get<std::vector<std::string>>();
  m.accuracy = j.at("accuracy").get<std::map<std::string, std::map<std::string, double>>>();
  for (const auto& [kind, per_thinker] : j.at("metrics").items()) {
    for (const auto& [thinker, per_dataset] : per_thinker.items()) {
      for (const auto& [dataset, cell] : per_dataset.items()) {
        CellScores scores;
        scores.committee = cell.at("committees").get<std::map<std::string, double>>();
        scores.executor = cell.at("executors").get<std::map<std::string, double>>();
        m.metric[kind][thinker][dataset] = std::move(scores);
      }
    }
  }
  return m;
}

void ScoreMatrix::check_committee_means(const std::map<std::string, std::vector<std::string>>& committees,
                                        double tolerance) const {
  for (const auto& [kind, per_thinker] : metric) {
    for (const auto& [thinker, per_dataset] : per_thinker) {
      for (const auto& [dataset, cell] : per_dataset) {
        for (const auto& [committee, value] : cell.committee) {
          auto members_it = committees.find(committee);
          if (members_it == committees.end()) continue;
          double sum = 0.0;
          for (const auto& member : members_it->second) {
            auto sub = cell.executor.find(member);
            if (sub == cell.executor.end()) {
              throw std::runtime_error("score matrix: missing sub-score for executor " + member);
            }
            sum += sub->second;
          }
          double mean = sum / static_cast<double>(members_it->second.size());
          if (std::fabs(mean - value) > tolerance) {
            throw std::runtime_error("score matrix: committee " + committee + " cell (" + kind + ", " +
                                     thinker + ", " + dataset + ") is not the mean of its sub-scores");
          }
        }
      }
    }
  }
}

}  // namespace cotgauge
