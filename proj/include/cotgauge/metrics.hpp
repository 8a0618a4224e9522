#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "cotgauge/protocol.hpp"

namespace cotgauge {

enum class ScoreKind { accuracy, reusability, verifiability };

std::string to_string(ScoreKind k);

/// A 0..100 score; construction enforces the range.
struct Score {
  double value = 0.0;
  ScoreKind kind = ScoreKind::accuracy;

  Score() = default;
  Score(double v, ScoreKind k);
};

/// 100 * |Q_correct| / |Q|; defect outcomes count in the denominator only.
Score accuracy(const std::vector<ThinkerOutcome>& outcomes);

/// Eq-style flip rate: (|helped| + |harmed|) * 100 / |Q_correct|.
/// An empty Q_correct is an error, never a silent zero.
Score reusability_score(const ReusabilityLedger& l);

/// 100 * |match_ids| / |Q|.
Score verifiability_score(const VerifiabilityLedger& l);

struct CommitteeSpec {
  std::string name;  // full / strong / weak / custom
  std::vector<std::string> members;

  void validate() const;  // non-empty, unique members
};

/// Unweighted mean of one sub-score per member.
Score committee_score(const std::vector<Score>& sub_scores, const CommitteeSpec& spec);

struct RankedEntry {
  std::string name;
  double value = 0.0;
  bool tied_with_previous = false;
};

/// Thinkers ordered best-first. Exact-value ties keep both entries, flagged;
/// tied entries keep their input order.
struct Ranking {
  std::vector<RankedEntry> entries;
  std::string tie_policy = "ties keep input order and are flagged";
};

Ranking rank_by_score(const std::vector<std::pair<std::string, double>>& scores);

/// Kendall's tau-b over two score assignments for the same item set
/// (tau-a when neither side has ties). Throws on item-set mismatch and on
/// degenerate inputs (all values tied on either side).
double kendall_tau(const std::vector<std::pair<std::string, double>>& a,
                   const std::vector<std::pair<std::string, double>>& b);
double kendall_tau(const Ranking& a, const Ranking& b);

struct MeanVariance {
  double mean = 0.0;
  double variance = 0.0;  // sample variance, n-1 denominator
};

/// Requires at least 2 values.
MeanVariance mean_variance(std::span<const double> values);

/// Population variance (n denominator); emitted alongside the sample value
/// where both conventions are reported.
double population_variance(std::span<const double> values);

/// Per-(thinker, dataset) committee scores and executor sub-scores for one
/// metric kind.
struct CellScores {
  std::map<std::string, double> committee;  // committee name -> score
  std::map<std::string, double> executor;   // executor name -> sub-score
};

/// thinker x dataset x committee score table with per-executor sub-scores,
/// so committee means stay independently recomputable.
struct ScoreMatrix {
  std::vector<std::string> thinkers;         // display order
  std::vector<std::string> datasets;
  std::vector<std::string> committee_order;  // e.g. full, strong, weak
  std::map<std::string, std::map<std::string, double>> accuracy;  // thinker -> dataset
  // metric name -> thinker -> dataset -> cell
  std::map<std::string, std::map<std::string, std::map<std::string, CellScores>>> metric;

  json to_json() const;
  static ScoreMatrix from_json(const json& j);

  /// Throws when any committee cell is not the mean of its members' sub-scores.
  void check_committee_means(const std::map<std::string, std::vector<std::string>>& committees,
                             double tolerance = 1e-9) const;
};

}  // namespace cotgauge
