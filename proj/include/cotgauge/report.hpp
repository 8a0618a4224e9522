#pragma once

#include <string>
#include <vector>

#include "cotgauge/metrics.hpp"

namespace cotgauge {

enum class ReportFormat { csv, json_format, markdown };

ReportFormat report_format_from_string(const std::string& s);
std::string to_string(ReportFormat f);

/// A rendered table: caption, header row, formatted cells, provenance, and
/// any missing-cell notes. Every cell traces back to the score matrix.
struct ReportTable {
  std::string caption;
  std::vector<std::string> column_labels;  // includes the row-label column
  std::vector<std::vector<std::string>> rows;
  std::string run_id;
  std::string manifest_digest;
  std::vector<std::string> defects;
};

std::string render_table(const ReportTable& table, ReportFormat format);

std::string format_fixed(double value, int decimals);

/// dataset x committee rows, thinker columns, 2-decimal cells. Missing cells
/// render as an em dash and are listed under defects.
ReportTable emit_score_table(const ScoreMatrix& matrix, const std::string& metric_kind);

/// Accuracy table: dataset rows x thinker columns.
ReportTable emit_accuracy_table(const ScoreMatrix& matrix);

enum class TauAxis { committee_pairs, metric_pairs };

/// committee_pairs: per-dataset tau between weak/strong/full rankings of one
/// metric, at 4 decimals, with AVERAGE and VARIANCE rows (both the n-1 and n
/// conventions are printed).
/// metric_pairs: per-dataset tau between accuracy / reusability /
/// verifiability rankings (full committee), at 2 decimals.
ReportTable emit_tau_table(const ScoreMatrix& matrix, TauAxis axis,
                           const std::string& metric_kind = "reusability");

/// Accuracy / reusability / verifiability summary per dataset and thinker,
/// full-committee values rounded to the nearest integer.
ReportTable emit_summary_table(const ScoreMatrix& matrix);

}  // namespace cotgauge
