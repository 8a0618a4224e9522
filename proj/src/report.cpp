#include "cotgauge/report.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace cotgauge {

namespace {

constexpr const char* kMissingCell = "—";  // em dash

std::string csv_quote(const std::string& field) {
  bool needs_quotes = field.find_first_of(",\"\n\r") != std::string::npos;
  if (!needs_quotes) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string render_csv(const ReportTable& table) {
  std::string out;
  for (std::size_t i = 0; i < table.column_labels.size(); ++i) {
    if (i) out.push_back(',');
    out += csv_quote(table.column_labels[i]);
  }
  out.push_back('\n');
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out.push_back(',');
      out += csv_quote(row[i]);
    }
    out.push_back('\n');
  }
  return out;
}

std::string render_markdown(const ReportTable& table) {
  std::string out = "### " + table.caption + "\n\n";
  auto emit_row = [&](const std::vector<std::string>& cells) {
    out.push_back('|');
    for (const auto& cell : cells) {
      out.push_back(' ');
      out += cell;
      out += " |";
    }
    out.push_back('\n');
  };
  emit_row(table.column_labels);
  std::vector<std::string> rule(table.column_labels.size(), "---");
  emit_row(rule);
  for (const auto& row : table.rows) emit_row(row);
  out += "\nrun: " + table.run_id + "  manifest: " + table.manifest_digest + "\n";
  for (const auto& defect : table.defects) out += "note: " + defect + "\n";
  return out;
}

std::string render_json(const ReportTable& table) {
  json j;
  j["caption"] = table.caption;
  j["columns"] = table.column_labels;
  j["rows"] = table.rows;
  j["provenance"] = {{"run_id", table.run_id}, {"manifest_digest", table.manifest_digest}};
  j["defects"] = table.defects;
  return j.dump(2) + "\n";
}

std::vector<std::pair<std::string, double>> committee_scores_for(const ScoreMatrix& matrix,
                                                                 const std::string& kind,
                                                                 const std::string& dataset,
                                                                 const std::string& committee) {
  std::vector<std::pair<std::string, double>> scores;
  auto kind_it = matrix.metric.find(kind);
  if (kind_it == matrix.metric.end()) return scores;
  for (const auto& thinker : matrix.thinkers) {
    auto thinker_it = kind_it->second.find(thinker);
    if (thinker_it == kind_it->second.end()) continue;
    auto dataset_it = thinker_it->second.find(dataset);
    if (dataset_it == thinker_it->second.end()) continue;
    auto cell = dataset_it->second.committee.find(committee);
    if (cell == dataset_it->second.committee.end()) continue;
    scores.emplace_back(thinker, cell->second);
  }
  return scores;
}

}  // namespace

ReportFormat report_format_from_string(const std::string& s) {
  if (s == "csv") return ReportFormat::csv;
  if (s == "json") return ReportFormat::json_format;
  if (s == "markdown" || s == "md") return ReportFormat::markdown;
  throw std::runtime_error("unknown report format: " + s);
}

std::string to_string(ReportFormat f) {
  switch (f) {
    case ReportFormat::csv: return "csv";
    case ReportFormat::json_format: return "json";
    case ReportFormat::markdown: return "markdown";
  }
  throw std::logic_error("unknown report format");
}

std::string render_table(const ReportTable& table, ReportFormat format) {
  switch (format) {
    case ReportFormat::csv: return render_csv(table);
    case ReportFormat::json_format: return render_json(table);
    case ReportFormat::markdown: return render_markdown(table);
  }
  throw std::logic_error("unknown report format");
}

std::string format_fixed(double value, int decimals) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*f", decimals, value);
  std::string out(buffer);
  if (out == "-0" || out == "-0.0" || out == "-0.00" || out == "-0.000" || out == "-0.0000") {
    out.erase(0, 1);
  }
  return out;
}

ReportTable emit_score_table(const ScoreMatrix& matrix, const std::string& metric_kind) {
  ReportTable table;
  table.caption = metric_kind + " scores by dataset and committee";
  table.column_labels.push_back("dataset / committee");
  for (const auto& thinker : matrix.thinkers) table.column_labels.push_back(thinker);

  auto kind_it = matrix.metric.find(metric_kind);
  for (const auto& dataset : matrix.datasets) {
    for (const auto& committee : matrix.committee_order) {
      std::vector<std::string> row;
      row.push_back(dataset + " / " + committee);
      for (const auto& thinker : matrix.thinkers) {
        const double* value = nullptr;
        if (kind_it != matrix.metric.end()) {
          auto thinker_it = kind_it->second.find(thinker);
          if (thinker_it != kind_it->second.end()) {
            auto dataset_it = thinker_it->second.find(dataset);
            if (dataset_it != thinker_it->second.end()) {
              auto cell = dataset_it->second.committee.find(committee);
              if (cell != dataset_it->second.committee.end()) value = &cell->second;
            }
          }
        }
        if (value) {
          row.push_back(format_fixed(*value, 2));
        } else {
          row.push_back(kMissingCell);
          table.defects.push_back("missing " + metric_kind + " cell: (" + thinker + ", " + dataset +
                                  ", " + committee + ")");
        }
      }
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

ReportTable emit_accuracy_table(const ScoreMatrix& matrix) {
  ReportTable table;
  table.caption = "thinker accuracy by dataset";
  table.column_labels.push_back("dataset");
  for (const auto& thinker : matrix.thinkers) table.column_labels.push_back(thinker);
  for (const auto& dataset : matrix.datasets) {
    std::vector<std::string> row;
    row.push_back(dataset);
    for (const auto& thinker : matrix.thinkers) {
      auto thinker_it = matrix.accuracy.find(thinker);
      if (thinker_it != matrix.accuracy.end() && thinker_it->second.count(dataset)) {
        row.push_back(format_fixed(thinker_it->second.at(dataset), 2));
      } else {
        row.push_back(kMissingCell);
        table.defects.push_back("missing accuracy cell: (" + thinker + ", " + dataset + ")");
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

ReportTable emit_tau_table(const ScoreMatrix& matrix, TauAxis axis, const std::string& metric_kind) {
  if (matrix.thinkers.size() < 2) {
    throw std::runtime_error("tau table needs at least 2 thinkers");
  }

  ReportTable table;
  table.column_labels.push_back("dataset");

  if (axis == TauAxis::committee_pairs) {
    table.caption = "rank correlation of thinker orderings across committees (" + metric_kind + ")";
    const std::vector<std::pair<std::string, std::string>> pairs = {
        {"weak", "strong"}, {"strong", "full"}, {"full", "weak"}};
    for (const auto& [a, b] : pairs) {
      std::string a_label = a, b_label = b;
      a_label[0] = static_cast<char>(std::toupper(a_label[0]));
      b_label[0] = static_cast<char>(std::toupper(b_label[0]));
      table.column_labels.push_back(a_label + " vs " + b_label);
    }

    std::vector<std::vector<double>> columns(pairs.size());
    for (const auto& dataset : matrix.datasets) {
      std::vector<std::string> row{dataset};
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        auto a = committee_scores_for(matrix, metric_kind, dataset, pairs[i].first);
        auto b = committee_scores_for(matrix, metric_kind, dataset, pairs[i].second);
        double tau = kendall_tau(a, b);
        columns[i].push_back(tau);
        row.push_back(format_fixed(tau, 4));
      }
      table.rows.push_back(std::move(row));
    }

    std::vector<std::string> avg{"AVERAGE"}, var_sample{"VARIANCE (n-1)"}, var_population{"VARIANCE (n)"};
    for (const auto& column : columns) {
      MeanVariance mv = mean_variance(column);
      avg.push_back(format_fixed(mv.mean, 4));
      var_sample.push_back(format_fixed(mv.variance, 4));
      var_population.push_back(format_fixed(population_variance(column), 4));
    }
    table.rows.push_back(std::move(avg));
    table.rows.push_back(std::move(var_sample));
    table.rows.push_back(std::move(var_population));
    table.defects.push_back("variance is reported under both the n-1 and n conventions");
    return table;
  }

  table.caption = "rank correlation between evaluation measures (full committee)";
  const std::vector<std::pair<std::string, std::string>> pairs = {
      {"accuracy", "reusability"}, {"reusability", "verifiability"}, {"verifiability", "accuracy"}};
  table.column_labels.push_back("A vs R");
  table.column_labels.push_back("R vs V");
  table.column_labels.push_back("V vs A");

  auto measure_scores = [&](const std::string& measure, const std::string& dataset) {
    std::vector<std::pair<std::string, double>> scores;
    for (const auto& thinker : matrix.thinkers) {
      if (measure == "accuracy") {
        scores.emplace_back(thinker, matrix.accuracy.at(thinker).at(dataset));
      } else {
        scores.emplace_back(thinker, matrix.metric.at(measure).at(thinker).at(dataset).committee.at("full"));
      }
    }
    return scores;
  };

  std::vector<std::vector<double>> columns(pairs.size());
  for (const auto& dataset : matrix.datasets) {
    std::vector<std::string> row{dataset};
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      double tau = kendall_tau(measure_scores(pairs[i].first, dataset), measure_scores(pairs[i].second, dataset));
      columns[i].push_back(tau);
      row.push_back(format_fixed(tau, 2));
    }
    table.rows.push_back(std::move(row));
  }

  std::vector<std::string> avg{"Average"}, var_sample{"Variance (n-1)"}, var_population{"Variance (n)"};
  for (const auto& column : columns) {
    MeanVariance mv = mean_variance(column);
    avg.push_back(format_fixed(mv.mean, 2));
    var_sample.push_back(format_fixed(mv.variance, 2));
    var_population.push_back(format_fixed(population_variance(column), 2));
  }
  table.rows.push_back(std::move(avg));
  table.rows.push_back(std::move(var_sample));
  table.rows.push_back(std::move(var_population));
  table.defects.push_back("variance is reported under both the n-1 and n conventions");
  return table;
}

ReportTable emit_summary_table(const ScoreMatrix& matrix) {
  ReportTable table;
  table.caption = "accuracy / reusability / verifiability summary (full committee, nearest integer)";
  table.column_labels.push_back("thinker");
  for (const auto& dataset : matrix.datasets) {
    table.column_labels.push_back(dataset + " A");
    table.column_labels.push_back(dataset + " R");
    table.column_labels.push_back(dataset + " V");
  }
  for (const auto& thinker : matrix.thinkers) {
    std::vector<std::string> row{thinker};
    for (const auto& dataset : matrix.datasets) {
      row.push_back(format_fixed(std::round(matrix.accuracy.at(thinker).at(dataset)), 0));
      for (const char* kind : {"reusability", "verifiability"}) {
        auto& cell = matrix.metric.at(kind).at(thinker).at(dataset);
        row.push_back(format_fixed(std::round(cell.committee.at("full")), 0));
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace cotgauge
