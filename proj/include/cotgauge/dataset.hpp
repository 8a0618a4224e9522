#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cotgauge/answer.hpp"

namespace cotgauge {

/// One labelled option of a multiple-choice question.
struct QuestionOption {
  std::string label;
  std::string text;
  bool operator==(const QuestionOption&) const = default;
};

struct Question {
  std::string id;
  std::string dataset_id;
  std::string text;
  AnswerForm form;
  std::vector<QuestionOption> options;  // multiple_choice only
  CanonicalAnswer gold;
};

struct Dataset {
  std::string dataset_id;
  std::vector<Question> questions;
  std::string source_digest;  // SHA-256 of the raw input bytes
};

enum class DatasetFormat { gsm8k, svamp, arc_challenge, strategyqa, commonsenseqa, canonical_jsonl };

std::string to_string(DatasetFormat f);
DatasetFormat dataset_format_from_string(const std::string& s);

/// Loads one of the supported benchmark files into the canonical question
/// shape. Malformed records raise with the offending line number.
Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format);

/// Parses from memory; `origin` labels error messages. `dataset_id` names the
/// resulting dataset (defaults to the format name when empty).
Dataset parse_dataset(std::string_view raw, DatasetFormat format, const std::string& origin,
                      const std::string& dataset_id = "");

/// Deterministic subset of size min(n, |d|), without replacement, original
/// order preserved. Same (d, n, seed) always selects the same questions.
Dataset sample_dataset(const Dataset& d, std::size_t n, std::uint64_t seed);

struct ValidationReport {
  std::map<std::string, std::size_t> form_counts;  // form name -> count
  std::vector<std::string> duplicate_ids;
  std::vector<std::string> defects;  // human-readable, one per violation

  bool ok() const { return defects.empty(); }
  json to_json() const;
};

/// Reports invariant violations instead of throwing; empty defect list iff
/// the dataset invariants hold.
ValidationReport validate_dataset(const Dataset& d);

/// Canonical JSONL: one object per line, LF terminators, fields
/// {id, dataset, question, form, options?, gold}.
std::string to_canonical_jsonl(const Dataset& d);
void export_canonical_jsonl(const Dataset& d, const std::filesystem::path& path);

}  // namespace cotgauge
