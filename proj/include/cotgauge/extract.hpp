#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "cotgauge/answer.hpp"

namespace cotgauge {

/// Result of pulling a final answer out of raw model text. `unparseable`
/// is a value, not an error; `reason` explains why nothing matched.
struct ExtractionResult {
  bool parsed = false;
  CanonicalAnswer value;        // meaningful iff parsed
  std::size_t span_begin = 0;   // character range of the matched value
  std::size_t span_end = 0;
  std::string reason;           // iff !parsed

  static ExtractionResult ok(CanonicalAnswer v, std::size_t begin, std::size_t end) {
    return {true, std::move(v), begin, end, {}};
  }
  static ExtractionResult fail(std::string why) { return {false, {}, 0, 0, std::move(why)}; }

  json to_json() const;
  static ExtractionResult from_json(const json& j, const AnswerForm& form);
};

/// Scans raw output for the last well-formed final answer. Prefers
/// "Answer:"-style markers; falls back to the last standalone value of the
/// right shape (number / option label / yes-no token).
ExtractionResult extract_answer(std::string_view raw, const AnswerForm& form);

enum class Grade { correct, wrong };

std::string to_string(Grade g);
Grade grade_from_string(const std::string& s);

/// Correct iff the extraction parsed and matches gold; unparseable is wrong.
Grade grade(const ExtractionResult& r, const CanonicalAnswer& gold, const AnswerForm& form);

}  // namespace cotgauge
