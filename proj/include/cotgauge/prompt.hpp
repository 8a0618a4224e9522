#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "cotgauge/dataset.hpp"

namespace cotgauge {

enum class Condition {
  thinker_generate,
  baseline,
  with_cot,
  with_corrupted_cot,
  corruptor,
  thinker_validation,
};

std::string to_string(Condition c);
Condition condition_from_string(const std::string& s);

/// with_cot / with_corrupted_cot / corruptor / thinker_validation prompts
/// carry reasoning text; baseline and thinker_generate forbid one.
bool condition_requires_cot(Condition c);
/// corruptor output is reasoning, not an answer, so it takes no format instruction.
bool condition_has_answer_instruction(Condition c);

/// Template text with {question}, {options}, {cot}, {answer_format_instruction}
/// placeholders. Each placeholder the condition references must appear exactly
/// once; parse() enforces that. The digest pins the exact template bytes.
struct PromptTemplate {
  Condition condition = Condition::baseline;
  std::string text;
  std::string digest;  // SHA-256 of text

  static PromptTemplate parse(Condition condition, std::string text);
};

/// One template per condition.
class TemplateSet {
 public:
  static TemplateSet defaults();
  /// Overrides defaults from <dir>/<condition>.txt files where present.
  static TemplateSet load_dir(const std::filesystem::path& dir);

  const PromptTemplate& for_condition(Condition c) const;
  void set(PromptTemplate t);
  std::map<std::string, std::string> digests() const;  // condition name -> digest

 private:
  std::map<Condition, PromptTemplate> templates_;
};

std::string answer_format_instruction(const AnswerForm& form);

/// "Options:" block for multiple-choice questions; empty otherwise.
std::string render_options_block(const Question& q);

/// Substitutes the placeholders. The question text appears verbatim; the CoT
/// (when the condition takes one) lands after the question.
std::string render_prompt(const Question& q, Condition c, const std::optional<std::string>& cot,
                          const PromptTemplate& t);

}  // namespace cotgauge
