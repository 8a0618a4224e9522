#pragma once

#include <string>
#include <variant>
#include <vector>

#include "cotgauge/util.hpp"

namespace cotgauge {

enum class FormKind { numeric, multiple_choice, boolean_form };

std::string to_string(FormKind kind);
FormKind form_kind_from_string(const std::string& s);

/// The answer shape of a question. Multiple-choice forms carry their ordered
/// option labels; labels must be unique after case-folding and number >= 2.
struct AnswerForm {
  FormKind kind = FormKind::numeric;
  std::vector<std::string> option_labels;  // multiple_choice only

  static AnswerForm numeric();
  static AnswerForm multiple_choice(std::vector<std::string> labels);
  static AnswerForm boolean_form();

  /// Returns defect descriptions; empty when the form invariants hold.
  std::vector<std::string> defects() const;

  bool operator==(const AnswerForm& other) const = default;

  json to_json() const;
  static AnswerForm from_json(const json& j);
};

/// A form-typed final answer: a finite number, an option label, or a truth value.
struct CanonicalAnswer {
  std::variant<double, std::string, bool> value;

  static CanonicalAnswer of_number(double v) { return {v}; }
  static CanonicalAnswer of_label(std::string v) { return {std::move(v)}; }
  static CanonicalAnswer of_bool(bool v) { return {v}; }

  bool is_number() const { return std::holds_alternative<double>(value); }
  bool is_label() const { return std::holds_alternative<std::string>(value); }
  bool is_bool() const { return std::holds_alternative<bool>(value); }
  double number() const { return std::get<double>(value); }
  const std::string& label() const { return std::get<std::string>(value); }
  bool truth() const { return std::get<bool>(value); }

  bool valid_for(const AnswerForm& form) const;

  json to_json() const;
  static CanonicalAnswer from_json(const json& j, const AnswerForm& form);
};

/// Form-aware answer equality: numeric within 1e-6 relative tolerance,
/// labels after case-folding, booleans strictly. Throws if either side is
/// invalid for the form.
bool answers_equal(const CanonicalAnswer& a, const CanonicalAnswer& b, const AnswerForm& form);

}  // namespace cotgauge
