#include "cotgauge/answer.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace cotgauge {

std::string to_string(FormKind kind) {
  switch (kind) {
    case FormKind::numeric: return "numeric";
    case FormKind::multiple_choice: return "multiple_choice";
    case FormKind::boolean_form: return "boolean";
  }
  throw std::logic_error("unknown form kind");
}

FormKind form_kind_from_string(const std::string& s) {
  if (s == "numeric") return FormKind::numeric;
  if (s == "multiple_choice") return FormKind::multiple_choice;
  if (s == "boolean") return FormKind::boolean_form;
  throw std::runtime_error("unknown answer form: " + s);
}

AnswerForm AnswerForm::numeric() { return {FormKind::numeric, {}}; }

AnswerForm AnswerForm::multiple_choice(std::vector<std::string> labels) {
  return {FormKind::multiple_choice, std::move(labels)};
}

AnswerForm AnswerForm::boolean_form() { return {FormKind::boolean_form, {}}; }

std::vector<std::string> AnswerForm::defects() const {
  std::vector<std::string> out;
  if (kind == FormKind::multiple_choice) {
    if (option_labels.size() < 2) out.push_back("multiple_choice form has fewer than 2 option labels");
    std::set<std::string> folded;
    for (const auto& label : option_labels) {
      if (label.empty()) out.push_back("empty option label");
      if (!folded.insert(casefold(label)).second) {
        out.push_back("duplicate option label after case-folding: " + label);
      }
    }
  } else if (!option_labels.empty()) {
    out.push_back("option labels present on a non-multiple-choice form");
  }
  return out;
}

json AnswerForm::to_json() const {
  json j;
  j["kind"] = to_string(kind);
  if (kind == FormKind::multiple_choice) j["option_labels"] = option_labels;
  return j;
}

AnswerForm AnswerForm::from_json(const json& j) {
  AnswerForm form;
  form.kind = form_kind_from_string(j.at("kind").get<std::string>());
  if (form.kind == FormKind::multiple_choice) {
    form.option_labels = j.at("option_labels").get<std::vector<std::string>>();
  }
  return form;
}

bool CanonicalAnswer::valid_for(const AnswerForm& form) const {
  switch (form.kind) {
    case FormKind::numeric:
      return is_number() && std::isfinite(number());
    case FormKind::multiple_choice: {
      if (!is_label()) return false;
      std::string folded = casefold(label());
      for (const auto& option : form.option_labels) {
        if (casefold(option) == folded) return true;
      }
      return false;
    }
    case FormKind::boolean_form:
      return is_bool();
  }
  return false;
}

json CanonicalAnswer::to_json() const {
  if (is_number()) return json(number());
  if (is_label()) return json(label());
  return json(truth());
}

CanonicalAnswer CanonicalAnswer::from_json(const json& j, const AnswerForm& form) {
  switch (form.kind) {
    case FormKind::numeric:
      if (!j.is_number()) throw std::runtime_error("gold answer is not numeric");
      return of_number(j.get<double>());
    case FormKind::multiple_choice:
      if (!j.is_string()) throw std::runtime_error("gold answer is not an option label");
      return of_label(j.get<std::string>());
    case FormKind::boolean_form:
      if (!j.is_boolean()) throw std::runtime_error("gold answer is not a boolean");
      return of_bool(j.get<bool>());
  }
  throw std::logic_error("unknown form kind");
}

bool answers_equal(const CanonicalAnswer& a, const CanonicalAnswer& b, const AnswerForm& form) {
  if (!a.valid_for(form) || !b.valid_for(form)) {
    throw std::runtime_error("answers_equal: value does not fit the answer form");
  }
  switch (form.kind) {
    case FormKind::numeric: {
      double x = a.number(), y = b.number();
      double scale = std::max({1.0, std::fabs(x), std::fabs(y)});
      return std::fabs(x - y) <= 1e-6 * scale;
    }
    case FormKind::multiple_choice:
      return casefold(a.label()) == casefold(b.label());
    case FormKind::boolean_form:
      return a.truth() == b.truth();
  }
  return false;
}

}  // namespace cotgauge
