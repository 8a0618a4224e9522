#include "cotgauge/extract.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>
#include <stdexcept>

namespace cotgauge {

namespace {

bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

struct ValueMatch {
  CanonicalAnswer value;
  std::size_t begin = 0;
  std::size_t end = 0;
};

std::size_t skip_spaces(std::string_view raw, std::size_t pos) {
  while (pos < raw.size() && is_space(raw[pos])) ++pos;
  return pos;
}

/// Parses a decimal numeral at pos: optional sign, digits with thousands
/// commas, optional fractional part. Decoration ('$', '*', quotes) before the
/// numeral is skipped but excluded from the span.
std::optional<ValueMatch> parse_number_at(std::string_view raw, std::size_t pos) {
  pos = skip_spaces(raw, pos);
  while (pos < raw.size() && (raw[pos] == '$' || raw[pos] == '*' || raw[pos] == '"' || raw[pos] == '\'')) ++pos;
  pos = skip_spaces(raw, pos);
  if (pos >= raw.size()) return std::nullopt;

  std::size_t begin = pos;
  std::string cleaned;
  if (raw[pos] == '-' || raw[pos] == '+') {
    cleaned.push_back(raw[pos]);
    ++pos;
  }
  if (pos >= raw.size() || !is_digit(raw[pos])) return std::nullopt;

  while (pos < raw.size()) {
    char c = raw[pos];
    if (is_digit(c)) {
      cleaned.push_back(c);
      ++pos;
    } else if (c == ',' && pos + 1 < raw.size() && is_digit(raw[pos + 1])) {
      ++pos;  // thousands separator
    } else {
      break;
    }
  }
  if (pos < raw.size() && raw[pos] == '.' && pos + 1 < raw.size() && is_digit(raw[pos + 1])) {
    cleaned.push_back('.');
    ++pos;
    while (pos < raw.size() && is_digit(raw[pos])) {
      cleaned.push_back(raw[pos]);
      ++pos;
    }
  }

  double parsed = 0.0;
  auto [ptr, ec] = std::from_chars(cleaned.data(), cleaned.data() + cleaned.size(), parsed);
  if (ec != std::errc() || ptr != cleaned.data() + cleaned.size() || !std::isfinite(parsed)) {
    return std::nullopt;
  }
  return ValueMatch{CanonicalAnswer::of_number(parsed), begin, pos};
}

/// Reads one bare token (run of alnum chars) at pos, skipping wrappers.
struct Token {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;
  bool wrapped = false;  // preceded by ( or [ or followed by ) ] .
};

std::optional<Token> read_token_at(std::string_view raw, std::size_t pos) {
  pos = skip_spaces(raw, pos);
  bool open_wrap = false;
  while (pos < raw.size() && (raw[pos] == '(' || raw[pos] == '[' || raw[pos] == '{' || raw[pos] == '*' ||
                              raw[pos] == '"' || raw[pos] == '\'')) {
    if (raw[pos] == '(' || raw[pos] == '[') open_wrap = true;
    ++pos;
  }
  pos = skip_spaces(raw, pos);
  std::size_t begin = pos;
  while (pos < raw.size() && is_alnum(raw[pos])) ++pos;
  if (pos == begin) return std::nullopt;
  Token t;
  t.text = std::string(raw.substr(begin, pos - begin));
  t.begin = begin;
  t.end = pos;
  bool close_wrap = pos < raw.size() && (raw[pos] == ')' || raw[pos] == ']' || raw[pos] == '.');
  t.wrapped = open_wrap || close_wrap;
  return t;
}

std::optional<ValueMatch> parse_label_at(std::string_view raw, std::size_t pos, const AnswerForm& form) {
  auto token = read_token_at(raw, pos);
  if (!token) return std::nullopt;
  std::string folded = casefold(token->text);
  for (const auto& label : form.option_labels) {
    if (casefold(label) == folded) {
      return ValueMatch{CanonicalAnswer::of_label(label), token->begin, token->end};
    }
  }
  return std::nullopt;
}

std::optional<ValueMatch> parse_bool_at(std::string_view raw, std::size_t pos) {
  auto token = read_token_at(raw, pos);
  if (!token) return std::nullopt;
  std::string folded = casefold(token->text);
  if (folded == "yes" || folded == "true") {
    return ValueMatch{CanonicalAnswer::of_bool(true), token->begin, token->end};
  }
  if (folded == "no" || folded == "false") {
    return ValueMatch{CanonicalAnswer::of_bool(false), token->begin, token->end};
  }
  return std::nullopt;
}

std::optional<ValueMatch> parse_value_at(std::string_view raw, std::size_t pos, const AnswerForm& form) {
  switch (form.kind) {
    case FormKind::numeric: return parse_number_at(raw, pos);
    case FormKind::multiple_choice: return parse_label_at(raw, pos, form);
    case FormKind::boolean_form: return parse_bool_at(raw, pos);
  }
  return std::nullopt;
}

bool word_matches_at(std::string_view raw, std::size_t pos, std::string_view word) {
  if (pos + word.size() > raw.size()) return false;
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(raw[pos + i])) != word[i]) return false;
  }
  if (pos > 0 && is_alpha(raw[pos - 1])) return false;
  std::size_t after = pos + word.size();
  if (after < raw.size() && is_alpha(raw[after])) return false;
  return true;
}

/// The last "Answer ..."-marker occurrence followed by a well-formed value.
std::optional<ValueMatch> scan_markers(std::string_view raw, const AnswerForm& form) {
  std::optional<ValueMatch> last;
  for (std::size_t i = 0; i + 6 <= raw.size(); ++i) {
    if (!word_matches_at(raw, i, "answer")) continue;
    std::size_t pos = i + 6;
    pos = skip_spaces(raw, pos);
    if (word_matches_at(raw, pos, "is")) pos = skip_spaces(raw, pos + 2);
    if (pos < raw.size() && (raw[pos] == ':' || raw[pos] == '=')) ++pos;
    auto match = parse_value_at(raw, pos, form);
    if (match) last = match;
  }
  return last;
}

std::optional<ValueMatch> scan_fallback_numeric(std::string_view raw) {
  std::optional<ValueMatch> last;
  std::size_t i = 0;
  while (i < raw.size()) {
    bool starts_number = is_digit(raw[i]) || ((raw[i] == '-' || raw[i] == '+') && i + 1 < raw.size() && is_digit(raw[i + 1]));
    bool standalone = i == 0 || (!is_alnum(raw[i - 1]) && raw[i - 1] != '_' && raw[i - 1] != '.');
    if (starts_number && standalone) {
      auto match = parse_number_at(raw, i);
      if (match && (match->end >= raw.size() || !is_alpha(raw[match->end]))) {
        last = match;
        i = match->end;
        continue;
      }
    }
    ++i;
  }
  return last;
}

std::optional<ValueMatch> scan_fallback_label(std::string_view raw, const AnswerForm& form) {
  std::optional<ValueMatch> last;
  std::size_t i = 0;
  while (i < raw.size()) {
    if (!is_alnum(raw[i]) || (i > 0 && is_alnum(raw[i - 1]))) {
      ++i;
      continue;
    }
    auto token = read_token_at(raw, i);
    if (!token) {
      ++i;
      continue;
    }
    std::string folded = casefold(token->text);
    for (const auto& label : form.option_labels) {
      if (casefold(label) != folded) continue;
      // A bare lowercase single letter reads as prose ("a dog"), not a pick.
      bool bare_lowercase_letter =
          token->text.size() == 1 && is_alpha(token->text[0]) &&
          std::islower(static_cast<unsigned char>(token->text[0])) && !token->wrapped;
      if (!bare_lowercase_letter) {
        last = ValueMatch{CanonicalAnswer::of_label(label), token->begin, token->end};
      }
      break;
    }
    i = token->end;
  }
  return last;
}

std::optional<ValueMatch> scan_fallback_bool(std::string_view raw) {
  std::optional<ValueMatch> last;
  std::size_t i = 0;
  while (i < raw.size()) {
    if (!is_alpha(raw[i]) || (i > 0 && is_alnum(raw[i - 1]))) {
      ++i;
      continue;
    }
    auto match = parse_bool_at(raw, i);
    if (match) {
      last = match;
      i = match->end;
    } else {
      ++i;
    }
  }
  return last;
}

}  // namespace

ExtractionResult extract_answer(std::string_view raw, const AnswerForm& form) {
  if (auto match = scan_markers(raw, form)) {
    return ExtractionResult::ok(std::move(match->value), match->begin, match->end);
  }
  std::optional<ValueMatch> fallback;
  switch (form.kind) {
    case FormKind::numeric: fallback = scan_fallback_numeric(raw); break;
    case FormKind::multiple_choice: fallback = scan_fallback_label(raw, form); break;
    case FormKind::boolean_form: fallback = scan_fallback_bool(raw); break;
  }
  if (fallback) {
    return ExtractionResult::ok(std::move(fallback->value), fallback->begin, fallback->end);
  }
  switch (form.kind) {
    case FormKind::numeric: return ExtractionResult::fail("no answer marker and no standalone number found");
    case FormKind::multiple_choice: return ExtractionResult::fail("no answer marker and no standalone option label found");
    case FormKind::boolean_form: return ExtractionResult::fail("no answer marker and no yes/no/true/false token found");
  }
  return ExtractionResult::fail("unknown answer form");
}

json ExtractionResult::to_json() const {
  json j;
  j["parsed"] = parsed;
  if (parsed) {
    j["value"] = value.to_json();
    j["span"] = json::array({span_begin, span_end});
  } else {
    j["reason"] = reason;
  }
  return j;
}

ExtractionResult ExtractionResult::from_json(const json& j, const AnswerForm& form) {
  ExtractionResult r;
  r.parsed = j.at("parsed").get<bool>();
  if (r.parsed) {
    r.value = CanonicalAnswer::from_json(j.at("value"), form);
    r.span_begin = j.at("span").at(0).get<std::size_t>();
    r.span_end = j.at("span").at(1).get<std::size_t>();
  } else {
    r.reason = j.value("reason", "");
  }
  return r;
}

std::string to_string(Grade g) { return g == Grade::correct ? "correct" : "wrong"; }

Grade grade_from_string(const std::string& s) {
  if (s == "correct") return Grade::correct;
  if (s == "wrong") return Grade::wrong;
  throw std::runtime_error("unknown grade: " + s);
}

Grade grade(const ExtractionResult& r, const CanonicalAnswer& gold, const AnswerForm& form) {
  if (!gold.valid_for(form)) throw std::runtime_error("grade: gold answer does not fit the answer form");
  if (!r.parsed) return Grade::wrong;
  return answers_equal(r.value, gold, form) ? Grade::correct : Grade::wrong;
}

}  // namespace cotgauge
