#include "cotgauge/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace cotgauge {

namespace {

[[noreturn]] void record_error(const std::string& origin, std::size_t line, const std::string& what) {
  throw std::runtime_error(origin + ":" + std::to_string(line) + ": " + what);
}

/// GSM8K gold convention: the token after the final "####", with commas and
/// currency marks stripped, read as a decimal number.
double parse_gsm8k_gold(const std::string& answer_field, const std::string& origin, std::size_t line) {
  std::size_t pos = answer_field.rfind("####");
  if (pos == std::string::npos) {
    record_error(origin, line, "gold answer has no '####' delimiter");
  }
  std::string token = trim(answer_field.substr(pos + 4));
  std::string cleaned;
  for (char c : token) {
    if (c == ',' || c == '$' || c == '*' || c == ' ') continue;
    cleaned.push_back(c);
  }
  while (!cleaned.empty() && cleaned.back() == '.') cleaned.pop_back();
  if (cleaned.empty()) record_error(origin, line, "empty gold answer after '####'");
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(cleaned.data(), cleaned.data() + cleaned.size(), value);
  if (ec != std::errc() || ptr != cleaned.data() + cleaned.size() || !std::isfinite(value)) {
    record_error(origin, line, "gold answer is not a decimal number: '" + token + "'");
  }
  return value;
}

Question parse_choice_record(const nlohmann::json& rec, const std::string& dataset_id,
                             const std::string& origin, std::size_t line) {
  Question q;
  q.dataset_id = dataset_id;
  try {
    q.id = rec.at("id").get<std::string>();
    const auto& question = rec.at("question");
    q.text = question.at("stem").get<std::string>();
    std::vector<std::string> labels;
    for (const auto& choice : question.at("choices")) {
      QuestionOption opt;
      opt.label = choice.at("label").get<std::string>();
      opt.text = choice.at("text").get<std::string>();
      labels.push_back(opt.label);
      q.options.push_back(std::move(opt));
    }
    q.form = AnswerForm::multiple_choice(std::move(labels));
    q.gold = CanonicalAnswer::of_label(rec.at("answerKey").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    record_error(origin, line, std::string("malformed choice record: ") + e.what());
  }
  if (!q.gold.valid_for(q.form)) {
    record_error(origin, line, "answerKey '" + q.gold.label() + "' is not among the option labels");
  }
  return q;
}

std::vector<nlohmann::json> records_from_array_or_jsonl(std::string_view raw, const std::string& origin) {
  std::string stripped = trim(raw);
  if (!stripped.empty() && stripped.front() == '[') {
    nlohmann::json arr;
    try {
      arr = nlohmann::json::parse(stripped);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error(origin + ": malformed JSON array: " + e.what());
    }
    if (!arr.is_array()) throw std::runtime_error(origin + ": expected a JSON array");
    return {arr.begin(), arr.end()};
  }
  return parse_jsonl(raw, origin);
}

Dataset parse_gsm8k(std::string_view raw, const std::string& origin, const std::string& dataset_id) {
  Dataset d;
  d.dataset_id = dataset_id;
  auto records = parse_jsonl(raw, origin);
  std::size_t line = 0;
  for (const auto& rec : records) {
    ++line;
    Question q;
    q.dataset_id = d.dataset_id;
    try {
      q.text = rec.at("question").get<std::string>();
      q.id = rec.value("id", d.dataset_id + "-" + std::to_string(line));
      q.form = AnswerForm::numeric();
      q.gold = CanonicalAnswer::of_number(
          parse_gsm8k_gold(rec.at("answer").get<std::string>(), origin, line));
    } catch (const nlohmann::json::exception& e) {
      record_error(origin, line, std::string("malformed record: ") + e.what());
    }
    d.questions.push_back(std::move(q));
  }
  return d;
}

Dataset parse_svamp(std::string_view raw, const std::string& origin, const std::string& dataset_id) {
  Dataset d;
  d.dataset_id = dataset_id;
  auto records = records_from_array_or_jsonl(raw, origin);
  std::size_t line = 0;
  for (const auto& rec : records) {
    ++line;
    Question q;
    q.dataset_id = d.dataset_id;
    try {
      q.id = rec.at("ID").get<std::string>();
      std::string body = trim(rec.at("Body").get<std::string>());
      std::string question = trim(rec.at("Question").get<std::string>());
      q.text = body.empty() ? question : body + " " + question;
      q.form = AnswerForm::numeric();
      if (!rec.at("Answer").is_number()) record_error(origin, line, "Answer field is not numeric");
      q.gold = CanonicalAnswer::of_number(rec.at("Answer").get<double>());
    } catch (const nlohmann::json::exception& e) {
      record_error(origin, line, std::string("malformed record: ") + e.what());
    }
    d.questions.push_back(std::move(q));
  }
  return d;
}

Dataset parse_choices_jsonl(std::string_view raw, const std::string& origin, const std::string& dataset_id) {
  Dataset d;
  d.dataset_id = dataset_id;
  auto records = parse_jsonl(raw, origin);
  std::size_t line = 0;
  for (const auto& rec : records) {
    ++line;
    d.questions.push_back(parse_choice_record(rec, d.dataset_id, origin, line));
  }
  return d;
}

Dataset parse_strategyqa(std::string_view raw, const std::string& origin, const std::string& dataset_id) {
  Dataset d;
  d.dataset_id = dataset_id;
  auto records = records_from_array_or_jsonl(raw, origin);
  std::size_t line = 0;
  for (const auto& rec : records) {
    ++line;
    Question q;
    q.dataset_id = d.dataset_id;
    try {
      q.id = rec.at("qid").get<std::string>();
      q.text = rec.at("question").get<std::string>();
      q.form = AnswerForm::boolean_form();
      if (!rec.at("answer").is_boolean()) record_error(origin, line, "answer field is not boolean");
      q.gold = CanonicalAnswer::of_bool(rec.at("answer").get<bool>());
    } catch (const nlohmann::json::exception& e) {
      record_error(origin, line, std::string("malformed record: ") + e.what());
    }
    d.questions.push_back(std::move(q));
  }
  return d;
}

Dataset parse_canonical(std::string_view raw, const std::string& origin, const std::string& dataset_id) {
  Dataset d;
  d.dataset_id = dataset_id;
  auto records = parse_jsonl(raw, origin);
  std::size_t line = 0;
  for (const auto& rec : records) {
    ++line;
    Question q;
    try {
      q.id = rec.at("id").get<std::string>();
      q.dataset_id = rec.at("dataset").get<std::string>();
      q.text = rec.at("question").get<std::string>();
      FormKind kind = form_kind_from_string(rec.at("form").get<std::string>());
      if (kind == FormKind::multiple_choice) {
        std::vector<std::string> labels;
        for (const auto& opt : rec.at("options")) {
          QuestionOption option{opt.at("label").get<std::string>(), opt.at("text").get<std::string>()};
          labels.push_back(option.label);
          q.options.push_back(std::move(option));
        }
        q.form = AnswerForm::multiple_choice(std::move(labels));
      } else if (kind == FormKind::numeric) {
        q.form = AnswerForm::numeric();
      } else {
        q.form = AnswerForm::boolean_form();
      }
      q.gold = CanonicalAnswer::from_json(rec.at("gold"), q.form);
    } catch (const nlohmann::json::exception& e) {
      record_error(origin, line, std::string("malformed canonical record: ") + e.what());
    }
    if (d.dataset_id.empty() || d.dataset_id == to_string(DatasetFormat::canonical_jsonl)) {
      d.dataset_id = q.dataset_id;
    }
    d.questions.push_back(std::move(q));
  }
  return d;
}

}  // namespace

std::string to_string(DatasetFormat f) {
  switch (f) {
    case DatasetFormat::gsm8k: return "gsm8k";
    case DatasetFormat::svamp: return "svamp";
    case DatasetFormat::arc_challenge: return "arc_challenge";
    case DatasetFormat::strategyqa: return "strategyqa";
    case DatasetFormat::commonsenseqa: return "commonsenseqa";
    case DatasetFormat::canonical_jsonl: return "canonical_jsonl";
  }
  throw std::logic_error("unknown dataset format");
}

DatasetFormat dataset_format_from_string(const std::string& s) {
  if (s == "gsm8k") return DatasetFormat::gsm8k;
  if (s == "svamp") return DatasetFormat::svamp;
  if (s == "arc_challenge") return DatasetFormat::arc_challenge;
  if (s == "strategyqa") return DatasetFormat::strategyqa;
  if (s == "commonsenseqa") return DatasetFormat::commonsenseqa;
  if (s == "canonical_jsonl") return DatasetFormat::canonical_jsonl;
  throw std::runtime_error("unknown dataset format: " + s);
}

Dataset parse_dataset(std::string_view raw, DatasetFormat format, const std::string& origin,
                      const std::string& dataset_id) {
  if (trim(raw).empty()) {
    throw std::runtime_error(origin + ": malformed dataset: input is empty");
  }
  std::string name = dataset_id.empty() ? to_string(format) : dataset_id;
  Dataset d;
  switch (format) {
    case DatasetFormat::gsm8k: d = parse_gsm8k(raw, origin, name); break;
    case DatasetFormat::svamp: d = parse_svamp(raw, origin, name); break;
    case DatasetFormat::arc_challenge:
    case DatasetFormat::commonsenseqa: d = parse_choices_jsonl(raw, origin, name); break;
    case DatasetFormat::strategyqa: d = parse_strategyqa(raw, origin, name); break;
    case DatasetFormat::canonical_jsonl: d = parse_canonical(raw, origin, name); break;
  }
  if (d.questions.empty()) {
    throw std::runtime_error(origin + ": malformed dataset: no records");
  }
  d.source_digest = sha256_hex(raw);
  return d;
}

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format) {
  std::string raw = read_file(path);
  return parse_dataset(raw, format, path.string());
}

Dataset sample_dataset(const Dataset& d, std::size_t n, std::uint64_t seed) {
  Dataset out;
  out.dataset_id = d.dataset_id;
  out.source_digest = d.source_digest;
  if (n >= d.questions.size()) {
    out.questions = d.questions;
    return out;
  }
  // Partial Fisher-Yates picks n indices, then original order is restored.
  std::vector<std::size_t> indices(d.questions.size());
  std::iota(indices.begin(), indices.end(), 0);
  SplitMix64 rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.bounded(indices.size() - i));
    std::swap(indices[i], indices[j]);
  }
  indices.resize(n);
  std::sort(indices.begin(), indices.end());
  out.questions.reserve(n);
  for (std::size_t idx : indices) out.questions.push_back(d.questions[idx]);
  return out;
}

ValidationReport validate_dataset(const Dataset& d) {
  ValidationReport report;
  if (d.questions.empty()) report.defects.push_back("dataset is empty");

  std::set<std::string> seen;
  for (const auto& q : d.questions) {
    report.form_counts[to_string(q.form.kind)]++;
    if (!seen.insert(q.id).second) {
      report.duplicate_ids.push_back(q.id);
      report.defects.push_back("duplicate question id: " + q.id);
    }
    for (const auto& defect : q.form.defects()) {
      report.defects.push_back(q.id + ": " + defect);
    }
    if (!q.gold.valid_for(q.form)) {
      report.defects.push_back(q.id + ": gold answer does not fit the answer form");
    }
    if (q.form.kind == FormKind::multiple_choice && q.options.size() != q.form.option_labels.size()) {
      report.defects.push_back(q.id + ": option texts do not match option labels");
    }
  }
  return report;
}

json ValidationReport::to_json() const {
  json j;
  j["form_counts"] = form_counts;
  j["duplicate_ids"] = duplicate_ids;
  j["defects"] = defects;
  j["ok"] = ok();
  return j;
}

std::string to_canonical_jsonl(const Dataset& d) {
  std::string out;
  for (const auto& q : d.questions) {
    json rec;
    rec["id"] = q.id;
    rec["dataset"] = q.dataset_id;
    rec["question"] = q.text;
    rec["form"] = to_string(q.form.kind);
    if (q.form.kind == FormKind::multiple_choice) {
      json options = json::array();
      for (const auto& opt : q.options) {
        options.push_back(json{{"label", opt.label}, {"text", opt.text}});
      }
      rec["options"] = options;
    }
    rec["gold"] = q.gold.to_json();
    out += rec.dump();
    out += '\n';
  }
  return out;
}

void export_canonical_jsonl(const Dataset& d, const std::filesystem::path& path) {
  atomic_write_file(path, to_canonical_jsonl(d));
}

}  // namespace cotgauge
