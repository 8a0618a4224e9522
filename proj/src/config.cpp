#include "cotgauge/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <set>
#include <stdexcept>

namespace cotgauge {

namespace {

[[noreturn]] void toml_error(const std::string& origin, std::size_t line, const std::string& what) {
  throw std::runtime_error(origin + ":" + std::to_string(line) + ": " + what);
}

std::string parse_toml_string(std::string_view value, const std::string& origin, std::size_t line) {
  if (value.size() < 2 || value.front() != '"' || value.back() != '"') {
    toml_error(origin, line, "expected a double-quoted string");
  }
  std::string out;
  for (std::size_t i = 1; i + 1 < value.size(); ++i) {
    char c = value[i];
    if (c == '\\' && i + 2 < value.size()) {
      char esc = value[++i];
      switch (esc) {
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        default: toml_error(origin, line, std::string("unsupported escape \\") + esc);
      }
    } else if (c == '"') {
      toml_error(origin, line, "unexpected quote inside string");
    } else {
      out.push_back(c);
    }
  }
  return out;
}

json parse_toml_scalar(std::string_view raw, const std::string& origin, std::size_t line) {
  std::string value = trim(raw);
  if (value.empty()) toml_error(origin, line, "missing value");
  if (value.front() == '"') return json(parse_toml_string(value, origin, line));
  if (value == "true") return json(true);
  if (value == "false") return json(false);

  bool looks_float = value.find('.') != std::string::npos || value.find('e') != std::string::npos ||
                     value.find('E') != std::string::npos;
  if (looks_float) {
    double d = 0.0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), d);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
      toml_error(origin, line, "not a number: " + value);
    }
    return json(d);
  }
  std::int64_t i = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), i);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    toml_error(origin, line, "unrecognized value: " + value);
  }
  return json(i);
}

/// Splits a single-line array body on commas that sit outside strings.
json parse_toml_array(std::string_view raw, const std::string& origin, std::size_t line) {
  std::string value = trim(raw);
  if (value.size() < 2 || value.front() != '[' || value.back() != ']') {
    toml_error(origin, line, "expected a single-line array");
  }
  json arr = json::array();
  std::string body = value.substr(1, value.size() - 2);
  std::string current;
  bool in_string = false;
  for (std::size_t i = 0; i < body.size(); ++i) {
    char c = body[i];
    if (c == '"' && (i == 0 || body[i - 1] != '\\')) in_string = !in_string;
    if (c == ',' && !in_string) {
      if (!trim(current).empty()) arr.push_back(parse_toml_scalar(current, origin, line));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!trim(current).empty()) arr.push_back(parse_toml_scalar(current, origin, line));
  return arr;
}

std::string strip_comment(std::string_view line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (c == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
    if (c == '#' && !in_string) return std::string(line.substr(0, i));
  }
  return std::string(line);
}

}  // namespace

json parse_toml_subset(std::string_view text, const std::string& origin) {
  json doc = json::object();
  json* section = &doc;
  std::size_t line_no = 0;
  std::size_t pos = 0;

  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view raw_line = (nl == std::string_view::npos) ? text.substr(pos) : text.substr(pos, nl - pos);
    ++line_no;
    std::string line = trim(strip_comment(raw_line));

    if (!line.empty()) {
      if (line.front() == '[') {
        if (line.back() != ']') toml_error(origin, line_no, "unterminated section header");
        std::string name = trim(std::string_view(line).substr(1, line.size() - 2));
        if (name.empty()) toml_error(origin, line_no, "empty section name");
        section = &doc;
        std::size_t start = 0;
        while (true) {
          std::size_t dot = name.find('.', start);
          std::string part = trim(std::string_view(name).substr(start, dot == std::string::npos ? std::string::npos : dot - start));
          if (part.empty()) toml_error(origin, line_no, "empty section path segment");
          section = &(*section)[part];
          if (!section->is_object() && !section->is_null()) {
            toml_error(origin, line_no, "section " + name + " collides with a key");
          }
          if (section->is_null()) *section = json::object();
          if (dot == std::string::npos) break;
          start = dot + 1;
        }
      } else {
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) toml_error(origin, line_no, "expected key = value");
        std::string key = trim(std::string_view(line).substr(0, eq));
        std::string value = trim(std::string_view(line).substr(eq + 1));
        if (key.empty()) toml_error(origin, line_no, "empty key");
        if (section->contains(key)) toml_error(origin, line_no, "duplicate key: " + key);
        if (!value.empty() && value.front() == '[') {
          (*section)[key] = parse_toml_array(value, origin, line_no);
        } else {
          (*section)[key] = parse_toml_scalar(value, origin, line_no);
        }
      }
    }

    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return doc;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  RunConfig config = from_toml(read_file(path), path.string(), path.parent_path());
  config.apply_env_overrides();
  config.validate();
  return config;
}

RunConfig RunConfig::from_toml(std::string_view text, const std::string& origin,
                               const std::filesystem::path& base_dir) {
  json doc = parse_toml_subset(text, origin);
  RunConfig config;
  config.base_dir = base_dir;

  if (doc.contains("paths")) {
    const json& paths = doc.at("paths");
    config.cache_dir = paths.value("cache_dir", config.cache_dir);
    config.run_dir = paths.value("run_dir", config.run_dir);
    config.api_url = paths.value("api_url", config.api_url);
    config.templates_dir = paths.value("templates_dir", config.templates_dir);
    config.scripted_table = paths.value("scripted_table", config.scripted_table);
  }

  if (doc.contains("datasets")) {
    const json& datasets = doc.at("datasets");
    if (!datasets.contains("order")) {
      throw std::runtime_error(origin + ": [datasets] needs an order = [...] key");
    }
    for (const auto& name_json : datasets.at("order")) {
      std::string name = name_json.get<std::string>();
      if (!datasets.contains(name)) {
        throw std::runtime_error(origin + ": dataset " + name + " listed in order but has no section");
      }
      const json& entry = datasets.at(name);
      DatasetConfig d;
      d.id = name;
      d.path = entry.at("path").get<std::string>();
      d.format = dataset_format_from_string(entry.at("format").get<std::string>());
      if (entry.contains("sample_n")) d.sample_n = entry.at("sample_n").get<std::size_t>();
      if (entry.contains("sample_seed")) d.sample_seed = entry.at("sample_seed").get<std::uint64_t>();
      config.datasets.push_back(std::move(d));
    }
  }

  if (doc.contains("models")) {
    const json& models = doc.at("models");
    if (models.contains("backend")) {
      config.backend = backend_kind_from_string(models.at("backend").get<std::string>());
    }
    if (models.contains("thinkers")) config.thinkers = models.at("thinkers").get<std::vector<std::string>>();
    if (models.contains("executors")) {
      config.executors = models.at("executors").get<std::vector<std::string>>();
    }
    config.max_concurrency = static_cast<int>(models.value("max_concurrency", std::int64_t(config.max_concurrency)));
    if (models.contains("verifiability_reference")) {
      config.reference =
          verifiability_reference_from_string(models.at("verifiability_reference").get<std::string>());
    }
    config.seed = static_cast<std::uint64_t>(models.value("seed", std::int64_t(config.seed)));
  }

  if (doc.contains("committees")) {
    for (const auto& [name, members] : doc.at("committees").items()) {
      config.committees[name] = members.get<std::vector<std::string>>();
    }
  }

  if (doc.contains("decode")) {
    const json& decode = doc.at("decode");
    config.decode.temperature = decode.value("temperature", config.decode.temperature);
    config.decode.top_p = decode.value("top_p", config.decode.top_p);
    config.decode.max_tokens = static_cast<int>(decode.value("max_tokens", std::int64_t(config.decode.max_tokens)));
    if (decode.contains("seed")) config.decode.seed = decode.at("seed").get<std::int64_t>();
  }

  if (doc.contains("corruption")) {
    const json& corruption = doc.at("corruption");
    config.corruption_max_attempts =
        static_cast<int>(corruption.value("max_attempts", std::int64_t(config.corruption_max_attempts)));
    if (corruption.contains("corruptor")) config.corruptor = corruption.at("corruptor").get<std::string>();
  }

  return config;
}

void RunConfig::apply_env_overrides() {
  if (const char* v = std::getenv("COT_GAUGE_CACHE_DIR"); v && *v) cache_dir = v;
  if (const char* v = std::getenv("COT_GAUGE_RUN_DIR"); v && *v) run_dir = v;
  if (const char* v = std::getenv("COT_GAUGE_API_URL"); v && *v) api_url = v;
}

std::filesystem::path RunConfig::resolve(const std::string& path) const {
  std::filesystem::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

void RunConfig::validate() const {
  decode.validate();
  if (datasets.empty()) throw std::runtime_error("config: no datasets configured");
  if (thinkers.empty()) throw std::runtime_error("config: no thinkers configured");
  if (executors.empty()) throw std::runtime_error("config: no executors configured");
  if (max_concurrency < 1) throw std::runtime_error("config: max_concurrency must be >= 1");
  if (corruption_max_attempts < 0) throw std::runtime_error("config: max_attempts must be >= 0");

  std::set<std::string> executor_set(executors.begin(), executors.end());
  if (executor_set.size() != executors.size()) throw std::runtime_error("config: duplicate executors");
  for (const auto& [name, members] : committees) {
    if (members.empty()) throw std::runtime_error("config: committee " + name + " is empty");
    for (const auto& member : members) {
      if (!executor_set.count(member)) {
        throw std::runtime_error("config: committee " + name + " member " + member +
                                 " is not in the executor list");
      }
    }
  }
  if (committees.count("strong") && committees.count("weak")) {
    std::set<std::string> strong(committees.at("strong").begin(), committees.at("strong").end());
    for (const auto& member : committees.at("weak")) {
      if (strong.count(member)) {
        throw std::runtime_error("config: " + member + " is in both the strong and weak committees");
      }
    }
  }

  for (const auto& d : datasets) {
    if (!std::filesystem::exists(resolve(d.path))) {
      throw std::runtime_error("config: dataset file does not exist: " + resolve(d.path).string());
    }
    if (d.sample_n && !d.sample_seed) {
      throw std::runtime_error("config: dataset " + d.id + " has sample_n but no sample_seed");
    }
  }
  if (backend == BackendKind::scripted) {
    if (scripted_table.empty()) throw std::runtime_error("config: scripted backend needs scripted_table");
    if (!std::filesystem::exists(resolve(scripted_table))) {
      throw std::runtime_error("config: scripted_table file does not exist: " +
                               resolve(scripted_table).string());
    }
  }
  if (!templates_dir.empty() && !std::filesystem::exists(resolve(templates_dir))) {
    throw std::runtime_error("config: templates_dir does not exist: " + resolve(templates_dir).string());
  }
}

std::string RunConfig::reference_toml() {
  return R"(# cotgauge run configuration (all defaults spelled out)

[paths]
cache_dir = "cache"            # completion cache epoch; delete or rename to invalidate
run_dir = "runs"               # run stores live under <run_dir>/<run_id>
api_url = "http://127.0.0.1:11434"   # inference server base URL (http backend)
templates_dir = ""             # directory with <condition>.txt prompt templates; "" = built-ins
scripted_table = ""            # rule table JSON (scripted backend)

[datasets]
order = ["demo"]

[datasets.demo]
path = "demo.jsonl"
format = "canonical_jsonl"     # gsm8k | svamp | arc_challenge | strategyqa | commonsenseqa | canonical_jsonl
# sample_n = 100               # optional deterministic sub-sample
# sample_seed = 7              # required with sample_n

[models]
backend = "http"               # http | scripted
thinkers = ["thinker-model"]
executors = ["executor-a", "executor-b"]
max_concurrency = 4
verifiability_reference = "generation"   # generation | reprompt
seed = 0                       # run-level seed (default sampling seed)

[committees]
strong = ["executor-a"]
weak = ["executor-b"]

[decode]
temperature = 0.0
top_p = 1.0
seed = 42
max_tokens = 1024

[corruption]
max_attempts = 3
# corruptor = "corruptor-model"   # default: the thinker corrupts its own CoT
)";
}

RunPlan make_run_plan(const RunConfig& config, const std::string& run_id) {
  if (run_id.empty()) throw std::runtime_error("run id must not be empty");

  RunPlan plan;
  plan.templates = config.templates_dir.empty() ? TemplateSet::defaults()
                                                : TemplateSet::load_dir(config.resolve(config.templates_dir));

  RunManifest& m = plan.manifest;
  m.run_id = run_id;
  m.thinkers = config.thinkers;
  m.executors = config.executors;
  m.committees = config.committees;
  m.corruptor = config.corruptor;
  m.corruption_max_attempts = config.corruption_max_attempts;
  m.decode = config.decode;
  m.template_digests = plan.templates.digests();
  m.seed = config.seed;
  m.backend = config.backend;
  m.scripted_table_path = config.scripted_table;
  m.reference = config.reference;
  m.max_concurrency = config.max_concurrency;

  for (const auto& dc : config.datasets) {
    Dataset loaded = load_dataset(config.resolve(dc.path), dc.format);
    loaded.dataset_id = dc.id;
    for (auto& q : loaded.questions) q.dataset_id = dc.id;

    ManifestDataset md;
    md.id = dc.id;
    md.path = dc.path;
    md.format = dc.format;
    md.digest = loaded.source_digest;
    if (dc.sample_n) {
      md.sample_n = dc.sample_n;
      md.sample_seed = dc.sample_seed.value_or(config.seed);
      loaded = sample_dataset(loaded, *dc.sample_n, md.sample_seed);
    }

    ValidationReport report = validate_dataset(loaded);
    if (!report.ok()) {
      std::string defects;
      for (const auto& d : report.defects) defects += "\n  " + d;
      throw std::runtime_error("dataset " + dc.id + " failed validation:" + defects);
    }

    m.datasets.push_back(std::move(md));
    plan.datasets.push_back(std::move(loaded));
  }

  return plan;
}

Gateway make_gateway(const RunConfig& config) {
  GatewayConfig gw;
  gw.api_url = config.api_url;
  gw.cache_dir = config.resolve(config.cache_dir);
  gw.max_concurrency = config.max_concurrency;

  std::shared_ptr<const ScriptedTable> table;
  if (config.backend == BackendKind::scripted) {
    table = std::make_shared<const ScriptedTable>(
        ScriptedTable::load_file(config.resolve(config.scripted_table)));
  }
  return Gateway(std::move(gw), std::move(table));
}

}  // namespace cotgauge
