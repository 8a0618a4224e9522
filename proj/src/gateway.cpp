#include "cotgauge/gateway.hpp"

#include <chrono>
#include <condition_variable>
#include <stdexcept>
#include <thread>

#include "httplib.h"

namespace cotgauge {

namespace {

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

std::string to_string(BackendKind b) { return b == BackendKind::http ? "http" : "scripted"; }

BackendKind backend_kind_from_string(const std::string& s) {
  if (s == "http") return BackendKind::http;
  if (s == "scripted") return BackendKind::scripted;
  throw std::runtime_error("unknown backend kind: " + s);
}

std::string to_string(RoleHint r) {
  switch (r) {
    case RoleHint::thinker: return "thinker";
    case RoleHint::executor: return "executor";
    case RoleHint::corruptor: return "corruptor";
  }
  throw std::logic_error("unknown role hint");
}

void DecodeParams::validate() const {
  if (temperature < 0.0) throw std::runtime_error("decode: temperature must be non-negative");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw std::runtime_error("decode: top_p must be in (0, 1]");
  if (max_tokens <= 0) throw std::runtime_error("decode: max_tokens must be positive");
}

json DecodeParams::to_json() const {
  json j;
  j["temperature"] = temperature;
  j["top_p"] = top_p;
  j["max_tokens"] = max_tokens;
  if (seed) j["seed"] = *seed;
  return j;
}

DecodeParams DecodeParams::from_json(const json& j) {
  DecodeParams p;
  p.temperature = j.value("temperature", 0.0);
  p.top_p = j.value("top_p", 1.0);
  p.max_tokens = j.value("max_tokens", 1024);
  if (j.contains("seed") && !j.at("seed").is_null()) p.seed = j.at("seed").get<std::int64_t>();
  return p;
}

void ScriptedTable::add_rule(ScriptedRule rule) {
  if (rule.model.empty()) throw std::runtime_error("scripted rule: model name is empty");
  bool has_contains = !rule.contains_all.empty();
  bool has_digest = !rule.digest.empty();
  if (has_contains == has_digest) {
    throw std::runtime_error("scripted rule: exactly one of contains/digest must be set");
  }
  for (const auto& existing : rules_) {
    if (existing.model == rule.model && existing.contains_all == rule.contains_all &&
        existing.digest == rule.digest) {
      throw std::runtime_error("scripted table: duplicate rule for model " + rule.model);
    }
  }
  rules_.push_back(std::move(rule));
}

void ScriptedTable::add_contains(const std::string& model, std::vector<std::string> contains_all,
                                 std::string response) {
  ScriptedRule rule;
  rule.model = model;
  rule.contains_all = std::move(contains_all);
  rule.response = std::move(response);
  add_rule(std::move(rule));
}

ScriptedTable ScriptedTable::from_json(const json& j) {
  if (!j.is_array()) throw std::runtime_error("scripted table: expected a JSON array of rules");
  ScriptedTable table;
  for (const auto& entry : j) {
    ScriptedRule rule;
    rule.model = entry.at("model").get<std::string>();
    rule.response = entry.at("response").get<std::string>();
    if (entry.contains("contains")) {
      rule.contains_all.push_back(entry.at("contains").get<std::string>());
    }
    if (entry.contains("contains_all")) {
      for (const auto& s : entry.at("contains_all")) rule.contains_all.push_back(s.get<std::string>());
    }
    if (entry.contains("digest")) rule.digest = entry.at("digest").get<std::string>();
    table.add_rule(std::move(rule));
  }
  return table;
}

ScriptedTable ScriptedTable::load_file(const std::filesystem::path& path) {
  return from_json(json::parse(read_file(path)));
}

const ScriptedRule& ScriptedTable::match(const std::string& model, const std::string& prompt) const {
  const ScriptedRule* found = nullptr;
  std::string prompt_digest;
  for (const auto& rule : rules_) {
    if (rule.model != model) continue;
    bool matches = false;
    if (!rule.contains_all.empty()) {
      matches = true;
      for (const auto& needle : rule.contains_all) {
        if (prompt.find(needle) == std::string::npos) {
          matches = false;
          break;
        }
      }
    } else {
      if (prompt_digest.empty()) prompt_digest = sha256_hex(prompt);
      matches = rule.digest == prompt_digest;
    }
    if (!matches) continue;
    if (found) {
      throw std::runtime_error("scripted table: multiple rules match prompt for model " + model +
                               " (digest " + sha256_hex(prompt) + ")");
    }
    found = &rule;
  }
  if (!found) {
    throw std::runtime_error("scripted table: no rule matches prompt for model " + model +
                             " (digest " + sha256_hex(prompt) + ")");
  }
  return *found;
}

std::string cache_key(const ModelRef& m, std::string_view prompt, const DecodeParams& p) {
  // json object keys serialize sorted, so the dump is canonical.
  json canonical;
  canonical["model"] = m.model_name;
  canonical["prompt"] = std::string(prompt);
  canonical["temperature"] = p.temperature;
  canonical["top_p"] = p.top_p;
  canonical["max_tokens"] = p.max_tokens;
  canonical["seed"] = p.seed ? json(*p.seed) : json(nullptr);
  return sha256_hex(canonical.dump());
}

namespace {

class HttplibTransport : public HttpTransport {
 public:
  HttplibTransport(std::string base_url, int timeout_s) : base_url_(std::move(base_url)), timeout_s_(timeout_s) {}

  std::optional<HttpResponse> post_json(const std::string& path, const std::string& body) override {
    httplib::Client client(base_url_);
    client.set_connection_timeout(timeout_s_, 0);
    client.set_read_timeout(timeout_s_, 0);
    client.set_write_timeout(timeout_s_, 0);
    auto res = client.Post(path, body, "application/json");
    if (!res) return std::nullopt;
    return HttpResponse{res->status, res->body};
  }

 private:
  std::string base_url_;
  int timeout_s_;
};

}  // namespace

std::unique_ptr<HttpTransport> make_httplib_transport(const std::string& base_url, int timeout_s) {
  return std::make_unique<HttplibTransport>(base_url, timeout_s);
}

/// Caps the number of in-flight backend requests.
class ConcurrencyGate {
 public:
  explicit ConcurrencyGate(int limit) : limit_(limit < 1 ? 1 : limit) {}

  void acquire() {
    std::unique_lock<std::mutex> lock(mu_);
    cv_.wait(lock, [&] { return in_flight_ < limit_; });
    ++in_flight_;
  }

  void release() {
    {
      std::lock_guard<std::mutex> lock(mu_);
      --in_flight_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int limit_;
  int in_flight_ = 0;
};

Gateway::Gateway(GatewayConfig config, std::shared_ptr<const ScriptedTable> table,
                 std::unique_ptr<HttpTransport> transport)
    : config_(std::move(config)),
      table_(std::move(table)),
      transport_(std::move(transport)),
      gate_(std::make_unique<ConcurrencyGate>(config_.max_concurrency)) {
  if (!config_.cache_dir.empty()) std::filesystem::create_directories(config_.cache_dir);
  if (!transport_ && !config_.api_url.empty()) {
    transport_ = make_httplib_transport(config_.api_url, config_.timeout_s);
  }
}

Gateway::~Gateway() = default;

std::optional<std::string> Gateway::cache_load(const std::string& key) const {
  if (config_.cache_dir.empty()) return std::nullopt;
  auto path = config_.cache_dir / key.substr(0, 2) / (key + ".json");
  if (!std::filesystem::exists(path)) return std::nullopt;
  json entry = json::parse(read_file(path));
  return entry.at("response_text").get<std::string>();
}

void Gateway::cache_store(const std::string& key, const ModelRef& m, const std::string& prompt,
                          const DecodeParams& p, const std::string& text) {
  if (config_.cache_dir.empty()) return;
  auto dir = config_.cache_dir / key.substr(0, 2);
  auto path = dir / (key + ".json");
  std::lock_guard<std::mutex> lock(cache_mu_);
  // First completed write is kept.
  if (std::filesystem::exists(path)) return;
  std::filesystem::create_directories(dir);
  json entry;
  entry["request"] = {{"model", m.model_name}, {"prompt", prompt}};
  entry["request"]["decode"] = p.to_json();
  entry["response_text"] = text;
  entry["timestamp"] = now_ms();
  atomic_write_file(path, entry.dump(2) + "\n");
}

std::string Gateway::complete_scripted(const ModelRef& m, const std::string& prompt) const {
  if (!table_) throw std::runtime_error("scripted backend requested but no table is loaded");
  return table_->match(m.model_name, prompt).response;
}

std::string Gateway::complete_http(const ModelRef& m, const std::string& prompt, const DecodeParams& p) {
  if (!transport_) throw std::runtime_error("http backend requested but no api_url configured");

  json body;
  body["model"] = m.model_name;
  body["prompt"] = prompt;
  body["stream"] = false;
  json options;
  options["temperature"] = p.temperature;
  options["top_p"] = p.top_p;
  options["num_predict"] = p.max_tokens;
  if (p.seed) options["seed"] = *p.seed;
  body["options"] = options;
  std::string payload = body.dump();

  std::optional<HttpResponse> response;
  for (int attempt = 1; attempt <= config_.max_retries; ++attempt) {
    gate_->acquire();
    response = transport_->post_json("/api/generate", payload);
    gate_->release();
    if (response) break;
    if (attempt == config_.max_retries) {
      throw std::runtime_error("backend unreachable after " + std::to_string(config_.max_retries) +
                               " attempts (model " + m.model_name + ")");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(config_.backoff_base_ms * (1LL << (attempt - 1))));
  }

  if (response->status != 200) {
    throw std::runtime_error("backend returned HTTP " + std::to_string(response->status) +
                             " (model " + m.model_name + ")");
  }
  json parsed;
  try {
    parsed = json::parse(response->body);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("backend response is not JSON: ") + e.what());
  }
  if (!parsed.contains("response") || !parsed.at("response").is_string()) {
    throw std::runtime_error("backend response has no text field");
  }
  return parsed.at("response").get<std::string>();
}

Completion Gateway::complete(const ModelRef& m, const std::string& prompt, const DecodeParams& p) {
  if (m.model_name.empty()) throw std::runtime_error("complete: model name is empty");
  p.validate();

  std::string key = cache_key(m, prompt, p);
  auto started = std::chrono::steady_clock::now();
  if (auto hit = cache_load(key)) {
    cache_hits_.fetch_add(1);
    Completion c;
    c.text = std::move(*hit);
    c.model = m;
    c.cached = true;
    c.latency_ms = 0;
    return c;
  }

  backend_calls_.fetch_add(1);
  std::string text =
      m.backend == BackendKind::scripted ? complete_scripted(m, prompt) : complete_http(m, prompt, p);
  cache_store(key, m, prompt, p, text);

  Completion c;
  c.text = std::move(text);
  c.model = m;
  c.cached = false;
  c.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started)
                     .count();
  return c;
}

}  // namespace cotgauge
