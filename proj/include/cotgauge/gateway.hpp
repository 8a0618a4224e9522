#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "cotgauge/util.hpp"

namespace cotgauge {

enum class BackendKind { http, scripted };
enum class RoleHint { thinker, executor, corruptor };

std::string to_string(BackendKind b);
BackendKind backend_kind_from_string(const std::string& s);
std::string to_string(RoleHint r);

struct ModelRef {
  BackendKind backend = BackendKind::scripted;
  std::string model_name;
  RoleHint role_hint = RoleHint::executor;
};

struct DecodeParams {
  double temperature = 0.0;
  double top_p = 1.0;
  std::optional<std::int64_t> seed;
  int max_tokens = 1024;

  void validate() const;
  json to_json() const;
  static DecodeParams from_json(const json& j);
};

struct Completion {
  std::string text;
  ModelRef model;
  bool cached = false;
  std::int64_t latency_ms = 0;
};

/// One lookup rule of a scripted backend: fires when the prompt contains all
/// of `contains_all`, or when its SHA-256 equals `digest`. Exactly one of the
/// two matcher kinds is set.
struct ScriptedRule {
  std::string model;
  std::vector<std::string> contains_all;
  std::string digest;
  std::string response;
};

/// Deterministic stand-in for a live backend. At most one rule may match a
/// given (model, prompt); ambiguity and missing rules are errors.
class ScriptedTable {
 public:
  void add_rule(ScriptedRule rule);
  void add_contains(const std::string& model, std::vector<std::string> contains_all, std::string response);

  static ScriptedTable from_json(const json& j);
  static ScriptedTable load_file(const std::filesystem::path& path);

  /// Throws on zero matches (names the prompt digest) and on multiple matches.
  const ScriptedRule& match(const std::string& model, const std::string& prompt) const;

  std::size_t size() const { return rules_.size(); }

 private:
  std::vector<ScriptedRule> rules_;
};

/// Content address of one completion request: SHA-256 over the canonical
/// serialization of (model_name, prompt, decode params). Stable across
/// processes and platforms.
std::string cache_key(const ModelRef& m, std::string_view prompt, const DecodeParams& p);

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// Minimal POST transport; nullopt means a transport-level failure
/// (connection refused, reset, timeout) as opposed to an HTTP response.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual std::optional<HttpResponse> post_json(const std::string& path, const std::string& body) = 0;
};

std::unique_ptr<HttpTransport> make_httplib_transport(const std::string& base_url, int timeout_s);

struct GatewayConfig {
  std::string api_url;                 // http backend base URL
  std::filesystem::path cache_dir;     // empty disables caching
  int max_retries = 3;                 // attempts per request
  int backoff_base_ms = 1000;          // 1s, 2s, 4s by default
  int max_concurrency = 4;             // in-flight HTTP requests
  int timeout_s = 120;
};

/// Uniform completion interface over the HTTP inference server and the
/// scripted backend, with a content-addressed response cache.
class Gateway {
 public:
  explicit Gateway(GatewayConfig config, std::shared_ptr<const ScriptedTable> table = nullptr,
                   std::unique_ptr<HttpTransport> transport = nullptr);
  ~Gateway();

  /// Returns the completion for (m, prompt, p); identical inputs within one
  /// cache epoch always yield identical text. Transport failures retry with
  /// exponential backoff; HTTP error statuses are terminal.
  Completion complete(const ModelRef& m, const std::string& prompt, const DecodeParams& p);

  std::uint64_t backend_calls() const { return backend_calls_.load(); }
  std::uint64_t cache_hits() const { return cache_hits_.load(); }

 private:
  std::optional<std::string> cache_load(const std::string& key) const;
  void cache_store(const std::string& key, const ModelRef& m, const std::string& prompt,
                   const DecodeParams& p, const std::string& text);
  std::string complete_http(const ModelRef& m, const std::string& prompt, const DecodeParams& p);
  std::string complete_scripted(const ModelRef& m, const std::string& prompt) const;

  GatewayConfig config_;
  std::shared_ptr<const ScriptedTable> table_;
  std::unique_ptr<HttpTransport> transport_;
  std::unique_ptr<class ConcurrencyGate> gate_;
  std::mutex cache_mu_;
  std::atomic<std::uint64_t> backend_calls_{0};
  std::atomic<std::uint64_t> cache_hits_{0};
};

}  // namespace cotgauge
