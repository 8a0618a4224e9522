#include "doctest.h"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <thread>

#include "httplib.h"

#include "cotgauge/gateway.hpp"
#include "cotgauge/util.hpp"

using namespace cotgauge;

namespace {

std::filesystem::path fresh_temp_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() /
             ("cotgauge-test-" + tag + "-" + std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

ModelRef scripted_model(const std::string& name) {
  return ModelRef{BackendKind::scripted, name, RoleHint::executor};
}

ModelRef http_model(const std::string& name) {
  return ModelRef{BackendKind::http, name, RoleHint::executor};
}

/// Transport stub that fails transport-level N times before succeeding.
class FlakyTransport : public HttpTransport {
 public:
  FlakyTransport(int failures_before_success, int status, std::string body)
      : failures_(failures_before_success), status_(status), body_(std::move(body)) {}

  std::optional<HttpResponse> post_json(const std::string&, const std::string&) override {
    ++calls_;
    if (failures_ > 0) {
      --failures_;
      return std::nullopt;
    }
    return HttpResponse{status_, body_};
  }

  int calls() const { return calls_; }

 private:
  int failures_;
  int status_;
  std::string body_;
  int calls_ = 0;
};

json ok_body(const std::string& text) { return json{{"response", text}}; }

GatewayConfig fast_config() {
  GatewayConfig config;
  config.backoff_base_ms = 1;  // keep retry tests quick
  return config;
}

}  // namespace

TEST_CASE("cache_key: deterministic and sensitive to every field") {
  DecodeParams p;
  p.seed = 42;
  auto m = scripted_model("m1");
  std::string key = cache_key(m, "hello world", p);
  CHECK(key.size() == 64);
  CHECK(key == cache_key(m, "hello world", p));

  SUBCASE("one-byte prompt difference changes the key") {
    CHECK(key != cache_key(m, "hello worle", p));
    CHECK(key != cache_key(m, "hello world ", p));
  }
  SUBCASE("temperature is part of the key") {
    DecodeParams hot = p;
    hot.temperature = 0.7;
    CHECK(key != cache_key(m, "hello world", hot));
  }
  SUBCASE("seed presence is part of the key") {
    DecodeParams unseeded = p;
    unseeded.seed.reset();
    CHECK(key != cache_key(m, "hello world", unseeded));
  }
  SUBCASE("model name is part of the key") {
    CHECK(key != cache_key(scripted_model("m2"), "hello world", p));
  }
  SUBCASE("no collisions across a corpus of distinct prompts") {
    std::set<std::string> keys;
    for (int i = 0; i < 2000; ++i) {
      keys.insert(cache_key(m, "prompt #" + std::to_string(i), p));
    }
    CHECK(keys.size() == 2000);
  }
}

TEST_CASE("scripted table: lookup, missing rule, ambiguity") {
  ScriptedTable table;
  table.add_contains("calc", {"2+2"}, "Answer: 4");
  table.add_contains("calc", {"3+3"}, "Answer: 6");
  ScriptedRule digest_rule;
  digest_rule.model = "calc";
  digest_rule.digest = sha256_hex("exact prompt");
  digest_rule.response = "Answer: 9";
  table.add_rule(digest_rule);

  CHECK(table.match("calc", "what is 2+2?").response == "Answer: 4");
  CHECK(table.match("calc", "exact prompt").response == "Answer: 9");

  SUBCASE("missing rule names the prompt digest") {
    std::string prompt = "what is 5+5?";
    CHECK_THROWS_WITH_AS(table.match("calc", prompt), doctest::Contains(sha256_hex(prompt)),
                         std::runtime_error);
  }
  SUBCASE("unknown model has no rules") {
    CHECK_THROWS(table.match("other", "what is 2+2?"));
  }
  SUBCASE("two matching rules are an ambiguity error") {
    CHECK_THROWS_WITH_AS(table.match("calc", "2+2 and 3+3"), doctest::Contains("multiple rules"),
                         std::runtime_error);
  }
  SUBCASE("duplicate matcher is a load-time defect") {
    CHECK_THROWS(table.add_contains("calc", {"2+2"}, "Answer: different"));
  }
  SUBCASE("rule must have exactly one matcher kind") {
    ScriptedRule bad;
    bad.model = "calc";
    bad.response = "x";
    CHECK_THROWS(ScriptedTable().add_rule(bad));
    bad.contains_all = {"a"};
    bad.digest = "deadbeef";
    CHECK_THROWS(ScriptedTable().add_rule(bad));
  }
}

TEST_CASE("scripted table loads from JSON") {
  json rules = json::array();
  rules.push_back({{"model", "m"}, {"contains", "apple"}, {"response", "fruit"}});
  rules.push_back({{"model", "m"}, {"contains_all", {"red", "round"}}, {"response", "tomato"}});
  ScriptedTable table = ScriptedTable::from_json(rules);
  CHECK(table.match("m", "an apple a day").response == "fruit");
  CHECK(table.match("m", "red and round").response == "tomato");
}

TEST_CASE("gateway: cache hit returns stored text with zero backend traffic") {
  auto cache_dir = fresh_temp_dir("cache");
  auto table = std::make_shared<ScriptedTable>();
  table->add_contains("m1", {"ping"}, "pong");

  GatewayConfig config = fast_config();
  config.cache_dir = cache_dir;
  Gateway gateway(config, table);

  DecodeParams p;
  auto first = gateway.complete(scripted_model("m1"), "ping", p);
  CHECK(first.text == "pong");
  CHECK_FALSE(first.cached);
  CHECK(gateway.backend_calls() == 1);

  auto second = gateway.complete(scripted_model("m1"), "ping", p);
  CHECK(second.text == "pong");
  CHECK(second.cached);
  CHECK(gateway.backend_calls() == 1);  // no new backend traffic

  SUBCASE("cache layout: <dir>/<first-2-hex>/<key>.json with request and response") {
    std::string key = cache_key(scripted_model("m1"), "ping", p);
    auto path = cache_dir / key.substr(0, 2) / (key + ".json");
    REQUIRE(std::filesystem::exists(path));
    json entry = json::parse(read_file(path));
    CHECK(entry.at("response_text") == "pong");
    CHECK(entry.at("request").at("prompt") == "ping");
    CHECK(entry.contains("timestamp"));
  }

  SUBCASE("a fresh gateway over the same cache epoch also hits") {
    Gateway second_gateway(config, table);
    auto hit = second_gateway.complete(scripted_model("m1"), "ping", p);
    CHECK(hit.cached);
    CHECK(second_gateway.backend_calls() == 0);
  }

  std::filesystem::remove_all(cache_dir);
}

TEST_CASE("gateway: scripted rule missing surfaces as an error") {
  auto table = std::make_shared<ScriptedTable>();
  table->add_contains("m1", {"known"}, "ok");
  Gateway gateway(fast_config(), table);
  DecodeParams p;
  CHECK_THROWS(gateway.complete(scripted_model("m1"), "unknown prompt", p));
}

TEST_CASE("gateway: transient transport failures retry, then succeed") {
  auto transport = std::make_unique<FlakyTransport>(2, 200, ok_body("recovered").dump());
  auto* raw = transport.get();
  GatewayConfig config = fast_config();
  Gateway gateway(config, nullptr, std::move(transport));

  DecodeParams p;
  auto completion = gateway.complete(http_model("m1"), "prompt", p);
  CHECK(completion.text == "recovered");
  CHECK(raw->calls() == 3);
}

TEST_CASE("gateway: transport failure after max retries is terminal") {
  auto transport = std::make_unique<FlakyTransport>(99, 200, ok_body("never").dump());
  auto* raw = transport.get();
  GatewayConfig config = fast_config();
  Gateway gateway(config, nullptr, std::move(transport));

  DecodeParams p;
  CHECK_THROWS_WITH_AS(gateway.complete(http_model("m1"), "prompt", p),
                       doctest::Contains("unreachable"), std::runtime_error);
  CHECK(raw->calls() == 3);  // 3 attempts, backoff between them
}

TEST_CASE("gateway: HTTP error statuses are terminal, not retried") {
  for (int status : {400, 404, 500}) {
    auto transport = std::make_unique<FlakyTransport>(0, status, "oops");
    auto* raw = transport.get();
    Gateway gateway(fast_config(), nullptr, std::move(transport));
    DecodeParams p;
    CHECK_THROWS_WITH_AS(gateway.complete(http_model("m1"), "prompt", p),
                         doctest::Contains(std::to_string(status)), std::runtime_error);
    CHECK(raw->calls() == 1);
  }
}

TEST_CASE("gateway: malformed backend response is an error") {
  {
    auto transport = std::make_unique<FlakyTransport>(0, 200, "not json");
    Gateway gateway(fast_config(), nullptr, std::move(transport));
    DecodeParams p;
    CHECK_THROWS_WITH_AS(gateway.complete(http_model("m1"), "prompt", p), doctest::Contains("not JSON"),
                         std::runtime_error);
  }
  {
    auto transport = std::make_unique<FlakyTransport>(0, 200, json{{"unexpected", 1}}.dump());
    Gateway gateway(fast_config(), nullptr, std::move(transport));
    DecodeParams p;
    CHECK_THROWS_WITH_AS(gateway.complete(http_model("m1"), "prompt", p),
                         doctest::Contains("no text field"), std::runtime_error);
  }
}

TEST_CASE("gateway: decode params are validated") {
  auto table = std::make_shared<ScriptedTable>();
  table->add_contains("m1", {"x"}, "y");
  Gateway gateway(fast_config(), table);
  DecodeParams bad;
  bad.temperature = -1.0;
  CHECK_THROWS(gateway.complete(scripted_model("m1"), "x", bad));
  bad = DecodeParams{};
  bad.top_p = 0.0;
  CHECK_THROWS(gateway.complete(scripted_model("m1"), "x", bad));
  bad = DecodeParams{};
  bad.max_tokens = 0;
  CHECK_THROWS(gateway.complete(scripted_model("m1"), "x", bad));
}

TEST_CASE("gateway: wire format matches the local inference server protocol") {
  // Capture of the POSTed body via a real loopback server.
  httplib::Server server;
  std::string captured_path;
  json captured_body;
  server.Post("/api/generate", [&](const httplib::Request& req, httplib::Response& res) {
    captured_path = req.path;
    captured_body = json::parse(req.body);
    res.set_content(ok_body("All good. Answer: 1").dump(), "application/json");
  });
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  GatewayConfig config = fast_config();
  config.api_url = "http://127.0.0.1:" + std::to_string(port);
  Gateway gateway(config);

  DecodeParams p;
  p.temperature = 0.25;
  p.top_p = 0.9;
  p.seed = 7;
  p.max_tokens = 64;
  auto completion = gateway.complete(http_model("test-model"), "what is 1?", p);
  CHECK(completion.text == "All good. Answer: 1");

  CHECK(captured_path == "/api/generate");
  CHECK(captured_body.at("model") == "test-model");
  CHECK(captured_body.at("prompt") == "what is 1?");
  CHECK(captured_body.at("stream") == false);
  CHECK(captured_body.at("options").at("temperature") == doctest::Approx(0.25));
  CHECK(captured_body.at("options").at("top_p") == doctest::Approx(0.9));
  CHECK(captured_body.at("options").at("seed") == 7);
  CHECK(captured_body.at("options").at("num_predict") == 64);

  server.stop();
  server_thread.join();
}

TEST_CASE("gateway: bounded concurrency holds under load") {
  std::atomic<int> in_flight{0};
  std::atomic<int> max_in_flight{0};
  httplib::Server server;
  server.Post("/api/generate", [&](const httplib::Request&, httplib::Response& res) {
    int now = ++in_flight;
    int seen = max_in_flight.load();
    while (now > seen && !max_in_flight.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    --in_flight;
    res.set_content(ok_body("ok").dump(), "application/json");
  });
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  GatewayConfig config = fast_config();
  config.api_url = "http://127.0.0.1:" + std::to_string(port);
  config.max_concurrency = 3;
  Gateway gateway(config);

  DecodeParams p;
  parallel_for(16, 16, [&](std::size_t i) {
    gateway.complete(http_model("m"), "req " + std::to_string(i), p);
  });

  CHECK(gateway.backend_calls() == 16);
  CHECK(max_in_flight.load() <= 3);
  CHECK(max_in_flight.load() >= 1);

  server.stop();
  server_thread.join();
}

TEST_CASE("gateway: concurrent identical requests stay cache-sound") {
  auto cache_dir = fresh_temp_dir("cache-race");
  auto table = std::make_shared<ScriptedTable>();
  table->add_contains("m1", {"race"}, "settled");

  GatewayConfig config = fast_config();
  config.cache_dir = cache_dir;
  Gateway gateway(config, table);

  DecodeParams p;
  std::vector<std::string> texts(24);
  parallel_for(24, 8, [&](std::size_t i) { texts[i] = gateway.complete(scripted_model("m1"), "race", p).text; });
  for (const auto& t : texts) CHECK(t == "settled");

  std::filesystem::remove_all(cache_dir);
}
