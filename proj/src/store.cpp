#include "cotgauge/store.hpp"

#include <fstream>
#include <stdexcept>

namespace cotgauge {

std::string to_string(Phase p) {
  switch (p) {
    case Phase::think: return "think";
    case Phase::corrupt: return "corrupt";
    case Phase::execute: return "execute";
    case Phase::verify: return "verify";
    case Phase::score: return "score";
  }
  throw std::logic_error("unknown phase");
}

const std::vector<Phase>& all_phases() {
  static const std::vector<Phase> phases = {Phase::think, Phase::corrupt, Phase::execute, Phase::verify,
                                            Phase::score};
  return phases;
}

json RunManifest::to_json() const {
  json j;
  j["run_id"] = run_id;
  json datasets_json = json::array();
  for (const auto& d : datasets) {
    json dj;
    dj["id"] = d.id;
    dj["path"] = d.path;
    dj["format"] = to_string(d.format);
    dj["digest"] = d.digest;
    if (d.sample_n) {
      dj["sample_n"] = *d.sample_n;
      dj["sample_seed"] = d.sample_seed;
    }
    datasets_json.push_back(std::move(dj));
  }
  j["datasets"] = std::move(datasets_json);
  j["thinkers"] = thinkers;
  j["executors"] = executors;
  j["committees"] = committees;
  j["corruptor"] = corruptor ? json(*corruptor) : json(nullptr);
  j["corruption_max_attempts"] = corruption_max_attempts;
  j["decode"] = decode.to_json();
  j["template_digests"] = template_digests;
  j["seed"] = seed;
  j["backend"] = to_string(backend);
  j["scripted_table_path"] = scripted_table_path;
  j["verifiability_reference"] = to_string(reference);
  j["max_concurrency"] = max_concurrency;
  return j;
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  m.run_id = j.at("run_id").get<std::string>();
  for (const auto& dj : j.at("datasets")) {
    ManifestDataset d;
    d.id = dj.at("id").get<std::string>();
    d.path = dj.at("path").get<std::string>();
    d.format = dataset_format_from_string(dj.at("format").get<std::string>());
    d.digest = dj.at("digest").get<std::string>();
    if (dj.contains("sample_n")) {
      d.sample_n = dj.at("sample_n").get<std::size_t>();
      d.sample_seed = dj.at("sample_seed").get<std::uint64_t>();
    }
    m.datasets.push_back(std::move(d));
  }
  m.thinkers = j.at("thinkers").get<std::vector<std::string>>();
  m.executors = j.at("executors").get<std::vector<std::string>>();
  m.committees = j.at("committees").get<std::map<std::string, std::vector<std::string>>>();
  if (!j.at("corruptor").is_null()) m.corruptor = j.at("corruptor").get<std::string>();
  m.corruption_max_attempts = j.at("corruption_max_attempts").get<int>();
  m.decode = DecodeParams::from_json(j.at("decode"));
  m.template_digests = j.at("template_digests").get<std::map<std::string, std::string>>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.backend = backend_kind_from_string(j.at("backend").get<std::string>());
  m.scripted_table_path = j.value("scripted_table_path", "");
  m.reference = verifiability_reference_from_string(j.at("verifiability_reference").get<std::string>());
  m.max_concurrency = j.at("max_concurrency").get<int>();
  return m;
}

std::string RunManifest::digest() const { return sha256_hex(to_json().dump()); }

RunStore::RunStore(std::filesystem::path run_dir) : dir_(std::move(run_dir)) {}

bool RunStore::exists() const { return std::filesystem::exists(dir_ / "manifest.json"); }

void RunStore::open(const RunManifest& manifest) {
  if (exists()) {
    RunManifest stored = RunManifest::from_json(read_json("manifest.json"));
    if (stored.digest() != manifest.digest()) {
      throw std::runtime_error("run store mismatch: stored manifest digest " + stored.digest() +
                               " differs from requested " + manifest.digest() +
                               " (dataset files or configuration changed)");
    }
    manifest_ = stored;
    return;
  }
  std::filesystem::create_directories(dir_ / "trials");
  manifest_ = manifest;
  write_json("manifest.json", manifest.to_json());
}

const RunManifest& RunStore::manifest() const {
  if (!manifest_) throw std::runtime_error("run store is not open");
  return *manifest_;
}

bool RunStore::phase_done(Phase p) const {
  return std::filesystem::exists(dir_ / (to_string(p) + ".done"));
}

void RunStore::mark_phase_done(Phase p) {
  std::ofstream marker(dir_ / (to_string(p) + ".done"));  // zero-byte marker
  if (!marker) throw std::runtime_error("cannot write phase marker for " + to_string(p));
}

std::optional<Phase> RunStore::next_phase() const {
  for (Phase p : all_phases()) {
    if (!phase_done(p)) return p;
  }
  return std::nullopt;
}

std::filesystem::path RunStore::path_of(const std::string& relative) const { return dir_ / relative; }

bool RunStore::file_exists(const std::string& relative) const {
  return std::filesystem::exists(path_of(relative));
}

std::vector<json> RunStore::load_records(const std::string& relative) const {
  auto path = path_of(relative);
  if (!std::filesystem::exists(path)) return {};
  return read_jsonl(path);
}

void RunStore::append_record(const std::string& relative, const json& record) {
  auto path = path_of(relative);
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::app | std::ios::binary);
  if (!out) throw std::runtime_error("cannot append to " + path.string());
  out << record.dump() << '\n';
  out.flush();
}

void RunStore::write_records(const std::string& relative, const std::vector<json>& records) {
  std::string content;
  for (const auto& record : records) {
    content += record.dump();
    content += '\n';
  }
  auto path = path_of(relative);
  std::filesystem::create_directories(path.parent_path());
  atomic_write_file(path, content);
}

void RunStore::write_json(const std::string& relative, const json& j) {
  auto path = path_of(relative);
  std::filesystem::create_directories(path.parent_path());
  atomic_write_file(path, j.dump(2) + "\n");
}

json RunStore::read_json(const std::string& relative) const {
  return json::parse(read_file(path_of(relative)));
}

}  // namespace cotgauge
