#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cotgauge/config.hpp"
#include "cotgauge/report.hpp"

namespace {

using namespace cotgauge;

struct CommonOptions {
  std::string config_path;
  std::string run_id;
  std::string dataset_filter;
  std::string thinker_filter;
  std::vector<std::string> executor_filter;
  std::optional<std::int64_t> seed_override;
  std::optional<int> max_concurrency_override;
  bool resume = false;
  std::string format = "markdown";
  bool verify = false;
};

void add_common_options(CLI::App* cmd, CommonOptions& opts, bool needs_run_id) {
  cmd->add_option("--config", opts.config_path, "run configuration file (TOML)")->required();
  auto* run_id = cmd->add_option("--run-id", opts.run_id, "run identifier under the run store");
  if (needs_run_id) run_id->required();
  cmd->add_option("--dataset", opts.dataset_filter, "restrict to one configured dataset");
  cmd->add_option("--thinker", opts.thinker_filter, "restrict to one configured thinker");
  cmd->add_option("--executors", opts.executor_filter, "restrict to these executors")->delimiter(',');
  cmd->add_option("--seed", opts.seed_override, "override the decode seed");
  cmd->add_option("--max-concurrency", opts.max_concurrency_override, "override request parallelism");
  cmd->add_flag("--resume", opts.resume, "continue a partially complete run");
}

RunConfig load_config(const CommonOptions& opts) {
  RunConfig config = RunConfig::from_file(opts.config_path);

  if (!opts.dataset_filter.empty()) {
    std::vector<DatasetConfig> kept;
    for (auto& d : config.datasets) {
      if (d.id == opts.dataset_filter) kept.push_back(d);
    }
    if (kept.empty()) throw std::runtime_error("unknown dataset: " + opts.dataset_filter);
    config.datasets = std::move(kept);
  }
  if (!opts.thinker_filter.empty()) {
    bool known = false;
    for (const auto& t : config.thinkers) known = known || t == opts.thinker_filter;
    if (!known) throw std::runtime_error("unknown thinker: " + opts.thinker_filter);
    config.thinkers = {opts.thinker_filter};
  }
  if (!opts.executor_filter.empty()) {
    for (const auto& e : opts.executor_filter) {
      bool known = false;
      for (const auto& configured : config.executors) known = known || configured == e;
      if (!known) throw std::runtime_error("unknown executor: " + e);
    }
    config.executors = opts.executor_filter;
    // Committees shrink to the surviving members.
    std::map<std::string, std::vector<std::string>> committees;
    for (const auto& [name, members] : config.committees) {
      std::vector<std::string> kept;
      for (const auto& member : members) {
        for (const auto& e : config.executors) {
          if (member == e) kept.push_back(member);
        }
      }
      if (!kept.empty()) committees[name] = std::move(kept);
    }
    config.committees = std::move(committees);
  }
  if (opts.seed_override) config.decode.seed = *opts.seed_override;
  if (opts.max_concurrency_override) config.max_concurrency = *opts.max_concurrency_override;
  return config;
}

std::filesystem::path run_dir_for(const RunConfig& config, const std::string& run_id) {
  return config.resolve(config.run_dir) / run_id;
}

/// Guard against accidentally extending a half-written run: continuing a
/// phase that already has records requires --resume.
void check_resume(const Pipeline& pipeline, Phase phase, const CommonOptions& opts) {
  if (opts.resume || pipeline.store().phase_done(phase)) return;
  bool has_records = false;
  switch (phase) {
    case Phase::think: has_records = !pipeline.store().load_records("thinker.jsonl").empty(); break;
    case Phase::corrupt: has_records = !pipeline.store().load_records("corrupted.jsonl").empty(); break;
    case Phase::execute:
    case Phase::verify:
      for (const auto& e : pipeline.plan().manifest.executors) {
        has_records = has_records || !pipeline.store().load_records(RunStore::trials_file(e)).empty();
      }
      break;
    case Phase::score: return;
  }
  if (has_records) {
    throw std::runtime_error("run " + pipeline.plan().manifest.run_id + " has partial " +
                             to_string(phase) + " records; pass --resume to continue");
  }
}

int run_phase_command(const CommonOptions& opts, Phase phase) {
  RunConfig config = load_config(opts);
  Gateway gateway = make_gateway(config);
  Pipeline pipeline(make_run_plan(config, opts.run_id), gateway, run_dir_for(config, opts.run_id));

  if (pipeline.store().phase_done(phase)) {
    std::cout << to_string(phase) << ": already complete for run " << opts.run_id << "\n";
    return 0;
  }
  check_resume(pipeline, phase, opts);
  pipeline.run_phase(phase);
  std::cout << to_string(phase) << ": complete for run " << opts.run_id << " (backend calls "
            << gateway.backend_calls() << ", cache hits " << gateway.cache_hits() << ")\n";
  if (phase == Phase::score && opts.verify) {
    auto mismatches = pipeline.verify_outputs();
    for (const auto& m : mismatches) std::cerr << "verify: " << m << "\n";
    if (!mismatches.empty()) return 1;
    std::cout << "verify: all cells re-derive from the run store\n";
  }
  return 0;
}

int run_ingest(const CommonOptions& opts, const std::string& export_dir) {
  RunConfig config = load_config(opts);
  bool all_ok = true;
  for (const auto& dc : config.datasets) {
    Dataset d = load_dataset(config.resolve(dc.path), dc.format);
    d.dataset_id = dc.id;
    for (auto& q : d.questions) q.dataset_id = dc.id;
    if (dc.sample_n) d = sample_dataset(d, *dc.sample_n, dc.sample_seed.value_or(config.seed));

    ValidationReport report = validate_dataset(d);
    json summary = report.to_json();
    summary["dataset"] = dc.id;
    summary["questions"] = d.questions.size();
    summary["source_digest"] = d.source_digest;
    std::cout << summary.dump(2) << "\n";
    all_ok = all_ok && report.ok();

    if (!export_dir.empty()) {
      std::filesystem::create_directories(export_dir);
      export_canonical_jsonl(d, std::filesystem::path(export_dir) / (dc.id + ".jsonl"));
    }
  }
  return all_ok ? 0 : 1;
}

int run_tau(const CommonOptions& opts, const std::string& axis, const std::string& metric) {
  RunConfig config = load_config(opts);
  RunStore store(run_dir_for(config, opts.run_id));
  if (!store.file_exists("scores.json")) {
    throw std::runtime_error("run " + opts.run_id + " has no scores.json; run `score` first");
  }
  ScoreMatrix matrix = ScoreMatrix::from_json(store.read_json("scores.json"));
  json scores_json = store.read_json("scores.json");

  TauAxis tau_axis = axis == "metric" ? TauAxis::metric_pairs : TauAxis::committee_pairs;
  std::vector<ReportTable> tables;
  if (tau_axis == TauAxis::committee_pairs) {
    tables.push_back(emit_tau_table(matrix, tau_axis, metric));
  } else {
    tables.push_back(emit_tau_table(matrix, tau_axis));
  }
  for (auto& table : tables) {
    table.run_id = scores_json.value("run_id", opts.run_id);
    table.manifest_digest = scores_json.value("manifest_digest", "");
    std::cout << render_table(table, report_format_from_string(opts.format));
  }
  return 0;
}

int run_report(const CommonOptions& opts, const std::string& out_dir) {
  RunConfig config = load_config(opts);
  RunStore store(run_dir_for(config, opts.run_id));
  if (!store.file_exists("scores.json")) {
    throw std::runtime_error("run " + opts.run_id + " has no scores.json; run `score` first");
  }
  json scores_json = store.read_json("scores.json");
  ScoreMatrix matrix = ScoreMatrix::from_json(scores_json);

  if (opts.verify) {
    Gateway gateway = make_gateway(config);
    Pipeline pipeline(make_run_plan(config, opts.run_id), gateway, run_dir_for(config, opts.run_id));
    auto mismatches = pipeline.verify_outputs();
    for (const auto& m : mismatches) std::cerr << "verify: " << m << "\n";
    if (!mismatches.empty()) return 1;
  }

  struct Entry {
    std::string name;
    ReportTable table;
  };
  std::vector<Entry> entries;
  entries.push_back({"scores_reusability", emit_score_table(matrix, "reusability")});
  entries.push_back({"scores_verifiability", emit_score_table(matrix, "verifiability")});
  entries.push_back({"accuracy", emit_accuracy_table(matrix)});
  entries.push_back({"tau_committee_reusability", emit_tau_table(matrix, TauAxis::committee_pairs, "reusability")});
  entries.push_back({"tau_committee_verifiability", emit_tau_table(matrix, TauAxis::committee_pairs, "verifiability")});
  entries.push_back({"tau_metrics", emit_tau_table(matrix, TauAxis::metric_pairs)});
  entries.push_back({"summary", emit_summary_table(matrix)});

  ReportFormat format = report_format_from_string(opts.format);
  std::string extension = format == ReportFormat::markdown ? "md" : to_string(format);
  std::filesystem::path dir = out_dir.empty() ? store.dir() / "reports" : std::filesystem::path(out_dir);
  std::filesystem::create_directories(dir);

  for (auto& entry : entries) {
    entry.table.run_id = scores_json.value("run_id", opts.run_id);
    entry.table.manifest_digest = scores_json.value("manifest_digest", "");
    std::string rendered = render_table(entry.table, format);
    atomic_write_file(dir / (entry.name + "." + extension), rendered);
    std::cout << rendered << "\n";
  }
  std::cout << "reports written to " << dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cotgauge: measures how well chain-of-thought traces transfer between models"};
  app.require_subcommand(1);

  CommonOptions opts;

  auto* ingest = app.add_subcommand("ingest", "load, validate, and export the configured datasets");
  std::string export_dir;
  add_common_options(ingest, opts, false);
  ingest->add_option("--export-dir", export_dir, "write canonical JSONL files here");

  auto* think = app.add_subcommand("think", "run the thinker pass");
  add_common_options(think, opts, true);
  auto* corrupt = app.add_subcommand("corrupt", "generate validated corrupted reasoning");
  add_common_options(corrupt, opts, true);
  auto* execute = app.add_subcommand("execute", "run executor baseline and conditioned trials");
  add_common_options(execute, opts, true);
  auto* verify_cmd = app.add_subcommand("verify", "run the executor agreement pass");
  add_common_options(verify_cmd, opts, true);

  auto* score = app.add_subcommand("score", "build ledgers and the score matrix");
  add_common_options(score, opts, true);
  score->add_flag("--verify", opts.verify, "re-derive every cell and fail on mismatch");

  auto* tau = app.add_subcommand("tau", "rank-correlation tables from a scored run");
  std::string axis = "committee";
  std::string metric = "reusability";
  add_common_options(tau, opts, true);
  tau->add_option("--axis", axis, "committee | metric")->check(CLI::IsMember({"committee", "metric"}));
  tau->add_option("--metric", metric, "reusability | verifiability (committee axis)")
      ->check(CLI::IsMember({"reusability", "verifiability"}));
  tau->add_option("--format", opts.format, "csv | json | markdown");

  auto* report = app.add_subcommand("report", "emit all score, correlation, and summary tables");
  std::string out_dir;
  add_common_options(report, opts, true);
  report->add_option("--format", opts.format, "csv | json | markdown");
  report->add_option("--out-dir", out_dir, "directory for rendered tables");
  report->add_flag("--verify", opts.verify, "re-derive every cell and fail on mismatch");

  auto* init_config = app.add_subcommand("init-config", "print the reference configuration");

  CLI11_PARSE(app, argc, argv);

  try {
    if (init_config->parsed()) {
      std::cout << cotgauge::RunConfig::reference_toml();
      return 0;
    }
    if (ingest->parsed()) return run_ingest(opts, export_dir);
    if (think->parsed()) return run_phase_command(opts, Phase::think);
    if (corrupt->parsed()) return run_phase_command(opts, Phase::corrupt);
    if (execute->parsed()) return run_phase_command(opts, Phase::execute);
    if (verify_cmd->parsed()) return run_phase_command(opts, Phase::verify);
    if (score->parsed()) return run_phase_command(opts, Phase::score);
    if (tau->parsed()) return run_tau(opts, axis, metric);
    if (report->parsed()) return run_report(opts, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
