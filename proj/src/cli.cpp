#include "sand/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <iostream>

#include "json.hpp"
#include "sand/errors.hpp"
#include "sand/io.hpp"
#include "sand/metrics.hpp"
#include "sand/parallel.hpp"
#include "sand/strings.hpp"

namespace sand::cli {

using nlohmann::json;

// ============================================================================
// Config (de)serialization
// ============================================================================

namespace {

template <typename T>
void read_field(const json& rec, const char* key, T& out) {
  if (rec.contains(key)) out = rec.at(key).get<T>();
}

policy::RemoteOptions parse_remote(const json& rec) {
  policy::RemoteOptions r;
  read_field(rec, "endpoint", r.endpoint);
  read_field(rec, "model", r.model);
  read_field(rec, "api_key", r.api_key);
  read_field(rec, "max_tokens", r.max_tokens);
  read_field(rec, "retries", r.retries);
  read_field(rec, "backoff_base_ms", r.backoff_base_ms);
  read_field(rec, "timeout_ms", r.timeout_ms);
  read_field(rec, "max_inflight", r.max_inflight);
  return r;
}

json remote_record(const policy::RemoteOptions& r) {
  json rec;
  rec["endpoint"] = r.endpoint;
  rec["model"] = r.model;
  rec["api_key"] = "";  // never echo credentials into artifacts
  rec["max_tokens"] = r.max_tokens;
  rec["retries"] = r.retries;
  rec["backoff_base_ms"] = r.backoff_base_ms;
  rec["timeout_ms"] = r.timeout_ms;
  rec["max_inflight"] = r.max_inflight;
  return rec;
}

policy::PolicyConfig parse_policy_config(const json& rec) {
  policy::PolicyConfig c;
  if (rec.contains("backend")) c.backend = policy::parse_backend(rec.at("backend").get<std::string>());
  read_field(rec, "temperature", c.temperature);
  read_field(rec, "seed", c.seed);
  read_field(rec, "table_path", c.table_path);
  read_field(rec, "stub_action", c.stub_action);
  read_field(rec, "system_prompt_asset", c.system_prompt_asset);
  if (rec.contains("remote")) c.remote = parse_remote(rec.at("remote"));
  return c;
}

json policy_record(const policy::PolicyConfig& c) {
  json rec;
  rec["backend"] = policy::backend_name(c.backend);
  rec["temperature"] = c.temperature;
  rec["seed"] = c.seed;
  rec["table_path"] = c.table_path;
  rec["stub_action"] = c.stub_action;
  rec["system_prompt_asset"] = c.system_prompt_asset;
  rec["remote"] = remote_record(c.remote);
  return rec;
}

policy::BaseModelConfig parse_base_config(const json& rec) {
  policy::BaseModelConfig c;
  if (rec.contains("backend")) c.backend = policy::parse_backend(rec.at("backend").get<std::string>());
  if (rec.contains("remote")) c.remote = parse_remote(rec.at("remote"));
  return c;
}

json base_record(const policy::BaseModelConfig& c) {
  json rec;
  rec["backend"] = policy::backend_name(c.backend);
  rec["remote"] = remote_record(c.remote);
  return rec;
}

void validate_config(const RunConfig& c) {
  if (c.n < 1) raise(errc::config, "n must be >= 1");
  if (c.iterations < 1) raise(errc::config, "iterations must be >= 1");
  if (c.sample_temperature < 0.0 || c.eval_temperature < 0.0)
    raise(errc::config, "temperatures must be >= 0");
}

void write_config_echo(const RunConfig& config) {
  io::write_file(config.out_dir + "/effective_config.json", render_config(config));
}

std::string quoted(const std::string& s) { return "'" + s + "'"; }

// Manifest paths are stored relative to out_dir, except the iteration-0
// expert manifest, which keeps the configured path (provenance only).
std::string resolve_manifest_path(const std::string& out_dir, const dataset::DatasetManifest& m) {
  if (m.iteration == 0) return m.path;
  return out_dir + "/" + m.path;
}

void verify_manifest(const std::string& out_dir, const dataset::DatasetManifest& m) {
  const std::string path = resolve_manifest_path(out_dir, m);
  const std::string checksum = dataset::file_checksum(path);
  if (checksum != m.checksum)
    raise(errc::validation, "dataset '" + path + "' checksum " + checksum +
                                " does not match its manifest (" + m.checksum + ")");
}

struct LoadedRun {
  std::vector<env::TaskSpec> tasks;
  std::map<std::string, env::TaskSpec> specs_by_id;
};

LoadedRun load_tasks(const RunConfig& config) {
  if (config.tasks.empty()) raise(errc::config, "no task file configured");
  LoadedRun run;
  run.tasks = env::load_task_specs(config.tasks);
  for (env::TaskSpec& spec : run.tasks) {
    if (config.max_steps > 0) spec.max_steps = config.max_steps;
    if (!run.specs_by_id.emplace(spec.instruction.id, spec).second)
      raise(errc::validation, "duplicate task id '" + spec.instruction.id + "' in " + config.tasks);
  }
  return run;
}

pipeline::SynthesisOptions synthesis_options(const RunConfig& config, int iteration) {
  pipeline::SynthesisOptions options;
  options.n = config.n;
  options.temperature = config.sample_temperature;
  options.seed = config.seed;
  options.switch_mode = config.expert_switch;
  options.iteration = iteration;
  options.jobs = parallel::resolve_jobs(config.jobs);
  return options;
}

std::string rejects_jsonl(const std::vector<pipeline::Reject>& rejects) {
  std::string out;
  for (const pipeline::Reject& r : rejects) {
    json rec;
    rec["id"] = r.id;
    rec["code"] = errc_name(r.code);
    rec["message"] = r.message;
    out += rec.dump();
    out += '\n';
  }
  return out;
}

json summary_record(const pipeline::CorpusResult& result) {
  json rec;
  rec["trajectories"] = result.stats.trajectories;
  rec["synthesized"] = result.deliberations.size();
  rec["flagged_steps"] = result.stats.flagged_steps;
  rec["switches"] = result.stats.switches;
  rec["completions_issued"] = result.stats.completions_issued;
  rec["rejects"] = result.stats.rejects.size();
  return rec;
}

// Exit-code triage for a finished synthesis pass: a dead backend dominates,
// then the reject threshold.
int rejects_exit_code(const pipeline::CorpusStats& stats) {
  for (const pipeline::Reject& r : stats.rejects) {
    if (r.code == errc::policy_unavailable || r.code == errc::env_timeout) {
      std::cerr << "backend unavailable: " << r.message << "\n";
      return kExitBackendUnavailable;
    }
  }
  if (stats.rejects.size() * 10 > stats.trajectories) {
    std::cerr << "rejected " << stats.rejects.size() << " of " << stats.trajectories
              << " trajectories (over the 10% threshold)\n";
    return kExitRejectsOverThreshold;
  }
  return kExitOk;
}

void print_corpus_summary(const pipeline::CorpusResult& result) {
  std::cout << "synthesized " << result.deliberations.size() << "/" << result.stats.trajectories
            << " trajectories, " << result.stats.flagged_steps << " flagged steps, "
            << result.stats.switches << " switches, " << result.stats.completions_issued
            << " completions issued, " << result.stats.rejects.size() << " rejects\n";
}

}  // namespace

RunConfig load_config(const std::string& path) {
  RunConfig config;
  json rec;
  try {
    rec = json::parse(io::read_file(path));
  } catch (const json::exception& e) {
    raise(errc::config, "config file '" + path + "': " + e.what());
  }
  read_field(rec, "n", config.n);
  read_field(rec, "iterations", config.iterations);
  read_field(rec, "sample_temperature", config.sample_temperature);
  read_field(rec, "eval_temperature", config.eval_temperature);
  if (rec.contains("expert_switch"))
    config.expert_switch = pipeline::parse_switch_mode(rec.at("expert_switch").get<std::string>());
  read_field(rec, "seed", config.seed);
  read_field(rec, "jobs", config.jobs);
  read_field(rec, "max_steps", config.max_steps);
  read_field(rec, "expert_data", config.expert_data);
  read_field(rec, "tasks", config.tasks);
  read_field(rec, "out_dir", config.out_dir);
  read_field(rec, "assets_dir", config.assets_dir);
  read_field(rec, "hook", config.hook);
  read_field(rec, "env_endpoint", config.env_endpoint);
  if (rec.contains("policy")) config.policy = parse_policy_config(rec.at("policy"));
  if (rec.contains("base")) config.base = parse_base_config(rec.at("base"));
  validate_config(config);
  return config;
}

std::string render_config(const RunConfig& config) {
  json rec;
  rec["n"] = config.n;
  rec["iterations"] = config.iterations;
  rec["sample_temperature"] = config.sample_temperature;
  rec["eval_temperature"] = config.eval_temperature;
  rec["expert_switch"] = pipeline::switch_mode_name(config.expert_switch);
  rec["seed"] = config.seed;
  rec["jobs"] = config.jobs;
  rec["max_steps"] = config.max_steps;
  rec["expert_data"] = config.expert_data;
  rec["tasks"] = config.tasks;
  rec["out_dir"] = config.out_dir;
  rec["assets_dir"] = config.assets_dir;
  rec["hook"] = config.hook;
  rec["env_endpoint"] = config.env_endpoint;
  rec["policy"] = policy_record(config.policy);
  rec["base"] = base_record(config.base);
  return rec.dump(2) + "\n";
}

env::SessionFactory make_factory(const RunConfig& config) {
  if (config.env_endpoint.empty()) return env::textgrid_factory();
  env::RemoteEnvOptions options;
  options.endpoint = config.env_endpoint;
  return env::remote_factory(options);
}

prompts::Registry registry_for(const RunConfig& config) {
  if (config.assets_dir.empty()) return prompts::Registry::embedded();
  return prompts::Registry::with_overrides(config.assets_dir);
}

int exit_code_for(const Error& e) {
  if (e.code() == errc::policy_unavailable || e.code() == errc::env_timeout)
    return kExitBackendUnavailable;
  return kExitValidation;
}

// ============================================================================
// Commands
// ============================================================================

int cmd_synthesize(const RunConfig& config) {
  validate_config(config);
  io::ensure_dir(config.out_dir);
  write_config_echo(config);

  const prompts::Registry reg = registry_for(config);
  const env::SessionFactory factory = make_factory(config);
  const LoadedRun run = load_tasks(config);
  if (config.expert_data.empty()) raise(errc::config, "no expert data file configured");
  const auto corpus = dataset::load_trajectories(config.expert_data);

  policy::PolicyContext ctx;
  ctx.expert_data = &corpus;
  const auto p = policy::make_policy(config.policy, ctx);
  const auto base = policy::make_base_model(config.base);

  const pipeline::CorpusResult result = pipeline::synthesize_corpus(
      *p, *base, reg, run.specs_by_id, corpus, synthesis_options(config, 1), factory);

  if (!result.deliberations.empty()) {
    dataset::DatasetManifest manifest =
        dataset::write_deliberation(result.deliberations, config.out_dir + "/delib.jsonl");
    manifest.path = "delib.jsonl";
    dataset::save_manifest(manifest, config.out_dir + "/delib.manifest.json");
  }
  if (!result.stats.rejects.empty())
    io::write_file(config.out_dir + "/rejects.jsonl", rejects_jsonl(result.stats.rejects));
  io::write_file(config.out_dir + "/summary.json", summary_record(result).dump(2) + "\n");

  print_corpus_summary(result);
  return rejects_exit_code(result.stats);
}

int cmd_evaluate(const RunConfig& config) {
  validate_config(config);
  io::ensure_dir(config.out_dir);
  write_config_echo(config);

  const env::SessionFactory factory = make_factory(config);
  const LoadedRun run = load_tasks(config);

  std::vector<core::Trajectory> corpus;
  policy::PolicyContext ctx;
  if (!config.expert_data.empty()) {
    corpus = dataset::load_trajectories(config.expert_data);
    ctx.expert_data = &corpus;
  }
  const auto p = policy::make_policy(config.policy, ctx);

  const metrics::EvalReport report = metrics::evaluate(
      *p, run.tasks, factory, parallel::resolve_jobs(config.jobs), config.eval_temperature);

  io::write_file(config.out_dir + "/eval_report.txt", metrics::render_report(report));
  io::write_file(config.out_dir + "/eval_report.jsonl", metrics::report_records(report));
  std::cout << metrics::render_report(report);
  return kExitOk;
}

int cmd_iterate(const RunConfig& config) {
  validate_config(config);
  io::ensure_dir(config.out_dir);
  write_config_echo(config);

  const prompts::Registry reg = registry_for(config);
  const env::SessionFactory factory = make_factory(config);
  const LoadedRun run = load_tasks(config);
  if (config.expert_data.empty()) raise(errc::config, "no expert data file configured");

  const std::string state_path = config.out_dir + "/state.json";
  dataset::IterationState state;
  if (io::file_exists(state_path)) {
    state = dataset::load_state(state_path);
    if (state.total_iterations != config.iterations)
      raise(errc::config, "state at '" + state_path + "' was produced with iterations = " +
                              std::to_string(state.total_iterations) +
                              "; rerun with the same value or a fresh out_dir");
    verify_manifest(config.out_dir, state.current);
    std::cout << "resuming at k = " << state.k << "/" << state.total_iterations << "\n";
  } else {
    const auto expert = dataset::load_trajectories(config.expert_data);
    dataset::DatasetManifest expert_manifest;
    expert_manifest.path = config.expert_data;
    expert_manifest.trajectory_count = expert.size();
    expert_manifest.iteration = 0;
    expert_manifest.source = dataset::Source::expert;
    expert_manifest.checksum = dataset::file_checksum(config.expert_data);
    expert_manifest.epochs_advice = dataset::epochs_advice_for(0);
    state = dataset::initial_state(config.iterations, expert_manifest);
    dataset::save_state(state, state_path);
  }

  policy::PolicyConfig current_policy = config.policy;

  while (state.k < state.total_iterations) {
    const int iter = state.k + 1;
    const std::string iter_rel = "iter_" + std::to_string(iter);
    const std::string iter_dir = config.out_dir + "/" + iter_rel;
    io::ensure_dir(iter_dir);
    const std::string delib_path = iter_dir + "/delib.jsonl";
    const std::string manifest_path = iter_dir + "/manifest.json";
    const std::string sft_path = iter_dir + "/sft_chat.jsonl";

    dataset::DatasetManifest manifest;
    const bool reusable = io::file_exists(manifest_path) && io::file_exists(delib_path) &&
                          dataset::load_manifest(manifest_path).checksum ==
                              dataset::file_checksum(delib_path);
    if (reusable) {
      manifest = dataset::load_manifest(manifest_path);
      if (!io::file_exists(sft_path))
        dataset::export_sft_chat(reg, dataset::load_trajectories(delib_path), sft_path,
                                 current_policy.system_prompt_asset);
      std::cout << "iteration " << iter << ": reusing verified outputs\n";
    } else {
      // The handoff: read exactly what the previous iteration wrote.
      verify_manifest(config.out_dir, state.current);
      const auto corpus =
          dataset::load_trajectories(resolve_manifest_path(config.out_dir, state.current));

      policy::PolicyContext ctx;
      ctx.expert_data = &corpus;
      const auto p = policy::make_policy(current_policy, ctx);
      const auto base = policy::make_base_model(config.base);

      const pipeline::CorpusResult result = pipeline::synthesize_corpus(
          *p, *base, reg, run.specs_by_id, corpus, synthesis_options(config, iter), factory);

      std::cout << "iteration " << iter << ": ";
      print_corpus_summary(result);
      if (!result.stats.rejects.empty())
        io::write_file(iter_dir + "/rejects.jsonl", rejects_jsonl(result.stats.rejects));
      const int rc = rejects_exit_code(result.stats);
      if (rc != kExitOk) {
        dataset::save_state(state, state_path);
        return rc;
      }

      manifest = dataset::write_deliberation(result.deliberations, delib_path);
      manifest.path = iter_rel + "/delib.jsonl";
      dataset::save_manifest(manifest, manifest_path);
      dataset::export_sft_chat(reg, result.deliberations, sft_path,
                               current_policy.system_prompt_asset);
      io::write_file(iter_dir + "/summary.json", summary_record(result).dump(2) + "\n");
    }

    if (!config.hook.empty()) {
      const std::string command = config.hook + " " + quoted(sft_path) + " " + quoted(iter_dir);
      const int rc = std::system(command.c_str());
      if (rc != 0) {
        dataset::save_state(state, state_path);
        std::cerr << "training hook failed (status " << rc << "); state saved for resume\n";
        return kExitValidation;
      }
      const std::string update_path = iter_dir + "/policy_update.json";
      if (io::file_exists(update_path)) {
        try {
          current_policy = parse_policy_config(json::parse(io::read_file(update_path)));
        } catch (const json::exception& e) {
          raise(errc::config, "policy update '" + update_path + "': " + e.what());
        }
        std::cout << "iteration " << iter << ": policy updated from hook ("
                  << policy::backend_name(current_policy.backend) << ")\n";
      }
    }

    state = dataset::advance(state, manifest);
    dataset::save_state(state, state_path);
  }

  std::cout << "iteration loop complete: k = " << state.k << "/" << state.total_iterations
            << ", " << state.history.size() << " manifests in lineage\n";
  return kExitOk;
}

int cmd_validate(const RunConfig& config, const std::string& data_path) {
  const env::SessionFactory factory = make_factory(config);
  const LoadedRun run = load_tasks(config);

  const dataset::AuditResult audited = dataset::audit_trajectories(data_path);
  std::vector<std::string> problems;
  for (const dataset::LineIssue& issue : audited.issues)
    problems.push_back("line " + std::to_string(issue.line) + ": [" + errc_name(issue.code) +
                       "] " + issue.message);

  for (const dataset::AuditedTrajectory& row : audited.ok) {
    const std::string& id = row.trajectory.instruction().id;
    const auto spec = run.specs_by_id.find(id);
    if (spec == run.specs_by_id.end()) {
      problems.push_back("line " + std::to_string(row.line) + ": no task spec for '" + id + "'");
      continue;
    }
    try {
      const auto session =
          env::replay_prefix(factory, spec->second, row.trajectory, row.trajectory.steps().size());
      if (session->terminated()) {
        const double scored = session->score();
        if (std::abs(scored - row.trajectory.reward()) > 1e-9)
          problems.push_back("line " + std::to_string(row.line) + ": recorded reward " +
                             strings::format_double(row.trajectory.reward(), 6) +
                             " but the environment scored " + strings::format_double(scored, 6));
      }
    } catch (const Error& e) {
      problems.push_back("line " + std::to_string(row.line) + ": [" + errc_name(e.code()) + "] " +
                         e.what());
    }
  }

  if (problems.empty()) {
    std::cout << "OK: " << audited.ok.size() << " trajectories validated against '"
              << config.tasks << "'\n";
    return kExitOk;
  }
  for (const std::string& p : problems) std::cerr << p << "\n";
  std::cerr << problems.size() << " problem(s) in '" << data_path << "'\n";
  return kExitValidation;
}

}  // namespace sand::cli
