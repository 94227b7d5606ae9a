#pragma once

#include <string>

#include "sand/dataset.hpp"
#include "sand/env.hpp"
#include "sand/pipeline.hpp"
#include "sand/policy.hpp"
#include "sand/prompts.hpp"

namespace sand::cli {

// Process exit codes (also returned by the cmd_* functions).
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitBackendUnavailable = 2;
inline constexpr int kExitRejectsOverThreshold = 3;

/**
 * Everything a run needs, resolvable from a config file plus flag overrides.
 * Defaults: N = 5 samples, I = 3 iterations, sampling at temperature 1.0,
 * greedy evaluation, auto expert switch, seed 1, jobs 0 (all cores).
 */
struct RunConfig {
  int n = 5;
  int iterations = 3;
  double sample_temperature = 1.0;
  double eval_temperature = 0.0;
  pipeline::SwitchMode expert_switch = pipeline::SwitchMode::auto_mode;
  std::uint64_t seed = 1;
  int jobs = 0;       // 0 = available parallelism
  int max_steps = 0;  // 0 = keep each task's own budget

  std::string expert_data;  // expert trajectory file (D_exp)
  std::string tasks;        // task spec file
  std::string out_dir = "out";
  std::string assets_dir;     // optional prompt overrides
  std::string hook;           // optional per-iteration training hook command
  std::string env_endpoint;   // empty = built-in TextGrid

  policy::PolicyConfig policy;
  policy::BaseModelConfig base;
};

RunConfig load_config(const std::string& path);

// The resolved config as a JSON document (api keys redacted). Written beside
// every command's outputs so runs are reproducible from their artifacts.
std::string render_config(const RunConfig& config);

// Built-in TextGrid unless env_endpoint is set.
env::SessionFactory make_factory(const RunConfig& config);

// Embedded prompts, plus *.txt overrides from assets_dir when set.
prompts::Registry registry_for(const RunConfig& config);

// Maps an error to the exit-code contract: backend unavailable → 2, else 1.
int exit_code_for(const Error& e);

/**
 * One synthesis pass over the expert data: writes the deliberation dataset,
 * its manifest, a rejects file when needed, and a run summary under out_dir.
 * Returns 0/2/3 per the exit-code contract.
 */
int cmd_synthesize(const RunConfig& config);

/** Greedy evaluation over the task file; writes table + records under out_dir. */
int cmd_evaluate(const RunConfig& config);

/**
 * The full outer loop: synthesize, export, run the training hook, advance,
 * repeat to I iterations. State persists under out_dir/state.json; completed
 * iterations are checksum-verified and reused on resume instead of being
 * re-synthesized. A failing hook halts with exit 1 and resumable state.
 */
int cmd_iterate(const RunConfig& config);

/** Structural validation plus env replay for every record in data_path. */
int cmd_validate(const RunConfig& config, const std::string& data_path);

}  // namespace sand::cli
