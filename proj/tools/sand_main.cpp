#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "sand/cli.hpp"
#include "sand/errors.hpp"

namespace {

struct Flags {
  std::string config_path;
  int n = 0;
  int iterations = 0;
  std::uint64_t seed = 0;
  std::string expert_switch;
  std::string backend;
  int jobs = 0;
  int max_steps = 0;
  std::string expert_data;
  std::string tasks;
  std::string out_dir;
  std::string table_path;
  std::string hook;
};

void add_common_options(CLI::App* sub, Flags& flags) {
  sub->add_option("--config", flags.config_path, "JSON config file (flags override it)");
  sub->add_option("--n", flags.n, "candidate samples per step");
  sub->add_option("--iterations", flags.iterations, "outer-loop iterations");
  sub->add_option("--seed", flags.seed, "run seed");
  sub->add_option("--expert-switch", flags.expert_switch,
                  "expert switch: on, off, or auto (binary-reward tasks only)");
  sub->add_option("--backend", flags.backend,
                  "policy backend: scripted_expert, tabular, remote_chat, template_stub");
  sub->add_option("--jobs", flags.jobs, "worker count (0 = all cores)");
  sub->add_option("--max-steps", flags.max_steps, "override every task's step budget");
  sub->add_option("--expert-data", flags.expert_data, "expert trajectory file");
  sub->add_option("--tasks", flags.tasks, "task spec file");
  sub->add_option("--out-dir", flags.out_dir, "output directory");
  sub->add_option("--table-path", flags.table_path, "tabular policy table file");
  sub->add_option("--hook", flags.hook, "per-iteration training hook command");
}

sand::cli::RunConfig resolve_config(const CLI::App* sub, const Flags& flags) {
  sand::cli::RunConfig config;
  if (sub->count("--config") > 0) config = sand::cli::load_config(flags.config_path);
  if (sub->count("--n") > 0) config.n = flags.n;
  if (sub->count("--iterations") > 0) config.iterations = flags.iterations;
  if (sub->count("--seed") > 0) config.seed = flags.seed;
  if (sub->count("--expert-switch") > 0)
    config.expert_switch = sand::pipeline::parse_switch_mode(flags.expert_switch);
  if (sub->count("--backend") > 0)
    config.policy.backend = sand::policy::parse_backend(flags.backend);
  if (sub->count("--jobs") > 0) config.jobs = flags.jobs;
  if (sub->count("--max-steps") > 0) config.max_steps = flags.max_steps;
  if (sub->count("--expert-data") > 0) config.expert_data = flags.expert_data;
  if (sub->count("--tasks") > 0) config.tasks = flags.tasks;
  if (sub->count("--out-dir") > 0) config.out_dir = flags.out_dir;
  if (sub->count("--table-path") > 0) config.policy.table_path = flags.table_path;
  if (sub->count("--hook") > 0) config.hook = flags.hook;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deliberation-trajectory synthesis engine"};
  app.require_subcommand(1);

  Flags flags;
  std::string validate_path;

  CLI::App* synthesize = app.add_subcommand(
      "synthesize", "One synthesis pass: scan, rollout, critique, synthesize, write");
  add_common_options(synthesize, flags);

  CLI::App* evaluate = app.add_subcommand("evaluate", "Greedy evaluation over a task file");
  add_common_options(evaluate, flags);

  CLI::App* iterate =
      app.add_subcommand("iterate", "Full outer loop with training hook and resumable state");
  add_common_options(iterate, flags);

  CLI::App* validate = app.add_subcommand("validate", "Structural + replay validation of a file");
  add_common_options(validate, flags);
  validate->add_option("data", validate_path, "trajectory file to validate")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synthesize->parsed()) return sand::cli::cmd_synthesize(resolve_config(synthesize, flags));
    if (evaluate->parsed()) return sand::cli::cmd_evaluate(resolve_config(evaluate, flags));
    if (iterate->parsed()) return sand::cli::cmd_iterate(resolve_config(iterate, flags));
    if (validate->parsed())
      return sand::cli::cmd_validate(resolve_config(validate, flags), validate_path);
  } catch (const sand::Error& e) {
    std::cerr << "error [" << sand::errc_name(e.code()) << "]: " << e.what() << "\n";
    return sand::cli::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return sand::cli::kExitValidation;
  }
  return sand::cli::kExitValidation;
}
