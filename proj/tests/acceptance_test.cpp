// Behavior gate for the synthesis engine: ten end-to-end checks, one PASS or
// FAIL line each. Exits nonzero when any check fails. Tolerances are stated
// inline next to each comparison.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sand/cli.hpp"
#include "sand/core.hpp"
#include "sand/critique.hpp"
#include "sand/dataset.hpp"
#include "sand/env.hpp"
#include "sand/errors.hpp"
#include "sand/io.hpp"
#include "sand/metrics.hpp"
#include "sand/pipeline.hpp"
#include "sand/policy.hpp"
#include "sand/prompts.hpp"
#include "sand/rng.hpp"
#include "sand/rollout.hpp"
#include "sand/sampler.hpp"
#include "sand/synthesis.hpp"
#include "support/fixtures.hpp"
#include "support/http_fixtures.hpp"

using namespace sand;
using nlohmann::json;
using Table = std::map<std::string, std::vector<policy::TabularEntry>>;
using Clock = std::chrono::steady_clock;

namespace {

// ===================================================================
// harness
// ===================================================================

void expect(bool condition, const std::string& what) {
  if (!condition) throw std::runtime_error(what);
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string two_digits(int i) {
  return (i < 10 ? "0" : "") + std::to_string(i);
}

// ===================================================================
// shared fixtures
// ===================================================================

// A world where the mug sits on the kitchen table and the goal shelf is in
// the pantry: the expert plan opens with "go to kitchen".
std::uint64_t tie_seed() {
  static const std::uint64_t seed = testfx::find_seed(
      testfx::binary_task("probe", "mug", "shelf", 0),
      [](const env::TextGridEnv& w) { return w.location_of_object("mug") == "table"; });
  return seed;
}

env::TaskSpec tie_task(const std::string& id) {
  return testfx::binary_task(id, "mug", "shelf", tie_seed());
}

// Point mass on "look around" at the start, then the full expert plan one
// step late: every first step is flagged, and the alternative rollout ties
// the expert's reward so a sound switch rule never fires.
Table detour_table(const core::Trajectory& expert) {
  Table detour;
  detour[""] = {{"maybe scan the room first", "look around", 1.0}};
  std::string key = "look around";
  for (const core::Step& s : expert.steps()) {
    detour[key] = {{s.thought.text, s.action.raw(), 1.0}};
    key += "\n" + s.action.canonical();
  }
  return testfx::merge_tables({detour, testfx::point_mass_table(expert)});
}

int classifier_mismatches(const std::vector<core::Trajectory>& ds) {
  int mismatches = 0;
  for (const core::Trajectory& e : ds)
    for (const core::Step& s : e.steps()) {
      const bool flagged = s.thought.kind == core::ThoughtKind::deliberative;
      if (metrics::is_deliberative_text(s.thought.text) != flagged) ++mismatches;
    }
  return mismatches;
}

// ===================================================================
// check 1: the inconsistency indicator against a set-union oracle
// ===================================================================

void check_indicator_oracle() {
  const auto start = Clock::now();
  const core::Instruction instruction{"oracle", "pick an action"};
  rng::SplitMix64 gen(2024);
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int alphabet = 1 + static_cast<int>(gen.bounded(6));
    std::vector<policy::TabularEntry> dist;
    for (int i = 0; i < alphabet; ++i)
      dist.push_back({"", "act " + std::to_string(i), 1.0 / alphabet});
    Table states;
    states[""] = dist;
    const policy::TabularPolicy p(states);
    const core::History h(instruction, "start");
    const core::Step expert{core::Thought{},
                            core::Action("act " + std::to_string(gen.bounded(alphabet))),
                            std::nullopt};
    const sampler::CandidateSet c =
        sampler::sample_candidates(p, h, expert, 5, gen.next_u64(), 1.0);
    std::set<std::string> unique{c.expert.action.canonical()};
    for (const policy::StepSample& s : c.sampled) unique.insert(s.action.canonical());
    if (sampler::needs_deliberation(c) != (unique.size() > 1)) ++mismatches;
  }
  expect(mismatches == 0,
         "indicator disagreed with the oracle on " + std::to_string(mismatches) + " of 1000 sets");
  expect(seconds_since(start) < 1.0, "1000 candidate sets took 1 s or longer");
}

// ===================================================================
// check 2: an always-agreeing policy copies the corpus verbatim
// ===================================================================

void check_degenerate_copy() {
  const auto start = Clock::now();
  const std::vector<std::pair<const char*, const char*>> combos = {
      {"egg", "fridge"},        {"apple", "table"},   {"mug", "shelf"},
      {"book", "crate"},        {"hammer", "bench"},  {"thermometer", "toolbox"},
      {"egg", "cupboard"},      {"apple", "shelf"},   {"mug", "table"},
      {"book", "bench"},        {"hammer", "toolbox"}, {"thermometer", "fridge"},
      {"egg", "shelf"},         {"apple", "crate"},   {"mug", "cupboard"},
      {"book", "table"},        {"hammer", "crate"},  {"thermometer", "bench"},
      {"egg", "toolbox"},       {"apple", "fridge"}};
  std::vector<env::TaskSpec> specs;
  std::vector<core::Trajectory> experts;
  for (std::size_t i = 0; i < combos.size(); ++i) {
    const std::uint64_t seed =
        testfx::seed_with_object_away(combos[i].first, combos[i].second, 7 * i);
    specs.push_back(testfx::binary_task("copy_" + two_digits(static_cast<int>(i)),
                                        combos[i].first, combos[i].second, seed));
    experts.push_back(testfx::expert_trajectory(specs.back()));
  }

  testfx::TempDir dir;
  env::save_task_specs(specs, dir.file("tasks.jsonl"));
  dataset::write_trajectories(experts, dir.file("expert.jsonl"));
  cli::RunConfig config;
  config.tasks = dir.file("tasks.jsonl");
  config.expert_data = dir.file("expert.jsonl");
  config.out_dir = dir.file("out");
  config.seed = 11;
  config.policy.backend = policy::Backend::scripted_expert;
  config.base.backend = policy::Backend::template_stub;
  expect(cli::cmd_synthesize(config) == cli::kExitOk, "synthesis did not exit cleanly");

  const auto loaded = dataset::load_trajectories(dir.file("out") + "/delib.jsonl");
  expect(loaded.size() == experts.size(), "output corpus size changed");
  int deliberative = 0;
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    const core::Trajectory& got = loaded[i];
    const core::Trajectory& want = experts[i];
    expect(got.instruction().id == want.instruction().id, "corpus order changed");
    expect(got.reward() == want.reward(), "reward changed on " + want.instruction().id);
    expect(got.steps().size() == want.steps().size(),
           "step count changed on " + want.instruction().id);
    for (std::size_t t = 0; t < got.steps().size(); ++t) {
      const core::Step& a = got.steps()[t];
      const core::Step& b = want.steps()[t];
      if (a.thought.kind == core::ThoughtKind::deliberative) ++deliberative;
      expect(a.thought.text == b.thought.text, "a thought changed on " + want.instruction().id);
      expect(a.action.raw() == b.action.raw(), "an action changed on " + want.instruction().id);
      expect(a.observation.has_value() == b.observation.has_value() &&
                 (!a.observation || a.observation->text == b.observation->text),
             "an observation changed on " + want.instruction().id);
    }
  }
  expect(deliberative == 0, std::to_string(deliberative) + " deliberative steps appeared");
  const json summary = json::parse(io::read_file(dir.file("out") + "/summary.json"));
  expect(summary.at("flagged_steps") == 0, "steps were flagged despite full agreement");
  expect(summary.at("completions_issued") == 0, "the base model was consulted");
  expect(seconds_since(start) < 5.0, "the 20-trajectory copy took 5 s or longer");
}

// ===================================================================
// check 3: trajectory probabilities factor over tabular support
// ===================================================================

void check_probability_factorization() {
  Table states;
  states[""] = {{"t-a", "alpha", 0.5}, {"t-b", "beta", 0.3}, {"t-c", "gamma", 0.2}};
  states["alpha"] = {{"t-d", "alpha", 0.6}, {"t-e", "delta", 0.4}};
  states["beta"] = {{"t-f", "wait", 1.0}};
  states["gamma"] = {{"t-g", "alpha", 0.25}, {"t-h", "beta", 0.75}};
  states["alpha\nalpha"] = {{"t-i", "stop", 0.7}, {"t-j", "go", 0.3}};
  states["alpha\ndelta"] = {{"t-k", "stop", 1.0}};
  states["beta\nwait"] = {{"t-l", "stop", 0.45}, {"t-m", "go", 0.55}};
  states["gamma\nalpha"] = {{"t-n", "stop", 0.5}, {"t-o", "go", 0.5}};
  states["gamma\nbeta"] = {{"t-p", "stop", 0.1}, {"t-q", "go", 0.9}};
  const policy::TabularPolicy p(states);
  const core::Instruction instruction{"enum", "walk the tree"};

  auto one_path = [&](std::initializer_list<std::pair<const char*, const char*>> picks) {
    std::vector<core::Step> steps;
    for (const auto& [thought, action] : picks)
      steps.push_back({core::Thought{thought, core::ThoughtKind::plain}, core::Action(action),
                       core::Observation{"ok"}});
    return core::Trajectory(instruction, std::move(steps), 0.0);
  };

  // individual values against hand products (1e-12: double round-off only)
  const double p1 = std::exp(core::trajectory_log_prob(p, one_path({{"t-a", "alpha"}})));
  expect(std::abs(p1 - 0.5) <= 1e-12, "depth-1 probability is not 0.5");
  const double p2 =
      std::exp(core::trajectory_log_prob(p, one_path({{"t-a", "alpha"}, {"t-e", "delta"}})));
  expect(std::abs(p2 - 0.5 * 0.4) <= 1e-12, "depth-2 probability is not 0.20");
  const double p3 = std::exp(core::trajectory_log_prob(
      p, one_path({{"t-c", "gamma"}, {"t-h", "beta"}, {"t-q", "go"}})));
  expect(std::abs(p3 - 0.2 * 0.75 * 0.9) <= 1e-12, "depth-3 probability is not 0.135");
  const double off = core::trajectory_log_prob(p, one_path({{"wrong thought", "beta"}}));
  expect(std::isinf(off) && off < 0.0, "an off-support step did not score -inf");

  // exhaustive depth-3 enumeration sums to one
  double total = 0.0;
  double max_error = 0.0;
  std::size_t count = 0;
  std::vector<core::Step> steps;
  std::function<void(const std::string&, double, int)> walk =
      [&](const std::string& key, double product, int depth) {
        if (depth == 3) {
          const core::Trajectory e(instruction, steps, 0.0);
          const double prob = std::exp(core::trajectory_log_prob(p, e));
          max_error = std::max(max_error, std::abs(prob - product));
          total += prob;
          ++count;
          return;
        }
        for (const policy::TabularEntry& entry : states.at(key)) {
          steps.push_back({core::Thought{entry.thought, core::ThoughtKind::plain},
                           core::Action(entry.action), core::Observation{"ok"}});
          const std::string canonical = core::Action(entry.action).canonical();
          walk(key.empty() ? canonical : key + "\n" + canonical, product * entry.prob, depth + 1);
          steps.pop_back();
        }
      };
  walk("", 1.0, 0);
  expect(count == 9, "expected 9 depth-3 trajectories, walked " + std::to_string(count));
  expect(std::abs(total - 1.0) <= 1e-9, "probabilities sum to " + std::to_string(total));
  expect(max_error <= 1e-12, "a factored probability drifted from its hand product");
}

// ===================================================================
// check 4: expert switch soundness
// ===================================================================

void check_expert_switch() {
  using core::Action;
  using core::Thought;
  using core::ThoughtKind;

  // a stalled demonstration (reward 0.5) with a strictly better branch
  const env::TaskSpec proto = testfx::granular_task("sw", "mug", "shelf", 0);
  const std::uint64_t seed = testfx::find_seed(proto, [](const env::TextGridEnv& w) {
    return w.location_of_object("mug") == "table";
  });
  env::TaskSpec spec = testfx::granular_task("sw", "mug", "shelf", seed);
  spec.max_steps = 5;
  const std::vector<policy::StepSample> moves = {
      {Thought{"the mug should be in the kitchen", ThoughtKind::plain}, Action("go to kitchen")},
      {Thought{"there it is", ThoughtKind::plain}, Action("take mug from table")},
      {Thought{"let me look it over", ThoughtKind::plain}, Action("examine mug")},
      {Thought{}, Action("examine mug")},
      {Thought{}, Action("examine mug")}};
  const core::Trajectory expert = testfx::run_steps(spec, moves);
  expect(std::abs(expert.reward() - 0.5) <= 1e-12, "the stalled demonstration is not at 0.5");

  Table shortcut;
  shortcut["go to kitchen\ntake mug from table"] = {
      {"the shelf is in the pantry", "go to pantry", 1.0}};
  shortcut["go to kitchen\ntake mug from table\ngo to pantry"] = {
      {"placing it finishes the task", "put mug on shelf", 1.0}};
  const policy::TabularPolicy p(
      testfx::merge_tables({shortcut, testfx::point_mass_table(expert)}));
  const policy::TemplateStubBase base;
  const prompts::Registry& reg = prompts::Registry::embedded();

  pipeline::SynthesisOptions options;
  options.seed = 3;
  options.switch_mode = pipeline::SwitchMode::on;
  pipeline::TrajectoryStats stats;
  const core::DeliberationTrajectory switched = pipeline::synthesize_trajectory(
      p, base, reg, spec, expert, options, env::textgrid_factory(), &stats);
  expect(stats.switches == 1, "the strictly better branch did not switch");
  expect(switched.reward == 1.0, "the switched trajectory does not record reward 1.0");

  // the assembled actions replay in a fresh world to exactly 1.0
  auto session = env::reset(spec);
  for (const core::DeliberationStep& s : switched.steps) {
    expect(!session->terminated(), "the assembled trajectory overruns the episode");
    session->step(s.action);
  }
  expect(session->terminated(), "the assembled trajectory does not finish the episode");
  expect(session->score() == 1.0, "the assembled trajectory replays to " +
                                      std::to_string(session->score()) + " instead of 1.0");

  // the same dispute with the switch off (explicitly, and via auto on a
  // granular task) keeps the demonstrated actions
  for (const pipeline::SwitchMode mode :
       {pipeline::SwitchMode::off, pipeline::SwitchMode::auto_mode}) {
    pipeline::SynthesisOptions cautious = options;
    cautious.switch_mode = mode;
    pipeline::TrajectoryStats kept_stats;
    const core::DeliberationTrajectory kept = pipeline::synthesize_trajectory(
        p, base, reg, spec, expert, cautious, env::textgrid_factory(), &kept_stats);
    expect(kept_stats.switches == 0, "a disabled switch still fired");
    expect(kept.steps.size() == expert.steps().size(), "a disabled switch changed the length");
    for (std::size_t t = 0; t < kept.steps.size(); ++t)
      expect(kept.steps[t].action.canonical() == expert.steps()[t].action.canonical(),
             "a disabled switch changed an action");
  }

  // expert at least as good as every alternative: no switch across 500 seeds
  const env::TaskSpec tie = tie_task("tie");
  const core::Trajectory tie_expert = testfx::expert_trajectory(tie);
  const policy::TabularPolicy tie_policy(detour_table(tie_expert));
  std::size_t fired = 0;
  for (std::uint64_t s = 0; s < 500; ++s) {
    pipeline::SynthesisOptions seeded;
    seeded.seed = s;
    seeded.switch_mode = pipeline::SwitchMode::on;
    pipeline::TrajectoryStats tie_stats;
    pipeline::synthesize_trajectory(tie_policy, base, reg, tie, tie_expert, seeded,
                                    env::textgrid_factory(), &tie_stats);
    fired += tie_stats.switches;
  }
  expect(fired == 0, "a tied alternative switched in " + std::to_string(fired) + " of 500 runs");
}

// ===================================================================
// check 5: deliberation flags match the sampler and the classifier
// ===================================================================

void check_flag_placement() {
  std::map<std::string, env::TaskSpec> specs_by_id;
  std::vector<core::Trajectory> corpus;
  for (int i = 0; i < 5; ++i) {
    const env::TaskSpec spec = tie_task("d_" + std::to_string(i));
    specs_by_id.emplace(spec.instruction.id, spec);
    corpus.push_back(testfx::expert_trajectory(spec));
  }
  const policy::TabularPolicy p(detour_table(corpus.front()));
  const policy::TemplateStubBase base;
  pipeline::SynthesisOptions options;
  options.seed = 9;
  const pipeline::CorpusResult result =
      pipeline::synthesize_corpus(p, base, prompts::Registry::embedded(), specs_by_id, corpus,
                                  options, env::textgrid_factory());
  expect(result.stats.rejects.empty(), "the corpus produced rejects");
  expect(result.deliberations.size() == corpus.size(), "the corpus size changed");

  int sampler_mismatches = 0;
  int text_mismatches = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const core::DeliberationTrajectory& dt = result.deliberations[i];
    // the detour policy is a point mass, so flags are seed-independent and
    // recomputable with any seed
    const std::vector<sampler::CandidateSet> sets = sampler::scan_trajectory(
        p, specs_by_id.at(dt.instruction.id), corpus[i], 5, 4242 + i, 1.0);
    expect(sets.size() == dt.steps.size(), "scan and output lengths differ");
    for (std::size_t t = 0; t < sets.size(); ++t) {
      if (sampler::needs_deliberation(sets[t]) != dt.steps[t].deliberated) ++sampler_mismatches;
      if (metrics::is_deliberative_text(dt.steps[t].thought.text) != dt.steps[t].deliberated)
        ++text_mismatches;
    }
  }
  expect(sampler_mismatches == 0,
         std::to_string(sampler_mismatches) + " stored flags disagree with the sampler");
  expect(text_mismatches == 0,
         std::to_string(text_mismatches) + " rendered thoughts disagree with their flags");
}

// ===================================================================
// check 6: prompt assembly preserves template text outside slots
// ===================================================================

std::vector<std::string> literal_segments(const std::string& tmpl) {
  std::vector<std::string> segments;
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const std::size_t open = tmpl.find('{', pos);
    if (open == std::string::npos) {
      segments.push_back(tmpl.substr(pos));
      break;
    }
    if (open > pos) segments.push_back(tmpl.substr(pos, open - pos));
    const std::size_t close = tmpl.find('}', open);
    expect(close != std::string::npos, "template has an unterminated slot");
    pos = close + 1;
  }
  return segments;
}

void expect_fidelity(const std::string& tmpl, const std::string& assembled,
                     const std::string& which) {
  const std::vector<std::string> segments = literal_segments(tmpl);
  expect(!segments.empty(), which + ": template has no literal text");
  std::size_t at = 0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const std::size_t found = assembled.find(segments[i], at);
    expect(found != std::string::npos,
           which + ": template text lost around literal segment " + std::to_string(i));
    if (i == 0 && tmpl.rfind(segments[0], 0) == 0)
      expect(found == 0, which + ": the prompt does not open with the template");
    at = found + segments[i].size();
  }
  if (!tmpl.empty() && tmpl.back() != '}')
    expect(at == assembled.size(), which + ": trailing text follows the template");
  expect(assembled.find('{') == std::string::npos && assembled.find('}') == std::string::npos,
         which + ": an unfilled slot survived assembly");
}

void check_prompt_fidelity() {
  const prompts::Registry& reg = prompts::Registry::embedded();
  const env::TaskSpec spec = tie_task("fid");
  const core::Trajectory expert = testfx::expert_trajectory(spec);
  const core::History h = expert.prefix(1);

  rollout::RolloutRecord record;
  record.candidate = {core::Thought{}, core::Action("look around")};
  record.continuation = {core::Step{core::Thought{}, core::Action("look around"),
                                    core::Observation{"You see the hallway."}}};
  record.final_reward = 0.0;
  record.truncated = true;
  const std::string critique_prompt = critique::build_critique_prompt(
      reg, expert.instruction(), h, record, env::RewardMode::binary);
  expect_fidelity(reg.get("critique"), critique_prompt, "critique prompt");

  // three candidates line up one-to-one with the template's scratch-pad rows
  using critique::Critique;
  const synthesis::CritiquePairs pairs = {
      {core::Action("go to pantry"),
       Critique{core::Action("go to pantry"), "Moves toward the shelf without any detour.", 1.0, 1}},
      {core::Action("look around"),
       Critique{core::Action("look around"), "Re-describes a room that is already known.", 0.0, 1}},
      {core::Action("wait"),
       Critique{core::Action("wait"), "Burns a turn and changes nothing.", 0.0, 1}}};
  const std::string deliberation_prompt = synthesis::build_deliberation_prompt(
      reg, expert.instruction(), h, pairs, core::Action("go to pantry"));
  expect_fidelity(reg.get("deliberation"), deliberation_prompt, "deliberation prompt");
}

// ===================================================================
// check 7: cost and reward metrics against hand computations
// ===================================================================

void check_metric_reproduction() {
  metrics::EvalReport lean;
  lean.per_task.push_back({"probe", 1.0, 1, 498, 0.0, ""});
  lean.avg_tokens = 498.3;
  metrics::EvalReport verbose;
  verbose.per_task.push_back({"probe", 1.0, 1, 1314, 0.0, ""});
  verbose.avg_tokens = 1314.2;
  const double multiplier = metrics::token_multiplier(lean, verbose);
  expect(std::abs(multiplier - 2.64) <= 0.01,
         "token multiplier " + std::to_string(multiplier) + " is outside 2.64 +/- 0.01");
  expect(metrics::format_multiplier(multiplier) == "2.6\xC3\x97",
         "the multiplier does not render as 2.6x");
  expect(metrics::format_multiplier(1.0) == "1.0\xC3\x97", "unity does not render as 1.0x");

  const std::string deliberative_text =
      "weighing the options\n\n- go left: quick and direct.\n- wait: loses a turn.\n\n"
      "going left wins on speed.";
  for (int i = 0; i < 10; ++i) {
    const std::size_t steps = 1 + static_cast<std::size_t>(i % 5);
    const double reward = static_cast<double>(i % 4) / 4.0;
    std::vector<core::Step> body;
    std::size_t deliberative = 0;
    for (std::size_t t = 0; t < steps; ++t) {
      const bool flag = (static_cast<int>(t) + i) % 2 == 0;
      if (flag) ++deliberative;
      body.push_back({core::Thought{flag ? deliberative_text : "just walk",
                                    flag ? core::ThoughtKind::deliberative
                                         : core::ThoughtKind::plain},
                      core::Action("go"), core::Observation{"you go"}});
    }
    const core::Trajectory e(core::Instruction{"m" + std::to_string(i), "move"}, body, reward);
    expect(metrics::per_step_reward(e.reward(), e.steps().size()) ==
               reward / static_cast<double>(steps),
           "per-step reward drifted from its hand value");
    expect(metrics::deliberation_rate(e) ==
               static_cast<double>(deliberative) / static_cast<double>(steps),
           "deliberation rate drifted from its hand value");
  }
}

// ===================================================================
// check 8: difficulty bands against a positional tertile oracle
// ===================================================================

std::map<std::string, metrics::Band> positional_oracle(
    const std::map<std::string, double>& rewards) {
  std::vector<std::pair<double, std::string>> order;
  for (const auto& [id, r] : rewards) order.emplace_back(r, id);
  std::sort(order.begin(), order.end());
  const std::size_t n = order.size();
  const std::size_t hard = n / 3 + (n % 3 >= 1 ? 1 : 0);
  const std::size_t medium = n / 3 + (n % 3 == 2 ? 1 : 0);
  std::vector<metrics::Band> bands(n, metrics::Band::easy);
  for (std::size_t i = 0; i < n; ++i)
    bands[i] = i < hard ? metrics::Band::hard
                        : (i < hard + medium ? metrics::Band::medium : metrics::Band::easy);
  // a tie crossing a boundary sinks to the harder (earlier) band
  for (std::size_t i = 1; i < n; ++i)
    if (order[i].first == order[i - 1].first) bands[i] = bands[i - 1];
  std::map<std::string, metrics::Band> out;
  for (std::size_t i = 0; i < n; ++i) out[order[i].second] = bands[i];
  return out;
}

void check_difficulty_bands() {
  // fixed distinct vectors: exact band sizes
  for (const std::size_t n : {std::size_t{9}, std::size_t{10}}) {
    std::map<std::string, double> rewards;
    for (std::size_t i = 0; i < n; ++i)
      rewards["t" + std::to_string(i)] = static_cast<double>(i) / static_cast<double>(n);
    const auto bands = metrics::difficulty_bands(rewards);
    std::map<metrics::Band, int> sizes;
    for (const auto& [id, band] : bands) ++sizes[band];
    const int expected_hard = n == 10 ? 4 : 3;
    expect(sizes[metrics::Band::hard] == expected_hard &&
               sizes[metrics::Band::medium] == 3 && sizes[metrics::Band::easy] == 3,
           "distinct rewards landed in the wrong tertile sizes for n=" + std::to_string(n));
  }

  // randomized vectors with frequent ties
  rng::SplitMix64 gen(88);
  for (int trial = 0; trial < 80; ++trial) {
    const std::size_t n = trial % 2 == 0 ? 9 : 10;
    std::map<std::string, double> rewards;
    for (std::size_t i = 0; i < n; ++i)
      rewards["t" + std::to_string(i)] = static_cast<double>(gen.bounded(9)) / 8.0;
    const auto got = metrics::difficulty_bands(rewards);
    const auto want = positional_oracle(rewards);
    expect(got.size() == rewards.size(), "bands do not cover every task");
    for (const auto& [id, band] : want) {
      const auto it = got.find(id);
      expect(it != got.end(), "task " + id + " missing from the bands");
      expect(it->second == band, "task " + id + " in the wrong band on trial " +
                                     std::to_string(trial));
    }
  }
}

// ===================================================================
// check 9: hermetic two-iteration run, verified and repeatable
// ===================================================================

void check_hermetic_loop() {
  const auto start = Clock::now();
  std::vector<env::TaskSpec> specs;
  std::vector<core::Trajectory> experts;
  for (int i = 0; i < 30; ++i) {
    specs.push_back(tie_task("task_" + two_digits(i)));
    experts.push_back(testfx::expert_trajectory(specs.back()));
  }

  testfx::TempDir dir;
  env::save_task_specs(specs, dir.file("tasks.jsonl"));
  dataset::write_trajectories(experts, dir.file("expert.jsonl"));
  testfx::write_table(detour_table(experts.front()), dir.file("table.json"));
  cli::RunConfig config;
  config.tasks = dir.file("tasks.jsonl");
  config.expert_data = dir.file("expert.jsonl");
  config.iterations = 2;
  config.seed = 13;
  config.policy.backend = policy::Backend::tabular;
  config.policy.table_path = dir.file("table.json");
  config.base.backend = policy::Backend::template_stub;

  config.out_dir = dir.file("run_a");
  expect(cli::cmd_iterate(config) == cli::kExitOk, "the first loop did not exit cleanly");

  const dataset::IterationState state = dataset::load_state(dir.file("run_a") + "/state.json");
  expect(state.k == 2 && state.history.size() == 3, "the loop did not advance twice");
  for (int k = 1; k <= 2; ++k) {
    const dataset::DatasetManifest& hop = state.history[static_cast<std::size_t>(k)];
    expect(hop.iteration == k, "lineage records the wrong iteration");
    expect(hop.source == dataset::Source::deliberation, "lineage records the wrong source");
    expect(hop.trajectory_count == 30, "lineage records the wrong corpus size");
    const std::string resolved = dir.file("run_a") + "/" + hop.path;
    expect(hop.checksum == dataset::file_checksum(resolved),
           "iteration " + std::to_string(k) + " checksum does not match its file");
    const dataset::DatasetManifest on_disk = dataset::load_manifest(
        dir.file("run_a") + "/iter_" + std::to_string(k) + "/manifest.json");
    expect(on_disk.checksum == hop.checksum, "the stored manifest disagrees with the lineage");
    expect(classifier_mismatches(dataset::load_trajectories(resolved)) == 0,
           "rendered thoughts disagree with their flags in iteration " + std::to_string(k));
  }

  // the same seeds reproduce the same bytes in a fresh directory
  config.out_dir = dir.file("run_b");
  expect(cli::cmd_iterate(config) == cli::kExitOk, "the second loop did not exit cleanly");
  for (const char* name : {"iter_1/delib.jsonl", "iter_2/delib.jsonl", "iter_1/manifest.json",
                           "iter_2/manifest.json", "iter_1/sft_chat.jsonl"}) {
    expect(io::read_file(dir.file("run_a") + "/" + name) ==
               io::read_file(dir.file("run_b") + "/" + name),
           std::string(name) + " differs between reruns");
  }
  expect(seconds_since(start) < 60.0, "the 30-task loop took 60 s or longer");
}

// ===================================================================
// check 10: resilience against a flaky completion backend
// ===================================================================

void check_remote_resilience() {
  const std::string draft =
      "Thought: Nothing has been explored yet, so the opening move sets the pace.\n\n"
      "- look around: repeats what the hallway already shows.\n"
      "- go to kitchen: heads straight for the mug.\n\n"
      "Heading to the kitchen makes real progress, so that is my move.";
  const std::string critique_reply =
      "Action Evaluation: The step is legal in this room and moves the episode toward "
      "the goal, costing nothing important.";

  std::atomic<int> requests{0};
  testfx::TestServer server;
  server.handle().Post(
      "/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        const int n = requests.fetch_add(1);
        if (n % 10 == 3) {  // every 10th answer: server error
          res.status = 500;
          res.set_content("overloaded", "text/plain");
          return;
        }
        if (n % 20 == 7)  // every 20th answer: stall past the client timeout
          std::this_thread::sleep_for(std::chrono::milliseconds(600));
        const json body = json::parse(req.body);
        const std::string& prompt = body.at("messages").at(0).at("content").get_ref<const std::string&>();
        const bool wants_draft = prompt.find("Scratch-pad") != std::string::npos;
        const json reply = {
            {"choices",
             json::array({{{"message", {{"role", "assistant"},
                                        {"content", wants_draft ? draft : critique_reply}}}}})}};
        res.set_content(reply.dump(), "application/json");
      });
  server.start();

  std::vector<env::TaskSpec> specs;
  std::vector<core::Trajectory> experts;
  for (int i = 0; i < 10; ++i) {
    specs.push_back(tie_task("f_" + two_digits(i)));
    experts.push_back(testfx::expert_trajectory(specs.back()));
  }
  expect(experts.front().steps().front().action.canonical() == "go to kitchen",
         "the fixture plan no longer opens with 'go to kitchen'");

  testfx::TempDir dir;
  env::save_task_specs(specs, dir.file("tasks.jsonl"));
  dataset::write_trajectories(experts, dir.file("expert.jsonl"));
  testfx::write_table(detour_table(experts.front()), dir.file("table.json"));
  cli::RunConfig config;
  config.tasks = dir.file("tasks.jsonl");
  config.expert_data = dir.file("expert.jsonl");
  config.out_dir = dir.file("out");
  config.seed = 17;
  config.policy.backend = policy::Backend::tabular;
  config.policy.table_path = dir.file("table.json");
  config.base.backend = policy::Backend::remote_chat;
  config.base.remote.endpoint = server.endpoint();
  config.base.remote.model = "stub-critic";
  config.base.remote.retries = 4;
  config.base.remote.backoff_base_ms = 1;
  config.base.remote.timeout_ms = 300;

  expect(cli::cmd_synthesize(config) == cli::kExitOk, "synthesis did not ride out the faults");
  const json summary = json::parse(io::read_file(dir.file("out") + "/summary.json"));
  expect(summary.at("rejects") == 0, "trajectories were rejected despite retries");
  expect(summary.at("synthesized") == 10, "not every trajectory was synthesized");
  expect(requests.load() > 30, "the fault injection never forced a retry");

  // zero corrupt records: every line parses, flags coherent, drafts intact
  const dataset::AuditResult audit =
      dataset::audit_trajectories(dir.file("out") + "/delib.jsonl");
  expect(audit.issues.empty(), "the output contains corrupt records");
  expect(audit.ok.size() == 10, "the output lost records");
  const auto loaded = dataset::load_trajectories(dir.file("out") + "/delib.jsonl");
  expect(classifier_mismatches(loaded) == 0, "rendered thoughts disagree with their flags");
  for (const core::Trajectory& e : loaded) {
    expect(e.steps().front().thought.kind == core::ThoughtKind::deliberative,
           e.instruction().id + " lost its deliberative first step");
    expect(e.steps().front().thought.text.find("- go to kitchen: ") != std::string::npos,
           e.instruction().id + " lost its candidate bullets");
  }

  // a hard outage surfaces as exit code 2
  cli::RunConfig dead = config;
  dead.out_dir = dir.file("out_dead");
  dead.base.remote.endpoint = "http://127.0.0.1:9";
  dead.base.remote.retries = 1;
  dead.base.remote.timeout_ms = 200;
  expect(cli::cmd_synthesize(dead) == cli::kExitBackendUnavailable,
         "a hard outage did not exit with code 2");
}

}  // namespace

// ===================================================================
// driver
// ===================================================================

int main() {
  struct Check {
    const char* label;
    void (*body)();
  };
  const std::vector<Check> checks = {
      {"inconsistency indicator agrees with a set-union oracle on 1000 random candidate sets",
       check_indicator_oracle},
      {"an always-agreeing policy reproduces the expert corpus verbatim", check_degenerate_copy},
      {"tabular trajectory probabilities factor exactly and sum to one",
       check_probability_factorization},
      {"the expert switch fires only when enabled and strictly better, and its output replays",
       check_expert_switch},
      {"stored deliberation flags match the sampler and the text classifier",
       check_flag_placement},
      {"assembled prompts keep template text intact outside filled slots", check_prompt_fidelity},
      {"token multiplier and per-step metrics reproduce hand computations",
       check_metric_reproduction},
      {"difficulty bands match a positional tertile oracle and partition the tasks",
       check_difficulty_bands},
      {"the two-iteration refinement loop verifies checksums and reruns byte-identically",
       check_hermetic_loop},
      {"synthesis rides out a flaky completion backend and reports hard outages",
       check_remote_resilience}};

  int failures = 0;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    try {
      checks[i].body();
      std::printf("PASS %2zu: %s\n", i + 1, checks[i].label);
    } catch (const std::exception& ex) {
      ++failures;
      std::printf("FAIL %2zu: %s\n         %s\n", i + 1, checks[i].label, ex.what());
    }
    std::fflush(stdout);
  }
  if (failures == 0) {
    std::printf("all %zu checks passed\n", checks.size());
    return 0;
  }
  std::printf("%d of %zu checks failed\n", failures, checks.size());
  return 1;
}
