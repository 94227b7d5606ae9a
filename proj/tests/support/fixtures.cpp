#include "support/fixtures.hpp"

#include <algorithm>
#include <filesystem>
#include <random>

#include "json.hpp"
#include "sand/errors.hpp"
#include "sand/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace sand::testfx {

// ===================================================================
// scratch directories
// ===================================================================

TempDir::TempDir() {
  static std::mt19937_64 gen{std::random_device{}()};
  const fs::path base = fs::temp_directory_path();
  for (int attempt = 0; attempt < 64; ++attempt) {
    fs::path candidate = base / ("sand_test_" + std::to_string(gen()));
    std::error_code ec;
    if (fs::create_directory(candidate, ec) && !ec) {
      path_ = candidate.string();
      return;
    }
  }
  raise(errc::io, "could not create a scratch directory under " + base.string());
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);  // best effort; never throws from a destructor
}

// ===================================================================
// task builders
// ===================================================================

namespace {

env::TaskSpec task_base(const std::string& id, const std::string& object,
                        const std::string& receptacle, std::uint64_t world_seed, int max_steps) {
  env::TaskSpec spec;
  spec.instruction.id = id;
  spec.instruction.text = "Put the " + object + " " +
                          (env::TextGridEnv::receptacle_is_container(receptacle) ? "in" : "on") +
                          " the " + receptacle + ".";
  spec.instruction.split = core::Split::train;
  spec.world_seed = world_seed;
  spec.goal.target_object = object;
  spec.goal.target_receptacle = receptacle;
  spec.max_steps = max_steps;
  return spec;
}

}  // namespace

env::TaskSpec binary_task(const std::string& id, const std::string& object,
                          const std::string& receptacle, std::uint64_t world_seed,
                          int max_steps) {
  env::TaskSpec spec = task_base(id, object, receptacle, world_seed, max_steps);
  spec.reward_mode = env::RewardMode::binary;
  spec.goal.subgoals = {{env::SubgoalKind::place, 1.0}};
  return spec;
}

env::TaskSpec granular_task(const std::string& id, const std::string& object,
                            const std::string& receptacle, std::uint64_t world_seed,
                            int max_steps) {
  env::TaskSpec spec = task_base(id, object, receptacle, world_seed, max_steps);
  spec.reward_mode = env::RewardMode::granular;
  spec.goal.subgoals = {{env::SubgoalKind::locate, 0.25},
                        {env::SubgoalKind::hold, 0.25},
                        {env::SubgoalKind::place, 0.5}};
  return spec;
}

std::uint64_t find_seed(const env::TaskSpec& proto,
                        const std::function<bool(const env::TextGridEnv&)>& pred,
                        std::uint64_t start) {
  for (std::uint64_t seed = start; seed < start + 100000; ++seed) {
    env::TaskSpec spec = proto;
    spec.world_seed = seed;
    env::TextGridEnv world(spec);
    if (pred(world)) return seed;
  }
  raise(errc::precondition, "no world seed in [" + std::to_string(start) + ", " +
                                std::to_string(start + 100000) + ") satisfies the predicate");
}

std::uint64_t seed_with_object_away(const std::string& object, const std::string& receptacle,
                                    std::uint64_t start) {
  const env::TaskSpec proto = binary_task("probe", object, receptacle, 0);
  return find_seed(
      proto,
      [&](const env::TextGridEnv& world) { return world.location_of_object(object) != receptacle; },
      start);
}

// ===================================================================
// expert planning
// ===================================================================

std::vector<policy::StepSample> plan_expert_steps(const env::TaskSpec& spec) {
  env::TextGridEnv world(spec);
  const std::string& object = spec.goal.target_object;
  const std::string& target = spec.goal.target_receptacle;
  const std::string source = world.location_of_object(object);
  if (source == "inventory" || source == target)
    raise(errc::precondition, "seed leaves nothing to plan for object '" + object + "'");

  const bool wants_focus =
      std::any_of(spec.goal.subgoals.begin(), spec.goal.subgoals.end(),
                  [](const env::Subgoal& sg) { return sg.kind == env::SubgoalKind::focus; });
  const std::string source_room = env::TextGridEnv::room_of_receptacle(source);
  const std::string target_room = env::TextGridEnv::room_of_receptacle(target);

  std::vector<policy::StepSample> steps;
  auto add = [&](const std::string& thought, const std::string& action) {
    steps.push_back({core::Thought{thought, core::ThoughtKind::plain}, core::Action(action)});
  };

  add("I should find the " + object + " first.", "go to " + source_room);
  if (env::TextGridEnv::receptacle_is_container(source)) add("", "open " + source);
  add("The " + object + " is here. I will pick it up.", "take " + object + " from " + source);
  if (wants_focus) add("I need to focus on the " + object + ".", "focus on " + object);
  if (target_room != source_room)
    add("The " + target + " is in the " + target_room + ".", "go to " + target_room);
  if (env::TextGridEnv::receptacle_is_container(target)) add("", "open " + target);
  const bool container = env::TextGridEnv::receptacle_is_container(target);
  add("Putting the " + object + (container ? " in the " : " on the ") + target +
          " finishes the task.",
      "put " + object + (container ? " in " : " on ") + target);
  return steps;
}

core::Trajectory run_steps(const env::TaskSpec& spec,
                           const std::vector<policy::StepSample>& steps) {
  auto session = env::reset(spec);
  std::vector<core::Step> recorded;
  for (const policy::StepSample& s : steps) {
    if (session->terminated())
      raise(errc::precondition, "episode ended before consuming all planned steps");
    env::EnvOutcome out = session->step(s.action);
    recorded.push_back({s.thought, s.action, core::Observation{out.observation.text}});
  }
  if (!session->terminated())
    raise(errc::precondition, "planned steps did not terminate the episode");
  return core::Trajectory(spec.instruction, std::move(recorded), session->score());
}

core::Trajectory expert_trajectory(const env::TaskSpec& spec) {
  return run_steps(spec, plan_expert_steps(spec));
}

// ===================================================================
// tabular policy builders
// ===================================================================

std::map<std::string, std::vector<policy::TabularEntry>> point_mass_table(
    const core::Trajectory& e) {
  std::map<std::string, std::vector<policy::TabularEntry>> states;
  for (std::size_t t = 0; t < e.steps().size(); ++t) {
    const core::Step& s = e.steps()[t];
    states[e.prefix(t).state_key()] = {{s.thought.text, s.action.raw(), 1.0}};
  }
  return states;
}

std::map<std::string, std::vector<policy::TabularEntry>> merge_tables(
    const std::vector<std::map<std::string, std::vector<policy::TabularEntry>>>& tables) {
  std::map<std::string, std::vector<policy::TabularEntry>> merged;
  for (const auto& table : tables)
    for (const auto& [key, entries] : table) merged.emplace(key, entries);
  return merged;
}

void write_table(const std::map<std::string, std::vector<policy::TabularEntry>>& states,
                 const std::string& path) {
  json body;
  body["states"] = json::object();
  for (const auto& [key, entries] : states) {
    json rows = json::array();
    for (const policy::TabularEntry& e : entries)
      rows.push_back({{"thought", e.thought}, {"action", e.action}, {"prob", e.prob}});
    body["states"][key] = std::move(rows);
  }
  io::write_file(path, body.dump(2) + "\n");
}

}  // namespace sand::testfx
