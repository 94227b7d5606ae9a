#include <fstream>

#include "json.hpp"
#include "sand/env.hpp"
#include "sand/errors.hpp"
#include "sand/io.hpp"

namespace sand::env {

using nlohmann::json;

namespace {

json spec_record(const TaskSpec& spec) {
  json goal;
  goal["target_object"] = spec.goal.target_object;
  goal["target_receptacle"] = spec.goal.target_receptacle;
  json subgoals = json::array();
  for (const Subgoal& s : spec.goal.subgoals)
    subgoals.push_back({{"kind", subgoal_kind_name(s.kind)}, {"weight", s.weight}});
  goal["subgoals"] = std::move(subgoals);

  json rec;
  rec["id"] = spec.instruction.id;
  rec["text"] = spec.instruction.text;
  rec["split"] = core::split_name(spec.instruction.split);
  rec["world_seed"] = spec.world_seed;
  rec["goal"] = std::move(goal);
  rec["reward_mode"] = reward_mode_name(spec.reward_mode);
  rec["max_steps"] = spec.max_steps;
  return rec;
}

TaskSpec parse_spec(const json& rec) {
  TaskSpec spec;
  spec.instruction.id = rec.at("id").get<std::string>();
  spec.instruction.text = rec.at("text").get<std::string>();
  spec.instruction.split = core::parse_split(rec.at("split").get<std::string>());
  spec.world_seed = rec.at("world_seed").get<std::uint64_t>();
  const json& goal = rec.at("goal");
  spec.goal.target_object = goal.at("target_object").get<std::string>();
  spec.goal.target_receptacle = goal.at("target_receptacle").get<std::string>();
  for (const json& s : goal.at("subgoals")) {
    Subgoal subgoal;
    subgoal.kind = parse_subgoal_kind(s.at("kind").get<std::string>());
    subgoal.weight = s.at("weight").get<double>();
    spec.goal.subgoals.push_back(subgoal);
  }
  spec.reward_mode = parse_reward_mode(rec.at("reward_mode").get<std::string>());
  spec.max_steps = rec.at("max_steps").get<int>();
  return spec;
}

}  // namespace

std::vector<TaskSpec> load_task_specs(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(errc::load, "cannot open '" + path + "'");

  std::vector<TaskSpec> out;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    try {
      out.push_back(parse_spec(json::parse(line)));
    } catch (const Error& e) {
      raise(errc::validation, "line " + std::to_string(line_number) + ": " + e.what());
    } catch (const json::exception& e) {
      raise(errc::load, "line " + std::to_string(line_number) + ": " + e.what());
    }
  }
  return out;
}

void save_task_specs(const std::vector<TaskSpec>& specs, const std::string& path) {
  std::string content;
  for (const TaskSpec& spec : specs) {
    content += spec_record(spec).dump();
    content += '\n';
  }
  io::write_file(path, content);
}

}  // namespace sand::env
