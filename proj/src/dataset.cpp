#include "sand/dataset.hpp"

#include <fstream>

#include "json.hpp"
#include "sand/errors.hpp"
#include "sand/io.hpp"
#include "sand/strings.hpp"

namespace sand::dataset {

using nlohmann::json;
using io::read_file;
using io::write_file;

namespace {

constexpr int kSchemaVersion = 1;

core::ThoughtKind parse_kind(const std::string& name) {
  if (name == "plain") return core::ThoughtKind::plain;
  if (name == "deliberative") return core::ThoughtKind::deliberative;
  raise(errc::validation, "unknown thought kind '" + name + "'");
}

const char* kind_name(core::ThoughtKind kind) {
  return kind == core::ThoughtKind::deliberative ? "deliberative" : "plain";
}

json step_record(const core::Thought& thought, const core::Action& action,
                 const std::optional<core::Observation>& observation, bool deliberated,
                 int candidate_count) {
  json rec;
  rec["thought"] = thought.text;
  rec["kind"] = kind_name(thought.kind);
  rec["action"] = action.raw();
  if (observation.has_value()) rec["observation"] = observation->text;
  rec["deliberated"] = deliberated;
  rec["candidate_count"] = candidate_count;
  return rec;
}

json trajectory_record(const core::Instruction& instruction, double reward, int iteration,
                       const json& steps) {
  json rec;
  rec["schema"] = kSchemaVersion;
  rec["id"] = instruction.id;
  rec["instruction"] = instruction.text;
  rec["split"] = core::split_name(instruction.split);
  rec["reward"] = reward;
  rec["iteration"] = iteration;
  rec["steps"] = steps;
  return rec;
}

core::Trajectory parse_record(const json& rec) {
  const int schema = rec.at("schema").get<int>();
  if (schema != kSchemaVersion)
    raise(errc::load, "unsupported schema version " + std::to_string(schema));

  core::Instruction instruction;
  instruction.id = rec.at("id").get<std::string>();
  instruction.text = rec.at("instruction").get<std::string>();
  instruction.split = core::parse_split(rec.at("split").get<std::string>());
  const double reward = rec.at("reward").get<double>();
  if (reward < 0.0 || reward > 1.0)
    raise(errc::validation, "reward " + strings::format_double(reward, 6) + " out of [0,1]");

  std::vector<core::Step> steps;
  for (const json& s : rec.at("steps")) {
    core::Thought thought{s.at("thought").get<std::string>(),
                          parse_kind(s.at("kind").get<std::string>())};
    core::Action action(s.at("action").get<std::string>());
    std::optional<core::Observation> observation;
    if (s.contains("observation"))
      observation = core::Observation{s.at("observation").get<std::string>()};

    // The persisted flags must agree with what the text says.
    core::DeliberationStep flags{thought, action, observation, s.at("deliberated").get<bool>(),
                                 s.at("candidate_count").get<int>()};
    core::check_deliberation_step(flags);
    steps.push_back(core::Step{std::move(thought), std::move(action), std::move(observation)});
  }
  return core::Trajectory(std::move(instruction), std::move(steps), reward);
}

// Flags for a step that carries none: derived from the thought itself, the
// same way synthesized steps are stamped.
json plain_step_record(const core::Step& s) {
  const bool deliberative = s.thought.kind == core::ThoughtKind::deliberative;
  return step_record(s.thought, s.action, s.observation, deliberative,
                     deliberative ? core::deliberative_bullet_lines(s.thought.text) : 1);
}

DatasetManifest manifest_for(const std::string& path, const std::string& content,
                             std::size_t count, int iteration, Source source) {
  DatasetManifest manifest;
  manifest.path = path;
  manifest.trajectory_count = count;
  manifest.iteration = iteration;
  manifest.source = source;
  manifest.checksum = strings::fnv1a64_hex(content);
  manifest.epochs_advice = epochs_advice_for(iteration);
  return manifest;
}

std::string chat_line(const std::string& system_text, const core::Instruction& instruction,
                      const std::vector<core::Step>& steps) {
  json messages = json::array();
  messages.push_back({{"role", "system"}, {"content", system_text}});
  messages.push_back({{"role", "user"}, {"content", instruction.text}});
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const core::Step& s = steps[i];
    messages.push_back(
        {{"role", "assistant"}, {"content", core::sft_response_text(s.thought, s.action)}});
    if (i + 1 < steps.size()) {
      if (!s.observation.has_value())
        raise(errc::validation, "trajectory '" + instruction.id + "' step " + std::to_string(i) +
                                    " has no observation before a following turn");
      messages.push_back({{"role", "user"}, {"content", s.observation->text}});
    }
  }
  json rec;
  rec["messages"] = std::move(messages);
  return rec.dump();
}

std::size_t export_chat_impl(const prompts::Registry& reg,
                             const std::vector<std::pair<core::Instruction, std::vector<core::Step>>>& ds,
                             const std::string& path, const std::string& asset) {
  const std::string tmpl = reg.get(asset);
  std::string content;
  for (const auto& [instruction, steps] : ds) {
    const std::string system_text = prompts::fill(tmpl, {{"task", instruction.text}});
    content += chat_line(system_text, instruction, steps);
    content += '\n';
  }
  write_file(path, content);
  return ds.size();
}

json manifest_record(const DatasetManifest& m) {
  json rec;
  rec["path"] = m.path;
  rec["trajectory_count"] = m.trajectory_count;
  rec["iteration"] = m.iteration;
  rec["source"] = source_name(m.source);
  rec["checksum"] = m.checksum;
  rec["epochs_advice"] = m.epochs_advice;
  return rec;
}

DatasetManifest parse_manifest(const json& rec) {
  DatasetManifest m;
  m.path = rec.at("path").get<std::string>();
  m.trajectory_count = rec.at("trajectory_count").get<std::size_t>();
  m.iteration = rec.at("iteration").get<int>();
  m.source = parse_source(rec.at("source").get<std::string>());
  m.checksum = rec.at("checksum").get<std::string>();
  m.epochs_advice = rec.at("epochs_advice").get<int>();
  if (m.iteration < 0) raise(errc::validation, "manifest iteration must be >= 0");
  return m;
}

}  // namespace

// ============================================================================
// Enum plumbing and checksums
// ============================================================================

const char* source_name(Source s) {
  return s == Source::expert ? "expert" : "deliberation";
}

Source parse_source(const std::string& name) {
  if (name == "expert") return Source::expert;
  if (name == "deliberation") return Source::deliberation;
  raise(errc::validation, "unknown dataset source '" + name + "'");
}

int epochs_advice_for(int iteration) { return iteration <= 1 ? 3 : 1; }

std::string file_checksum(const std::string& path) {
  return strings::fnv1a64_hex(read_file(path));
}

// ============================================================================
// Trajectory files
// ============================================================================

AuditResult audit_trajectories(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(errc::load, "cannot open '" + path + "'");

  AuditResult result;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    try {
      result.ok.push_back(AuditedTrajectory{line_number, parse_record(json::parse(line))});
    } catch (const Error& e) {
      const errc code = e.code() == errc::load ? errc::load : errc::validation;
      result.issues.push_back(LineIssue{line_number, code, e.what()});
    } catch (const json::exception& e) {
      result.issues.push_back(LineIssue{line_number, errc::load, e.what()});
    }
  }
  return result;
}

std::vector<core::Trajectory> load_trajectories(const std::string& path) {
  AuditResult audited = audit_trajectories(path);
  if (!audited.issues.empty()) {
    const LineIssue& first = audited.issues.front();
    raise(first.code, "line " + std::to_string(first.line) + ": " + first.message);
  }
  std::vector<core::Trajectory> out;
  out.reserve(audited.ok.size());
  for (AuditedTrajectory& row : audited.ok) out.push_back(std::move(row.trajectory));
  return out;
}

DatasetManifest write_trajectories(const std::vector<core::Trajectory>& ds,
                                   const std::string& path, int iteration) {
  if (ds.empty()) raise(errc::precondition, "refusing to write an empty dataset");
  std::string content;
  for (const core::Trajectory& e : ds) {
    json steps = json::array();
    for (const core::Step& s : e.steps()) steps.push_back(plain_step_record(s));
    content += trajectory_record(e.instruction(), e.reward(), iteration, steps).dump();
    content += '\n';
  }
  write_file(path, content);
  return manifest_for(path, content, ds.size(), iteration,
                      iteration == 0 ? Source::expert : Source::deliberation);
}

DatasetManifest write_deliberation(const std::vector<core::DeliberationTrajectory>& ds,
                                   const std::string& path) {
  if (ds.empty()) raise(errc::precondition, "refusing to write an empty dataset");
  std::string content;
  for (const core::DeliberationTrajectory& e : ds) {
    json steps = json::array();
    for (const core::DeliberationStep& s : e.steps)
      steps.push_back(step_record(s.thought, s.action, s.observation, s.deliberated,
                                  s.candidate_count));
    content += trajectory_record(e.instruction, e.reward, e.iteration, steps).dump();
    content += '\n';
  }
  write_file(path, content);
  return manifest_for(path, content, ds.size(), ds.front().iteration, Source::deliberation);
}

// ============================================================================
// Chat export
// ============================================================================

std::size_t export_sft_chat(const prompts::Registry& reg,
                            const std::vector<core::DeliberationTrajectory>& ds,
                            const std::string& path, const std::string& system_prompt_asset) {
  std::vector<std::pair<core::Instruction, std::vector<core::Step>>> rows;
  rows.reserve(ds.size());
  for (const core::DeliberationTrajectory& e : ds) {
    std::vector<core::Step> steps;
    steps.reserve(e.steps.size());
    for (const core::DeliberationStep& s : e.steps)
      steps.push_back(core::Step{s.thought, s.action, s.observation});
    rows.emplace_back(e.instruction, std::move(steps));
  }
  return export_chat_impl(reg, rows, path, system_prompt_asset);
}

std::size_t export_sft_chat(const prompts::Registry& reg, const std::vector<core::Trajectory>& ds,
                            const std::string& path, const std::string& system_prompt_asset) {
  std::vector<std::pair<core::Instruction, std::vector<core::Step>>> rows;
  rows.reserve(ds.size());
  for (const core::Trajectory& e : ds) rows.emplace_back(e.instruction(), e.steps());
  return export_chat_impl(reg, rows, path, system_prompt_asset);
}

// ============================================================================
// Iteration state
// ============================================================================

IterationState initial_state(int total_iterations, DatasetManifest expert_manifest) {
  if (total_iterations < 1)
    raise(errc::precondition, "iteration loop needs at least 1 iteration");
  IterationState state;
  state.k = 0;
  state.total_iterations = total_iterations;
  state.current = expert_manifest;
  state.history = {std::move(expert_manifest)};
  return state;
}

IterationState advance(const IterationState& state, DatasetManifest new_manifest) {
  if (state.k >= state.total_iterations)
    raise(errc::iteration_complete,
          "iteration loop already finished (k = I = " + std::to_string(state.k) + ")");
  IterationState next = state;
  next.k = state.k + 1;
  next.current = new_manifest;
  next.history.push_back(std::move(new_manifest));
  return next;
}

void save_state(const IterationState& state, const std::string& path) {
  json rec;
  rec["k"] = state.k;
  rec["total_iterations"] = state.total_iterations;
  rec["current"] = manifest_record(state.current);
  json history = json::array();
  for (const DatasetManifest& m : state.history) history.push_back(manifest_record(m));
  rec["history"] = std::move(history);
  write_file(path, rec.dump(2) + "\n");
}

IterationState load_state(const std::string& path) {
  IterationState state;
  try {
    const json rec = json::parse(read_file(path));
    state.k = rec.at("k").get<int>();
    state.total_iterations = rec.at("total_iterations").get<int>();
    state.current = parse_manifest(rec.at("current"));
    for (const json& m : rec.at("history")) state.history.push_back(parse_manifest(m));
  } catch (const json::exception& e) {
    raise(errc::load, "state file '" + path + "': " + e.what());
  }
  if (state.k > state.total_iterations)
    raise(errc::validation, "state file '" + path + "': k exceeds total iterations");
  if (state.history.size() != static_cast<std::size_t>(state.k) + 1)
    raise(errc::validation, "state file '" + path + "': history length must be k + 1");
  return state;
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
  write_file(path, manifest_record(manifest).dump(2) + "\n");
}

DatasetManifest load_manifest(const std::string& path) {
  try {
    return parse_manifest(json::parse(read_file(path)));
  } catch (const json::exception& e) {
    raise(errc::load, "manifest file '" + path + "': " + e.what());
  }
}

}  // namespace sand::dataset
