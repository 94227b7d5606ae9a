#include "sand/critique.hpp"

#include <vector>

#include "sand/parallel.hpp"
#include "sand/strings.hpp"

namespace sand::critique {

std::string format_reward(double reward, env::RewardMode) {
  return strings::format_double(reward, 1);
}

namespace {

void append_step_block(std::string& out, const core::Step& s, bool include_thought) {
  if (include_thought && !s.thought.text.empty()) {
    if (s.thought.kind == core::ThoughtKind::deliberative)
      out += s.thought.text + "\n";
    else
      out += "Thought: " + s.thought.text + "\n";
  }
  out += "Action: " + s.action.raw();
  if (s.observation) out += "\nObservation: " + s.observation->text;
}

}  // namespace

std::string render_history(const core::History& h) {
  std::string out = h.initial_observation();
  for (const core::Step& s : h.steps()) {
    if (!out.empty()) out += "\n\n";
    append_step_block(out, s, /*include_thought=*/true);
  }
  return out;
}

std::string render_rollout(const rollout::RolloutRecord& r, env::RewardMode mode,
                           bool include_thoughts) {
  std::string out;
  for (const core::Step& s : r.continuation) {
    if (!out.empty()) out += "\n\n";
    append_step_block(out, s, include_thoughts);
  }
  if (!out.empty()) out += "\n\n";
  out += "Final reward: " + format_reward(r.final_reward, mode);
  return out;
}

std::string build_critique_prompt(const prompts::Registry& reg, const core::Instruction& instruction,
                                  const core::History& h, const rollout::RolloutRecord& r,
                                  env::RewardMode mode, const CritiqueOptions& options) {
  const std::string& action_text = r.candidate.action.raw();
  return prompts::fill(reg.get("critique"),
                       {
                           {"task_instruction", instruction.text},
                           {"interaction_history", render_history(h)},
                           {"sample_action", action_text},
                           {"sampled_action", action_text},
                           {"executed_rollout",
                            render_rollout(r, mode, options.include_candidate_thoughts)},
                       });
}

int count_sentences(std::string_view text) {
  int count = 0;
  bool in_run = false;
  for (char c : text) {
    const bool terminal = (c == '.' || c == '!' || c == '?');
    if (terminal && !in_run) ++count;
    in_run = terminal;
  }
  return count;
}

namespace {

// Everything after the first marker, trimmed; empty if the marker is missing
// or nothing follows it.
std::string extract_evaluation(const std::string& completion) {
  static const std::string marker = "Action Evaluation:";
  const std::size_t pos = completion.find(marker);
  if (pos == std::string::npos) return "";
  return strings::trim(completion.substr(pos + marker.size()));
}

}  // namespace

Critique generate_critique(const policy::BaseModel& base, const std::string& prompt,
                           const core::Action& action, double reward_context) {
  std::string text = extract_evaluation(base.complete_text(prompt, 0.0));
  if (text.empty()) {
    const std::string reminder =
        prompt + "\n\nReminder: begin your reply with `Action Evaluation:`.";
    text = extract_evaluation(base.complete_text(reminder, 0.0));
  }
  if (text.empty())
    raise(errc::critique_parse,
          "no 'Action Evaluation:' paragraph for action '" + action.canonical() + "'");

  Critique c;
  c.action = action;
  c.text = std::move(text);
  c.reward_context = reward_context;
  c.sentences = count_sentences(c.text);
  return c;
}

std::map<std::string, Critique> critique_all(const policy::BaseModel& base,
                                             const prompts::Registry& reg,
                                             const core::Instruction& instruction,
                                             const core::History& h,
                                             const std::map<std::string, rollout::RolloutRecord>& records,
                                             env::RewardMode mode,
                                             const CritiqueOptions& options) {
  if (records.empty()) raise(errc::precondition, "no rollout records to critique");

  std::vector<const std::pair<const std::string, rollout::RolloutRecord>*> items;
  items.reserve(records.size());
  for (const auto& kv : records) items.push_back(&kv);

  std::vector<Critique> results(items.size());
  parallel::run_indexed(items.size(), options.jobs, [&](std::size_t i) {
    const auto& [key, record] = *items[i];
    try {
      const std::string prompt =
          build_critique_prompt(reg, instruction, h, record, mode, options);
      results[i] =
          generate_critique(base, prompt, record.candidate.action, record.final_reward);
    } catch (const Error& e) {
      if (e.code() == errc::critique_parse) throw;
      throw Error(e.code(), "critique of '" + key + "': " + e.what());
    }
  });

  std::map<std::string, Critique> out;
  for (std::size_t i = 0; i < items.size(); ++i) out[items[i]->first] = std::move(results[i]);
  return out;
}

}  // namespace sand::critique
