#include "sand/synthesis.hpp"

#include <limits>

#include "sand/errors.hpp"
#include "sand/strings.hpp"

namespace sand::synthesis {

namespace {

// The template enumerates exactly three scratch-pad lines; real candidate
// sets have two or more, so the literal block is swapped for a single slot
// that expands to one line per candidate.
constexpr const char* kBulletBlock =
    "- {candidate_action_1}: {critique_for_candidate_action_1}\n"
    "- {candidate_action_2}: {critique_for_candidate_action_2}\n"
    "- {candidate_action_3}: {critique_for_candidate_action_3}";

std::string one_line(std::string text) {
  for (char& c : text)
    if (c == '\n' || c == '\r') c = ' ';
  return strings::collapse_ws(strings::trim(text));
}

bool target_among(const CritiquePairs& pairs, const core::Action& target) {
  for (const auto& [action, critique] : pairs)
    if (action == target) return true;
  return false;
}

}  // namespace

// ============================================================================
// Prompt construction
// ============================================================================

std::string build_deliberation_prompt(const prompts::Registry& reg,
                                      const core::Instruction& instruction, const core::History& h,
                                      const CritiquePairs& pairs, const core::Action& target) {
  if (pairs.empty())
    raise(errc::precondition, "deliberation prompt needs at least one critiqued candidate");
  if (!target_among(pairs, target))
    raise(errc::synthesis_contract,
          "required action '" + target.canonical() + "' is not among the critiqued candidates");

  std::vector<std::string> lines;
  lines.reserve(pairs.size());
  for (const auto& [action, critique] : pairs)
    lines.push_back("- " + action.raw() + ": " + one_line(critique.text));

  std::string tmpl = reg.get("deliberation");
  tmpl = strings::replace_all(tmpl, kBulletBlock, "{scratch_pad_lines}");
  return prompts::fill(tmpl, {{"task_instrution", instruction.text},
                              {"interaction_history", critique::render_history(h)},
                              {"scratch_pad_lines", strings::join(lines, "\n")},
                              {"expert_action", target.raw()}});
}

// ============================================================================
// Completion parsing
// ============================================================================

DeliberationDraft parse_draft(std::string_view completion,
                              const std::vector<core::Action>& known) {
  DeliberationDraft draft;
  const auto lines = strings::split_lines(std::string(completion));

  std::size_t i = 0;
  bool found_thought = false;
  for (; i < lines.size(); ++i) {
    const std::string line = strings::trim(lines[i]);
    if (strings::starts_with(line, "Thought:")) {
      draft.reflection = strings::trim(line.substr(8));
      found_thought = true;
      ++i;
      break;
    }
  }
  if (!found_thought)
    raise(errc::synthesis_parse, "deliberation completion has no `Thought:` line");

  std::vector<std::string> rationale_lines;
  for (; i < lines.size(); ++i) {
    const std::string line = strings::trim(lines[i]);
    if (line.empty()) continue;

    bool is_bullet = false;
    if (strings::starts_with(line, "- ")) {
      const std::string rest = line.substr(2);
      const auto colon = rest.find(':');
      if (colon != std::string::npos && colon > 0) {
        const std::string action_text = strings::trim(rest.substr(0, colon));
        const std::string judgement = strings::trim(rest.substr(colon + 1));
        try {
          core::Action parsed(action_text);
          for (const auto& candidate : known) {
            if (parsed == candidate) {
              draft.bullets.emplace_back(std::move(parsed), judgement);
              is_bullet = true;
              break;
            }
          }
        } catch (const Error&) {
          // Empty action text: the line is prose that happens to look bullety.
        }
      }
    }
    if (is_bullet) continue;

    if (draft.bullets.empty()) {
      // Prose before the first bullet extends the reflection.
      if (!draft.reflection.empty()) draft.reflection += ' ';
      draft.reflection += line;
    } else {
      rationale_lines.push_back(line);
    }
  }
  draft.rationale = strings::join(rationale_lines, "\n");

  if (draft.reflection.empty())
    raise(errc::synthesis_parse, "deliberation completion has an empty reflection");
  if (draft.bullets.empty())
    raise(errc::synthesis_parse, "deliberation completion lists no candidate bullets");
  if (draft.rationale.empty())
    raise(errc::synthesis_parse, "deliberation completion has no comparison after the bullets");
  return draft;
}

void validate_draft(const DeliberationDraft& draft, const CritiquePairs& pairs) {
  if (draft.bullets.size() < 2)
    raise(errc::synthesis_parse, "deliberation draft has " +
                                     std::to_string(draft.bullets.size()) +
                                     " bullet(s); a branch point needs at least 2");
  for (const auto& [action, critique] : pairs) {
    std::size_t hits = 0;
    for (const auto& [bullet_action, judgement] : draft.bullets)
      if (bullet_action == action) ++hits;
    if (hits != 1)
      raise(errc::synthesis_parse, "candidate '" + action.canonical() + "' appears " +
                                       std::to_string(hits) + " times in the bullet list");
  }
}

bool leaks_private_context(std::string_view completion) {
  const std::string text(completion);
  return strings::contains_ci(text, "scratch-pad") || strings::contains_ci(text, "simulation");
}

std::string render_draft(const DeliberationDraft& draft) {
  std::string out = "Thought: " + draft.reflection + "\n\n";
  for (const auto& [action, judgement] : draft.bullets)
    out += "- " + action.raw() + ": " + judgement + "\n";
  out += "\n" + draft.rationale;
  return out;
}

// ============================================================================
// Synthesis and the expert switch
// ============================================================================

DeliberationDraft synthesize(const policy::BaseModel& base, const std::string& prompt,
                             const CritiquePairs& pairs, const core::Action& target) {
  if (!target_among(pairs, target))
    raise(errc::synthesis_contract,
          "required action '" + target.canonical() + "' is not among the critiqued candidates");

  std::vector<core::Action> known;
  known.reserve(pairs.size());
  for (const auto& [action, critique] : pairs) known.push_back(action);

  auto attempt = [&](const std::string& p) {
    const std::string completion = base.complete_text(p, 0.0);
    DeliberationDraft draft = parse_draft(completion, known);
    validate_draft(draft, pairs);
    if (leaks_private_context(completion))
      raise(errc::synthesis_parse, "deliberation completion leaks its private context");
    return draft;
  };

  try {
    return attempt(prompt);
  } catch (const Error& first) {
    if (first.code() != errc::synthesis_parse) throw;
    const std::string reminder =
        prompt +
        "\n\nReminder: follow the Output Format exactly: one `Thought:` line, one "
        "`- <candidate action>: <your judgement>` bullet per candidate, then your comparison "
        "prose. Never mention your private notes.";
    try {
      return attempt(reminder);
    } catch (const Error& second) {
      if (second.code() != errc::synthesis_parse) throw;
      raise(errc::synthesis_parse,
            std::string("deliberation synthesis failed after a retry: ") + second.what());
    }
  }
}

SwitchDecision decide_switch(bool enabled, const rollout::RolloutRecord& expert_record,
                             const std::map<std::string, rollout::RolloutRecord>& others) {
  if (others.empty())
    raise(errc::precondition, "switch decision needs at least one alternative rollout");

  SwitchDecision decision;
  decision.original = expert_record.candidate.action;
  decision.original_reward = expert_record.final_reward;

  double best = -std::numeric_limits<double>::infinity();
  const rollout::RolloutRecord* best_record = nullptr;
  for (const auto& [canonical, record] : others) {
    if (record.final_reward > best) {  // ties keep the earlier, smaller canonical
      best = record.final_reward;
      best_record = &record;
    }
  }
  decision.best_reward = best;
  decision.switched = enabled && best > decision.original_reward;
  decision.chosen = decision.switched ? best_record->candidate.action : decision.original;
  return decision;
}

// ============================================================================
// Assembly
// ============================================================================

core::DeliberationTrajectory assemble(const core::Trajectory& e,
                                      const std::vector<std::optional<StepBranch>>& per_step,
                                      int iteration) {
  if (iteration < 1)
    raise(errc::precondition, "iteration numbering starts at 1; got " + std::to_string(iteration));
  const auto& source = e.steps();
  if (per_step.size() != source.size())
    raise(errc::assembly, "per-step coverage has " + std::to_string(per_step.size()) +
                              " entries for a " + std::to_string(source.size()) +
                              "-step trajectory");

  core::DeliberationTrajectory out;
  out.instruction = e.instruction();
  out.source_trajectory_id = e.instruction().id;
  out.iteration = iteration;
  out.reward = e.reward();

  for (std::size_t t = 0; t < source.size(); ++t) {
    if (!per_step[t].has_value()) {
      const core::Step& s = source[t];
      const bool deliberative = s.thought.kind == core::ThoughtKind::deliberative;
      core::DeliberationStep step{s.thought, s.action, s.observation, deliberative,
                                  deliberative ? core::deliberative_bullet_lines(s.thought.text)
                                               : 1};
      core::check_deliberation_step(step);
      out.steps.push_back(std::move(step));
      continue;
    }

    const StepBranch& branch = *per_step[t];
    core::Thought thought{render_draft(branch.draft), core::ThoughtKind::deliberative};

    if (!branch.decision.switched) {
      core::DeliberationStep step{std::move(thought), source[t].action, source[t].observation,
                                  true, branch.unique_count};
      core::check_deliberation_step(step);
      out.steps.push_back(std::move(step));
      continue;
    }

    if (branch.continuation.empty())
      raise(errc::assembly,
            "switched branch at step " + std::to_string(t) + " has an empty continuation");
    if (t + branch.continuation.size() > source.size())
      raise(errc::assembly, "switch continuation grows the trajectory beyond its source (" +
                                std::to_string(t + branch.continuation.size()) + " > " +
                                std::to_string(source.size()) + " steps)");

    const core::Step& first = branch.continuation.front();
    core::DeliberationStep head{std::move(thought), first.action, first.observation, true,
                                branch.unique_count};
    core::check_deliberation_step(head);
    out.steps.push_back(std::move(head));

    for (std::size_t j = 1; j < branch.continuation.size(); ++j) {
      const core::Step& s = branch.continuation[j];
      core::DeliberationStep step{s.thought, s.action, s.observation, false, 1};
      core::check_deliberation_step(step);
      out.steps.push_back(std::move(step));
    }
    out.reward = branch.continuation_reward;
    break;  // a switch replaces the remainder; later entries are never re-branched
  }

  if (out.steps.empty()) raise(errc::assembly, "assembled trajectory has no steps");
  return out;
}

}  // namespace sand::synthesis
