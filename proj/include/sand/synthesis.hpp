#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sand/core.hpp"
#include "sand/critique.hpp"
#include "sand/policy.hpp"
#include "sand/prompts.hpp"
#include "sand/rollout.hpp"

namespace sand::synthesis {

using CritiquePairs = std::vector<std::pair<core::Action, critique::Critique>>;

/**
 * Parsed deliberation completion: the one-sentence reflection, one bullet per
 * candidate action, and the trailing comparison prose.
 */
struct DeliberationDraft {
  std::string reflection;
  std::vector<std::pair<core::Action, std::string>> bullets;
  std::string rationale;
};

struct SwitchDecision {
  core::Action original;
  core::Action chosen;
  bool switched = false;
  double original_reward = 0.0;
  double best_reward = 0.0;
};

/**
 * Fills the deliberation template: one scratch-pad line per (action, critique)
 * pair and the target as the required final action. synthesis_contract if the
 * target is not among the pairs.
 */
std::string build_deliberation_prompt(const prompts::Registry& reg,
                                      const core::Instruction& instruction, const core::History& h,
                                      const CritiquePairs& pairs, const core::Action& target);

// Structural parse of a deliberation completion; bullet actions are matched
// against `known` so canonical forms line up. synthesis_parse on failure.
DeliberationDraft parse_draft(std::string_view completion, const std::vector<core::Action>& known);

// Coverage check: >= 2 bullets and every pair action in exactly one bullet.
void validate_draft(const DeliberationDraft& draft, const CritiquePairs& pairs);

// True when the completion leaks its hidden inputs (substring screens,
// case-insensitive: "scratch-pad", "simulation").
bool leaks_private_context(std::string_view completion);

// Back to the prompt's output format: "Thought: <reflection>", blank line,
// bullets, blank line, rationale. render_draft(parse_draft(x)) round-trips.
std::string render_draft(const DeliberationDraft& draft);

/**
 * One completion, parsed and validated; a failed parse, coverage gap or leak
 * screen gets one retry with an appended reminder, then synthesis_parse.
 */
DeliberationDraft synthesize(const policy::BaseModel& base, const std::string& prompt,
                             const CritiquePairs& pairs, const core::Action& target);

/**
 * The optional expert switch: when enabled and the best alternative's recorded
 * reward strictly exceeds the expert's, the best alternative becomes the
 * committed action (ties between alternatives break toward the smaller
 * canonical action). Otherwise the expert stays.
 */
SwitchDecision decide_switch(bool enabled, const rollout::RolloutRecord& expert_record,
                             const std::map<std::string, rollout::RolloutRecord>& others);

/**
 * Everything assemble() needs about one flagged step. When the decision
 * switched, continuation holds the winning rollout's steps (from the branch
 * step onward) and continuation_reward its recorded reward.
 */
struct StepBranch {
  int unique_count = 0;
  DeliberationDraft draft;
  SwitchDecision decision;
  std::vector<core::Step> continuation;
  double continuation_reward = 0.0;
};

/**
 * Builds the deliberation trajectory: per_step must cover every source step
 * (assembly error otherwise); unflagged entries copy the expert step
 * verbatim, flagged entries get the rendered deliberative thought plus the
 * committed action. A switch at step t replaces everything from t on with the
 * winning rollout's continuation and stops branching.
 */
core::DeliberationTrajectory assemble(const core::Trajectory& e,
                                      const std::vector<std::optional<StepBranch>>& per_step,
                                      int iteration);

}  // namespace sand::synthesis
