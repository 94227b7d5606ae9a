#pragma once

#include <map>
#include <string>
#include <string_view>

#include "sand/core.hpp"
#include "sand/env.hpp"
#include "sand/policy.hpp"
#include "sand/prompts.hpp"
#include "sand/rollout.hpp"

namespace sand::critique {

// A verbal judgement of one candidate action, grounded in its executed
// rollout. text is the paragraph after "Action Evaluation:".
struct Critique {
  core::Action action;
  std::string text;
  double reward_context = 0.0;
  int sentences = 0;
};

struct CritiqueOptions {
  bool include_candidate_thoughts = false;  // show sampled thoughts inside rollout transcripts
  int jobs = 1;
};

// "0.6" in granular mode, "1.0"/"0.0" in binary mode (one decimal either way,
// pinned so stub models and golden files stay stable).
std::string format_reward(double reward, env::RewardMode mode);

// The interaction history as a prompt transcript: initial observation first,
// then Thought/Action/Observation blocks per step, blank lines between.
std::string render_history(const core::History& h);

// A rollout as a transcript ending with "Final reward: <formatted>". Thought
// lines appear only when include_thoughts is set; the default mirrors the
// critique prompt, which presents candidates by action alone.
std::string render_rollout(const rollout::RolloutRecord& r, env::RewardMode mode,
                           bool include_thoughts = false);

std::string build_critique_prompt(const prompts::Registry& reg, const core::Instruction& instruction,
                                  const core::History& h, const rollout::RolloutRecord& r,
                                  env::RewardMode mode, const CritiqueOptions& options = {});

// Maximal runs of terminal punctuation ('.', '!', '?') in the text.
int count_sentences(std::string_view text);

/**
 * Completion at temperature 0, parsed by taking everything after the first
 * "Action Evaluation:" marker. A completion without the marker gets one retry
 * with an appended format reminder, then critique_parse.
 */
Critique generate_critique(const policy::BaseModel& base, const std::string& prompt,
                           const core::Action& action, double reward_context);

// One critique per unique action record; failures carry the offending action.
std::map<std::string, Critique> critique_all(const policy::BaseModel& base,
                                             const prompts::Registry& reg,
                                             const core::Instruction& instruction,
                                             const core::History& h,
                                             const std::map<std::string, rollout::RolloutRecord>& records,
                                             env::RewardMode mode,
                                             const CritiqueOptions& options = {});

}  // namespace sand::critique
