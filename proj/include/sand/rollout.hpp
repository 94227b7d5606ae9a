#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sand/core.hpp"
#include "sand/env.hpp"
#include "sand/policy.hpp"
#include "sand/sampler.hpp"

namespace sand::rollout {

/**
 * One candidate's executed continuation from the branch step to termination.
 * continuation[0] is the candidate's own step; final_reward is the env score
 * at termination. Expert tails reuse the demonstrated remainder instead of
 * re-executing (is_expert_tail = true).
 */
struct RolloutRecord {
  policy::StepSample candidate;
  std::vector<core::Step> continuation;
  double final_reward = 0.0;
  bool truncated = false;
  bool is_expert_tail = false;
};

struct Options {
  double temperature = 1.0;   // continuation sampling temperature
  bool reroll_expert = false; // execute the expert action fresh instead of its tail
};

/**
 * Replays the expert prefix before step t (0-based), steps the candidate
 * action, then lets the policy continue at the sampling temperature until the
 * episode ends. Step budget is bounded by the task's max_steps.
 */
RolloutRecord execute(const policy::Policy& p, const env::TaskSpec& spec,
                      const core::Trajectory& e, std::size_t t,
                      const policy::StepSample& candidate, std::uint64_t seed,
                      double temperature = 1.0,
                      const env::SessionFactory& factory = env::textgrid_factory());

// The expert action's grounding: its own demonstrated remainder (steps t..L-1)
// with the stored trajectory reward. No environment interaction.
RolloutRecord expert_tail(const env::TaskSpec& spec, const core::Trajectory& e, std::size_t t);

/**
 * One rollout per unique action of a deliberation-worthy candidate set,
 * keyed by canonical action. The expert action is grounded by its tail
 * (or a fresh rollout under Options.reroll_expert); duplicated samples
 * share their action's record.
 */
std::map<std::string, RolloutRecord> rollout_unique(
    const policy::Policy& p, const env::TaskSpec& spec, const core::Trajectory& e, std::size_t t,
    const sampler::CandidateSet& c, std::uint64_t seed, const Options& options = {},
    const env::SessionFactory& factory = env::textgrid_factory());

}  // namespace sand::rollout
