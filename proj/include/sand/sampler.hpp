#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "sand/core.hpp"
#include "sand/env.hpp"
#include "sand/policy.hpp"

namespace sand::sampler {

/**
 * The branch point at one expert step: the expert's own (thought, action)
 * plus N policy samples drawn from the expert history. unique_actions holds
 * (action, count) over all N+1 actions keyed by canonical form, in first-
 * occurrence order with the expert always first.
 */
struct CandidateSet {
  std::size_t step_index = 0;
  policy::StepSample expert;
  std::vector<policy::StepSample> sampled;
  std::vector<std::pair<core::Action, int>> unique_actions;
};

/**
 * Draws N candidates at the given temperature. Draw i uses a seed derived
 * from (seed, step_index, i), so the first N draws coincide for any larger N
 * and never depend on worker scheduling.
 */
CandidateSet sample_candidates(const policy::Policy& p, const core::History& h,
                               const core::Step& expert_step, int n, std::uint64_t seed,
                               double temperature = 1.0);

// The inconsistency indicator: deliberation is needed exactly when the
// candidate set contains more than one distinct action.
bool needs_deliberation(const CandidateSet& c);

/**
 * Replays the expert trajectory through a fresh environment session and
 * builds one CandidateSet per step, each conditioned on the true expert
 * history before that step. Recorded observations must match the world's
 * (replay_divergence with the step index otherwise).
 */
std::vector<CandidateSet> scan_trajectory(const policy::Policy& p, const env::TaskSpec& spec,
                                          const core::Trajectory& e, int n, std::uint64_t seed,
                                          double temperature = 1.0,
                                          const env::SessionFactory& factory = env::textgrid_factory());

}  // namespace sand::sampler
