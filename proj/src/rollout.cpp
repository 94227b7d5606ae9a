#include "sand/rollout.hpp"

#include "sand/rng.hpp"

namespace sand::rollout {

RolloutRecord execute(const policy::Policy& p, const env::TaskSpec& spec,
                      const core::Trajectory& e, std::size_t t,
                      const policy::StepSample& candidate, std::uint64_t seed,
                      double temperature, const env::SessionFactory& factory) {
  if (t >= e.steps().size())
    raise(errc::precondition, "branch step " + std::to_string(t) + " outside the trajectory");

  auto session = env::replay_prefix(factory, spec, e, t);
  core::History h = e.prefix(t, session->initial_observation());

  RolloutRecord record;
  record.candidate = candidate;

  env::EnvOutcome out = session->step(candidate.action);
  record.continuation.push_back(core::Step{candidate.thought, candidate.action, out.observation});
  h.append(record.continuation.back());

  std::uint64_t draw = 0;
  while (!out.done) {
    const policy::StepSample s =
        p.sample_step(h, temperature, rng::derive(seed, 0xc011ull, draw++));
    out = session->step(s.action);
    record.continuation.push_back(core::Step{s.thought, s.action, out.observation});
    h.append(record.continuation.back());
  }

  record.final_reward = out.reward_if_done.value_or(0.0);
  record.truncated = session->truncated();
  record.is_expert_tail = false;
  return record;
}

RolloutRecord expert_tail(const env::TaskSpec&, const core::Trajectory& e, std::size_t t) {
  if (t >= e.steps().size())
    raise(errc::precondition, "tail step " + std::to_string(t) + " outside the trajectory");

  RolloutRecord record;
  const core::Step& branch = e.steps()[t];
  record.candidate = policy::StepSample{branch.thought, branch.action};
  record.continuation.assign(e.steps().begin() + static_cast<std::ptrdiff_t>(t), e.steps().end());
  record.final_reward = e.reward();
  record.truncated = false;
  record.is_expert_tail = true;
  return record;
}

std::map<std::string, RolloutRecord> rollout_unique(
    const policy::Policy& p, const env::TaskSpec& spec, const core::Trajectory& e, std::size_t t,
    const sampler::CandidateSet& c, std::uint64_t seed, const Options& options,
    const env::SessionFactory& factory) {
  if (!sampler::needs_deliberation(c))
    raise(errc::precondition, "rollout_unique on a consistent candidate set");

  std::map<std::string, RolloutRecord> records;

  const core::Action& expert_action = c.expert.action;
  if (options.reroll_expert) {
    records[expert_action.canonical()] =
        execute(p, spec, e, t, c.expert, rng::derive(seed, 0xe0ull), options.temperature, factory);
  } else {
    records[expert_action.canonical()] = expert_tail(spec, e, t);
  }

  // First-occurrence sample for each unique non-expert action carries the
  // candidate thought into the rollout.
  std::uint64_t index = 0;
  for (const auto& [action, count] : c.unique_actions) {
    ++index;
    if (action == expert_action) continue;
    const policy::StepSample* first = nullptr;
    for (const policy::StepSample& s : c.sampled) {
      if (s.action == action) {
        first = &s;
        break;
      }
    }
    if (first == nullptr)
      raise(errc::precondition, "unique action '" + action.canonical() + "' has no sample");
    records[action.canonical()] =
        execute(p, spec, e, t, *first, rng::derive(seed, index), options.temperature, factory);
  }
  return records;
}

}  // namespace sand::rollout
