#include "sand/sampler.hpp"

#include "sand/rng.hpp"

namespace sand::sampler {

CandidateSet sample_candidates(const policy::Policy& p, const core::History& h,
                               const core::Step& expert_step, int n, std::uint64_t seed,
                               double temperature) {
  if (n < 1) raise(errc::precondition, "candidate sampling needs n >= 1");

  CandidateSet c;
  c.step_index = h.size();
  c.expert = policy::StepSample{expert_step.thought, expert_step.action};
  c.unique_actions.emplace_back(c.expert.action, 1);

  auto tally = [&c](const core::Action& a) {
    for (auto& [action, count] : c.unique_actions) {
      if (action == a) {
        ++count;
        return;
      }
    }
    c.unique_actions.emplace_back(a, 1);
  };

  c.sampled.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const std::uint64_t draw_seed =
        rng::derive(seed, static_cast<std::uint64_t>(c.step_index), static_cast<std::uint64_t>(i));
    policy::StepSample s = p.sample_step(h, temperature, draw_seed);
    tally(s.action);
    c.sampled.push_back(std::move(s));
  }
  return c;
}

bool needs_deliberation(const CandidateSet& c) { return c.unique_actions.size() > 1; }

std::vector<CandidateSet> scan_trajectory(const policy::Policy& p, const env::TaskSpec& spec,
                                          const core::Trajectory& e, int n, std::uint64_t seed,
                                          double temperature,
                                          const env::SessionFactory& factory) {
  std::vector<CandidateSet> out;
  out.reserve(e.steps().size());

  auto session = factory(spec);
  core::History h(e.instruction(), session->initial_observation());

  for (std::size_t t = 0; t < e.steps().size(); ++t) {
    const core::Step& s = e.steps()[t];
    out.push_back(sample_candidates(p, h, s, n, seed, temperature));

    const env::EnvOutcome outcome = session->step(s.action);
    if (s.observation && s.observation->text != outcome.observation.text)
      raise(errc::replay_divergence,
            "step " + std::to_string(t) + ": recorded observation \"" + s.observation->text +
                "\" but the environment said \"" + outcome.observation.text + "\"");
    if (outcome.done && t + 1 < e.steps().size())
      raise(errc::replay_divergence, "episode terminated at step " + std::to_string(t) +
                                         " but the trajectory continues");
    h.append(s);
  }
  return out;
}

}  // namespace sand::sampler
