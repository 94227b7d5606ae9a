#include "sand/pipeline.hpp"

#include "sand/parallel.hpp"
#include "sand/rng.hpp"
#include "sand/rollout.hpp"
#include "sand/sampler.hpp"
#include "sand/strings.hpp"

namespace sand::pipeline {

const char* switch_mode_name(SwitchMode m) {
  switch (m) {
    case SwitchMode::off: return "off";
    case SwitchMode::on: return "on";
    case SwitchMode::auto_mode: return "auto";
  }
  raise(errc::precondition, "unknown switch mode value");
}

SwitchMode parse_switch_mode(const std::string& name) {
  if (name == "off") return SwitchMode::off;
  if (name == "on") return SwitchMode::on;
  if (name == "auto") return SwitchMode::auto_mode;
  raise(errc::config, "unknown switch mode '" + name + "' (expected on, off, or auto)");
}

bool switch_enabled(SwitchMode mode, env::RewardMode reward_mode) {
  switch (mode) {
    case SwitchMode::off: return false;
    case SwitchMode::on: return true;
    case SwitchMode::auto_mode: return reward_mode == env::RewardMode::binary;
  }
  raise(errc::precondition, "unknown switch mode value");
}

core::DeliberationTrajectory synthesize_trajectory(
    const policy::Policy& p, const policy::BaseModel& base, const prompts::Registry& reg,
    const env::TaskSpec& spec, const core::Trajectory& e, const SynthesisOptions& options,
    const env::SessionFactory& factory, TrajectoryStats* stats) {
  if (options.n < 1) raise(errc::precondition, "candidate sample count must be >= 1");
  if (options.iteration < 1) raise(errc::precondition, "iteration numbering starts at 1");

  const std::string& id = e.instruction().id;
  const std::uint64_t traj_seed =
      rng::derive(options.seed, strings::fnv1a64(id), static_cast<std::uint64_t>(options.iteration));

  const auto scan = sampler::scan_trajectory(p, spec, e, options.n,
                                             rng::derive(traj_seed, 0x5ca7ull),
                                             options.temperature, factory);

  const std::string initial_observation = factory(spec)->initial_observation();
  const bool enabled = switch_enabled(options.switch_mode, spec.reward_mode);
  const std::size_t source_steps = e.steps().size();

  TrajectoryStats local;
  std::vector<std::optional<synthesis::StepBranch>> per_step(source_steps);

  for (const sampler::CandidateSet& cs : scan) {
    if (!sampler::needs_deliberation(cs)) continue;
    ++local.flagged_steps;
  }

  for (const sampler::CandidateSet& cs : scan) {
    if (!sampler::needs_deliberation(cs)) continue;
    const std::size_t t = cs.step_index;

    rollout::Options rollout_options;
    rollout_options.temperature = options.temperature;
    rollout_options.reroll_expert = options.reroll_expert;
    const auto records =
        rollout::rollout_unique(p, spec, e, t, cs,
                                rng::derive(traj_seed, 0x011ull, static_cast<std::uint64_t>(t)),
                                rollout_options, factory);

    const core::History h = e.prefix(t, initial_observation);
    critique::CritiqueOptions critique_options;
    critique_options.include_candidate_thoughts = options.include_candidate_thoughts;
    critique_options.jobs = 1;  // corpus-level parallelism only
    const auto critiques = critique::critique_all(base, reg, e.instruction(), h, records,
                                                  spec.reward_mode, critique_options);

    const std::string expert_key = e.steps()[t].action.canonical();
    const rollout::RolloutRecord& expert_record = records.at(expert_key);
    std::map<std::string, rollout::RolloutRecord> others(records);
    others.erase(expert_key);

    synthesis::SwitchDecision decision = synthesis::decide_switch(enabled, expert_record, others);
    if (decision.switched &&
        t + records.at(decision.chosen.canonical()).continuation.size() > source_steps) {
      // The winner took more steps than the source has room for; keeping the
      // expert action preserves the step-count bound on synthesized data.
      decision.switched = false;
      decision.chosen = decision.original;
    }

    synthesis::CritiquePairs pairs;
    pairs.reserve(cs.unique_actions.size());
    for (const auto& [action, count] : cs.unique_actions)
      pairs.emplace_back(action, critiques.at(action.canonical()));

    const std::string prompt =
        synthesis::build_deliberation_prompt(reg, e.instruction(), h, pairs, decision.chosen);
    synthesis::DeliberationDraft draft = synthesis::synthesize(base, prompt, pairs, decision.chosen);

    synthesis::StepBranch branch;
    branch.unique_count = static_cast<int>(cs.unique_actions.size());
    branch.draft = std::move(draft);
    branch.decision = decision;
    if (decision.switched) {
      const rollout::RolloutRecord& winner = records.at(decision.chosen.canonical());
      branch.continuation = winner.continuation;
      branch.continuation_reward = winner.final_reward;
    }
    per_step[t] = std::move(branch);

    if (decision.switched) {
      ++local.switches;
      break;  // one branch decision per divergence; the rest is replaced
    }
  }

  core::DeliberationTrajectory dt = synthesis::assemble(e, per_step, options.iteration);
  if (stats) *stats = local;
  return dt;
}

CorpusResult synthesize_corpus(const policy::Policy& p, const policy::BaseModel& base,
                               const prompts::Registry& reg,
                               const std::map<std::string, env::TaskSpec>& specs_by_id,
                               const std::vector<core::Trajectory>& corpus,
                               const SynthesisOptions& options,
                               const env::SessionFactory& factory) {
  if (corpus.empty()) raise(errc::precondition, "nothing to synthesize: empty corpus");

  CountingBaseModel counted(base);
  std::vector<std::optional<core::DeliberationTrajectory>> results(corpus.size());
  std::vector<TrajectoryStats> stats(corpus.size());
  std::vector<std::optional<Reject>> rejects(corpus.size());

  parallel::run_indexed(corpus.size(), options.jobs, [&](std::size_t i) {
    const core::Trajectory& e = corpus[i];
    const std::string& id = e.instruction().id;
    try {
      const auto spec = specs_by_id.find(id);
      if (spec == specs_by_id.end())
        raise(errc::config, "no task spec for trajectory '" + id + "'");
      results[i] = synthesize_trajectory(p, counted, reg, spec->second, e, options, factory,
                                         &stats[i]);
    } catch (const Error& ex) {
      rejects[i] = Reject{id, ex.code(), ex.what()};
    } catch (const std::exception& ex) {
      rejects[i] = Reject{id, errc::precondition, ex.what()};
    }
  });

  CorpusResult out;
  out.stats.trajectories = corpus.size();
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (rejects[i].has_value()) {
      out.stats.rejects.push_back(std::move(*rejects[i]));
      continue;
    }
    out.deliberations.push_back(std::move(*results[i]));
    out.stats.flagged_steps += stats[i].flagged_steps;
    out.stats.switches += stats[i].switches;
  }
  out.stats.completions_issued = counted.count();
  return out;
}

}  // namespace sand::pipeline
