#pragma once

#include <atomic>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sand/core.hpp"
#include "sand/critique.hpp"
#include "sand/dataset.hpp"
#include "sand/env.hpp"
#include "sand/errors.hpp"
#include "sand/policy.hpp"
#include "sand/prompts.hpp"
#include "sand/synthesis.hpp"

namespace sand::pipeline {

// Expert-switch policy: on/off directly, or auto (on for binary-reward tasks,
// off for granular ones, where replacing demonstrated actions is unsafe).
enum class SwitchMode { off, on, auto_mode };

const char* switch_mode_name(SwitchMode m);
SwitchMode parse_switch_mode(const std::string& name);

bool switch_enabled(SwitchMode mode, env::RewardMode reward_mode);

/** Counts completions issued to the wrapped base model (thread-safe). */
class CountingBaseModel final : public policy::BaseModel {
 public:
  explicit CountingBaseModel(const policy::BaseModel& inner) : inner_(inner) {}

  std::string complete_text(const std::string& prompt, double temperature) const override {
    count_.fetch_add(1, std::memory_order_relaxed);
    return inner_.complete_text(prompt, temperature);
  }
  std::string name() const override { return inner_.name(); }

  std::int64_t count() const { return count_.load(std::memory_order_relaxed); }

 private:
  const policy::BaseModel& inner_;
  mutable std::atomic<std::int64_t> count_{0};
};

struct SynthesisOptions {
  int n = 5;                      // candidate samples per step
  double temperature = 1.0;       // candidate and rollout sampling temperature
  std::uint64_t seed = 1;
  SwitchMode switch_mode = SwitchMode::auto_mode;
  bool reroll_expert = false;
  bool include_candidate_thoughts = false;
  int iteration = 1;
  int jobs = 1;  // corpus-level workers; per-trajectory work stays serial
};

/** Per-trajectory synthesis accounting. */
struct TrajectoryStats {
  std::size_t flagged_steps = 0;
  std::size_t switches = 0;
};

struct Reject {
  std::string id;
  errc code = errc::precondition;
  std::string message;
};

struct CorpusStats {
  std::size_t trajectories = 0;
  std::size_t flagged_steps = 0;
  std::size_t switches = 0;
  std::int64_t completions_issued = 0;
  std::vector<Reject> rejects;
};

struct CorpusResult {
  std::vector<core::DeliberationTrajectory> deliberations;
  CorpusStats stats;
};

/**
 * The full inner loop for one expert trajectory: scan for inconsistent steps,
 * ground every unique candidate with a rollout, critique, decide the switch,
 * synthesize the deliberative thought, and assemble the result. A switch that
 * would grow the trajectory beyond its source length is vetoed (the expert
 * action stays).
 */
core::DeliberationTrajectory synthesize_trajectory(
    const policy::Policy& p, const policy::BaseModel& base, const prompts::Registry& reg,
    const env::TaskSpec& spec, const core::Trajectory& e, const SynthesisOptions& options,
    const env::SessionFactory& factory, TrajectoryStats* stats = nullptr);

/**
 * Runs synthesize_trajectory over a corpus. Per-trajectory failures become
 * rejects instead of aborting; results keep the input order and are
 * byte-stable across worker counts.
 */
CorpusResult synthesize_corpus(const policy::Policy& p, const policy::BaseModel& base,
                               const prompts::Registry& reg,
                               const std::map<std::string, env::TaskSpec>& specs_by_id,
                               const std::vector<core::Trajectory>& corpus,
                               const SynthesisOptions& options,
                               const env::SessionFactory& factory);

}  // namespace sand::pipeline
