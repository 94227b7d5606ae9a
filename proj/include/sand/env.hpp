#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sand/core.hpp"

namespace sand::env {

// ===================================================================
// task specification
// ===================================================================

enum class RewardMode { binary, granular };

const char* reward_mode_name(RewardMode m);
RewardMode parse_reward_mode(std::string_view name);

enum class SubgoalKind { locate, hold, place, open_recep, focus };

const char* subgoal_kind_name(SubgoalKind k);
SubgoalKind parse_subgoal_kind(std::string_view name);

struct Subgoal {
  SubgoalKind kind = SubgoalKind::place;
  double weight = 1.0;
};

// What counts as progress. Subgoal semantics (all monotone within an episode):
//   locate    target object has been visible at least once (same room, on a
//             surface or in an open container) or held
//   hold      target object has been in the inventory
//   place     target object has been inside/on the target receptacle
//   open      target receptacle has been opened at least once
//   focus     "focus on <target object>" executed successfully (granular only)
struct Goal {
  std::string target_object;
  std::string target_receptacle;
  std::vector<Subgoal> subgoals;
};

struct TaskSpec {
  core::Instruction instruction;
  std::uint64_t world_seed = 0;
  Goal goal;
  RewardMode reward_mode = RewardMode::binary;
  int max_steps = 40;
};

struct EnvOutcome {
  core::Observation observation;
  bool done = false;
  std::optional<double> reward_if_done;  // present iff done
};

// ===================================================================
// session interface (local world and remote adapter share it)
// ===================================================================

class Session {
 public:
  virtual ~Session() = default;

  virtual const std::string& initial_observation() const = 0;
  virtual EnvOutcome step(const core::Action& a) = 0;

  // Final task score; episode_open error before termination.
  virtual double score() const = 0;

  virtual bool terminated() const = 0;
  virtual int steps_taken() const = 0;
  virtual int max_steps() const = 0;

  // True when the episode ended by running out of steps rather than by
  // success. Best effort for remote sessions (the wire carries no flag).
  virtual bool truncated() const = 0;
};

using SessionFactory = std::function<std::unique_ptr<Session>(const TaskSpec&)>;

// ===================================================================
// TextGrid: the built-in deterministic world
// ===================================================================
//
// A fixed four-room building (hallway, kitchen, pantry, workshop) with seven
// receptacles and six objects whose placement is derived solely from
// world_seed. Commands: go to / open / close / take ... from / put ... in|on /
// examine / focus on (granular mode). Anything else observes exactly
// "Nothing happened" and leaves the world untouched.

class TextGridEnv final : public Session {
 public:
  explicit TextGridEnv(const TaskSpec& spec);  // invalid_task on malformed goals

  const std::string& initial_observation() const override;
  EnvOutcome step(const core::Action& a) override;
  double score() const override;
  bool terminated() const override;
  int steps_taken() const override;
  int max_steps() const override;
  bool truncated() const override;

  // World-state digest covering room, placements, container flags, inventory
  // and achieved subgoals; deliberately excludes the step counter so that
  // "invalid actions change nothing" is checkable by digest equality.
  std::string world_fingerprint() const;

  bool success() const;  // all authored subgoals achieved

  // Task-authoring inspection (fixture planners and the fixture generator
  // need to know where the seed put things).
  static const std::vector<std::string>& object_names();
  static const std::vector<std::string>& receptacle_names();
  std::string location_of_object(const std::string& object) const;  // receptacle or "inventory"
  static std::string room_of_receptacle(const std::string& recep);
  static bool receptacle_is_container(const std::string& recep);

 private:
  struct State;
  std::shared_ptr<State> st_;
};

std::unique_ptr<TextGridEnv> reset(const TaskSpec& spec);

SessionFactory textgrid_factory();

// Fresh session advanced by e's first `count` actions, verifying that every
// recorded observation matches the world's; replay_divergence (with the step
// index) otherwise.
std::unique_ptr<Session> replay_prefix(const SessionFactory& factory, const TaskSpec& spec,
                                       const core::Trajectory& e, std::size_t count);
std::unique_ptr<Session> replay_prefix(const TaskSpec& spec, const core::Trajectory& e,
                                       std::size_t count);

// ===================================================================
// remote environment adapter
// ===================================================================
//
// Wire protocol: one JSON record per request, newline-terminated, POSTed to
// <endpoint>/env; request {"op": "reset"|"step"|"score", "action": string?},
// response {"observation": string, "done": bool, "reward": number?}. The
// server is expected to be session-scoped (it already knows the task); the
// client only tracks step accounting against spec.max_steps.

struct RemoteEnvOptions {
  std::string endpoint;
  int timeout_ms = 5000;
};

std::unique_ptr<Session> remote_env_session(const RemoteEnvOptions& options,
                                            const TaskSpec& spec);

SessionFactory remote_factory(const RemoteEnvOptions& options);

// ===================================================================
// task spec files (one JSON record per line)
// ===================================================================

std::vector<TaskSpec> load_task_specs(const std::string& path);
void save_task_specs(const std::vector<TaskSpec>& specs, const std::string& path);

}  // namespace sand::env
