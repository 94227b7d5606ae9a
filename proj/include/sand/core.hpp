#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sand/errors.hpp"

namespace sand::policy {
class Policy;
}

namespace sand::core {

// ===================================================================
// instruction / thought / action / observation
// ===================================================================

enum class Split { train, test_seen, test_unseen };

const char* split_name(Split s);
Split parse_split(std::string_view name);  // validation error on unknown names

struct Instruction {
  std::string id;
  std::string text;
  Split split = Split::train;
};

enum class ThoughtKind { plain, deliberative };

const char* thought_kind_name(ThoughtKind k);
ThoughtKind parse_thought_kind(std::string_view name);

// Free-text reasoning emitted before an action. Plain thoughts are bare text
// (no "Thought: " prefix). Deliberative thoughts carry the full rendered
// comparison block and always start with "Thought: ", so they re-parse under
// the synthesis parser and export verbatim.
struct Thought {
  std::string text;
  ThoughtKind kind = ThoughtKind::plain;

  bool empty() const { return text.empty(); }
};

/**
 * Environment command. The raw surface form is preserved for prompts and
 * exports; equality, dedup and tabular lookups all go through the canonical
 * form: trim, collapse internal whitespace, lowercase, strip one trailing '.'.
 */
class Action {
 public:
  Action() = default;
  explicit Action(std::string_view raw);  // empty_action if nothing survives

  const std::string& raw() const { return raw_; }
  const std::string& canonical() const { return canonical_; }

  bool operator==(const Action& o) const { return canonical_ == o.canonical_; }
  bool operator!=(const Action& o) const { return !(*this == o); }
  bool operator<(const Action& o) const { return canonical_ < o.canonical_; }

 private:
  std::string raw_;
  std::string canonical_;
};

Action canonicalize(std::string_view raw);

struct Observation {
  std::string text;

  bool operator==(const Observation& o) const { return text == o.text; }
};

// One (thought, action, observation) turn. The observation is absent only on
// a trajectory's final step, when the episode ended on that action.
struct Step {
  Thought thought;
  Action action;
  std::optional<Observation> observation;
};

// ===================================================================
// history and trajectories
// ===================================================================

/**
 * Episode prefix h_t: the instruction plus the steps taken so far. The
 * initial observation from reset is kept for prompt rendering; it is not part
 * of the persisted trajectory schema.
 */
class History {
 public:
  History() = default;
  History(Instruction instruction, std::string initial_observation)
      : instruction_(std::move(instruction)),
        initial_observation_(std::move(initial_observation)) {}

  const Instruction& instruction() const { return instruction_; }
  const std::string& initial_observation() const { return initial_observation_; }
  const std::vector<Step>& steps() const { return steps_; }
  std::size_t size() const { return steps_.size(); }

  void append(Step s) { steps_.push_back(std::move(s)); }

  // Canonical actions joined by '\n'. The lookup key for tabular policies;
  // deliberately ignores thoughts and observations so fixtures stay writable
  // by hand.
  std::string state_key() const;

 private:
  Instruction instruction_;
  std::string initial_observation_;
  std::vector<Step> steps_;
};

/**
 * Completed expert or generated episode. Construction validates shape:
 * at least one step, reward within [0,1], observations present on every
 * non-final step. token_count is cached at construction (whitespace tokens
 * over all thought and action texts).
 */
class Trajectory {
 public:
  Trajectory(Instruction instruction, std::vector<Step> steps, double reward);

  const Instruction& instruction() const { return instruction_; }
  const std::vector<Step>& steps() const { return steps_; }
  double reward() const { return reward_; }
  std::int64_t token_count() const { return token_count_; }

  // History made of the first `count` steps (0 <= count <= L), carrying the
  // given initial observation for prompt rendering.
  History prefix(std::size_t count, std::string initial_observation = "") const;

 private:
  Instruction instruction_;
  std::vector<Step> steps_;
  double reward_ = 0.0;
  std::int64_t token_count_ = 0;
};

std::size_t step_count(const Trajectory& e);

// Additive identity for log-probabilities of impossible events; score_step
// returns this marker (never throws) for zero-probability samples.
double off_support_log_prob();

/**
 * Sum over steps of log p(z_t, a_t | h_{t-1}) under the policy, i.e. the log
 * of the step-factorized trajectory probability. Requires a scoring-capable
 * backend (unscorable error otherwise); off-support steps drive the result
 * to -infinity rather than throwing.
 */
double trajectory_log_prob(const policy::Policy& p, const Trajectory& e);

// ===================================================================
// deliberation trajectories (synthesis output)
// ===================================================================

struct DeliberationStep {
  Thought thought;
  Action action;
  std::optional<Observation> observation;
  bool deliberated = false;
  int candidate_count = 1;  // uniques considered at this step; >= 2 iff deliberated
};

struct DeliberationTrajectory {
  Instruction instruction;
  std::vector<DeliberationStep> steps;
  std::string source_trajectory_id;
  int iteration = 1;
  double reward = 0.0;
};

// Enforced on every synthesized step: deliberated == (kind deliberative)
// == (candidate_count >= 2). Throws validation error on violation.
void check_deliberation_step(const DeliberationStep& s);

// ===================================================================
// shared text helpers
// ===================================================================

// Whitespace-delimited token count: the model-agnostic proxy used by dataset
// stats and reports. Not a real tokenizer on purpose.
std::int64_t count_tokens(std::string_view text);

// Lines of the form "- <text>: ..." in a thought body. Two or more mark the
// text as a rendered deliberation block; used to recover candidate_count for
// steps whose flags were not persisted.
int deliberative_bullet_lines(std::string_view text);

// The assistant-side text a tuned model must emit for one step:
//   deliberative thought -> "<rendered block>\nAction: <raw>"
//   plain, non-empty     -> "Thought: <text>\nAction: <raw>"
//   empty thought        -> "Action: <raw>"
std::string sft_response_text(const Thought& thought, const Action& action);

}  // namespace sand::core
