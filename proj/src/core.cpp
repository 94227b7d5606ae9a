#include "sand/core.hpp"

#include <cmath>
#include <limits>

#include "sand/policy.hpp"
#include "sand/strings.hpp"

namespace sand::core {

const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::test_seen: return "test_seen";
    case Split::test_unseen: return "test_unseen";
  }
  return "train";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "test_seen") return Split::test_seen;
  if (name == "test_unseen") return Split::test_unseen;
  raise(errc::validation, "unknown split '" + std::string(name) + "'");
}

const char* thought_kind_name(ThoughtKind k) {
  return k == ThoughtKind::deliberative ? "deliberative" : "plain";
}

ThoughtKind parse_thought_kind(std::string_view name) {
  if (name == "plain") return ThoughtKind::plain;
  if (name == "deliberative") return ThoughtKind::deliberative;
  raise(errc::validation, "unknown thought kind '" + std::string(name) + "'");
}

// ===================================================================
// actions
// ===================================================================

Action::Action(std::string_view raw) : raw_(raw) {
  std::string c = strings::to_lower(strings::collapse_ws(strings::trim(raw)));
  if (!c.empty() && c.back() == '.') c.pop_back();
  if (c.empty()) raise(errc::empty_action, "action '" + raw_ + "' is empty after canonicalization");
  canonical_ = std::move(c);
}

Action canonicalize(std::string_view raw) { return Action(raw); }

// ===================================================================
// history
// ===================================================================

std::string History::state_key() const {
  std::string key;
  for (std::size_t i = 0; i < steps_.size(); ++i) {
    if (i) key.push_back('\n');
    key.append(steps_[i].action.canonical());
  }
  return key;
}

// ===================================================================
// trajectory
// ===================================================================

Trajectory::Trajectory(Instruction instruction, std::vector<Step> steps, double reward)
    : instruction_(std::move(instruction)), steps_(std::move(steps)), reward_(reward) {
  if (steps_.empty()) raise(errc::validation, "trajectory needs at least one step");
  if (!(reward_ >= 0.0 && reward_ <= 1.0))
    raise(errc::validation, "reward " + strings::format_double(reward_, 6) + " outside [0,1]");
  if (instruction_.text.empty()) raise(errc::validation, "instruction text is empty");
  for (std::size_t i = 0; i + 1 < steps_.size(); ++i) {
    if (!steps_[i].observation)
      raise(errc::validation, "missing observation on non-final step " + std::to_string(i));
  }
  for (const Step& s : steps_) {
    token_count_ += count_tokens(s.thought.text);
    token_count_ += count_tokens(s.action.raw());
  }
}

History Trajectory::prefix(std::size_t count, std::string initial_observation) const {
  if (count > steps_.size())
    raise(errc::precondition, "prefix of " + std::to_string(count) + " steps from a " +
                                  std::to_string(steps_.size()) + "-step trajectory");
  History h(instruction_, std::move(initial_observation));
  for (std::size_t i = 0; i < count; ++i) h.append(steps_[i]);
  return h;
}

std::size_t step_count(const Trajectory& e) { return e.steps().size(); }

double off_support_log_prob() {
  return -std::numeric_limits<double>::infinity();
}

double trajectory_log_prob(const policy::Policy& p, const Trajectory& e) {
  if (!p.can_score())
    raise(errc::unscorable, "policy '" + p.name() + "' has no per-step log-probabilities");
  double total = 0.0;
  History h = e.prefix(0);
  for (const Step& s : e.steps()) {
    total += p.score_step(h, policy::StepSample{s.thought, s.action});
    h.append(s);
  }
  return total;
}

// ===================================================================
// deliberation steps
// ===================================================================

void check_deliberation_step(const DeliberationStep& s) {
  const bool kind_delib = s.thought.kind == ThoughtKind::deliberative;
  const bool count_delib = s.candidate_count >= 2;
  if (s.deliberated != kind_delib || s.deliberated != count_delib)
    raise(errc::validation,
          std::string("deliberation step flags disagree: deliberated=") +
              (s.deliberated ? "true" : "false") + " kind=" + thought_kind_name(s.thought.kind) +
              " candidate_count=" + std::to_string(s.candidate_count));
  if (s.candidate_count < 0) raise(errc::validation, "negative candidate_count");
}

// ===================================================================
// shared text helpers
// ===================================================================

std::int64_t count_tokens(std::string_view text) {
  std::int64_t count = 0;
  bool in_token = false;
  for (char c : text) {
    const bool ws = (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v');
    if (!ws && !in_token) ++count;
    in_token = !ws;
  }
  return count;
}

int deliberative_bullet_lines(std::string_view text) {
  int count = 0;
  for (const auto& line : strings::split_lines(std::string(text))) {
    if (line.size() > 2 && line[0] == '-' && line[1] == ' ' &&
        line.find(':', 2) != std::string::npos)
      ++count;
  }
  return count;
}

std::string sft_response_text(const Thought& thought, const Action& action) {
  if (thought.kind == ThoughtKind::deliberative)
    return thought.text + "\nAction: " + action.raw();
  if (!thought.text.empty())
    return "Thought: " + thought.text + "\nAction: " + action.raw();
  return "Action: " + action.raw();
}

}  // namespace sand::core
