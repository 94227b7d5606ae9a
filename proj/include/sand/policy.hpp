#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "sand/core.hpp"
#include "sand/env.hpp"

namespace sand::policy {

// ===================================================================
// samples and configuration
// ===================================================================

struct StepSample {
  core::Thought thought;
  core::Action action;
};

enum class Backend { scripted_expert, tabular, remote_chat, template_stub };

const char* backend_name(Backend b);
Backend parse_backend(std::string_view name);

struct RemoteOptions {
  std::string endpoint;  // falls back to SAND_API_BASE
  std::string model;
  std::string api_key;   // falls back to SAND_API_KEY
  int max_tokens = 512;
  int retries = 3;           // total attempt budget
  int backoff_base_ms = 250; // doubles per attempt
  int timeout_ms = 30000;
  int max_inflight = 4;
};

struct PolicyConfig {
  Backend backend = Backend::scripted_expert;
  double temperature = 1.0;    // scoring temperature for tabular
  std::uint64_t seed = 1;
  std::string table_path;      // tabular: JSON file with state distributions
  std::string stub_action = "wait";  // template_stub's fixed action
  std::string system_prompt_asset = "textgrid_task";  // remote chat serving prompt
  RemoteOptions remote;
};

struct BaseModelConfig {
  Backend backend = Backend::template_stub;  // template_stub or remote_chat
  RemoteOptions remote;
};

// ===================================================================
// interfaces
// ===================================================================

/**
 * The agent policy. sample_step draws one (thought, action) for the history;
 * all local backends are pure functions of (history, temperature, seed).
 * Backends without per-step probabilities report can_score() = false and
 * throw unscorable from score_step.
 */
class Policy {
 public:
  virtual ~Policy() = default;

  virtual StepSample sample_step(const core::History& h, double temperature,
                                 std::uint64_t seed) const = 0;

  virtual bool can_score() const { return false; }

  // log p(thought, action | h) under the backend's (temperature-adjusted)
  // distribution; off_support_log_prob() for zero-probability samples.
  virtual double score_step(const core::History& h, const StepSample& s) const;

  virtual std::string name() const = 0;
};

// The frozen model that writes critiques and deliberation thoughts.
class BaseModel {
 public:
  virtual ~BaseModel() = default;
  virtual std::string complete_text(const std::string& prompt, double temperature) const = 0;
  virtual std::string name() const = 0;
};

// ===================================================================
// local backends
// ===================================================================

/**
 * Replays stored expert steps for known instruction ids. sample_step returns
 * script[h.size()]; asking past the end is script_exhausted. Never scores.
 */
class ScriptedExpertPolicy final : public Policy {
 public:
  explicit ScriptedExpertPolicy(std::map<std::string, std::vector<StepSample>> scripts);
  static ScriptedExpertPolicy from_trajectories(const std::vector<core::Trajectory>& data);

  StepSample sample_step(const core::History& h, double temperature,
                         std::uint64_t seed) const override;
  std::string name() const override { return "scripted_expert"; }

 private:
  std::map<std::string, std::vector<StepSample>> scripts_;
};

struct TabularEntry {
  std::string thought;
  std::string action;
  double prob = 0.0;
};

/**
 * Finite test double for the agent: a map from history state key (canonical
 * actions joined by newlines) to a distribution over (thought, action)
 * entries. Each distribution must sum to 1 within 1e-9. Sampling applies
 * temperature scaling p^(1/T); temperature 0 is argmax with ties broken by
 * smallest (canonical action, thought) pair.
 */
class TabularPolicy final : public Policy {
 public:
  TabularPolicy(std::map<std::string, std::vector<TabularEntry>> states,
                double score_temperature = 1.0);
  static TabularPolicy load(const std::string& path, double score_temperature = 1.0);

  StepSample sample_step(const core::History& h, double temperature,
                         std::uint64_t seed) const override;
  bool can_score() const override { return true; }
  double score_step(const core::History& h, const StepSample& s) const override;
  std::string name() const override { return "tabular"; }

  const std::map<std::string, std::vector<TabularEntry>>& states() const { return states_; }

 private:
  std::map<std::string, std::vector<TabularEntry>> states_;
  double score_temperature_;
};

// Always returns the same fixed action with an empty thought. The degenerate
// policy for max-steps and invalid-action test paths.
class StaticStubPolicy final : public Policy {
 public:
  explicit StaticStubPolicy(std::string action_text);
  StepSample sample_step(const core::History& h, double temperature,
                         std::uint64_t seed) const override;
  std::string name() const override { return "template_stub"; }

 private:
  StepSample sample_;
};

/**
 * Deterministic stand-in for the frozen base model. Recognizes the two prompt
 * families by their section headers and answers in the required output format,
 * echoing structured fields (candidate action, final reward, scratch-pad
 * lines) it finds in the prompt. Makes the whole loop hermetic.
 */
class TemplateStubBase final : public BaseModel {
 public:
  TemplateStubBase() = default;
  std::string complete_text(const std::string& prompt, double temperature) const override;
  std::string name() const override { return "template_stub"; }
};

// ===================================================================
// remote chat backends
// ===================================================================

struct ChatMessage {
  std::string role;  // "system" | "user" | "assistant"
  std::string content;
};

/**
 * Minimal chat-completion client: POST {model, messages, temperature,
 * max_tokens} to <endpoint>/v1/chat/completions, read
 * choices[0].message.content. Authorization from options or SAND_API_KEY;
 * endpoint from options or SAND_API_BASE. Up to `retries` attempts with
 * exponential backoff; in-flight requests bounded by max_inflight.
 */
class RemoteChatClient {
 public:
  explicit RemoteChatClient(RemoteOptions options);
  ~RemoteChatClient();

  std::string complete(const std::vector<ChatMessage>& messages, double temperature) const;
  const RemoteOptions& options() const;

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

class RemoteChatPolicy final : public Policy {
 public:
  RemoteChatPolicy(RemoteOptions options, std::string system_prompt);
  StepSample sample_step(const core::History& h, double temperature,
                         std::uint64_t seed) const override;
  std::string name() const override { return "remote_chat"; }

 private:
  RemoteChatClient client_;
  std::string system_prompt_;
};

class RemoteChatBase final : public BaseModel {
 public:
  explicit RemoteChatBase(RemoteOptions options);
  std::string complete_text(const std::string& prompt, double temperature) const override;
  std::string name() const override { return "remote_chat"; }

 private:
  RemoteChatClient client_;
};

// ===================================================================
// shared helpers and factories
// ===================================================================

// Splits completion text per the prompts' contract "Thought: …\nAction: …",
// accepting action-only turns; validation error when no "Action:" line exists.
StepSample parse_step_text(const std::string& completion);

// Chat transcript for one history: system prompt, then the instruction (with
// the initial observation appended when present), then alternating
// assistant/user turns mirroring the SFT export shape.
std::vector<ChatMessage> chat_messages_for_history(const std::string& system_prompt,
                                                   const core::History& h);

// Greedy evaluation rollout: repeatedly sample (temperature 0 by default) and
// step until the episode ends; returns the completed trajectory with reward.
core::Trajectory greedy_rollout(const Policy& p, env::Session& session,
                                const core::History& start, int max_steps,
                                double temperature = 0.0, std::uint64_t seed = 0);

struct PolicyContext {
  const std::vector<core::Trajectory>* expert_data = nullptr;  // for scripted_expert
};

std::shared_ptr<Policy> make_policy(const PolicyConfig& config, const PolicyContext& ctx = {});
std::shared_ptr<BaseModel> make_base_model(const BaseModelConfig& config);

}  // namespace sand::policy
