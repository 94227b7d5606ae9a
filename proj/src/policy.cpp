#include "sand/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "nlohmann/json.hpp"
#include "sand/prompts.hpp"
#include "sand/rng.hpp"
#include "sand/strings.hpp"

namespace sand::policy {

using nlohmann::json;

const char* backend_name(Backend b) {
  switch (b) {
    case Backend::scripted_expert: return "scripted_expert";
    case Backend::tabular: return "tabular";
    case Backend::remote_chat: return "remote_chat";
    case Backend::template_stub: return "template_stub";
  }
  return "scripted_expert";
}

Backend parse_backend(std::string_view name) {
  if (name == "scripted_expert") return Backend::scripted_expert;
  if (name == "tabular") return Backend::tabular;
  if (name == "remote_chat") return Backend::remote_chat;
  if (name == "template_stub") return Backend::template_stub;
  raise(errc::config, "unknown backend '" + std::string(name) + "'");
}

double Policy::score_step(const core::History&, const StepSample&) const {
  raise(errc::unscorable, "policy '" + name() + "' has no per-step log-probabilities");
}

// ===================================================================
// scripted expert
// ===================================================================

ScriptedExpertPolicy::ScriptedExpertPolicy(std::map<std::string, std::vector<StepSample>> scripts)
    : scripts_(std::move(scripts)) {}

ScriptedExpertPolicy ScriptedExpertPolicy::from_trajectories(
    const std::vector<core::Trajectory>& data) {
  std::map<std::string, std::vector<StepSample>> scripts;
  for (const core::Trajectory& e : data) {
    std::vector<StepSample> script;
    script.reserve(e.steps().size());
    for (const core::Step& s : e.steps()) script.push_back(StepSample{s.thought, s.action});
    scripts[e.instruction().id] = std::move(script);
  }
  return ScriptedExpertPolicy(std::move(scripts));
}

StepSample ScriptedExpertPolicy::sample_step(const core::History& h, double, std::uint64_t) const {
  auto it = scripts_.find(h.instruction().id);
  if (it == scripts_.end())
    raise(errc::precondition, "no script for instruction '" + h.instruction().id + "'");
  if (h.size() >= it->second.size())
    raise(errc::script_exhausted,
          "instruction '" + h.instruction().id + "' script has " +
              std::to_string(it->second.size()) + " steps, step " + std::to_string(h.size()) +
              " requested");
  return it->second[h.size()];
}

// ===================================================================
// tabular
// ===================================================================

TabularPolicy::TabularPolicy(std::map<std::string, std::vector<TabularEntry>> states,
                             double score_temperature)
    : states_(std::move(states)), score_temperature_(score_temperature) {
  for (const auto& [key, entries] : states_) {
    if (entries.empty())
      raise(errc::validation, "tabular state '" + key + "' has no entries");
    double sum = 0.0;
    for (const TabularEntry& e : entries) {
      if (e.prob < 0.0)
        raise(errc::validation, "tabular state '" + key + "' has a negative probability");
      core::Action probe(e.action);  // validates non-emptiness
      sum += e.prob;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      raise(errc::validation, "tabular state '" + key + "' sums to " +
                                  strings::format_double(sum, 12) + ", expected 1");
  }
}

TabularPolicy TabularPolicy::load(const std::string& path, double score_temperature) {
  std::ifstream in(path);
  if (!in) raise(errc::load, "cannot open tabular policy file '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const std::exception& ex) {
    raise(errc::load, "tabular policy file '" + path + "': " + ex.what());
  }
  std::map<std::string, std::vector<TabularEntry>> states;
  if (!doc.contains("states") || !doc["states"].is_object())
    raise(errc::validation, "tabular policy file '" + path + "' lacks a states object");
  for (const auto& [key, entries] : doc["states"].items()) {
    std::vector<TabularEntry> dist;
    for (const auto& e : entries) {
      TabularEntry entry;
      entry.thought = e.value("thought", "");
      entry.action = e.at("action").get<std::string>();
      entry.prob = e.at("prob").get<double>();
      dist.push_back(std::move(entry));
    }
    states[key] = std::move(dist);
  }
  return TabularPolicy(std::move(states), score_temperature);
}

namespace {

const std::vector<TabularEntry>& distribution_at(
    const std::map<std::string, std::vector<TabularEntry>>& states, const std::string& key) {
  auto it = states.find(key);
  if (it == states.end())
    raise(errc::precondition, "tabular policy has no distribution for state '" + key + "'");
  return it->second;
}

// Argmax with deterministic tie-breaking: smallest (canonical action, thought).
const TabularEntry& argmax_entry(const std::vector<TabularEntry>& entries) {
  const TabularEntry* best = &entries.front();
  auto entry_key = [](const TabularEntry& e) {
    return std::make_pair(core::Action(e.action).canonical(), e.thought);
  };
  for (const TabularEntry& e : entries) {
    if (e.prob > best->prob || (e.prob == best->prob && entry_key(e) < entry_key(*best)))
      best = &e;
  }
  return *best;
}

}  // namespace

StepSample TabularPolicy::sample_step(const core::History& h, double temperature,
                                      std::uint64_t seed) const {
  const auto& entries = distribution_at(states_, h.state_key());
  const TabularEntry* pick = nullptr;
  if (temperature == 0.0) {
    pick = &argmax_entry(entries);
  } else {
    std::vector<double> weights(entries.size());
    double total = 0.0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      weights[i] = std::pow(entries[i].prob, 1.0 / temperature);
      total += weights[i];
    }
    rng::SplitMix64 gen(seed);
    const double u = gen.next_double() * total;
    double cum = 0.0;
    pick = &entries.back();
    for (std::size_t i = 0; i < entries.size(); ++i) {
      cum += weights[i];
      if (u < cum) {
        pick = &entries[i];
        break;
      }
    }
  }
  return StepSample{core::Thought{pick->thought, core::ThoughtKind::plain}, core::Action(pick->action)};
}

double TabularPolicy::score_step(const core::History& h, const StepSample& s) const {
  const auto& entries = distribution_at(states_, h.state_key());
  const double T = score_temperature_;
  if (T == 0.0) {
    const TabularEntry& best = argmax_entry(entries);
    const bool match = core::Action(best.action) == s.action && best.thought == s.thought.text;
    return match ? 0.0 : core::off_support_log_prob();
  }
  double num = 0.0, den = 0.0;
  for (const TabularEntry& e : entries) {
    const double w = std::pow(e.prob, 1.0 / T);
    den += w;
    if (core::Action(e.action) == s.action && e.thought == s.thought.text) num += w;
  }
  if (num <= 0.0) return core::off_support_log_prob();
  return std::log(num / den);
}

// ===================================================================
// static stub
// ===================================================================

StaticStubPolicy::StaticStubPolicy(std::string action_text)
    : sample_{core::Thought{}, core::Action(action_text)} {}

StepSample StaticStubPolicy::sample_step(const core::History&, double, std::uint64_t) const {
  return sample_;
}

// ===================================================================
// template stub base model
// ===================================================================

namespace {

std::string find_between(const std::string& text, std::string_view open, std::string_view close) {
  const std::size_t a = text.find(open);
  if (a == std::string::npos) return "";
  const std::size_t b = text.find(close, a + open.size());
  if (b == std::string::npos) return "";
  return text.substr(a + open.size(), b - a - open.size());
}

std::string last_final_reward(const std::string& text) {
  const std::string marker = "Final reward: ";
  std::size_t pos = text.rfind(marker);
  if (pos == std::string::npos) return "";
  std::size_t end = text.find('\n', pos);
  if (end == std::string::npos) end = text.size();
  return strings::trim(text.substr(pos + marker.size(), end - pos - marker.size()));
}

std::string stub_critique(const std::string& prompt) {
  const std::string action = find_between(prompt, "the action **", "**");
  const std::string reward_text = last_final_reward(prompt);
  double reward = 0.0;
  try {
    reward = std::stod(reward_text);
  } catch (...) {
    reward = 0.0;
  }
  std::ostringstream out;
  // Each branch stays within the prompt's three-sentence cap as measured by
  // count_sentences, which also counts the decimal point in the reward text.
  if (reward >= 0.999) {
    out << "Action Evaluation: Executing " << action
        << " from this state plays out cleanly and ends at a final reward of " << reward_text
        << ", so it directly advances the task. The move is valid here, and committing to "
        << action << " now looks like the strongest available continuation.";
  } else if (reward > 0.0) {
    out << "Action Evaluation: Executing " << action
        << " from this state makes partial progress and ends at a final reward of " << reward_text
        << ", though it leaves some subgoals unfinished. Treating " << action
        << " as a stepping stone seems reasonable while watching for a stronger continuation.";
  } else {
    out << "Action Evaluation: Executing " << action
        << " from this state leads nowhere useful and ends at a final reward of " << reward_text
        << ", wasting a step or getting rejected outright by the world. Avoiding " << action
        << " in this situation would keep the plan on track.";
  }
  return out.str();
}

std::string stub_deliberation(const std::string& prompt) {
  const std::string target = find_between(prompt, "must be **", "**");

  // Scratch-pad lines sit between the "stay private" preamble and the
  // "### Very Important" header.
  std::vector<std::pair<std::string, std::string>> candidates;
  const std::string open_marker = "(these notes stay private):\n";
  const std::size_t begin = prompt.find(open_marker);
  const std::size_t end = prompt.find("\n\n### Very Important");
  if (begin != std::string::npos && end != std::string::npos && end > begin) {
    const std::string block =
        prompt.substr(begin + open_marker.size(), end - begin - open_marker.size());
    for (const std::string& line : strings::split_lines(block)) {
      if (!strings::starts_with(line, "- ")) continue;
      const std::size_t colon = line.find(": ", 2);
      if (colon == std::string::npos) continue;
      candidates.emplace_back(line.substr(2, colon - 2), line.substr(colon + 2));
    }
  }

  std::ostringstream out;
  out << "Thought: My previous move left the task only part-way done, and more than one "
         "follow-up looks plausible from here.\n\n";
  for (const auto& [action, critique] : candidates) {
    // First sentence of the judgement keeps bullets short but informative.
    std::string first = critique;
    const std::size_t dot = first.find(". ");
    if (dot != std::string::npos) first = first.substr(0, dot + 1);
    out << "- " << action << ": " << first << "\n";
  }
  out << "\nWeighing these options against each other, " << target
      << " stands out as the continuation that best preserves progress toward the goal. I will "
         "commit to "
      << target << " now.";
  return out.str();
}

}  // namespace

std::string TemplateStubBase::complete_text(const std::string& prompt, double) const {
  if (prompt.find("### Private Mental Simulations") != std::string::npos)
    return stub_critique(prompt);
  if (prompt.find("### Private Scratch-pad") != std::string::npos)
    return stub_deliberation(prompt);
  return "Acknowledged.";
}

// ===================================================================
// shared helpers
// ===================================================================

StepSample parse_step_text(const std::string& completion) {
  const auto lines = strings::split_lines(completion);
  std::size_t action_line = lines.size();
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (strings::starts_with(strings::trim(lines[i]), "Action:")) {
      action_line = i;
      break;
    }
  }
  if (action_line == lines.size())
    raise(errc::validation, "completion has no 'Action:' line: " + completion);
  std::string action_text = strings::trim(lines[action_line]);
  action_text = strings::trim(action_text.substr(std::string("Action:").size()));
  if (action_text.empty()) raise(errc::validation, "empty action in completion");

  std::string thought_text;
  for (std::size_t i = 0; i < action_line; ++i) {
    if (i) thought_text += "\n";
    thought_text += lines[i];
  }
  thought_text = strings::trim(thought_text);
  if (strings::starts_with(thought_text, "Thought:"))
    thought_text = strings::trim(thought_text.substr(std::string("Thought:").size()));
  return StepSample{core::Thought{thought_text, core::ThoughtKind::plain},
                    core::Action(action_text)};
}

std::vector<ChatMessage> chat_messages_for_history(const std::string& system_prompt,
                                                   const core::History& h) {
  std::vector<ChatMessage> messages;
  messages.push_back({"system", system_prompt});
  std::string first = h.instruction().text;
  if (!h.initial_observation().empty()) first += "\n\n" + h.initial_observation();
  messages.push_back({"user", first});
  for (const core::Step& s : h.steps()) {
    messages.push_back({"assistant", core::sft_response_text(s.thought, s.action)});
    if (s.observation) messages.push_back({"user", s.observation->text});
  }
  return messages;
}

core::Trajectory greedy_rollout(const Policy& p, env::Session& session,
                                const core::History& start, int max_steps, double temperature,
                                std::uint64_t seed) {
  core::History h = start;
  std::vector<core::Step> steps(h.steps().begin(), h.steps().end());
  double reward = 0.0;
  bool scored = false;
  std::uint64_t draw = 0;
  while (!session.terminated() && static_cast<int>(h.size()) < max_steps) {
    const StepSample sample = p.sample_step(h, temperature, rng::derive(seed, draw++));
    const env::EnvOutcome out = session.step(sample.action);
    core::Step s{sample.thought, sample.action, out.observation};
    h.append(s);
    steps.push_back(std::move(s));
    if (out.done) {
      reward = out.reward_if_done.value_or(0.0);
      scored = true;
      break;
    }
  }
  if (!scored && session.terminated()) reward = session.score();
  return core::Trajectory(h.instruction(), std::move(steps), reward);
}

// ===================================================================
// factories
// ===================================================================

std::shared_ptr<Policy> make_policy(const PolicyConfig& config, const PolicyContext& ctx) {
  switch (config.backend) {
    case Backend::scripted_expert: {
      if (ctx.expert_data == nullptr)
        raise(errc::config, "scripted_expert backend needs expert trajectories");
      return std::make_shared<ScriptedExpertPolicy>(
          ScriptedExpertPolicy::from_trajectories(*ctx.expert_data));
    }
    case Backend::tabular: {
      if (config.table_path.empty())
        raise(errc::config, "tabular backend needs table_path");
      return std::make_shared<TabularPolicy>(
          TabularPolicy::load(config.table_path, config.temperature));
    }
    case Backend::template_stub:
      return std::make_shared<StaticStubPolicy>(config.stub_action);
    case Backend::remote_chat: {
      const std::string prompt =
          prompts::Registry::embedded().get(config.system_prompt_asset);
      return std::make_shared<RemoteChatPolicy>(config.remote, prompt);
    }
  }
  raise(errc::config, "unhandled policy backend");
}

std::shared_ptr<BaseModel> make_base_model(const BaseModelConfig& config) {
  switch (config.backend) {
    case Backend::template_stub:
      return std::make_shared<TemplateStubBase>();
    case Backend::remote_chat:
      return std::make_shared<RemoteChatBase>(config.remote);
    default:
      raise(errc::config, std::string("base model backend must be template_stub or remote_chat, got '") +
                              backend_name(config.backend) + "'");
  }
}

}  // namespace sand::policy
