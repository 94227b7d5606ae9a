#include "httplib.h"
#include "http_url.hpp"
#include "json.hpp"
#include "sand/env.hpp"
#include "sand/errors.hpp"

namespace sand::env {

using nlohmann::json;

namespace {

/**
 * Wire adapter for an external environment server. One episode per session;
 * the server holds the task, the client sends {"op", "action"?} records and
 * reads {"observation", "done", "reward"?} replies. Termination is tracked
 * client-side so a step after done fails fast without a round trip.
 */
class RemoteSession final : public Session {
 public:
  RemoteSession(const RemoteEnvOptions& options, const TaskSpec& spec)
      : base_path_(detail::split_url(options.endpoint)),
        timeout_ms_(options.timeout_ms),
        max_steps_(spec.max_steps) {
    if (base_path_.second.empty()) base_path_.second = "/env";
    const json reply = request({{"op", "reset"}});
    try {
      initial_observation_ = reply.at("observation").get<std::string>();
      if (reply.at("done").get<bool>())
        raise(errc::protocol, "environment reported done on reset");
    } catch (const json::exception& e) {
      raise(errc::protocol, std::string("malformed reset reply: ") + e.what());
    }
  }

  const std::string& initial_observation() const override { return initial_observation_; }

  EnvOutcome step(const core::Action& a) override {
    if (terminated_) raise(errc::episode_closed, "step after episode termination");
    const json reply = request({{"op", "step"}, {"action", a.raw()}});
    EnvOutcome outcome;
    try {
      outcome.observation = core::Observation{reply.at("observation").get<std::string>()};
      outcome.done = reply.at("done").get<bool>();
      if (outcome.done) {
        if (!reply.contains("reward"))
          raise(errc::protocol, "terminal step reply is missing 'reward'");
        outcome.reward_if_done = reply.at("reward").get<double>();
        score_ = *outcome.reward_if_done;
      }
    } catch (const json::exception& e) {
      raise(errc::protocol, std::string("malformed step reply: ") + e.what());
    }
    ++steps_taken_;
    terminated_ = outcome.done;
    return outcome;
  }

  double score() const override {
    if (!terminated_) raise(errc::episode_open, "score requested before episode termination");
    if (score_.has_value()) return *score_;
    const json reply = request({{"op", "score"}});
    if (!reply.contains("reward")) raise(errc::protocol, "score reply is missing 'reward'");
    try {
      score_ = reply.at("reward").get<double>();
    } catch (const json::exception& e) {
      raise(errc::protocol, std::string("malformed score reply: ") + e.what());
    }
    return *score_;
  }

  bool terminated() const override { return terminated_; }
  int steps_taken() const override { return steps_taken_; }
  int max_steps() const override { return max_steps_; }

  // Best effort: the wire carries no truncation flag, so running out of the
  // local step budget is the only signal available.
  bool truncated() const override { return terminated_ && steps_taken_ >= max_steps_; }

 private:
  json request(json record) const {
    httplib::Client client(base_path_.first);
    client.set_connection_timeout(timeout_ms_ / 1000, (timeout_ms_ % 1000) * 1000);
    client.set_read_timeout(timeout_ms_ / 1000, (timeout_ms_ % 1000) * 1000);
    client.set_write_timeout(timeout_ms_ / 1000, (timeout_ms_ % 1000) * 1000);

    auto res = client.Post(base_path_.second, record.dump(), "application/json");
    if (!res)
      raise(errc::env_timeout, "environment at '" + base_path_.first + base_path_.second +
                                   "' unreachable: " + httplib::to_string(res.error()));
    if (res->status != 200)
      raise(errc::protocol,
            "environment replied HTTP " + std::to_string(res->status) + ": " + res->body);
    try {
      return json::parse(res->body);
    } catch (const json::exception& e) {
      raise(errc::protocol, std::string("malformed environment reply: ") + e.what());
    }
  }

  std::pair<std::string, std::string> base_path_;
  int timeout_ms_;
  int max_steps_;
  std::string initial_observation_;
  bool terminated_ = false;
  int steps_taken_ = 0;
  mutable std::optional<double> score_;
};

}  // namespace

std::unique_ptr<Session> remote_env_session(const RemoteEnvOptions& options,
                                            const TaskSpec& spec) {
  return std::make_unique<RemoteSession>(options, spec);
}

SessionFactory remote_factory(const RemoteEnvOptions& options) {
  return [options](const TaskSpec& spec) { return remote_env_session(options, spec); };
}

}  // namespace sand::env
