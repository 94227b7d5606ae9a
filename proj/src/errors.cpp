#include "sand/errors.hpp"

namespace sand {

const char* errc_name(errc c) {
  switch (c) {
    case errc::precondition: return "precondition";
    case errc::empty_action: return "empty_action";
    case errc::unscorable: return "unscorable";
    case errc::invalid_task: return "invalid_task";
    case errc::episode_closed: return "episode_closed";
    case errc::episode_open: return "episode_open";
    case errc::replay_divergence: return "replay_divergence";
    case errc::env_timeout: return "env_timeout";
    case errc::protocol: return "protocol";
    case errc::policy_unavailable: return "policy_unavailable";
    case errc::script_exhausted: return "script_exhausted";
    case errc::critique_parse: return "critique_parse";
    case errc::synthesis_parse: return "synthesis_parse";
    case errc::synthesis_contract: return "synthesis_contract";
    case errc::assembly: return "assembly";
    case errc::load: return "load";
    case errc::validation: return "validation";
    case errc::io: return "io";
    case errc::config: return "config";
    case errc::iteration_complete: return "iteration_complete";
    case errc::empty_evaluation: return "empty_evaluation";
    case errc::too_few_tasks: return "too_few_tasks";
    case errc::division_domain: return "division_domain";
  }
  return "unknown";
}

}  // namespace sand
