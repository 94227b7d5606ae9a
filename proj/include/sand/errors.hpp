#pragma once

#include <stdexcept>
#include <string>

namespace sand {

// Stable error taxonomy for the whole engine. Tests match on code(), the CLI
// maps codes onto process exit codes, and everything carries a human message.
enum class errc {
  precondition,        // caller violated a documented precondition
  empty_action,        // action text empty after canonicalization
  unscorable,          // policy backend cannot produce log-probabilities
  invalid_task,        // task goal references things the world does not have
  episode_closed,      // step() after termination
  episode_open,        // score() before termination
  replay_divergence,   // recorded observation != environment observation
  env_timeout,         // remote environment unreachable or too slow
  protocol,            // malformed wire reply
  policy_unavailable,  // backend (usually remote) failed after retries
  script_exhausted,    // scripted expert asked for a step past its script
  critique_parse,      // completion missing the "Action Evaluation:" marker
  synthesis_parse,     // deliberation completion failed parsing/screens
  synthesis_contract,  // caller broke a synthesis contract (e.g. bad target)
  assembly,            // per-step branch data does not cover the trajectory
  load,                // unreadable dataset file
  validation,          // readable but invalid record content
  io,                  // filesystem write failure
  config,              // bad configuration value or unknown asset
  iteration_complete,  // advance() called at the final iteration
  empty_evaluation,    // evaluate() over zero tasks
  too_few_tasks,       // difficulty bands need at least 3 tasks
  division_domain,     // ratio with zero denominator
};

const char* errc_name(errc c);

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace sand
