#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sand/core.hpp"
#include "sand/env.hpp"
#include "sand/policy.hpp"

namespace sand::metrics {

/** One evaluated task: reward, cost columns, and an error note on failure. */
struct TaskResult {
  std::string id;
  double reward = 0.0;
  std::size_t steps = 0;
  std::int64_t tokens = 0;
  double deliberation_rate = 0.0;
  std::string error;  // empty on success
};

/**
 * Evaluation summary: per-task rows plus their arithmetic means. Token counts
 * are the whitespace proxy, so only ratios between reports are meaningful.
 */
struct EvalReport {
  std::vector<TaskResult> per_task;
  double average_reward = 0.0;
  double avg_per_step_reward = 0.0;
  double avg_deliberation_rate = 0.0;
  double avg_tokens = 0.0;
};

enum class Band { hard, medium, easy };

const char* band_name(Band b);

// Reward spread per step taken: reward / steps. steps = 0 → precondition.
double per_step_reward(double reward, std::size_t steps);

// Whitespace-delimited token proxy (see core::count_tokens).
std::int64_t count_tokens(std::string_view text);

// Text classifier for deliberative thoughts: >= 2 lines matching "- <text>:".
bool is_deliberative_text(std::string_view thought_text);

/**
 * Fraction of steps with deliberative thoughts. The Trajectory overload
 * classifies from the text (generated rollouts carry no flags); the
 * DeliberationTrajectory overload reads the stored flags.
 */
double deliberation_rate(const core::Trajectory& e);
double deliberation_rate(const core::DeliberationTrajectory& e);

/**
 * Greedy temperature-0 rollouts over every task spec. Per-task failures score
 * 0 with an error note instead of aborting the suite. empty_evaluation when
 * specs is empty. Evaluations run across `jobs` workers; results and averages
 * are independent of the worker count.
 */
EvalReport evaluate(policy::Policy& p, const std::vector<env::TaskSpec>& specs,
                    const env::SessionFactory& factory, int jobs = 1, double temperature = 0.0);

/**
 * Empirical difficulty tertiles over base-policy rewards: bottom third Hard,
 * middle Medium, top Easy, remainder tasks going to the harder bands and
 * boundary ties always falling to the lower band. too_few_tasks under 3.
 */
std::map<std::string, Band> difficulty_bands(const std::map<std::string, double>& base_rewards);

// avg_tokens(b) / avg_tokens(a). Empty report → empty_evaluation; zero
// denominator → division_domain.
double token_multiplier(const EvalReport& report_a, const EvalReport& report_b);

// "2.6×" style display form (one decimal).
std::string format_multiplier(double multiplier);

// Human-readable table with the proxy-tokenizer caveat in the header.
std::string render_report(const EvalReport& report);

// One structured record per task plus a final averages record (JSONL).
std::string report_records(const EvalReport& report);

// Per-band reward lists (distribution feedstock for difficulty analysis).
std::string band_data(const EvalReport& report, const std::map<std::string, Band>& bands);

}  // namespace sand::metrics
