#include "sand/metrics.hpp"

#include <algorithm>
#include <cstdio>

#include "json.hpp"
#include "sand/errors.hpp"
#include "sand/parallel.hpp"
#include "sand/strings.hpp"

namespace sand::metrics {

using nlohmann::json;

const char* band_name(Band b) {
  switch (b) {
    case Band::hard: return "Hard";
    case Band::medium: return "Medium";
    case Band::easy: return "Easy";
  }
  raise(errc::precondition, "unknown band value");
}

double per_step_reward(double reward, std::size_t steps) {
  if (steps == 0) raise(errc::precondition, "per-step reward needs at least 1 step");
  return reward / static_cast<double>(steps);
}

std::int64_t count_tokens(std::string_view text) { return core::count_tokens(text); }

bool is_deliberative_text(std::string_view thought_text) {
  return core::deliberative_bullet_lines(thought_text) >= 2;
}

double deliberation_rate(const core::Trajectory& e) {
  std::size_t hits = 0;
  for (const core::Step& s : e.steps())
    if (is_deliberative_text(s.thought.text)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(e.steps().size());
}

double deliberation_rate(const core::DeliberationTrajectory& e) {
  if (e.steps.empty()) raise(errc::precondition, "deliberation rate needs at least 1 step");
  std::size_t hits = 0;
  for (const core::DeliberationStep& s : e.steps)
    if (s.deliberated) ++hits;
  return static_cast<double>(hits) / static_cast<double>(e.steps.size());
}

// ============================================================================
// Evaluation
// ============================================================================

EvalReport evaluate(policy::Policy& p, const std::vector<env::TaskSpec>& specs,
                    const env::SessionFactory& factory, int jobs, double temperature) {
  if (specs.empty()) raise(errc::empty_evaluation, "no tasks to evaluate");
  if (temperature < 0.0) raise(errc::precondition, "temperature must be >= 0");

  EvalReport report;
  report.per_task.resize(specs.size());
  parallel::run_indexed(specs.size(), jobs, [&](std::size_t i) {
    const env::TaskSpec& spec = specs[i];
    TaskResult row;
    row.id = spec.instruction.id;
    try {
      auto session = factory(spec);
      core::History start(spec.instruction, session->initial_observation());
      const core::Trajectory e =
          policy::greedy_rollout(p, *session, start, spec.max_steps, temperature, 0);
      row.reward = e.reward();
      row.steps = e.steps().size();
      row.tokens = e.token_count();
      row.deliberation_rate = deliberation_rate(e);
    } catch (const std::exception& ex) {
      row = TaskResult{};
      row.id = spec.instruction.id;
      row.error = ex.what();  // scored 0, never aborts the suite
    }
    report.per_task[i] = std::move(row);
  });

  const double n = static_cast<double>(report.per_task.size());
  for (const TaskResult& row : report.per_task) {
    report.average_reward += row.reward / n;
    report.avg_per_step_reward += (row.steps >= 1 ? row.reward / row.steps : 0.0) / n;
    report.avg_deliberation_rate += row.deliberation_rate / n;
    report.avg_tokens += static_cast<double>(row.tokens) / n;
  }
  return report;
}

// ============================================================================
// Difficulty tertiles
// ============================================================================

std::map<std::string, Band> difficulty_bands(const std::map<std::string, double>& base_rewards) {
  const std::size_t n = base_rewards.size();
  if (n < 3)
    raise(errc::too_few_tasks,
          "difficulty tertiles need at least 3 tasks; got " + std::to_string(n));

  std::vector<double> sorted;
  sorted.reserve(n);
  for (const auto& [id, reward] : base_rewards) sorted.push_back(reward);
  std::sort(sorted.begin(), sorted.end());

  // Remainder tasks pad the harder bands: n = 10 splits {4, 3, 3}.
  const std::size_t hard_size = n / 3 + (n % 3 >= 1 ? 1 : 0);
  const std::size_t medium_size = n / 3 + (n % 3 == 2 ? 1 : 0);
  const double hard_max = sorted[hard_size - 1];
  const double medium_max = sorted[hard_size + medium_size - 1];

  // Threshold comparison sends boundary ties to the lower band by itself:
  // a reward equal to hard_max lands in Hard no matter its sorted position.
  std::map<std::string, Band> out;
  for (const auto& [id, reward] : base_rewards) {
    if (reward <= hard_max)
      out[id] = Band::hard;
    else if (reward <= medium_max)
      out[id] = Band::medium;
    else
      out[id] = Band::easy;
  }
  return out;
}

// ============================================================================
// Token accounting and report rendering
// ============================================================================

double token_multiplier(const EvalReport& report_a, const EvalReport& report_b) {
  if (report_a.per_task.empty() || report_b.per_task.empty())
    raise(errc::empty_evaluation, "token multiplier needs two non-empty reports");
  if (report_a.avg_tokens == 0.0)
    raise(errc::division_domain, "token multiplier baseline has zero average tokens");
  return report_b.avg_tokens / report_a.avg_tokens;
}

std::string format_multiplier(double multiplier) {
  return strings::format_double(multiplier, 1) + "\xC3\x97";
}

std::string render_report(const EvalReport& report) {
  std::size_t id_width = 4;
  for (const TaskResult& row : report.per_task) id_width = std::max(id_width, row.id.size());

  std::string out = "Evaluation report (" + std::to_string(report.per_task.size()) +
                    " tasks; tokens are whitespace-proxy units, compare only as ratios)\n";
  char line[256];
  std::snprintf(line, sizeof(line), "%-*s  %7s  %5s  %7s  %10s  %s\n",
                static_cast<int>(id_width), "task", "reward", "steps", "tokens", "delib_rate",
                "note");
  out += line;
  for (const TaskResult& row : report.per_task) {
    std::snprintf(line, sizeof(line), "%-*s  %7.4f  %5zu  %7lld  %10.4f  %s\n",
                  static_cast<int>(id_width), row.id.c_str(), row.reward, row.steps,
                  static_cast<long long>(row.tokens), row.deliberation_rate,
                  row.error.empty() ? "ok" : row.error.c_str());
    out += line;
  }
  std::snprintf(line, sizeof(line),
                "averages: reward %.4f  per-step reward %.4f  deliberation rate %.4f  tokens "
                "%.1f\n",
                report.average_reward, report.avg_per_step_reward, report.avg_deliberation_rate,
                report.avg_tokens);
  out += line;
  return out;
}

std::string report_records(const EvalReport& report) {
  std::string out;
  for (const TaskResult& row : report.per_task) {
    json rec;
    rec["task"] = row.id;
    rec["reward"] = row.reward;
    rec["steps"] = row.steps;
    rec["tokens"] = row.tokens;
    rec["deliberation_rate"] = row.deliberation_rate;
    if (!row.error.empty()) rec["error"] = row.error;
    out += rec.dump();
    out += '\n';
  }
  json avg;
  avg["average_reward"] = report.average_reward;
  avg["avg_per_step_reward"] = report.avg_per_step_reward;
  avg["avg_deliberation_rate"] = report.avg_deliberation_rate;
  avg["avg_tokens"] = report.avg_tokens;
  out += avg.dump();
  out += '\n';
  return out;
}

std::string band_data(const EvalReport& report, const std::map<std::string, Band>& bands) {
  json out;
  out["Hard"] = json::array();
  out["Medium"] = json::array();
  out["Easy"] = json::array();
  for (const TaskResult& row : report.per_task) {
    const auto it = bands.find(row.id);
    if (it == bands.end()) continue;
    out[band_name(it->second)].push_back(row.reward);
  }
  return out.dump(2) + "\n";
}

}  // namespace sand::metrics
