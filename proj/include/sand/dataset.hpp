#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sand/core.hpp"
#include "sand/errors.hpp"
#include "sand/prompts.hpp"

namespace sand::dataset {

enum class Source { expert, deliberation };

const char* source_name(Source s);
Source parse_source(const std::string& name);

/**
 * Provenance card for one trajectory file: where it lives, how many records,
 * which iteration produced it, and a content checksum so the handoff between
 * iterations can be verified before anything is read back.
 */
struct DatasetManifest {
  std::string path;
  std::size_t trajectory_count = 0;
  int iteration = 0;  // 0 = original expert data
  Source source = Source::expert;
  std::string checksum;
  int epochs_advice = 3;  // trainer hint: 3 through the first iteration, 1 after
};

/**
 * Outer-loop bookkeeping: which iteration we are on, how many remain, and the
 * full lineage of manifests produced so far (history holds k + 1 entries,
 * starting with the original expert manifest).
 */
struct IterationState {
  int k = 0;
  int total_iterations = 1;
  DatasetManifest current;
  std::vector<DatasetManifest> history;
};

// Trainer epoch hint for a dataset produced at the given iteration.
int epochs_advice_for(int iteration);

// FNV-1a 64 checksum (hex) of a file's bytes. io error if unreadable.
std::string file_checksum(const std::string& path);

/**
 * Reads one trajectory record per line, validating structure and bounds.
 * Malformed records raise load errors, out-of-range or incoherent fields raise
 * validation errors; both name the 1-based line.
 */
std::vector<core::Trajectory> load_trajectories(const std::string& path);

struct LineIssue {
  std::size_t line = 0;  // 1-based
  errc code = errc::load;
  std::string message;
};

struct AuditedTrajectory {
  std::size_t line = 0;  // 1-based
  core::Trajectory trajectory;
};

struct AuditResult {
  std::vector<AuditedTrajectory> ok;
  std::vector<LineIssue> issues;
};

// Like load_trajectories, but collects every offending line instead of
// stopping at the first. Feeds the validate command's report.
AuditResult audit_trajectories(const std::string& path);

// Writes expert-style records (iteration defaults to 0) and returns the
// manifest describing the file.
DatasetManifest write_trajectories(const std::vector<core::Trajectory>& ds,
                                   const std::string& path, int iteration = 0);

/**
 * Writes one record per deliberation trajectory, carrying the per-step
 * deliberated flags and candidate counts. Non-empty input required.
 */
DatasetManifest write_deliberation(const std::vector<core::DeliberationTrajectory>& ds,
                                   const std::string& path);

/**
 * Exports trainer-ready chat records: one line per trajectory with a system
 * message (the named environment prompt with {task} filled), the instruction
 * as the opening user turn, and alternating assistant/user turns from the
 * steps. Returns the record count.
 */
std::size_t export_sft_chat(const prompts::Registry& reg,
                            const std::vector<core::DeliberationTrajectory>& ds,
                            const std::string& path, const std::string& system_prompt_asset);
std::size_t export_sft_chat(const prompts::Registry& reg, const std::vector<core::Trajectory>& ds,
                            const std::string& path, const std::string& system_prompt_asset);

// Fresh outer-loop state anchored on the original expert manifest.
IterationState initial_state(int total_iterations, DatasetManifest expert_manifest);

/**
 * Moves the loop forward one iteration: k + 1, the new manifest becomes
 * current, and the lineage grows by one. iteration_complete once k = I.
 */
IterationState advance(const IterationState& state, DatasetManifest new_manifest);

// JSON persistence for resumable runs.
void save_state(const IterationState& state, const std::string& path);
IterationState load_state(const std::string& path);

void save_manifest(const DatasetManifest& manifest, const std::string& path);
DatasetManifest load_manifest(const std::string& path);

}  // namespace sand::dataset
