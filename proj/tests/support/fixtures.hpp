#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "sand/core.hpp"
#include "sand/env.hpp"
#include "sand/policy.hpp"

namespace sand::testfx {

/** Unique scratch directory, removed recursively on destruction. */
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::string& path() const { return path_; }
  std::string file(const std::string& name) const { return path_ + "/" + name; }

 private:
  std::string path_;
};

// Binary put-object-in-receptacle task over the built-in world.
env::TaskSpec binary_task(const std::string& id, const std::string& object,
                          const std::string& receptacle, std::uint64_t world_seed,
                          int max_steps = 40);

// Granular variant with locate/hold/place subgoals (weights 0.25/0.25/0.5).
env::TaskSpec granular_task(const std::string& id, const std::string& object,
                            const std::string& receptacle, std::uint64_t world_seed,
                            int max_steps = 40);

// Smallest seed >= start whose freshly reset world satisfies pred.
std::uint64_t find_seed(const env::TaskSpec& proto,
                        const std::function<bool(const env::TextGridEnv&)>& pred,
                        std::uint64_t start = 0);

// Smallest seed >= start placing the object away from the target receptacle.
std::uint64_t seed_with_object_away(const std::string& object, const std::string& receptacle,
                                    std::uint64_t start = 0);

// Plans a successful action sequence for the task by inspecting the seeded
// world: walk to the object, open its container if needed, take it, focus in
// granular mode, walk to the target, open it if needed, put. Thoughts are
// short templates; container-opening steps get empty thoughts.
std::vector<policy::StepSample> plan_expert_steps(const env::TaskSpec& spec);

// Executes the samples in a fresh session, recording observations; the
// episode must terminate (success or step budget) so the reward is scorable.
core::Trajectory run_steps(const env::TaskSpec& spec,
                           const std::vector<policy::StepSample>& steps);

// plan_expert_steps + run_steps.
core::Trajectory expert_trajectory(const env::TaskSpec& spec);

// Every prefix of e maps to a single (thought, action) entry with mass 1.
std::map<std::string, std::vector<policy::TabularEntry>> point_mass_table(
    const core::Trajectory& e);

// Merges point-mass tables; duplicate states keep the first table's entry.
std::map<std::string, std::vector<policy::TabularEntry>> merge_tables(
    const std::vector<std::map<std::string, std::vector<policy::TabularEntry>>>& tables);

// {"states": {...}} JSON for TabularPolicy::load.
void write_table(const std::map<std::string, std::vector<policy::TabularEntry>>& states,
                 const std::string& path);

}  // namespace sand::testfx
