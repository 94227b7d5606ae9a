// Regenerates the demo corpus: a small task list over the built-in world and
// a matching expert trajectory file, both deterministic. The checked-in
// data/demo files come from this tool; a test replays them against the
// current world so drift is caught.

#include <cstdio>
#include <string>
#include <vector>

#include "sand/dataset.hpp"
#include "sand/env.hpp"
#include "sand/io.hpp"
#include "support/fixtures.hpp"

using namespace sand;

int main(int argc, char** argv) {
  std::string out_dir = "data/demo";
  if (argc > 2) {
    std::fprintf(stderr, "usage: gen_fixtures [out_dir]\n");
    return 1;
  }
  if (argc == 2) out_dir = argv[1];

  try {
    // (object, receptacle) pairs cover every room, both receptacle kinds and
    // both reward modes; seeds are the first ones that leave the object away
    // from its target so every task needs actual work.
    struct Row {
      const char* id;
      const char* object;
      const char* receptacle;
      bool granular;
    };
    const std::vector<Row> rows = {
        {"demo_mug_shelf", "mug", "shelf", false},
        {"demo_egg_fridge", "egg", "fridge", false},
        {"demo_apple_table", "apple", "table", false},
        {"demo_book_crate", "book", "crate", false},
        {"demo_hammer_toolbox", "hammer", "toolbox", false},
        {"demo_thermometer_bench", "thermometer", "bench", false},
        {"demo_book_shelf", "book", "shelf", true},
        {"demo_apple_cupboard", "apple", "cupboard", true},
    };

    std::vector<env::TaskSpec> specs;
    std::vector<core::Trajectory> experts;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const Row& r = rows[i];
      const std::uint64_t seed =
          testfx::seed_with_object_away(r.object, r.receptacle, i * 1000);
      env::TaskSpec spec = r.granular
                               ? testfx::granular_task(r.id, r.object, r.receptacle, seed)
                               : testfx::binary_task(r.id, r.object, r.receptacle, seed);
      experts.push_back(testfx::expert_trajectory(spec));
      specs.push_back(std::move(spec));
    }

    io::ensure_dir(out_dir);
    const std::string tasks_path = out_dir + "/tasks.jsonl";
    const std::string expert_path = out_dir + "/expert.jsonl";
    env::save_task_specs(specs, tasks_path);
    const dataset::DatasetManifest manifest = dataset::write_trajectories(experts, expert_path);
    std::printf("wrote %zu tasks to %s\n", specs.size(), tasks_path.c_str());
    std::printf("wrote %zu expert trajectories to %s (checksum %s)\n", experts.size(),
                expert_path.c_str(), manifest.checksum.c_str());
    return 0;
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "gen_fixtures failed: %s\n", ex.what());
    return 1;
  }
}
