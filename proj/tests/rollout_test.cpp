#include <map>
#include <string>
#include <vector>

#include "doctest.h"
#include "sand/errors.hpp"
#include "sand/policy.hpp"
#include "sand/rollout.hpp"
#include "sand/sampler.hpp"
#include "support/fixtures.hpp"

using namespace sand;
using core::Action;
using core::Thought;
using core::ThoughtKind;

namespace {

struct Fixture {
  env::TaskSpec spec;
  core::Trajectory expert;
  std::map<std::string, std::vector<policy::TabularEntry>> states;

  Fixture()
      : spec(testfx::binary_task("demo", "mug", "shelf",
                                 testfx::seed_with_object_away("mug", "shelf"))),
        expert(testfx::expert_trajectory(spec)),
        states(testfx::point_mass_table(expert)) {}
};

}  // namespace

TEST_CASE("expert tails reuse the demonstrated remainder") {
  const Fixture fx;
  const std::size_t t = 1;
  const rollout::RolloutRecord tail = rollout::expert_tail(fx.spec, fx.expert, t);
  CHECK(tail.is_expert_tail);
  CHECK_FALSE(tail.truncated);
  CHECK(tail.final_reward == fx.expert.reward());
  CHECK(tail.candidate.action == fx.expert.steps()[t].action);
  REQUIRE(tail.continuation.size() == fx.expert.steps().size() - t);
  for (std::size_t i = 0; i < tail.continuation.size(); ++i)
    CHECK(tail.continuation[i].action == fx.expert.steps()[t + i].action);

  CHECK_THROWS_AS(rollout::expert_tail(fx.spec, fx.expert, fx.expert.steps().size()), Error);
}

TEST_CASE("execute branches from the replayed prefix and runs to termination") {
  Fixture fx;
  // cover the detour: after "look around" the policy replays the whole plan
  std::string key = "look around";
  for (const core::Step& s : fx.expert.steps()) {
    fx.states[key] = {{s.thought.text, s.action.raw(), 1.0}};
    key += "\n" + s.action.canonical();
  }
  const policy::TabularPolicy p(fx.states);

  const policy::StepSample detour{Thought{"maybe scan the room", ThoughtKind::plain},
                                  Action("look around")};
  const rollout::RolloutRecord r = rollout::execute(p, fx.spec, fx.expert, 0, detour, 5);
  CHECK_FALSE(r.is_expert_tail);
  CHECK_FALSE(r.truncated);
  CHECK(r.final_reward == 1.0);  // the detour costs a step but still succeeds
  REQUIRE(r.continuation.size() == fx.expert.steps().size() + 1);
  CHECK(r.continuation[0].action.canonical() == "look around");
  CHECK(r.continuation[0].thought.text == "maybe scan the room");  // own step keeps its thought
  CHECK(r.continuation[0].observation.has_value());
  CHECK(r.continuation[0].observation->text == "Nothing happened");
  for (std::size_t i = 1; i < r.continuation.size(); ++i)
    CHECK(r.continuation[i].action == fx.expert.steps()[i - 1].action);

  CHECK_THROWS_AS(
      rollout::execute(p, fx.spec, fx.expert, fx.expert.steps().size(), detour, 5), Error);
}

TEST_CASE("execute truncates at the step budget when the policy stalls") {
  Fixture fx;
  const policy::StaticStubPolicy stuck("look around");
  const policy::StepSample detour{Thought{}, Action("look around")};
  const rollout::RolloutRecord r = rollout::execute(stuck, fx.spec, fx.expert, 0, detour, 5);
  CHECK(r.truncated);
  CHECK(r.final_reward == 0.0);
  CHECK(static_cast<int>(r.continuation.size()) == fx.spec.max_steps);
}

TEST_CASE("rollout_unique grounds each unique action once") {
  Fixture fx;
  std::string key = "look around";
  for (const core::Step& s : fx.expert.steps()) {
    fx.states[key] = {{s.thought.text, s.action.raw(), 1.0}};
    key += "\n" + s.action.canonical();
  }
  // the policy never proposes the expert's first action, so step 0 always splits
  fx.states[""] = {{"detour", "look around", 1.0}};
  const policy::TabularPolicy p(fx.states);

  const std::vector<sampler::CandidateSet> scan = sampler::scan_trajectory(p, fx.spec, fx.expert, 5, 3);
  REQUIRE(sampler::needs_deliberation(scan[0]));

  const std::map<std::string, rollout::RolloutRecord> records =
      rollout::rollout_unique(p, fx.spec, fx.expert, 0, scan[0], 3);
  REQUIRE(records.size() == 2);

  const std::string expert_key = fx.expert.steps()[0].action.canonical();
  REQUIRE(records.count(expert_key) == 1);
  CHECK(records.at(expert_key).is_expert_tail);
  CHECK(records.at(expert_key).final_reward == fx.expert.reward());

  REQUIRE(records.count("look around") == 1);
  const rollout::RolloutRecord& looked = records.at("look around");
  CHECK_FALSE(looked.is_expert_tail);
  CHECK(looked.final_reward == 1.0);
  CHECK(looked.continuation.size() == fx.expert.steps().size() + 1);
  CHECK(looked.candidate.thought.text == "detour");  // first-occurrence sample thought

  // rerolling the expert executes it fresh instead of copying the tail
  rollout::Options options;
  options.reroll_expert = true;
  const std::map<std::string, rollout::RolloutRecord> rerolled =
      rollout::rollout_unique(p, fx.spec, fx.expert, 0, scan[0], 3, options);
  CHECK_FALSE(rerolled.at(expert_key).is_expert_tail);

  // consistent candidate sets have nothing to ground
  const policy::TabularPolicy agreeing(testfx::point_mass_table(fx.expert));
  const std::vector<sampler::CandidateSet> quiet =
      sampler::scan_trajectory(agreeing, fx.spec, fx.expert, 5, 3);
  CHECK_THROWS_AS(rollout::rollout_unique(agreeing, fx.spec, fx.expert, 0, quiet[0], 3), Error);
}
