#include "sand/env.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "sand/rng.hpp"
#include "sand/strings.hpp"

namespace sand::env {

const char* reward_mode_name(RewardMode m) {
  return m == RewardMode::binary ? "binary" : "granular";
}

RewardMode parse_reward_mode(std::string_view name) {
  if (name == "binary") return RewardMode::binary;
  if (name == "granular") return RewardMode::granular;
  raise(errc::validation, "unknown reward mode '" + std::string(name) + "'");
}

const char* subgoal_kind_name(SubgoalKind k) {
  switch (k) {
    case SubgoalKind::locate: return "locate";
    case SubgoalKind::hold: return "hold";
    case SubgoalKind::place: return "place";
    case SubgoalKind::open_recep: return "open";
    case SubgoalKind::focus: return "focus";
  }
  return "place";
}

SubgoalKind parse_subgoal_kind(std::string_view name) {
  if (name == "locate") return SubgoalKind::locate;
  if (name == "hold") return SubgoalKind::hold;
  if (name == "place") return SubgoalKind::place;
  if (name == "open") return SubgoalKind::open_recep;
  if (name == "focus") return SubgoalKind::focus;
  raise(errc::validation, "unknown subgoal kind '" + std::string(name) + "'");
}

// ===================================================================
// fixed world geometry
// ===================================================================

namespace {

const std::vector<std::string> kRooms = {"hallway", "kitchen", "pantry", "workshop"};

struct ReceptacleInfo {
  const char* name;
  const char* room;
  bool container;  // containers open/close; surfaces are always visible
};

const std::array<ReceptacleInfo, 7> kReceptacles = {{
    {"fridge", "kitchen", true},
    {"cupboard", "kitchen", true},
    {"table", "kitchen", false},
    {"shelf", "pantry", false},
    {"crate", "pantry", true},
    {"bench", "workshop", false},
    {"toolbox", "workshop", true},
}};

const std::vector<std::string> kObjects = {"egg",  "apple",  "mug",
                                           "book", "hammer", "thermometer"};

int receptacle_index(const std::string& name) {
  for (std::size_t i = 0; i < kReceptacles.size(); ++i)
    if (name == kReceptacles[i].name) return static_cast<int>(i);
  return -1;
}

bool is_room(const std::string& name) {
  return std::find(kRooms.begin(), kRooms.end(), name) != kRooms.end();
}

bool is_object(const std::string& name) {
  return std::find(kObjects.begin(), kObjects.end(), name) != kObjects.end();
}

std::string article(const std::string& noun) {
  if (noun.empty()) return "a";
  switch (noun.front()) {
    case 'a': case 'e': case 'i': case 'o': case 'u': return "an";
    default: return "a";
  }
}

std::string with_article(const std::string& noun) { return article(noun) + " " + noun; }

// "an egg", "an egg and a mug", "an egg, a mug, and a book"
std::string list_phrase(const std::vector<std::string>& nouns) {
  std::string out;
  for (std::size_t i = 0; i < nouns.size(); ++i) {
    if (i > 0) {
      if (nouns.size() == 2) out += " and ";
      else out += (i + 1 == nouns.size()) ? ", and " : ", ";
    }
    out += with_article(nouns[i]);
  }
  return out;
}

std::string room_description(const std::string& room) {
  if (room == "hallway")
    return "You are in the hallway. Doors lead to the kitchen, the pantry, and the workshop.";
  std::vector<std::string> receps;
  for (const auto& r : kReceptacles)
    if (room == r.room) receps.emplace_back(r.name);
  return "You are in the " + room + ". You see " + list_phrase(receps) + ".";
}

}  // namespace

// ===================================================================
// world state
// ===================================================================

struct TextGridEnv::State {
  TaskSpec spec;
  std::string room = "hallway";
  std::map<std::string, std::string> object_location;  // object -> receptacle | "inventory"
  std::map<std::string, bool> open_flags;              // containers only
  std::set<SubgoalKind> achieved;
  int steps = 0;
  bool terminated = false;
  bool success = false;
  std::string initial_observation;

  bool holding(const std::string& obj) const {
    auto it = object_location.find(obj);
    return it != object_location.end() && it->second == "inventory";
  }

  bool receptacle_reachable(const std::string& recep) const {
    int idx = receptacle_index(recep);
    return idx >= 0 && kReceptacles[static_cast<std::size_t>(idx)].room == room;
  }

  bool receptacle_searchable(const std::string& recep) const {
    // contents visible: surface, or container currently open
    int idx = receptacle_index(recep);
    if (idx < 0) return false;
    const auto& info = kReceptacles[static_cast<std::size_t>(idx)];
    return !info.container || open_flags.at(recep);
  }

  bool object_visible(const std::string& obj) const {
    auto it = object_location.find(obj);
    if (it == object_location.end() || it->second == "inventory") return false;
    return receptacle_reachable(it->second) && receptacle_searchable(it->second);
  }

  std::vector<std::string> contents(const std::string& recep) const {
    std::vector<std::string> out;
    for (const auto& obj : kObjects) {
      auto it = object_location.find(obj);
      if (it != object_location.end() && it->second == recep) out.push_back(obj);
    }
    return out;
  }

  std::string contents_phrase(const std::string& recep) const {
    int idx = receptacle_index(recep);
    const bool container = kReceptacles[static_cast<std::size_t>(idx)].container;
    const auto objs = contents(recep);
    if (objs.empty()) return "The " + recep + " is empty.";
    return std::string(container ? "In" : "On") + " the " + recep + " you see " +
           list_phrase(objs) + ".";
  }

  void refresh_achievements() {
    const Goal& g = spec.goal;
    for (const Subgoal& sg : g.subgoals) {
      switch (sg.kind) {
        case SubgoalKind::locate:
          if (holding(g.target_object) || object_visible(g.target_object))
            achieved.insert(SubgoalKind::locate);
          break;
        case SubgoalKind::hold:
          if (holding(g.target_object)) achieved.insert(SubgoalKind::hold);
          break;
        case SubgoalKind::place:
          if (object_location.at(g.target_object) == g.target_receptacle)
            achieved.insert(SubgoalKind::place);
          break;
        case SubgoalKind::open_recep: {
          auto it = open_flags.find(g.target_receptacle);
          if (it != open_flags.end() && it->second) achieved.insert(SubgoalKind::open_recep);
          break;
        }
        case SubgoalKind::focus:
          break;  // set directly by the focus handler
      }
    }
  }

  bool all_achieved() const {
    for (const Subgoal& sg : spec.goal.subgoals)
      if (!achieved.count(sg.kind)) return false;
    return true;
  }
};

// ===================================================================
// construction
// ===================================================================

namespace {

void validate_goal(const TaskSpec& spec) {
  const Goal& g = spec.goal;
  if (!is_object(g.target_object))
    raise(errc::invalid_task, "unknown target object '" + g.target_object + "'");
  if (receptacle_index(g.target_receptacle) < 0)
    raise(errc::invalid_task, "unknown target receptacle '" + g.target_receptacle + "'");
  if (g.subgoals.empty()) raise(errc::invalid_task, "goal has no subgoals");
  if (spec.max_steps < 1) raise(errc::invalid_task, "max_steps must be >= 1");
  std::set<SubgoalKind> seen;
  double weight_sum = 0.0;
  for (const Subgoal& sg : g.subgoals) {
    if (!seen.insert(sg.kind).second)
      raise(errc::invalid_task, std::string("duplicate subgoal '") + subgoal_kind_name(sg.kind) + "'");
    if (sg.weight < 0.0) raise(errc::invalid_task, "negative subgoal weight");
    weight_sum += sg.weight;
  }
  if (spec.reward_mode == RewardMode::granular && std::abs(weight_sum - 1.0) > 1e-9)
    raise(errc::invalid_task,
          "granular subgoal weights sum to " + strings::format_double(weight_sum, 6) +
              ", expected 1");
}

}  // namespace

TextGridEnv::TextGridEnv(const TaskSpec& spec) : st_(std::make_shared<State>()) {
  validate_goal(spec);
  st_->spec = spec;
  rng::SplitMix64 gen(rng::derive(spec.world_seed, 0x77611dull));
  for (const auto& obj : kObjects) {
    const auto idx = gen.bounded(kReceptacles.size());
    st_->object_location[obj] = kReceptacles[static_cast<std::size_t>(idx)].name;
  }
  for (const auto& r : kReceptacles)
    if (r.container) st_->open_flags[r.name] = false;
  st_->initial_observation = room_description(st_->room);
  st_->refresh_achievements();
  st_->success = st_->all_achieved();
  st_->terminated = st_->success;  // degenerate goals can hold at reset
}

const std::string& TextGridEnv::initial_observation() const {
  return st_->initial_observation;
}

bool TextGridEnv::terminated() const { return st_->terminated; }
int TextGridEnv::steps_taken() const { return st_->steps; }
int TextGridEnv::max_steps() const { return st_->spec.max_steps; }
bool TextGridEnv::truncated() const { return st_->terminated && !st_->success; }
bool TextGridEnv::success() const { return st_->success; }

// ===================================================================
// stepping
// ===================================================================

EnvOutcome TextGridEnv::step(const core::Action& a) {
  State& st = *st_;
  if (st.terminated) raise(errc::episode_closed, "step after termination");

  const std::string& cmd = a.canonical();
  std::string obs = "Nothing happened";

  auto tail_after = [&](std::string_view prefix) -> std::optional<std::string> {
    if (!strings::starts_with(cmd, prefix)) return std::nullopt;
    return std::string(cmd.substr(prefix.size()));
  };

  if (auto room = tail_after("go to ")) {
    if (is_room(*room) && *room != st.room) {
      st.room = *room;
      obs = room_description(st.room);
    }
  } else if (auto recep = tail_after("open ")) {
    int idx = receptacle_index(*recep);
    if (idx >= 0 && kReceptacles[static_cast<std::size_t>(idx)].container &&
        st.receptacle_reachable(*recep) && !st.open_flags[*recep]) {
      st.open_flags[*recep] = true;
      obs = "You open the " + *recep + ". " + st.contents_phrase(*recep);
    }
  } else if (auto recep = tail_after("close ")) {
    int idx = receptacle_index(*recep);
    if (idx >= 0 && kReceptacles[static_cast<std::size_t>(idx)].container &&
        st.receptacle_reachable(*recep) && st.open_flags[*recep]) {
      st.open_flags[*recep] = false;
      obs = "You close the " + *recep + ".";
    }
  } else if (auto rest = tail_after("take ")) {
    const auto sep = rest->find(" from ");
    if (sep != std::string::npos) {
      const std::string obj = rest->substr(0, sep);
      const std::string recep = rest->substr(sep + 6);
      const bool have_free_hand =
          std::none_of(kObjects.begin(), kObjects.end(),
                       [&](const std::string& o) { return st.holding(o); });
      if (is_object(obj) && st.receptacle_reachable(recep) && st.receptacle_searchable(recep) &&
          st.object_location.at(obj) == recep && have_free_hand) {
        st.object_location[obj] = "inventory";
        obs = "You take the " + obj + " from the " + recep + ".";
      }
    }
  } else if (auto rest = tail_after("put ")) {
    auto sep = rest->find(" in ");
    std::size_t sep_len = 4;
    if (sep == std::string::npos) {
      sep = rest->find(" on ");
    }
    if (sep != std::string::npos) {
      const std::string obj = rest->substr(0, sep);
      const std::string recep = rest->substr(sep + sep_len);
      if (is_object(obj) && st.holding(obj) && st.receptacle_reachable(recep) &&
          st.receptacle_searchable(recep)) {
        st.object_location[obj] = recep;
        const int idx = receptacle_index(recep);
        const bool container = kReceptacles[static_cast<std::size_t>(idx)].container;
        obs = "You put the " + obj + (container ? " in the " : " on the ") + recep + ".";
      }
    }
  } else if (auto thing = tail_after("examine ")) {
    if (int idx = receptacle_index(*thing); idx >= 0 && st.receptacle_reachable(*thing)) {
      const auto& info = kReceptacles[static_cast<std::size_t>(idx)];
      if (!info.container) obs = st.contents_phrase(*thing);
      else if (st.open_flags[*thing]) obs = "The " + *thing + " is open. " + st.contents_phrase(*thing);
      else obs = "The " + *thing + " is closed.";
    } else if (is_object(*thing) && (st.holding(*thing) || st.object_visible(*thing))) {
      obs = "You see nothing special about the " + *thing + ".";
    }
  } else if (auto obj = tail_after("focus on ")) {
    if (st.spec.reward_mode == RewardMode::granular && is_object(*obj) &&
        (st.holding(*obj) || st.object_visible(*obj))) {
      obs = "You focus on the " + *obj + ".";
      if (*obj == st.spec.goal.target_object) st.achieved.insert(SubgoalKind::focus);
    }
  }

  st.steps += 1;
  st.refresh_achievements();
  st.success = st.all_achieved();
  st.terminated = st.success || st.steps >= st.spec.max_steps;

  EnvOutcome out;
  out.observation = core::Observation{obs};
  out.done = st.terminated;
  if (st.terminated) out.reward_if_done = score();
  return out;
}

double TextGridEnv::score() const {
  const State& st = *st_;
  if (!st.terminated) raise(errc::episode_open, "score before termination");
  if (st.spec.reward_mode == RewardMode::binary) return st.success ? 1.0 : 0.0;
  double total = 0.0;
  for (const Subgoal& sg : st.spec.goal.subgoals)
    if (st.achieved.count(sg.kind)) total += sg.weight;
  return std::min(1.0, std::max(0.0, total));
}

// ===================================================================
// inspection
// ===================================================================

std::string TextGridEnv::world_fingerprint() const {
  const State& st = *st_;
  std::ostringstream out;
  out << "room=" << st.room << ";objects=";
  for (const auto& obj : kObjects) out << obj << ":" << st.object_location.at(obj) << ",";
  out << ";open=";
  for (const auto& r : kReceptacles)
    if (r.container) out << r.name << ":" << (st.open_flags.at(r.name) ? 1 : 0) << ",";
  out << ";achieved=";
  for (const Subgoal& sg : st.spec.goal.subgoals)
    if (st.achieved.count(sg.kind)) out << subgoal_kind_name(sg.kind) << ",";
  return out.str();
}

const std::vector<std::string>& TextGridEnv::object_names() { return kObjects; }

const std::vector<std::string>& TextGridEnv::receptacle_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& r : kReceptacles) out.emplace_back(r.name);
    return out;
  }();
  return names;
}

std::string TextGridEnv::location_of_object(const std::string& object) const {
  auto it = st_->object_location.find(object);
  if (it == st_->object_location.end())
    raise(errc::precondition, "unknown object '" + object + "'");
  return it->second;
}

std::string TextGridEnv::room_of_receptacle(const std::string& recep) {
  int idx = receptacle_index(recep);
  if (idx < 0) raise(errc::precondition, "unknown receptacle '" + recep + "'");
  return kReceptacles[static_cast<std::size_t>(idx)].room;
}

bool TextGridEnv::receptacle_is_container(const std::string& recep) {
  int idx = receptacle_index(recep);
  if (idx < 0) raise(errc::precondition, "unknown receptacle '" + recep + "'");
  return kReceptacles[static_cast<std::size_t>(idx)].container;
}

// ===================================================================
// factories and replay
// ===================================================================

std::unique_ptr<TextGridEnv> reset(const TaskSpec& spec) {
  return std::make_unique<TextGridEnv>(spec);
}

SessionFactory textgrid_factory() {
  return [](const TaskSpec& spec) -> std::unique_ptr<Session> {
    return std::make_unique<TextGridEnv>(spec);
  };
}

std::unique_ptr<Session> replay_prefix(const SessionFactory& factory, const TaskSpec& spec,
                                       const core::Trajectory& e, std::size_t count) {
  if (count > e.steps().size())
    raise(errc::precondition, "replay of " + std::to_string(count) + " steps from a " +
                                  std::to_string(e.steps().size()) + "-step trajectory");
  auto session = factory(spec);
  for (std::size_t t = 0; t < count; ++t) {
    const core::Step& s = e.steps()[t];
    EnvOutcome out = session->step(s.action);
    if (s.observation && s.observation->text != out.observation.text)
      raise(errc::replay_divergence,
            "step " + std::to_string(t) + ": recorded observation \"" + s.observation->text +
                "\" but the environment said \"" + out.observation.text + "\"");
    if (out.done && t + 1 < count)
      raise(errc::replay_divergence,
            "episode terminated at replay step " + std::to_string(t) +
                " but the trajectory continues");
  }
  return session;
}

std::unique_ptr<Session> replay_prefix(const TaskSpec& spec, const core::Trajectory& e,
                                       std::size_t count) {
  return replay_prefix(textgrid_factory(), spec, e, count);
}

}  // namespace sand::env
