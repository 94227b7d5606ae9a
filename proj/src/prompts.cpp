#include "sand/prompts.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sand/errors.hpp"
#include "sand/strings.hpp"
#include "sand_prompts_embedded.hpp"

namespace sand::prompts {

const Registry& Registry::embedded() {
  static const Registry reg = [] {
    Registry r;
    r.assets_["critique"] = embedded_assets::critique;
    r.assets_["deliberation"] = embedded_assets::deliberation;
    r.assets_["textgrid_task"] = embedded_assets::textgrid_task;
    r.assets_["alfworld_task"] = embedded_assets::alfworld_task;
    r.assets_["sciworld_task"] = embedded_assets::sciworld_task;
    return r;
  }();
  return reg;
}

Registry Registry::with_overrides(const std::string& dir) {
  Registry r = embedded();
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir))
    raise(errc::config, "prompt asset directory '" + dir + "' does not exist");
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    r.assets_[entry.path().stem().string()] = buf.str();
  }
  return r;
}

const std::string& Registry::get(const std::string& name) const {
  auto it = assets_.find(name);
  if (it == assets_.end()) raise(errc::config, "unknown prompt asset '" + name + "'");
  return it->second;
}

bool Registry::has(const std::string& name) const { return assets_.count(name) > 0; }

std::vector<std::string> Registry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : assets_) out.push_back(name);
  return out;
}

std::string fill(std::string_view tmpl,
                 const std::vector<std::pair<std::string, std::string>>& slots) {
  std::string out(tmpl);
  for (const auto& [name, value] : slots)
    out = strings::replace_all(out, "{" + name + "}", value);
  return out;
}

bool verify_fill(std::string_view tmpl, std::string_view filled,
                 const std::vector<std::string>& slot_names) {
  // Cut the template into literal segments around every slot occurrence.
  std::vector<std::string> segments;
  std::string rest(tmpl);
  while (true) {
    std::size_t best_pos = std::string::npos;
    std::size_t best_len = 0;
    for (const std::string& name : slot_names) {
      const std::string token = "{" + name + "}";
      const std::size_t pos = rest.find(token);
      if (pos != std::string::npos && pos < best_pos) {
        best_pos = pos;
        best_len = token.size();
      }
    }
    if (best_pos == std::string::npos) {
      segments.push_back(rest);
      break;
    }
    segments.push_back(rest.substr(0, best_pos));
    rest = rest.substr(best_pos + best_len);
  }

  // The filled text must contain the segments in order: the first anchored at
  // the start, the last anchored at the end, slot spans free in between.
  std::size_t pos = 0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const std::string& seg = segments[i];
    if (i == 0) {
      if (filled.substr(0, seg.size()) != seg) return false;
      pos = seg.size();
      continue;
    }
    if (i + 1 == segments.size()) {
      if (filled.size() < pos + seg.size()) return false;
      if (filled.substr(filled.size() - seg.size()) != seg) return false;
      return true;
    }
    const std::size_t hit = filled.find(seg, pos);
    if (hit == std::string_view::npos) return false;
    pos = hit + seg.size();
  }
  return segments.size() == 1 ? filled == segments[0] : true;
}

}  // namespace sand::prompts
