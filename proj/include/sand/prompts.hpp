#pragma once

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sand::prompts {

/**
 * Named prompt templates. The five built-in assets (critique, deliberation,
 * textgrid_task, alfworld_task, sciworld_task) are embedded in the binary at
 * build time, byte-identical to the files under assets/prompts/. A directory
 * of <name>.txt files can override or extend them.
 */
class Registry {
 public:
  static const Registry& embedded();
  static Registry with_overrides(const std::string& dir);  // embedded + dir

  const std::string& get(const std::string& name) const;  // config error if unknown
  bool has(const std::string& name) const;
  std::vector<std::string> names() const;

 private:
  std::map<std::string, std::string> assets_;
};

// Replaces every occurrence of "{name}" for each given (name, value) pair.
// Unknown {tokens} in the template are left untouched (task prompts contain
// literal {obj}/{recep} text that must survive).
std::string fill(std::string_view tmpl,
                 const std::vector<std::pair<std::string, std::string>>& slots);

/**
 * Fidelity check: true iff `filled` consists of the template's literal
 * segments, in order, with arbitrary text standing where the named slots are.
 * The independent oracle behind the prompt-fidelity tests: a filled prompt
 * may differ from its template only inside slot spans.
 */
bool verify_fill(std::string_view tmpl, std::string_view filled,
                 const std::vector<std::string>& slot_names);

}  // namespace sand::prompts
