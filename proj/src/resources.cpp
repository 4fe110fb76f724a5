#include "triage/resources.hpp"

#include "triage/errors.hpp"

namespace triage {
namespace detail {
extern const char* const kAnnotatorPrompt;
extern const char* const kReasoningPrompt;
extern const char* const kGenerationPrompt;
extern const char* const kZeroShotPrompt;
extern const char* const kTafCriteriaJson;
}  // namespace detail

const std::string& annotator_prompt_template() {
  static const std::string s = detail::kAnnotatorPrompt;
  return s;
}

const std::string& reasoning_prompt_template() {
  static const std::string s = detail::kReasoningPrompt;
  return s;
}

const std::string& generation_prompt() {
  static const std::string s = detail::kGenerationPrompt;
  return s;
}

const std::string& zero_shot_prompt_template() {
  static const std::string s = detail::kZeroShotPrompt;
  return s;
}

const std::string& taf_criteria_json() {
  static const std::string s = detail::kTafCriteriaJson;
  return s;
}

std::string expand_template(const std::string& tmpl,
                            const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t pos = 0;
  while (true) {
    const auto open = tmpl.find("{{", pos);
    if (open == std::string::npos) {
      out.append(tmpl, pos, std::string::npos);
      return out;
    }
    const auto close = tmpl.find("}}", open + 2);
    if (close == std::string::npos)
      throw ConfigError("unterminated '{{' in template");
    out.append(tmpl, pos, open - pos);
    const std::string key = tmpl.substr(open + 2, close - open - 2);
    const auto it = vars.find(key);
    if (it == vars.end())
      throw ConfigError("template placeholder '{{" + key +
                        "}}' has no value");
    out += it->second;
    pos = close + 2;
  }
}

}  // namespace triage
