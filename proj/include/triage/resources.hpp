#pragma once

#include <map>
#include <string>

namespace triage {

// Embedded copies of the files under resources/, baked in at build time.
// Edits to those files bump kResourceVersion (version.hpp).
const std::string& annotator_prompt_template();
const std::string& reasoning_prompt_template();
const std::string& generation_prompt();
const std::string& zero_shot_prompt_template();
const std::string& taf_criteria_json();

// Replaces every "{{key}}" in `tmpl` with vars.at(key). A placeholder with
// no matching entry throws ConfigError; unused entries are fine.
std::string expand_template(const std::string& tmpl,
                            const std::map<std::string, std::string>& vars);

}  // namespace triage
