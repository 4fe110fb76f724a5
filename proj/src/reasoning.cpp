#include "triage/reasoning.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <optional>
#include <sstream>

#include "json.hpp"

#include "triage/enrichment.hpp"
#include "triage/errors.hpp"
#include "triage/random.hpp"
#include "triage/resources.hpp"

namespace triage {

namespace {

constexpr std::array<const char*, 3> kDomainKeys = {"affective", "behavioral",
                                                    "cognitive"};
constexpr std::array<const char*, 3> kDomainNames = {"Affective", "Behavioural",
                                                     "Cognitive"};

void check_keys(const nlohmann::json& obj,
                std::initializer_list<const char*> allowed,
                const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) {
          return key == a;
        }) == allowed.end())
      throw ParseError("unknown key \"" + key + "\" in " + where);
  }
}

void check_thresholds(const TafConfig& cfg) {
  if (!(3 <= cfg.threshold_low && cfg.threshold_low < cfg.threshold_high &&
        cfg.threshold_high < 9))
    throw ValidationError("TAF thresholds must satisfy 3 <= low < high < 9; "
                          "got (" + std::to_string(cfg.threshold_low) + ", " +
                          std::to_string(cfg.threshold_high) + ")");
}

void check_score(int score, const char* domain) {
  if (score < 1 || score > 3)
    throw ValidationError(std::string(domain) + " score " +
                          std::to_string(score) + " outside [1, 3]");
}

// Last occurrence of `phrase` in `lower`, then the integer that follows it
// (after optional spaces). nullopt when the phrase or the number is absent.
std::optional<int> last_number_after(const std::string& lower,
                                     const std::string& phrase) {
  const auto pos = lower.rfind(phrase);
  if (pos == std::string::npos) return std::nullopt;
  std::size_t i = pos + phrase.size();
  while (i < lower.size() && lower[i] == ' ') ++i;
  std::size_t digits = 0;
  while (i + digits < lower.size() &&
         std::isdigit(static_cast<unsigned char>(lower[i + digits])))
    ++digits;
  if (digits == 0 || digits > 6) return std::nullopt;
  return std::stoi(lower.substr(i, digits));
}

std::string lowercase(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

// First annotated line of the enriched transcript, used as the evidence
// clause of the template rationale.
std::string evidence_sentence(const std::string& enriched_text) {
  std::istringstream in(enriched_text);
  std::string line;
  while (std::getline(in, line)) {
    const auto open = line.find(" [");
    if (open == std::string::npos || line.empty() || line.back() != ']')
      continue;
    try {
      const auto a = parse_annotation_block(line.substr(open + 1));
      return "Paralinguistic cues such as \"" + a.cues.front() +
             "\" (overall: " + a.affect_summary + ") inform the ratings.";
    } catch (const ParseError&) {
      continue;
    }
  }
  return "No paralinguistic annotations are available, so the ratings rest "
         "on the transcript text alone.";
}

}  // namespace

TafConfig::TafConfig() : criteria(default_taf_criteria()) {}

TafCriteria parse_taf_criteria(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("criteria file is not valid JSON: ") +
                     e.what());
  }
  if (!j.is_object()) throw ParseError("criteria file must be a JSON object");
  check_keys(j, {"version", "domains"}, "criteria file");
  if (!j.contains("version") || !j["version"].is_number_integer())
    throw ParseError("criteria file needs an integer \"version\"");
  if (!j.contains("domains") || !j["domains"].is_object())
    throw ParseError("criteria file needs a \"domains\" object");
  const auto& domains = j["domains"];
  check_keys(domains, {"affective", "behavioral", "cognitive"}, "\"domains\"");

  TafCriteria out;
  for (std::size_t d = 0; d < kDomainKeys.size(); ++d) {
    const std::string key = kDomainKeys[d];
    if (!domains.contains(key) || !domains[key].is_object())
      throw ParseError("criteria file is missing domain \"" + key + "\"");
    const auto& scores = domains[key];
    check_keys(scores, {"1", "2", "3"}, "domain \"" + key + "\"");
    for (int s = 1; s <= 3; ++s) {
      const std::string sk = std::to_string(s);
      if (!scores.contains(sk) || !scores[sk].is_string() ||
          scores[sk].get<std::string>().empty())
        throw ParseError("domain \"" + key + "\" needs a non-empty string "
                         "for score " + sk);
      out[d][static_cast<std::size_t>(s - 1)] = scores[sk].get<std::string>();
    }
  }
  return out;
}

TafCriteria load_taf_criteria(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open criteria file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_taf_criteria(buf.str());
}

const TafCriteria& default_taf_criteria() {
  static const TafCriteria criteria = parse_taf_criteria(taf_criteria_json());
  return criteria;
}

std::string format_taf_criteria(const TafConfig& cfg) {
  std::string out;
  for (std::size_t d = 0; d < kDomainNames.size(); ++d)
    for (int s = 1; s <= 3; ++s) {
      out += kDomainNames[d];
      out += ' ';
      out += std::to_string(s);
      out += ": ";
      out += cfg.criteria[d][static_cast<std::size_t>(s - 1)];
      out += '\n';
    }
  return out;
}

Label level_from_total(int total, const TafConfig& cfg) {
  check_thresholds(cfg);
  if (total < 3 || total > 9)
    throw ValidationError("TAF total " + std::to_string(total) +
                          " outside [3, 9]");
  if (total <= cfg.threshold_low) return 0;
  if (total <= cfg.threshold_high) return 1;
  return 2;
}

TafAssessment make_assessment(int affective, int behavioral, int cognitive,
                              const TafConfig& cfg) {
  check_score(affective, "affective");
  check_score(behavioral, "behavioral");
  check_score(cognitive, "cognitive");
  TafAssessment a;
  a.affective = affective;
  a.behavioral = behavioral;
  a.cognitive = cognitive;
  a.total = affective + behavioral + cognitive;
  a.level = level_from_total(a.total, cfg);
  return a;
}

TafAssessment assessment_for_label(Label label, const TafConfig& cfg,
                                   std::uint64_t seed) {
  if (!label_valid(label))
    throw ValidationError("invalid label " + std::to_string(label));
  check_thresholds(cfg);
  std::vector<TafAssessment> matching;
  for (int a = 1; a <= 3; ++a)
    for (int b = 1; b <= 3; ++b)
      for (int c = 1; c <= 3; ++c) {
        const auto candidate = make_assessment(a, b, c, cfg);
        if (candidate.level == label) matching.push_back(candidate);
      }
  if (matching.empty())
    throw ValidationError("no TAF score triple maps to label " +
                          std::to_string(label));
  rnd::Rng rng(seed);
  return rng.choice(matching);
}

ReasoningValidation validate_reasoning(const std::string& text,
                                       Label expected_label,
                                       const TafConfig& cfg) {
  check_thresholds(cfg);
  ReasoningValidation v;
  const std::string lower = lowercase(text);

  const auto affective = last_number_after(lower, "affective score of");
  const auto behavioral_us = lower.rfind("behavioral score of");
  const auto behavioral_uk = lower.rfind("behavioural score of");
  std::optional<int> behavioral;
  if (behavioral_us != std::string::npos &&
      (behavioral_uk == std::string::npos || behavioral_us > behavioral_uk))
    behavioral = last_number_after(lower, "behavioral score of");
  else if (behavioral_uk != std::string::npos)
    behavioral = last_number_after(lower, "behavioural score of");
  const auto cognitive = last_number_after(lower, "cognitive score of");
  const auto total = last_number_after(lower, "total score of");
  const auto level = last_number_after(lower, "crisis level is");

  if (!affective) v.violations.push_back("missing affective score");
  if (!behavioral) v.violations.push_back("missing behavioural score");
  if (!cognitive) v.violations.push_back("missing cognitive score");
  if (!total) v.violations.push_back("missing total score");
  if (!level) v.violations.push_back("missing crisis level");

  const auto range_check = [&](const std::optional<int>& s,
                               const char* name) {
    if (s && (*s < 1 || *s > 3))
      v.violations.push_back(std::string(name) + " score " +
                             std::to_string(*s) + " outside [1, 3]");
  };
  range_check(affective, "affective");
  range_check(behavioral, "behavioural");
  range_check(cognitive, "cognitive");

  if (affective && behavioral && cognitive && total) {
    const int sum = *affective + *behavioral + *cognitive;
    if (*total != sum)
      v.violations.push_back("total score " + std::to_string(*total) +
                             " != sum of domain scores " +
                             std::to_string(sum));
  }
  if (level && (*level < 0 || *level >= kNumLabels))
    v.violations.push_back("crisis level " + std::to_string(*level) +
                           " outside [0, 2]");
  if (total && level && *total >= 3 && *total <= 9 && label_valid(*level)) {
    const Label implied = level_from_total(*total, cfg);
    if (*level != implied)
      v.violations.push_back("stated level " + std::to_string(*level) +
                             " inconsistent with total " +
                             std::to_string(*total) + " (implies level " +
                             std::to_string(implied) + ")");
  }
  if (level && label_valid(*level) && *level != expected_label)
    v.violations.push_back("stated level " + std::to_string(*level) +
                           " != expected label " +
                           std::to_string(expected_label));

  if (v.violations.empty()) {
    TafAssessment a;
    a.affective = *affective;
    a.behavioral = *behavioral;
    a.cognitive = *cognitive;
    a.total = *total;
    a.level = *level;
    v.assessment = a;
  }
  return v;
}

ReasoningTarget render_reasoning(const TafAssessment& assessment,
                                 const std::string& enriched_text,
                                 const TafConfig& cfg) {
  check_thresholds(cfg);
  const auto crit = [&](std::size_t domain, int score) -> const std::string& {
    return cfg.criteria[domain][static_cast<std::size_t>(score - 1)];
  };
  const auto frac = [](int score) {
    return " (" + std::to_string(score) + "/3).";
  };
  std::string text = "Assessment of the call. ";
  text += evidence_sentence(enriched_text);
  text += " Affective domain: " + crit(0, assessment.affective) +
          " This supports an Affective score of " +
          std::to_string(assessment.affective) + frac(assessment.affective);
  text += " Behavioural domain: " + crit(1, assessment.behavioral) +
          " This supports a Behavioural score of " +
          std::to_string(assessment.behavioral) + frac(assessment.behavioral);
  text += " Cognitive domain: " + crit(2, assessment.cognitive) +
          " This supports a Cognitive score of " +
          std::to_string(assessment.cognitive) + frac(assessment.cognitive);
  text += " The domain scores add up to a total score of " +
          std::to_string(assessment.total) +
          ", so the caller's crisis level is " +
          std::to_string(assessment.level) + ".";

  ReasoningTarget target{text, assessment};
  const auto v = validate_reasoning(target.text, assessment.level, cfg);
  if (!v.ok())
    throw ValidationError("rendered reasoning failed validation: " +
                          v.violations.front());
  return target;
}

ReasoningTarget generate_reasoning_template(const std::string& enriched_text,
                                            Label label, const TafConfig& cfg,
                                            std::uint64_t seed) {
  return render_reasoning(assessment_for_label(label, cfg, seed),
                          enriched_text, cfg);
}

ReasoningResult generate_reasoning_backend(const std::string& enriched_text,
                                           Label label, const TafConfig& cfg,
                                           TextGenBackend& backend,
                                           const ReasoningBackendOptions& opts) {
  if (!label_valid(label))
    throw ValidationError("invalid label " + std::to_string(label));
  if (opts.max_attempts < 1)
    throw ValidationError("max_attempts must be at least 1");
  const std::string prompt = expand_template(
      reasoning_prompt_template(),
      {{"criteria", format_taf_criteria(cfg)},
       {"label", std::to_string(label)},
       {"threshold_low", std::to_string(cfg.threshold_low)},
       {"threshold_high", std::to_string(cfg.threshold_high)},
       {"transcript", enriched_text}});

  int transport_failures = 0;
  std::string last_error;
  for (int attempt = 1; attempt <= opts.max_attempts; ++attempt) {
    std::string reply;
    try {
      reply = backend.complete(prompt);
    } catch (const BackendError& e) {
      ++transport_failures;
      last_error = e.what();
      continue;
    }
    const auto v = validate_reasoning(reply, label, cfg);
    if (v.ok())
      return ReasoningResult{ReasoningTarget{reply, *v.assessment}, false,
                             attempt, "backend"};
  }
  if (transport_failures == opts.max_attempts)
    throw BackendError("reasoning backend unreachable after " +
                       std::to_string(opts.max_attempts) +
                       " attempts: " + last_error);
  ReasoningResult result;
  result.target = generate_reasoning_template(enriched_text, label, cfg,
                                              opts.seed);
  result.used_fallback = true;
  result.attempts = opts.max_attempts;
  result.source = "template-fallback";
  return result;
}

}  // namespace triage
