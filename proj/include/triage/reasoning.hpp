#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "triage/backends.hpp"
#include "triage/corpus.hpp"

namespace triage {

// Per-domain impairment scores on the 1-3 scale plus the derived total and
// crisis level.
struct TafAssessment {
  int affective = 1;
  int behavioral = 1;
  int cognitive = 1;
  int total = 3;
  Label level = 0;

  bool operator==(const TafAssessment&) const = default;
};

enum class TafDomain { kAffective = 0, kBehavioral = 1, kCognitive = 2 };

// Criterion text per domain x score (index [domain][score-1]).
using TafCriteria = std::array<std::array<std::string, 3>, 3>;

struct TafConfig {
  // total <= threshold_low -> level 0; <= threshold_high -> level 1; else 2.
  int threshold_low = 6;
  int threshold_high = 8;
  TafCriteria criteria;

  TafConfig();
};

// Parsed from the shipped criteria resource (or a user-supplied file of the
// same schema): {"version": int, "domains": {"affective": {"1": str, ...}, ...}}
TafCriteria parse_taf_criteria(const std::string& json_text);
TafCriteria load_taf_criteria(const std::string& path);
const TafCriteria& default_taf_criteria();

// Human-readable criteria listing, used inside prompts.
std::string format_taf_criteria(const TafConfig& cfg);

// Threshold mapping; throws ValidationError when total is outside [3, 9] or
// the thresholds are malformed (need 3 <= low < high < 9).
Label level_from_total(int total, const TafConfig& cfg);

// Build an assessment from explicit scores; validates ranges and fills the
// derived total and level.
TafAssessment make_assessment(int affective, int behavioral, int cognitive,
                              const TafConfig& cfg);

// Sample per-domain scores uniformly (seeded) from the triples whose total
// maps to `label`. Deterministic for fixed (label, cfg, seed).
TafAssessment assessment_for_label(Label label, const TafConfig& cfg,
                                   std::uint64_t seed);

// A diagnostic rationale paragraph and the scores it encodes.
struct ReasoningTarget {
  std::string text;
  TafAssessment assessment;

  bool operator==(const ReasoningTarget&) const = default;
};

// --- Validation -------------------------------------------------------------
//
// Extraction patterns (case-insensitive, last occurrence wins):
//   "Affective score of <n>", "Behavio(u)ral score of <n>",
//   "Cognitive score of <n>", "total score of <n>", "crisis level is <n>"

struct ReasoningValidation {
  std::vector<std::string> violations;
  std::optional<TafAssessment> assessment;  // set when the text is consistent

  bool ok() const { return violations.empty(); }
};

// Structural consistency check: all five fields present, scores in [1,3],
// total equal to the sum, level consistent with the thresholds, and level
// equal to the expected label. Violations are data, not errors.
ReasoningValidation validate_reasoning(const std::string& text,
                                       Label expected_label,
                                       const TafConfig& cfg);

// --- Generation -------------------------------------------------------------

// Deterministic rationale from a fixed sentence skeleton. Always passes
// validate_reasoning against `label`.
ReasoningTarget generate_reasoning_template(const std::string& enriched_text,
                                            Label label, const TafConfig& cfg,
                                            std::uint64_t seed);

// Same skeleton, explicit scores.
ReasoningTarget render_reasoning(const TafAssessment& assessment,
                                 const std::string& enriched_text,
                                 const TafConfig& cfg);

struct ReasoningBackendOptions {
  int max_attempts = 2;       // backend calls before falling back
  std::uint64_t seed = 0;     // seeds the template fallback
};

struct ReasoningResult {
  ReasoningTarget target;
  bool used_fallback = false;
  int attempts = 0;
  std::string source;  // "backend" or "template-fallback"
};

// Ask a text backend for the rationale; every response is validated, and
// after max_attempts invalid responses the deterministic template is used
// instead (recorded in the result — never silently). Throws BackendError
// only when every attempt failed at the transport level.
ReasoningResult generate_reasoning_backend(const std::string& enriched_text,
                                           Label label, const TafConfig& cfg,
                                           TextGenBackend& backend,
                                           const ReasoningBackendOptions& opts = {});

}  // namespace triage
