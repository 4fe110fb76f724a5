#pragma once

#include <string>
#include <vector>

namespace triage {

// Paralinguistic cues attached to one utterance: acoustic manifestations
// ("Trembling voice", "obvious sobbing"), a short affect clause, and the
// salience-ordered emotions. Rendered inline as
//   [cue1, cue2, <affect_summary>; Emotion: e1 > e2]
struct ParalinguisticAnnotation {
  std::vector<std::string> cues;
  std::string affect_summary;
  std::vector<std::string> emotion_ranking;

  bool operator==(const ParalinguisticAnnotation&) const = default;
};

// Characters with structural meaning in the inline bracket block. Entries
// must not contain any of them.
inline constexpr const char* kAnnotationReservedChars = "[];>";

// Replace reserved characters with '/'. The comma-space pair ", " separates
// cues from each other and from the affect summary, so commas are replaced
// as well; raw backend strings go through this before storage.
std::string sanitize_annotation_entry(const std::string& raw);

// Sanitize every entry of an annotation in place.
ParalinguisticAnnotation sanitize_annotation(ParalinguisticAnnotation a);

// Grammar violations for an annotation; empty means well-formed.
// Checks: >=1 cue, >=1 emotion, no reserved characters anywhere, and no
// ", " separator sequence inside cues or the affect summary.
std::vector<std::string> annotation_issues(const ParalinguisticAnnotation& a);

}  // namespace triage
