#include "triage/annotation.hpp"

#include <cstring>

namespace triage {

std::string sanitize_annotation_entry(const std::string& raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    if (std::strchr(kAnnotationReservedChars, c) != nullptr || c == ',') {
      out.push_back('/');
    } else {
      out.push_back(c);
    }
  }
  return out;
}

ParalinguisticAnnotation sanitize_annotation(ParalinguisticAnnotation a) {
  for (auto& c : a.cues) c = sanitize_annotation_entry(c);
  a.affect_summary = sanitize_annotation_entry(a.affect_summary);
  for (auto& e : a.emotion_ranking) e = sanitize_annotation_entry(e);
  return a;
}

namespace {

bool has_reserved(const std::string& s) {
  return s.find_first_of(kAnnotationReservedChars) != std::string::npos;
}

bool has_separator(const std::string& s) {
  return s.find(", ") != std::string::npos;
}

}  // namespace

std::vector<std::string> annotation_issues(const ParalinguisticAnnotation& a) {
  std::vector<std::string> issues;
  if (a.cues.empty()) issues.push_back("annotation has no cues");
  if (a.emotion_ranking.empty())
    issues.push_back("annotation has no emotion ranking");
  for (std::size_t i = 0; i < a.cues.size(); ++i) {
    if (a.cues[i].empty()) issues.push_back("cue " + std::to_string(i) + " is empty");
    if (has_reserved(a.cues[i]))
      issues.push_back("cue " + std::to_string(i) + " contains a reserved character");
    if (has_separator(a.cues[i]))
      issues.push_back("cue " + std::to_string(i) + " contains the ', ' separator");
  }
  if (has_reserved(a.affect_summary))
    issues.push_back("affect_summary contains a reserved character");
  if (has_separator(a.affect_summary))
    issues.push_back("affect_summary contains the ', ' separator");
  for (std::size_t i = 0; i < a.emotion_ranking.size(); ++i) {
    if (a.emotion_ranking[i].empty())
      issues.push_back("emotion " + std::to_string(i) + " is empty");
    if (has_reserved(a.emotion_ranking[i]))
      issues.push_back("emotion " + std::to_string(i) +
                       " contains a reserved character");
  }
  return issues;
}

}  // namespace triage
