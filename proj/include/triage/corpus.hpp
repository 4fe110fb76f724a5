#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "triage/annotation.hpp"

namespace triage {

// Crisis level: 0 no crisis, 1 low crisis, 2 medium-to-high crisis.
using Label = int;
inline constexpr int kNumLabels = 3;

inline bool label_valid(Label l) { return l >= 0 && l < kNumLabels; }

enum class Speaker { kCaller, kOperator };

const char* speaker_name(Speaker s);                 // "caller" / "operator"
Speaker speaker_from_name(const std::string& name);  // throws ParseError

enum class Gender { kMale, kFemale };

// One diarized, time-stamped utterance.
struct Segment {
  Speaker speaker = Speaker::kCaller;
  double start_s = 0.0;
  double end_s = 0.0;
  std::string text;
  std::optional<ParalinguisticAnnotation> annotation;

  bool operator==(const Segment&) const = default;
};

// One hotline call with its subject-level label.
struct Call {
  std::string call_id;
  Label label = 0;
  std::optional<int> age;
  std::optional<Gender> gender;
  std::vector<Segment> segments;

  bool operator==(const Call&) const = default;

  double duration_s() const {
    return segments.empty() ? 0.0
                            : segments.back().end_s - segments.front().start_s;
  }
};

using Corpus = std::vector<Call>;

// All invariant violations of a call, as human-readable messages naming the
// offending segment. Empty means valid. Checked: non-empty sorted
// non-overlapping segments, end_s > start_s >= 0, non-blank text, positive
// duration, well-formed annotations, valid label.
std::vector<std::string> call_issues(const Call& call);

// Throws ValidationError (message lists every issue) when call_issues is
// non-empty.
void validate_call(const Call& call);

struct CorpusStats {
  std::size_t n_calls = 0;
  std::map<Label, std::size_t> label_histogram;
  double mean_duration_min = 0.0;
  double std_duration_min = 0.0;  // population std
  std::map<int, std::size_t> age_histogram;
  std::map<std::string, std::size_t> gender_counts;  // keys "M", "F"
};

// Duration moments in minutes; age/gender nulls are skipped.
// Throws ValidationError on an empty corpus.
CorpusStats corpus_stats(const Corpus& corpus);

// --- Corpus file format: UTF-8, one JSON object per line -------------------
//
// {"call_id": str, "label": 0|1|2, "age": int|null, "gender": "M"|"F"|null,
//  "segments": [{"speaker": "caller"|"operator", "start_s": float,
//                "end_s": float, "text": str, "annotation": {...}|null}]}
//
// annotation: {"cues": [str], "affect_summary": str, "emotion_ranking": [str]}

// Parse and validate a whole corpus file. Errors name the line (and field
// where applicable); duplicate call_ids are rejected.
Corpus parse_corpus(const std::string& path);

// Same grammar, from an in-memory string.
Corpus parse_corpus_string(const std::string& text);

std::string serialize_corpus(const Corpus& corpus);
void write_corpus(const Corpus& corpus, const std::string& path);

// Single call <-> single JSON line.
std::string serialize_call(const Call& call);
Call parse_call_line(const std::string& line, std::size_t line_no);

}  // namespace triage
