#pragma once

#include <optional>
#include <string>
#include <vector>

#include "triage/corpus.hpp"

namespace triage {

// Produces per-segment annotations for one call (or one batch of its
// segments). Output must be index-aligned with the input; nullopt means
// "no new annotation for this segment".
class AnnotatorBackend {
 public:
  virtual ~AnnotatorBackend() = default;
  virtual std::vector<std::optional<ParalinguisticAnnotation>> annotate(
      const std::vector<Segment>& segments) = 0;
};

struct AnnotateOptions {
  int batch_size = 8;     // segments per backend request
  int max_in_flight = 4;  // concurrent backend requests
};

// Returns a new call whose segments carry the backend's annotations
// (sanitized); segments with null backend output keep whatever annotation
// they already had. The input call is never modified. Backend batches run
// with bounded parallelism and are reassembled in segment order.
// Throws BackendError naming the call and segment range on failure.
Call annotate_call(const Call& call, AnnotatorBackend& backend,
                   const AnnotateOptions& opts = {});

// --- Enriched transcript text format ---------------------------------------
//
// One line per segment:
//   <Caller|Operator>: <text>
// and, when annotated and include_annotations is set, a trailing block:
//   <Caller|Operator>: <text> [cue1, cue2, <affect_summary>; Emotion: e1 > e2]
//
// '[' and ']' are block delimiters and must not occur in transcript text fed
// through this format; annotation entries are sanitized on ingestion.

std::string render_annotation(const ParalinguisticAnnotation& a);
std::string render_enriched_segment(const Segment& seg, bool include_annotations);
std::string render_enriched(const std::vector<Segment>& segments,
                            bool include_annotations);
std::string render_enriched(const Call& call, bool include_annotations);

struct EnrichedLine {
  Speaker speaker = Speaker::kCaller;
  std::string text;
  std::optional<ParalinguisticAnnotation> annotation;

  bool operator==(const EnrichedLine&) const = default;
};

// Parse one "[...]" block on its own. Throws ParseError on malformed blocks.
ParalinguisticAnnotation parse_annotation_block(const std::string& block);

// Inverse of render_enriched on its image. Throws ParseError naming the
// 1-based line number on malformed input.
std::vector<EnrichedLine> parse_enriched(const std::string& text);

}  // namespace triage
