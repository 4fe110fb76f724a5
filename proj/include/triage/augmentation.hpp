#pragma once

#include <string>
#include <vector>

#include "triage/corpus.hpp"

namespace triage {

// A contiguous, label-inheriting slice of a call's segment list; the unit of
// training and inference.
struct Chunk {
  std::string chunk_id;  // "<call_id>#<index>"
  std::string call_id;
  Label label = 0;
  std::vector<Segment> segments;
  double span_start_s = 0.0;
  double span_end_s = 0.0;

  double span_s() const { return span_end_s - span_start_s; }

  bool operator==(const Chunk&) const = default;
};

struct ChunkConfig {
  // A chunk closes once its span (last end_s - first start_s) reaches this.
  double target_duration_s = 400.0;
  // A trailing chunk strictly shorter than this fraction of the target is
  // merged into the previous chunk.
  double min_tail_fraction = 0.25;
};

// Split a call into non-overlapping, contiguous chunks. Segments are never
// split; concatenating the chunks' segment lists reproduces the call's
// segment list exactly; every call yields at least one chunk.
std::vector<Chunk> chunk_call(const Call& call, const ChunkConfig& cfg);

// chunk_call over every call, in corpus order.
std::vector<Chunk> chunk_corpus(const Corpus& corpus, const ChunkConfig& cfg);

// The whole call as a single chunk (the no-augmentation path).
Chunk whole_call_chunk(const Call& call);

// "<call_id>#<index>" -> call_id (text before the last '#').
std::string call_id_of_chunk(const std::string& chunk_id);

// Chunks re-exported in the corpus JSONL schema, chunk_ids as call_ids.
Corpus chunks_as_corpus(const std::vector<Chunk>& chunks);

}  // namespace triage
