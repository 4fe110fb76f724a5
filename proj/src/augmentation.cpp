#include "triage/augmentation.hpp"

#include "triage/errors.hpp"

namespace triage {

namespace {

Chunk make_chunk(const Call& call, std::size_t index, std::size_t lo,
                 std::size_t hi) {
  Chunk c;
  c.chunk_id = call.call_id + "#" + std::to_string(index);
  c.call_id = call.call_id;
  c.label = call.label;
  c.segments.assign(call.segments.begin() + lo, call.segments.begin() + hi);
  c.span_start_s = c.segments.front().start_s;
  c.span_end_s = c.segments.back().end_s;
  return c;
}

}  // namespace

std::vector<Chunk> chunk_call(const Call& call, const ChunkConfig& cfg) {
  validate_call(call);
  if (cfg.target_duration_s <= 0.0)
    throw ValidationError("target_duration_s must be > 0");
  if (cfg.min_tail_fraction <= 0.0 || cfg.min_tail_fraction > 1.0)
    throw ValidationError("min_tail_fraction must be in (0, 1]");

  // Boundary indices: a chunk closes as soon as its span reaches the target.
  std::vector<std::size_t> bounds;  // exclusive end of each chunk
  std::size_t chunk_start = 0;
  for (std::size_t i = 0; i < call.segments.size(); ++i) {
    const double span = call.segments[i].end_s - call.segments[chunk_start].start_s;
    if (span >= cfg.target_duration_s) {
      bounds.push_back(i + 1);
      chunk_start = i + 1;
    }
  }
  if (chunk_start < call.segments.size()) {
    const double tail_span =
        call.segments.back().end_s - call.segments[chunk_start].start_s;
    if (!bounds.empty() &&
        tail_span < cfg.min_tail_fraction * cfg.target_duration_s) {
      bounds.back() = call.segments.size();  // merge short tail into previous
    } else {
      bounds.push_back(call.segments.size());
    }
  }

  std::vector<Chunk> chunks;
  chunks.reserve(bounds.size());
  std::size_t lo = 0;
  for (std::size_t k = 0; k < bounds.size(); ++k) {
    chunks.push_back(make_chunk(call, k, lo, bounds[k]));
    lo = bounds[k];
  }
  return chunks;
}

std::vector<Chunk> chunk_corpus(const Corpus& corpus, const ChunkConfig& cfg) {
  std::vector<Chunk> all;
  for (const Call& call : corpus) {
    auto chunks = chunk_call(call, cfg);
    all.insert(all.end(), std::make_move_iterator(chunks.begin()),
               std::make_move_iterator(chunks.end()));
  }
  return all;
}

Chunk whole_call_chunk(const Call& call) {
  validate_call(call);
  return make_chunk(call, 0, 0, call.segments.size());
}

std::string call_id_of_chunk(const std::string& chunk_id) {
  const auto pos = chunk_id.rfind('#');
  if (pos == std::string::npos)
    throw ParseError("chunk_id \"" + chunk_id + "\" has no '#'");
  return chunk_id.substr(0, pos);
}

Corpus chunks_as_corpus(const std::vector<Chunk>& chunks) {
  Corpus corpus;
  corpus.reserve(chunks.size());
  for (const Chunk& c : chunks) {
    Call call;
    call.call_id = c.chunk_id;
    call.label = c.label;
    call.segments = c.segments;
    corpus.push_back(std::move(call));
  }
  return corpus;
}

}  // namespace triage
