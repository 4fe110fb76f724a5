#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "triage/augmentation.hpp"
#include "triage/modeling.hpp"

namespace triage {

// Readout for one chunk; predicted is the argmax with ties resolved toward
// the higher crisis level.
struct Prediction {
  std::string chunk_id;
  Eigen::Vector3d probs = Eigen::Vector3d::Constant(1.0 / 3.0);
  Label predicted = 2;
};

// Argmax over the three probabilities, ties toward the higher label.
Label argmax_label(const Eigen::Vector3d& probs);

// Deterministic readout of one chunk; backend failures are rethrown as
// BackendError naming the chunk.
Prediction predict_chunk(ModelBackend& backend, const Chunk& chunk,
                         bool include_annotations);

struct AggregateOptions {
  // Default is literal majority voting over predicted labels; the
  // probability-mean variant averages probs first and is experimental.
  bool use_probability_mean = false;
};

// Majority vote over the chunk predictions of one call; vote ties go to the
// higher crisis level. Throws ValidationError when the list is empty or the
// chunk ids belong to different calls.
Label aggregate_call(const std::vector<Prediction>& predictions,
                     const AggregateOptions& opts = {});

// Per-label vote counts, index = label.
std::array<std::size_t, 3> vote_counts(const std::vector<Prediction>& preds);

// JSONL dump: one {chunk_id, probs, predicted} object per chunk in input
// order, then one {call_id, votes, final} object per call in first-appearance
// order.
std::string serialize_predictions(const std::vector<Prediction>& predictions,
                                  const AggregateOptions& opts = {});

}  // namespace triage
