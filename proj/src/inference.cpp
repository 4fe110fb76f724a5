#include "triage/inference.hpp"

#include <map>

#include "json.hpp"

#include "triage/errors.hpp"

namespace triage {

Label argmax_label(const Eigen::Vector3d& probs) {
  Label best = 0;
  for (Label l = 1; l < kNumLabels; ++l)
    if (probs[l] >= probs[best]) best = l;  // >= resolves ties upward
  return best;
}

Prediction predict_chunk(ModelBackend& backend, const Chunk& chunk,
                         bool include_annotations) {
  const std::string input =
      render_enriched(chunk.segments, include_annotations) + "\n" +
      kClassificationPrompt;
  Prediction p;
  p.chunk_id = chunk.chunk_id;
  try {
    p.probs = make_readout(backend.category_logits(input)).probs;
  } catch (const TriageError& e) {
    throw BackendError("prediction failed for chunk " + chunk.chunk_id +
                       ": " + e.what());
  }
  p.predicted = argmax_label(p.probs);
  return p;
}

std::array<std::size_t, 3> vote_counts(const std::vector<Prediction>& preds) {
  std::array<std::size_t, 3> votes = {0, 0, 0};
  for (const auto& p : preds) {
    if (!label_valid(p.predicted))
      throw ValidationError("prediction for chunk " + p.chunk_id +
                            " has invalid label " +
                            std::to_string(p.predicted));
    ++votes[static_cast<std::size_t>(p.predicted)];
  }
  return votes;
}

Label aggregate_call(const std::vector<Prediction>& predictions,
                     const AggregateOptions& opts) {
  if (predictions.empty())
    throw ValidationError("cannot aggregate an empty prediction list");
  const std::string call_id = call_id_of_chunk(predictions.front().chunk_id);
  for (const auto& p : predictions)
    if (call_id_of_chunk(p.chunk_id) != call_id)
      throw ValidationError("predictions mix calls \"" + call_id +
                            "\" and \"" + call_id_of_chunk(p.chunk_id) +
                            "\"");
  if (opts.use_probability_mean) {
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto& p : predictions) mean += p.probs;
    return argmax_label(mean / static_cast<double>(predictions.size()));
  }
  const auto votes = vote_counts(predictions);
  Label best = 0;
  for (Label l = 1; l < kNumLabels; ++l)
    if (votes[static_cast<std::size_t>(l)] >=
        votes[static_cast<std::size_t>(best)])
      best = l;
  return best;
}

std::string serialize_predictions(const std::vector<Prediction>& predictions,
                                  const AggregateOptions& opts) {
  std::string out;
  std::vector<std::string> call_order;
  std::map<std::string, std::vector<Prediction>> by_call;
  for (const auto& p : predictions) {
    const std::string call_id = call_id_of_chunk(p.chunk_id);
    if (by_call.find(call_id) == by_call.end()) call_order.push_back(call_id);
    by_call[call_id].push_back(p);

    nlohmann::ordered_json j;
    j["chunk_id"] = p.chunk_id;
    j["probs"] = {p.probs[0], p.probs[1], p.probs[2]};
    j["predicted"] = p.predicted;
    out += j.dump();
    out += '\n';
  }
  for (const auto& call_id : call_order) {
    const auto& preds = by_call[call_id];
    const auto votes = vote_counts(preds);
    nlohmann::ordered_json j;
    j["call_id"] = call_id;
    j["votes"] = {votes[0], votes[1], votes[2]};
    j["final"] = aggregate_call(preds, opts);
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace triage
