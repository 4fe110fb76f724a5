#include "triage/modeling.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>

#include "triage/enrichment.hpp"
#include "triage/errors.hpp"
#include "triage/random.hpp"
#include "triage/resources.hpp"

namespace triage {

namespace {

constexpr char kCheckpointMagic[8] = {'T', 'R', 'I', 'A', 'G', 'E', 'R', 'B'};
constexpr std::uint32_t kCheckpointVersion = 1;

double logsumexp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  return m + std::log((v.array() - m).exp().sum());
}

void accumulate_counts(const std::vector<std::string>& tokens, int dim,
                       std::map<int, double>& counts) {
  for (const auto& tok : tokens) {
    const int idx = static_cast<int>(rnd::hash64(tok) %
                                     static_cast<std::uint64_t>(dim));
    counts[idx] += 1.0;
  }
}

ReferenceBackend::SparseVec normalized_counts(
    const std::vector<std::string>& tokens, int dim) {
  std::map<int, double> counts;
  accumulate_counts(tokens, dim, counts);
  ReferenceBackend::SparseVec out;
  out.reserve(counts.size());
  const double total = static_cast<double>(tokens.size());
  for (const auto& [idx, c] : counts) out.emplace_back(idx, c / total);
  return out;
}

}  // namespace

PromptBundle build_prompts(const Chunk& chunk, const ReasoningTarget& reasoning,
                           bool include_annotations) {
  PromptBundle bundle;
  bundle.context = render_enriched(chunk.segments, include_annotations);
  bundle.classification_prompt = kClassificationPrompt;
  bundle.generation_prompt = generation_prompt();
  bundle.reasoning_target = reasoning.text;
  return bundle;
}

TrainingExample make_example(const PromptBundle& bundle, Label label) {
  if (!label_valid(label))
    throw ValidationError("invalid label " + std::to_string(label));
  TrainingExample ex;
  ex.classification_input =
      bundle.context + "\n" + bundle.classification_prompt;
  ex.generation_input = bundle.context + "\n" + bundle.generation_prompt;
  ex.target = bundle.reasoning_target;
  ex.label = label;
  return ex;
}

CategoryReadout make_readout(const Eigen::Vector3d& logits) {
  for (int i = 0; i < 3; ++i)
    if (!std::isfinite(logits[i]))
      throw ValidationError("non-finite category logit");
  CategoryReadout r;
  r.logits = logits;
  const double m = logits.maxCoeff();
  Eigen::Vector3d e = (logits.array() - m).exp();
  r.probs = e / e.sum();
  // exp underflow at extreme logit gaps would make -log(p) infinite
  const double floor = std::numeric_limits<double>::min();
  bool floored = false;
  for (int i = 0; i < 3; ++i)
    if (r.probs[i] < floor) {
      r.probs[i] = floor;
      floored = true;
    }
  if (floored) r.probs /= r.probs.sum();
  return r;
}

double classification_loss(const CategoryReadout& readout, Label label) {
  if (!label_valid(label))
    throw ValidationError("invalid label " + std::to_string(label));
  return -std::log(readout.probs[label]);
}

double combined_loss(double l_cls, double l_gen) {
  if (!std::isfinite(l_cls) || !std::isfinite(l_gen))
    throw ValidationError("non-finite loss term");
  return l_cls + l_gen;
}

// --- ReferenceBackend -------------------------------------------------------

ReferenceBackend::ReferenceBackend(int feature_dim, int vocab_dim)
    : feature_dim_(feature_dim),
      vocab_dim_(vocab_dim),
      weights_(Eigen::MatrixXd::Zero(3, feature_dim)),
      bias_(Eigen::Vector3d::Zero()),
      gen_weights_(Eigen::VectorXd::Zero(vocab_dim)) {
  if (feature_dim < 1 || vocab_dim < 2)
    throw ConfigError("reference backend needs feature_dim >= 1 and "
                      "vocab_dim >= 2");
}

std::vector<std::string> ReferenceBackend::tokenize(const std::string& text) {
  static constexpr const char* kStandalone = "[],;>:";
  std::vector<std::string> tokens;
  std::string current;
  const auto flush = [&] {
    if (!current.empty()) {
      tokens.push_back(current);
      current.clear();
    }
  };
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      flush();
    } else if (std::strchr(kStandalone, ch) != nullptr) {
      flush();
      tokens.emplace_back(1, ch);
    } else {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush();
  return tokens;
}

ReferenceBackend::SparseVec ReferenceBackend::features(
    const std::string& text) const {
  if (const auto it = phi_cache_.find(text); it != phi_cache_.end())
    return it->second;
  const auto tokens = tokenize(text);
  SparseVec phi =
      tokens.empty() ? SparseVec{} : normalized_counts(tokens, feature_dim_);
  phi_cache_[text] = phi;
  return phi;
}

ReferenceBackend::SparseVec ReferenceBackend::target_frequencies(
    const std::string& text) const {
  if (const auto it = target_cache_.find(text); it != target_cache_.end())
    return it->second;
  const auto tokens = tokenize(text);
  if (tokens.empty())
    throw ValidationError("generation target has no tokens");
  SparseVec freq = normalized_counts(tokens, vocab_dim_);
  target_cache_[text] = freq;
  return freq;
}

Eigen::Vector3d ReferenceBackend::category_logits(const std::string& input) {
  Eigen::Vector3d z = bias_;
  for (const auto& [idx, v] : features(input)) z += weights_.col(idx) * v;
  return z;
}

double ReferenceBackend::generation_nll(const std::string& input,
                                        const std::string& target) {
  (void)input;  // the unigram head has no conditioning
  const double log_z = logsumexp(gen_weights_);
  double dot = 0.0;
  for (const auto& [idx, f] : target_frequencies(target))
    dot += f * gen_weights_[idx];
  return log_z - dot;
}

TrainingLosses ReferenceBackend::evaluate_batch(
    const std::vector<TrainingExample>& batch) {
  if (batch.empty()) throw ValidationError("empty batch");
  double cls_sum = 0.0;
  double gen_sum = 0.0;
  for (const auto& ex : batch) {
    cls_sum += classification_loss(make_readout(
                                       category_logits(ex.classification_input)),
                                   ex.label);
    gen_sum += generation_nll(ex.generation_input, ex.target);
  }
  TrainingLosses losses;
  losses.l_cls = cls_sum / static_cast<double>(batch.size());
  losses.l_gen = gen_sum / static_cast<double>(batch.size());
  losses.total = combined_loss(losses.l_cls, losses.l_gen);
  return losses;
}

TrainingLosses ReferenceBackend::apply_update(
    const std::vector<TrainingExample>& batch, const UpdateOptions& opts) {
  if (batch.empty()) throw ValidationError("empty batch");
  if (!std::isfinite(opts.learning_rate) || opts.learning_rate < 0.0)
    throw ConfigError("learning rate must be finite and non-negative");
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  const double log_z = logsumexp(gen_weights_);
  double cls_sum = 0.0;
  double gen_sum = 0.0;
  std::map<int, Eigen::Vector3d> grad_w;  // sparse columns of dL/dW
  Eigen::Vector3d grad_b = Eigen::Vector3d::Zero();
  std::map<int, double> mean_target_freq;

  for (const auto& ex : batch) {
    const SparseVec phi = features(ex.classification_input);
    const CategoryReadout readout =
        make_readout(category_logits(ex.classification_input));
    cls_sum += classification_loss(readout, ex.label);
    Eigen::Vector3d delta = readout.probs;  // p - onehot(y)
    delta[ex.label] -= 1.0;
    grad_b += delta;
    for (const auto& [idx, v] : phi) {
      const auto it = grad_w.try_emplace(idx, Eigen::Vector3d::Zero()).first;
      it->second += delta * v;
    }

    const SparseVec freq = target_frequencies(ex.target);
    double dot = 0.0;
    for (const auto& [idx, f] : freq) {
      dot += f * gen_weights_[idx];
      mean_target_freq[idx] += f;
    }
    gen_sum += log_z - dot;
  }

  TrainingLosses losses;
  losses.l_cls = cls_sum * inv_b;
  losses.l_gen = gen_sum * inv_b;
  losses.total = combined_loss(losses.l_cls, losses.l_gen);

  const double lr = opts.learning_rate;
  for (const auto& [idx, g] : grad_w)
    weights_.col(idx) -= lr * inv_b * g;
  bias_ -= lr * inv_b * grad_b;

  if (opts.use_auxiliary_loss) {
    // dL/dw = softmax(w) - mean target frequency
    Eigen::VectorXd grad_gen =
        (gen_weights_.array() - log_z).exp().matrix();
    for (const auto& [idx, f] : mean_target_freq)
      grad_gen[idx] -= f * inv_b;
    gen_weights_ -= lr * grad_gen;
  }
  return losses;
}

void ReferenceBackend::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open checkpoint for writing: " + path);
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  const auto write_u32 = [&](std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
  };
  const auto write_f64 = [&](double v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
  };
  write_u32(kCheckpointVersion);
  write_u32(static_cast<std::uint32_t>(feature_dim_));
  write_u32(static_cast<std::uint32_t>(vocab_dim_));
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < feature_dim_; ++c) write_f64(weights_(r, c));
  for (int r = 0; r < 3; ++r) write_f64(bias_[r]);
  for (int g = 0; g < vocab_dim_; ++g) write_f64(gen_weights_[g]);
  if (!out) throw ConfigError("failed writing checkpoint: " + path);
}

void ReferenceBackend::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint: " + path);
  char magic[sizeof(kCheckpointMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    throw ParseError("not a reference backend checkpoint: " + path);
  const auto read_u32 = [&] {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
  };
  const auto read_f64 = [&] {
    double v = 0.0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
  };
  const std::uint32_t version = read_u32();
  if (version != kCheckpointVersion)
    throw ParseError("unsupported checkpoint version " +
                     std::to_string(version));
  const auto d = static_cast<int>(read_u32());
  const auto g = static_cast<int>(read_u32());
  if (!in || d < 1 || g < 2)
    throw ParseError("checkpoint header is malformed: " + path);
  Eigen::MatrixXd w(3, d);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < d; ++c) w(r, c) = read_f64();
  Eigen::Vector3d b;
  for (int r = 0; r < 3; ++r) b[r] = read_f64();
  Eigen::VectorXd gw(g);
  for (int i = 0; i < g; ++i) gw[i] = read_f64();
  if (!in) throw ParseError("checkpoint is truncated: " + path);
  feature_dim_ = d;
  vocab_dim_ = g;
  weights_ = std::move(w);
  bias_ = b;
  gen_weights_ = std::move(gw);
  phi_cache_.clear();
  target_cache_.clear();
}

// --- Training loop ----------------------------------------------------------

void validate_train_config(const TrainConfig& cfg) {
  if (!std::isfinite(cfg.learning_rate) || cfg.learning_rate < 0.0)
    throw ConfigError("learning_rate must be finite and non-negative");
  if (cfg.schedule != "constant" && cfg.schedule != "cosine")
    throw ConfigError("schedule must be \"constant\" or \"cosine\"; got \"" +
                      cfg.schedule + "\"");
  if (cfg.epochs < 1) throw ConfigError("epochs must be at least 1");
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (cfg.grad_accum < 1) throw ConfigError("grad_accum must be at least 1");
  if (cfg.patience < 1) throw ConfigError("patience must be at least 1");
  if (!(cfg.tolerance >= 0.0)) throw ConfigError("tolerance must be >= 0");
}

double scheduled_learning_rate(const TrainConfig& cfg, std::size_t step,
                               std::size_t total_steps) {
  if (cfg.schedule == "cosine" && total_steps > 0) {
    const double t = static_cast<double>(step) /
                     static_cast<double>(total_steps);
    return cfg.learning_rate * 0.5 * (1.0 + std::cos(M_PI * t));
  }
  return cfg.learning_rate;
}

TrainResult train(const std::vector<TrainItem>& items, ModelBackend& backend,
                  const TrainConfig& cfg) {
  validate_train_config(cfg);
  if (items.empty()) throw ValidationError("empty training set");

  std::vector<TrainingExample> examples;
  examples.reserve(items.size());
  for (const auto& item : items)
    examples.push_back(make_example(
        build_prompts(item.chunk, item.reasoning, cfg.include_annotations),
        item.label));

  const std::size_t n = examples.size();
  const std::size_t effective_batch =
      static_cast<std::size_t>(cfg.batch_size) *
      static_cast<std::size_t>(cfg.grad_accum);
  const std::size_t steps_per_epoch = (n + effective_batch - 1) /
                                      effective_batch;
  const std::size_t total_steps =
      static_cast<std::size_t>(cfg.epochs) * steps_per_epoch;

  rnd::Rng shuffle_rng(rnd::derive_seed(cfg.seed, "train-shuffle"));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  TrainResult result;
  double best_total = std::numeric_limits<double>::infinity();
  int epochs_without_improvement = 0;
  std::size_t global_step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_cls = 0.0;
    double epoch_gen = 0.0;
    std::size_t epoch_steps = 0;
    for (std::size_t start = 0; start < n; start += effective_batch) {
      const std::size_t end = std::min(n, start + effective_batch);
      std::vector<TrainingExample> batch;
      batch.reserve(end - start);
      for (std::size_t i = start; i < end; ++i)
        batch.push_back(examples[order[i]]);
      UpdateOptions opts;
      opts.learning_rate =
          scheduled_learning_rate(cfg, global_step, total_steps);
      opts.use_auxiliary_loss = cfg.use_auxiliary_loss;
      TrainingLosses losses;
      try {
        losses = backend.apply_update(batch, opts);
      } catch (const ValidationError& e) {
        // non-finite logits or losses surface here once parameters blow up
        throw TriageError("training diverged at step " +
                          std::to_string(global_step + 1) + ": " + e.what());
      }
      ++global_step;
      if (!std::isfinite(losses.total))
        throw TriageError("training diverged at step " +
                          std::to_string(global_step) + " (total loss is "
                          "not finite)");
      result.steps.push_back(losses);
      epoch_cls += losses.l_cls;
      epoch_gen += losses.l_gen;
      ++epoch_steps;
    }
    TrainingLosses epoch_mean;
    epoch_mean.l_cls = epoch_cls / static_cast<double>(epoch_steps);
    epoch_mean.l_gen = epoch_gen / static_cast<double>(epoch_steps);
    epoch_mean.total = combined_loss(epoch_mean.l_cls, epoch_mean.l_gen);
    result.epochs.push_back(epoch_mean);
    result.epochs_run = epoch + 1;

    if (best_total - epoch_mean.total > cfg.tolerance) {
      best_total = epoch_mean.total;
      epochs_without_improvement = 0;
    } else if (++epochs_without_improvement >= cfg.patience) {
      result.early_stopped = true;
      break;
    }
  }
  return result;
}

}  // namespace triage
