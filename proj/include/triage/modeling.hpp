#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "triage/augmentation.hpp"
#include "triage/reasoning.hpp"

namespace triage {

// Fixed classification prompt appended to every enriched context.
inline constexpr const char* kClassificationPrompt =
    "Based on the emotional representations and the psychological support "
    "hotline dialogue provided above, I assess the caller's crisis level "
    "(0, 1, or 2) as:";

// The two training-time views of one chunk: the classification head reads
// context+classification_prompt, the generation head is teacher-forced on
// reasoning_target after context+generation_prompt.
struct PromptBundle {
  std::string context;
  std::string classification_prompt;  // byte-identical to the constant
  std::string generation_prompt;
  std::string reasoning_target;

  bool operator==(const PromptBundle&) const = default;
};

PromptBundle build_prompts(const Chunk& chunk, const ReasoningTarget& reasoning,
                           bool include_annotations);

// Next-token readout restricted to the three category tokens.
struct CategoryReadout {
  std::array<std::string, 3> category_tokens = {"0", "1", "2"};
  Eigen::Vector3d logits = Eigen::Vector3d::Zero();
  Eigen::Vector3d probs = Eigen::Vector3d::Constant(1.0 / 3.0);
};

// Max-subtracted softmax over the three logits; probabilities are floored at
// the smallest normal double so the log stays finite.
CategoryReadout make_readout(const Eigen::Vector3d& logits);

// l_cls = -log probs[label]; throws ValidationError on an invalid label.
double classification_loss(const CategoryReadout& readout, Label label);

// Exact sum of the two terms; non-finite input -> ValidationError.
double combined_loss(double l_cls, double l_gen);

struct TrainingLosses {
  double l_cls = 0.0;
  double l_gen = 0.0;
  double total = 0.0;  // always l_cls + l_gen, same accumulation order
};

// One example as the backend sees it: full input strings, no chunk plumbing.
struct TrainingExample {
  std::string classification_input;  // context + "\n" + classification prompt
  std::string generation_input;      // context + "\n" + generation prompt
  std::string target;                // reasoning paragraph (teacher-forced)
  Label label = 0;
};

TrainingExample make_example(const PromptBundle& bundle, Label label);

struct UpdateOptions {
  double learning_rate = 0.0;
  bool use_auxiliary_loss = true;  // false: generation head stays untouched
};

// Contract for trainable backends. category_logits must be deterministic in
// evaluation mode; apply_update performs exactly one optimization step on the
// combined objective and reports the pre-update batch losses.
class ModelBackend {
 public:
  virtual ~ModelBackend() = default;

  virtual Eigen::Vector3d category_logits(const std::string& input) = 0;
  virtual double generation_nll(const std::string& input,
                                const std::string& target) = 0;
  virtual TrainingLosses evaluate_batch(
      const std::vector<TrainingExample>& batch) = 0;
  virtual TrainingLosses apply_update(
      const std::vector<TrainingExample>& batch,
      const UpdateOptions& opts) = 0;
  virtual void save(const std::string& path) const = 0;
  virtual void load(const std::string& path) = 0;
};

// Desk-scale stand-in for the fine-tuned LLM.
//
// Classification head: multinomial logistic regression over a hashed
// bag-of-tokens of the input (relative frequencies), W (3 x D) and b, both
// zero-initialized so the initial readout is exactly uniform.
// Generation head: learnable unigram over a hashed token vocabulary of size
// G, zero-initialized (exactly uniform, NLL = ln G); the conditioning input
// is ignored by construction.
// Optimizer: plain gradient descent on analytic gradients.
//
// Checkpoint format (little-endian): magic "TRIAGERB", u32 version, u32 D,
// u32 G, then W row-major (3*D doubles), b (3 doubles), gen weights (G
// doubles).
class ReferenceBackend : public ModelBackend {
 public:
  explicit ReferenceBackend(int feature_dim = 4096, int vocab_dim = 4096);

  Eigen::Vector3d category_logits(const std::string& input) override;
  double generation_nll(const std::string& input,
                        const std::string& target) override;
  TrainingLosses evaluate_batch(
      const std::vector<TrainingExample>& batch) override;
  TrainingLosses apply_update(const std::vector<TrainingExample>& batch,
                              const UpdateOptions& opts) override;
  void save(const std::string& path) const override;
  void load(const std::string& path) override;

  int feature_dim() const { return feature_dim_; }
  int vocab_dim() const { return vocab_dim_; }

  // Parameter access for diagnostics and gradient checks.
  const Eigen::MatrixXd& cls_weights() const { return weights_; }
  Eigen::MatrixXd& cls_weights() { return weights_; }
  const Eigen::Vector3d& cls_bias() const { return bias_; }
  Eigen::Vector3d& cls_bias() { return bias_; }
  const Eigen::VectorXd& gen_weights() const { return gen_weights_; }
  Eigen::VectorXd& gen_weights() { return gen_weights_; }

  // Lowercasing tokenizer; "[],;>:" are standalone tokens so annotation
  // structure survives, everything else splits on whitespace.
  static std::vector<std::string> tokenize(const std::string& text);

  // index -> relative frequency, sorted by index (deterministic iteration).
  using SparseVec = std::vector<std::pair<int, double>>;
  SparseVec features(const std::string& text) const;       // hashed mod D
  SparseVec target_frequencies(const std::string& text) const;  // mod G

 private:
  int feature_dim_;
  int vocab_dim_;
  Eigen::MatrixXd weights_;     // 3 x D
  Eigen::Vector3d bias_;
  Eigen::VectorXd gen_weights_;  // G

  mutable std::unordered_map<std::string, SparseVec> phi_cache_;
  mutable std::unordered_map<std::string, SparseVec> target_cache_;
};

struct TrainConfig {
  double learning_rate = 2.0;      // sized for the reference backend
  std::string schedule = "constant";  // or "cosine" (anneals to 0)
  int epochs = 60;
  int batch_size = 64;
  int grad_accum = 1;  // concatenates minibatches; exact for batch gradients
  std::uint64_t seed = 0;
  bool use_auxiliary_loss = true;
  bool include_annotations = true;
  int patience = 5;        // epochs without improvement before stopping
  double tolerance = 1e-4;  // minimum improvement of epoch-mean total loss
};

void validate_train_config(const TrainConfig& cfg);  // throws ConfigError

// Scheduled learning rate for step `step` of `total_steps`.
double scheduled_learning_rate(const TrainConfig& cfg, std::size_t step,
                               std::size_t total_steps);

struct TrainItem {
  Chunk chunk;
  ReasoningTarget reasoning;
  Label label = 0;
};

struct TrainResult {
  std::vector<TrainingLosses> steps;
  std::vector<TrainingLosses> epochs;  // epoch means
  int epochs_run = 0;
  bool early_stopped = false;
};

// Seeded epoch shuffling, minibatch gradient steps on the combined loss,
// early stopping on the epoch-mean total loss. Throws ValidationError on an
// empty training set and TriageError naming the step on divergence.
TrainResult train(const std::vector<TrainItem>& items, ModelBackend& backend,
                  const TrainConfig& cfg);

}  // namespace triage
