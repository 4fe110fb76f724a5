#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "triage/augmentation.hpp"
#include "triage/inference.hpp"
#include "triage/modeling.hpp"

namespace triage {

struct FoldSplit {
  int fold_index = 0;
  std::vector<std::string> train_call_ids;
  std::vector<std::string> test_call_ids;
};

// Stratified call-level folds: per class, seeded shuffle then round-robin
// dealing, so each test fold's class counts differ from proportional by at
// most one. Throws ValidationError when a class has fewer than k calls
// (naming the class) or when k < 2.
std::vector<FoldSplit> make_folds(const Corpus& corpus, int k,
                                  std::uint64_t seed);

// [true][predicted] counts over the fixed label set {0, 1, 2}.
using Confusion = std::array<std::array<std::size_t, 3>, 3>;

Confusion confusion_matrix(const std::vector<Label>& truth,
                           const std::vector<Label>& predicted);

double accuracy(const std::vector<Label>& truth,
                const std::vector<Label>& predicted);

// Unweighted mean of per-class F1 over {0, 1, 2}; precision, recall, and F1
// use the 0/0 -> 0 convention.
double macro_f1(const std::vector<Label>& truth,
                const std::vector<Label>& predicted);

struct FoldMetrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  Confusion confusion = {};
};

struct EvalReport {
  std::vector<FoldMetrics> per_fold;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // population std across folds
  double mean_macro_f1 = 0.0;
  double std_macro_f1 = 0.0;
  std::string config_fingerprint;
  std::uint64_t seed = 0;
  std::string std_convention = "population";
};

// Fills the means/stds from per_fold (population std).
EvalReport assemble_report(std::vector<FoldMetrics> per_fold,
                           std::string config_fingerprint, std::uint64_t seed);

std::string serialize_report(const EvalReport& report);  // JSON, no timestamps
EvalReport parse_report(const std::string& json_text);

// Everything run_cv needs; train.seed seeds per-fold training streams,
// seed seeds the fold split and the reasoning templates.
struct PipelineConfig {
  ChunkConfig chunk;
  TafConfig taf;
  TrainConfig train;
  int k = 5;
  std::uint64_t seed = 0;
  bool use_augmentation = true;
  AggregateOptions aggregate;
  int feature_dim = 4096;
  int vocab_dim = 4096;
};

// FNV-1a digest of the canonical config rendering, as 16 hex digits.
std::string config_fingerprint(const PipelineConfig& cfg);

// Full pipeline per fold: chunk the training calls, synthesize template
// reasoning targets, train a fresh reference backend, predict the test
// chunks, aggregate per call, score. Deterministic for a fixed config.
// Stage failures are rethrown with the fold index attached. A leakage check
// (no training chunk from a test call) runs inside every fold.
EvalReport run_cv(const Corpus& corpus, const PipelineConfig& cfg);

struct AblationRow {
  std::string name;
  EvalReport report;
};

// The four pipeline variants: "full", "no_augmentation", "no_annotations",
// "no_auxiliary_loss" (one switch flipped each, relative to cfg).
std::vector<AblationRow> run_ablations(const Corpus& corpus,
                                       const PipelineConfig& cfg);

}  // namespace triage
