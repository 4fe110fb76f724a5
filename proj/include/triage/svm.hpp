#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "triage/corpus.hpp"

namespace triage {

struct SvmConfig {
  double c = 1.0;
  // gamma <= 0 means "scale": 1 / (n_features * variance of the raw training
  // matrix), resolved before standardization.
  double gamma = 0.0;
  // "balanced": per-class box constraint C_i = c * n / (n_classes * n_i),
  // computed over the full training labels, not per pairwise subproblem.
  bool class_weight_balanced = true;
  double tolerance = 1e-3;
  int max_passes = 1000;
  std::uint64_t seed = 0;
  // One-vs-one by default; one-vs-rest decides by the largest margin instead
  // of pairwise votes.
  bool one_vs_rest = false;
};

// One binary machine trained on standardized features. coeffs(i) is
// alpha_i * y_i for support vector i, so alpha = |coeff| and y = sign.
struct BinarySvm {
  Label positive = 0;
  Label negative = 0;  // kNumLabels stands for "rest" in one-vs-rest machines
  Eigen::MatrixXd support_x;  // rows are standardized support vectors
  Eigen::VectorXd coeffs;
  double bias = 0.0;
};

struct SvmModel {
  Eigen::VectorXd feature_mean;
  Eigen::VectorXd feature_std;  // degenerate dims stored as 1
  double gamma = 0.0;           // resolved value
  std::array<double, 3> class_c = {0.0, 0.0, 0.0};
  bool one_vs_rest = false;
  std::vector<BinarySvm> machines;
};

// 1 / (n_features * population variance over all entries of x).
double resolve_gamma_scale(const Eigen::MatrixXd& x);

// c * n / (n_classes_present * n_i) for classes present; 0 for absent ones.
std::array<double, 3> balanced_class_weights(const std::vector<Label>& y,
                                             double c);

// exp(-gamma * |a - b|^2)
double rbf_kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                  double gamma);

// Rows of x are samples. Standardizes internally (statistics stored in the
// model), resolves gamma on the raw matrix, then runs SMO per machine until
// no KKT violation exceeds cfg.tolerance or max_passes elapse. Throws
// ValidationError on empty, non-finite, or single-class input.
SvmModel svm_fit(const Eigen::MatrixXd& x, const std::vector<Label>& y,
                 const SvmConfig& cfg);

// Decision value of one machine on an already-standardized point.
double svm_decision(const BinarySvm& machine, double gamma,
                    const Eigen::VectorXd& standardized_x);

// Pairwise votes (ties toward the higher label) or, one-vs-rest, the largest
// decision value. Throws ValidationError on dimension mismatch.
Label svm_predict(const SvmModel& model, const Eigen::VectorXd& x);

// Dual objective of one machine, recomputed from its stored support vectors;
// points with zero alpha contribute nothing, so this equals the full-problem
// objective.
double svm_dual_objective(const BinarySvm& machine, double gamma);

// Counts training points violating the KKT conditions beyond `tolerance`,
// summed over every machine's subproblem. Alphas are recovered by matching
// points against stored support vectors; unmatched points have alpha 0.
int svm_kkt_violations(const SvmModel& model, const Eigen::MatrixXd& x,
                       const std::vector<Label>& y, double tolerance);

}  // namespace triage
