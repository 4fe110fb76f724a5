#include "triage/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "triage/errors.hpp"
#include "triage/random.hpp"

namespace triage {

namespace {

constexpr double kStepEps = 1e-12;

// One binary subproblem, SMO over the dual. Labels are +-1; box constraints
// come per sample from the class weights. Terminates when a sweep over all
// points finds no KKT violation beyond tol.
struct Smo {
  const Eigen::MatrixXd& x;
  const std::vector<double>& y;
  const std::vector<double>& box;
  double gamma;
  double tol;

  Eigen::MatrixXd gram;
  Eigen::VectorXd alpha;
  Eigen::VectorXd decision;  // current f(x_k), bias included
  double bias = 0.0;

  Smo(const Eigen::MatrixXd& x_, const std::vector<double>& y_,
      const std::vector<double>& box_, double gamma_, double tol_)
      : x(x_), y(y_), box(box_), gamma(gamma_), tol(tol_) {
    const auto n = x.rows();
    gram.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j <= i; ++j)
        gram(i, j) = gram(j, i) =
            rbf_kernel(x.row(i).transpose(), x.row(j).transpose(), gamma);
    alpha = Eigen::VectorXd::Zero(n);
    decision = Eigen::VectorXd::Zero(n);
  }

  double error(Eigen::Index k) const {
    return decision(k) - y[static_cast<std::size_t>(k)];
  }

  bool take_step(Eigen::Index i, Eigen::Index j) {
    if (i == j) return false;
    const double yi = y[static_cast<std::size_t>(i)];
    const double yj = y[static_cast<std::size_t>(j)];
    const double ci = box[static_cast<std::size_t>(i)];
    const double cj = box[static_cast<std::size_t>(j)];
    const double ai = alpha(i);
    const double aj = alpha(j);
    const double ei = error(i);
    const double ej = error(j);
    const double s = yi * yj;

    double lo, hi;
    if (yi != yj) {
      lo = std::max(0.0, aj - ai);
      hi = std::min(cj, ci + aj - ai);
    } else {
      lo = std::max(0.0, ai + aj - ci);
      hi = std::min(cj, ai + aj);
    }
    if (hi - lo < kStepEps) return false;

    const double kii = gram(i, i);
    const double kjj = gram(j, j);
    const double kij = gram(i, j);
    const double eta = kii + kjj - 2.0 * kij;

    double aj_new;
    if (eta > kStepEps) {
      aj_new = std::clamp(aj + yj * (ei - ej) / eta, lo, hi);
    } else {
      // flat direction: the dual is linear along it, so an endpoint wins
      const double fi = yi * (ei - bias) - ai * kii - s * aj * kij;
      const double fj = yj * (ej - bias) - s * ai * kij - aj * kjj;
      const double li = ai + s * (aj - lo);
      const double hi_i = ai + s * (aj - hi);
      const double obj_lo = li * fi + lo * fj + 0.5 * li * li * kii +
                            0.5 * lo * lo * kjj + s * lo * li * kij;
      const double obj_hi = hi_i * fi + hi * fj + 0.5 * hi_i * hi_i * kii +
                            0.5 * hi * hi * kjj + s * hi * hi_i * kij;
      if (obj_lo < obj_hi - kStepEps)
        aj_new = lo;
      else if (obj_lo > obj_hi + kStepEps)
        aj_new = hi;
      else
        return false;
    }
    if (std::abs(aj_new - aj) < kStepEps * (aj_new + aj + kStepEps))
      return false;

    const double ai_new = ai + s * (aj - aj_new);
    const double di = yi * (ai_new - ai);
    const double dj = yj * (aj_new - aj);

    const double b1 = bias - ei - di * kii - dj * kij;
    const double b2 = bias - ej - di * kij - dj * kjj;
    double bias_new;
    if (ai_new > kStepEps && ai_new < ci - kStepEps)
      bias_new = b1;
    else if (aj_new > kStepEps && aj_new < cj - kStepEps)
      bias_new = b2;
    else
      bias_new = 0.5 * (b1 + b2);

    alpha(i) = ai_new;
    alpha(j) = aj_new;
    decision += di * gram.col(i) + dj * gram.col(j) +
                Eigen::VectorXd::Constant(gram.rows(), bias_new - bias);
    bias = bias_new;
    return true;
  }

  bool violates_kkt(Eigen::Index i) const {
    const double r = error(i) * y[static_cast<std::size_t>(i)];
    const double ci = box[static_cast<std::size_t>(i)];
    return (r < -tol && alpha(i) < ci) || (r > tol && alpha(i) > 0.0);
  }

  bool examine(Eigen::Index i, const std::vector<Eigen::Index>& order) {
    if (!violates_kkt(i)) return false;
    // second choice: the partner with the largest error gap moves furthest
    const double ei = error(i);
    Eigen::Index best = i;
    double gap = -1.0;
    for (Eigen::Index k = 0; k < alpha.size(); ++k) {
      if (k == i) continue;
      const double g = std::abs(ei - error(k));
      if (g > gap) {
        gap = g;
        best = k;
      }
    }
    if (best != i && take_step(i, best)) return true;
    for (const Eigen::Index k : order)
      if (k != i && take_step(i, k)) return true;
    return false;
  }

  // The running threshold is Platt's pairwise update, which is only exact for
  // the last pair touched. Once the alphas settle, recenter it on the whole
  // constraint system: every point bounds the bias from one side (interior
  // points from both), and the midpoint of the surviving interval minimizes
  // the worst margin slack.
  void finalize_bias() {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < alpha.size(); ++i) {
      const double yi = y[static_cast<std::size_t>(i)];
      const double ci = box[static_cast<std::size_t>(i)];
      const double t = yi - (decision(i) - bias);  // bias making this margin 1
      const bool at_zero = alpha(i) <= kStepEps;
      const bool at_c = alpha(i) >= ci - kStepEps;
      if (!at_zero && !at_c) {
        lo = std::max(lo, t);
        hi = std::min(hi, t);
      } else if ((yi > 0.0 && at_zero) || (yi < 0.0 && at_c)) {
        lo = std::max(lo, t);
      } else {
        hi = std::min(hi, t);
      }
    }
    const double bias_new = 0.5 * (lo + hi);
    decision.array() += bias_new - bias;
    bias = bias_new;
  }

  void run(int max_passes, rnd::Rng& rng) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(alpha.size()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    bool examine_all = true;
    for (int pass = 0; pass < max_passes; ++pass) {
      rng.shuffle(order);
      int changed = 0;
      for (const Eigen::Index i : order) {
        const double ci = box[static_cast<std::size_t>(i)];
        const bool non_bound = alpha(i) > kStepEps && alpha(i) < ci - kStepEps;
        if (examine_all || non_bound)
          if (examine(i, order)) ++changed;
      }
      if (examine_all) {
        if (changed == 0) break;  // no violation beyond tol anywhere
        examine_all = false;
      } else if (changed == 0) {
        examine_all = true;
      }
    }
    finalize_bias();
  }
};

Eigen::VectorXd standardize(const SvmModel& model, const Eigen::VectorXd& x) {
  return (x - model.feature_mean).cwiseQuotient(model.feature_std);
}

BinarySvm fit_machine(const Eigen::MatrixXd& x, const std::vector<double>& y,
                      const std::vector<double>& box, Label positive,
                      Label negative, const SvmConfig& cfg, double gamma,
                      rnd::Rng& rng) {
  // Solve past the advertised tolerance: recentering the bias afterwards may
  // shift every margin by up to the residual slack, and the shifted state
  // still has to sit inside cfg.tolerance.
  Smo smo(x, y, box, gamma, 0.1 * cfg.tolerance);
  smo.run(cfg.max_passes, rng);

  BinarySvm m;
  m.positive = positive;
  m.negative = negative;
  m.bias = smo.bias;
  std::vector<Eigen::Index> sv;
  for (Eigen::Index i = 0; i < smo.alpha.size(); ++i)
    if (smo.alpha(i) > kStepEps) sv.push_back(i);
  m.support_x.resize(static_cast<Eigen::Index>(sv.size()), x.cols());
  m.coeffs.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t k = 0; k < sv.size(); ++k) {
    m.support_x.row(static_cast<Eigen::Index>(k)) = x.row(sv[k]);
    m.coeffs(static_cast<Eigen::Index>(k)) =
        smo.alpha(sv[k]) * y[static_cast<std::size_t>(sv[k])];
  }
  return m;
}

}  // namespace

double resolve_gamma_scale(const Eigen::MatrixXd& x) {
  const double mean = x.mean();
  const double var = (x.array() - mean).square().sum() /
                     static_cast<double>(x.size());
  if (var <= 0.0)
    throw ValidationError("gamma=\"scale\" undefined: features have zero variance");
  return 1.0 / (static_cast<double>(x.cols()) * var);
}

std::array<double, 3> balanced_class_weights(const std::vector<Label>& y,
                                             double c) {
  std::array<double, 3> counts = {0.0, 0.0, 0.0};
  for (const Label l : y) {
    if (!label_valid(l))
      throw ValidationError("invalid label " + std::to_string(l));
    counts[static_cast<std::size_t>(l)] += 1.0;
  }
  double present = 0.0;
  for (const double n : counts)
    if (n > 0.0) present += 1.0;
  std::array<double, 3> weights = {0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < 3; ++i)
    if (counts[i] > 0.0)
      weights[i] = c * static_cast<double>(y.size()) / (present * counts[i]);
  return weights;
}

double rbf_kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                  double gamma) {
  return std::exp(-gamma * (a - b).squaredNorm());
}

SvmModel svm_fit(const Eigen::MatrixXd& x, const std::vector<Label>& y,
                 const SvmConfig& cfg) {
  if (x.rows() == 0 || x.cols() == 0)
    throw ValidationError("svm_fit on an empty feature matrix");
  if (static_cast<std::size_t>(x.rows()) != y.size())
    throw ValidationError("svm_fit: " + std::to_string(x.rows()) +
                          " rows vs " + std::to_string(y.size()) + " labels");
  if (!x.allFinite())
    throw ValidationError("svm_fit: non-finite feature values");
  if (cfg.c <= 0.0) throw ValidationError("svm_fit: c must be positive");

  SvmModel model;
  model.one_vs_rest = cfg.one_vs_rest;
  model.gamma = cfg.gamma > 0.0 ? cfg.gamma : resolve_gamma_scale(x);
  model.class_c = cfg.class_weight_balanced
                      ? balanced_class_weights(y, cfg.c)
                      : std::array<double, 3>{cfg.c, cfg.c, cfg.c};

  model.feature_mean = x.colwise().mean();
  Eigen::MatrixXd centered = x.rowwise() - model.feature_mean.transpose();
  model.feature_std =
      (centered.array().square().colwise().sum() /
       static_cast<double>(x.rows()))
          .sqrt();
  for (Eigen::Index d = 0; d < model.feature_std.size(); ++d)
    if (model.feature_std(d) < 1e-12) model.feature_std(d) = 1.0;
  const Eigen::MatrixXd xs =
      centered.array().rowwise() / model.feature_std.transpose().array();

  std::array<bool, 3> present = {false, false, false};
  for (const Label l : y) present[static_cast<std::size_t>(l)] = true;
  const int n_present = static_cast<int>(present[0]) +
                        static_cast<int>(present[1]) +
                        static_cast<int>(present[2]);
  if (n_present < 2)
    throw ValidationError("svm_fit needs at least two classes");

  rnd::Rng rng(rnd::derive_seed(cfg.seed, "smo"));
  if (cfg.one_vs_rest) {
    for (Label pos = 0; pos < kNumLabels; ++pos) {
      if (!present[static_cast<std::size_t>(pos)]) continue;
      std::vector<double> yb(y.size());
      std::vector<double> box(y.size());
      for (std::size_t i = 0; i < y.size(); ++i) {
        yb[i] = y[i] == pos ? 1.0 : -1.0;
        box[i] = model.class_c[static_cast<std::size_t>(y[i])];
      }
      model.machines.push_back(
          fit_machine(xs, yb, box, pos, kNumLabels, cfg, model.gamma, rng));
    }
    return model;
  }

  for (Label neg = 0; neg < kNumLabels; ++neg)
    for (Label pos = static_cast<Label>(neg + 1); pos < kNumLabels; ++pos) {
      if (!present[static_cast<std::size_t>(neg)] ||
          !present[static_cast<std::size_t>(pos)])
        continue;
      std::vector<Eigen::Index> rows;
      for (std::size_t i = 0; i < y.size(); ++i)
        if (y[i] == pos || y[i] == neg)
          rows.push_back(static_cast<Eigen::Index>(i));
      Eigen::MatrixXd xp(static_cast<Eigen::Index>(rows.size()), xs.cols());
      std::vector<double> yb(rows.size());
      std::vector<double> box(rows.size());
      for (std::size_t k = 0; k < rows.size(); ++k) {
        xp.row(static_cast<Eigen::Index>(k)) = xs.row(rows[k]);
        const Label l = y[static_cast<std::size_t>(rows[k])];
        yb[k] = l == pos ? 1.0 : -1.0;
        box[k] = model.class_c[static_cast<std::size_t>(l)];
      }
      model.machines.push_back(
          fit_machine(xp, yb, box, pos, neg, cfg, model.gamma, rng));
    }
  return model;
}

double svm_decision(const BinarySvm& machine, double gamma,
                    const Eigen::VectorXd& standardized_x) {
  double d = machine.bias;
  for (Eigen::Index i = 0; i < machine.coeffs.size(); ++i)
    d += machine.coeffs(i) *
         rbf_kernel(machine.support_x.row(i).transpose(), standardized_x,
                    gamma);
  return d;
}

Label svm_predict(const SvmModel& model, const Eigen::VectorXd& x) {
  if (model.machines.empty()) throw ValidationError("svm_predict before fit");
  if (x.size() != model.feature_mean.size())
    throw ValidationError("svm_predict: feature dimension " +
                          std::to_string(x.size()) + ", model expects " +
                          std::to_string(model.feature_mean.size()));
  const Eigen::VectorXd xs = standardize(model, x);

  if (model.one_vs_rest) {
    Label best = 0;
    double best_d = -std::numeric_limits<double>::infinity();
    for (const auto& m : model.machines) {
      const double d = svm_decision(m, model.gamma, xs);
      if (d > best_d || (d == best_d && m.positive > best)) {
        best_d = d;
        best = m.positive;
      }
    }
    return best;
  }

  std::array<int, 3> votes = {0, 0, 0};
  for (const auto& m : model.machines) {
    const double d = svm_decision(m, model.gamma, xs);
    ++votes[static_cast<std::size_t>(d > 0.0 ? m.positive : m.negative)];
  }
  Label winner = 0;
  for (Label l = 1; l < kNumLabels; ++l)
    if (votes[static_cast<std::size_t>(l)] >=
        votes[static_cast<std::size_t>(winner)])
      winner = l;  // ties resolve toward higher severity
  return winner;
}

int svm_kkt_violations(const SvmModel& model, const Eigen::MatrixXd& x,
                       const std::vector<Label>& y, double tolerance) {
  if (static_cast<std::size_t>(x.rows()) != y.size())
    throw ValidationError("svm_kkt_violations: rows vs labels mismatch");
  int violations = 0;
  for (const auto& m : model.machines) {
    for (std::size_t i = 0; i < y.size(); ++i) {
      double yb;
      if (y[i] == m.positive)
        yb = 1.0;
      else if (y[i] == m.negative || m.negative == kNumLabels)
        yb = -1.0;
      else
        continue;  // point not in this machine's subproblem
      const Eigen::VectorXd xs =
          standardize(model, x.row(static_cast<Eigen::Index>(i)).transpose());
      double alpha = 0.0;
      for (Eigen::Index s = 0; s < m.support_x.rows(); ++s)
        if ((m.support_x.row(s).transpose() - xs).lpNorm<Eigen::Infinity>() <
            1e-12) {
          alpha = std::abs(m.coeffs(s));
          break;
        }
      const double box = model.class_c[static_cast<std::size_t>(y[i])];
      const double r = yb * svm_decision(m, model.gamma, xs) - 1.0;
      const bool bad = (alpha < kStepEps && r < -tolerance) ||
                       (alpha > kStepEps && alpha < box - kStepEps &&
                        std::abs(r) > tolerance) ||
                       (alpha > box - kStepEps && r > tolerance);
      if (bad) ++violations;
    }
  }
  return violations;
}

double svm_dual_objective(const BinarySvm& machine, double gamma) {
  double obj = machine.coeffs.cwiseAbs().sum();
  for (Eigen::Index i = 0; i < machine.coeffs.size(); ++i)
    for (Eigen::Index j = 0; j < machine.coeffs.size(); ++j)
      obj -= 0.5 * machine.coeffs(i) * machine.coeffs(j) *
             rbf_kernel(machine.support_x.row(i).transpose(),
                        machine.support_x.row(j).transpose(), gamma);
  return obj;
}

}  // namespace triage
