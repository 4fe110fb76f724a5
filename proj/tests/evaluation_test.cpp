#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "triage/errors.hpp"
#include "triage/evaluation.hpp"
#include "triage/random.hpp"
#include "triage/synthetic.hpp"

using namespace triage;

namespace {

Call stub_call(const std::string& id, Label label) {
  Call c;
  c.call_id = id;
  c.label = label;
  Segment s;
  s.speaker = Speaker::kCaller;
  s.start_s = 0.0;
  s.end_s = 10.0;
  s.text = "hello";
  c.segments.push_back(s);
  return c;
}

// Definition-based oracle: count tp/fp/fn per class by scanning the vectors,
// never via a confusion matrix, so it shares no code path with macro_f1.
double oracle_macro_f1(const std::vector<Label>& truth,
                       const std::vector<Label>& predicted) {
  double sum = 0.0;
  for (Label c = 0; c < kNumLabels; ++c) {
    double tp = 0.0, fp = 0.0, fn = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (truth[i] == c && predicted[i] == c) tp += 1.0;
      if (truth[i] != c && predicted[i] == c) fp += 1.0;
      if (truth[i] == c && predicted[i] != c) fn += 1.0;
    }
    const double precision = tp + fp > 0.0 ? tp / (tp + fp) : 0.0;
    const double recall = tp + fn > 0.0 ? tp / (tp + fn) : 0.0;
    sum += precision + recall > 0.0
               ? 2.0 * precision * recall / (precision + recall)
               : 0.0;
  }
  return sum / 3.0;
}

}  // namespace

TEST_CASE("macro_f1 matches hand-worked values") {
  const std::vector<Label> truth = {0, 0, 1, 1, 2, 2};
  const std::vector<Label> pred = {0, 1, 1, 1, 2, 0};
  // per class: F1(0) = 1/2, F1(1) = 4/5, F1(2) = 2/3
  CHECK(macro_f1(truth, pred) ==
        doctest::Approx((0.5 + 0.8 + 2.0 / 3.0) / 3.0).epsilon(1e-12));
  CHECK(accuracy(truth, pred) == doctest::Approx(4.0 / 6.0).epsilon(1e-12));

  // collapsing to one class zeroes two of the three F1 terms
  const std::vector<Label> all_zero = {0, 0, 0, 0, 0, 0};
  CHECK(macro_f1(truth, all_zero) == doctest::Approx(0.5 / 3.0).epsilon(1e-12));

  // perfect prediction
  CHECK(macro_f1(truth, truth) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("macro_f1 agrees exactly with the definition oracle") {
  rnd::Rng rng(61);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform_int(0, 39));
    std::vector<Label> truth(n), pred(n);
    // occasionally force degenerate vectors (one class only)
    const bool degenerate = rng.bernoulli(0.1);
    const Label only = static_cast<Label>(rng.uniform_int(0, 2));
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = degenerate ? only : static_cast<Label>(rng.uniform_int(0, 2));
      pred[i] = static_cast<Label>(rng.uniform_int(0, 2));
    }
    CHECK(macro_f1(truth, pred) == oracle_macro_f1(truth, pred));
  }
}

TEST_CASE("confusion_matrix counts by [true][predicted]") {
  const std::vector<Label> truth = {0, 0, 1, 2, 2, 2};
  const std::vector<Label> pred = {0, 2, 1, 2, 0, 2};
  const Confusion m = confusion_matrix(truth, pred);
  CHECK(m[0][0] == 1);
  CHECK(m[0][2] == 1);
  CHECK(m[1][1] == 1);
  CHECK(m[2][0] == 1);
  CHECK(m[2][2] == 2);
  std::size_t total = 0;
  for (const auto& row : m)
    for (const auto v : row) total += v;
  CHECK(total == truth.size());
}

TEST_CASE("metrics reject malformed label vectors") {
  CHECK_THROWS_AS(macro_f1({}, {}), ValidationError);
  CHECK_THROWS_AS(macro_f1({0, 1}, {0}), ValidationError);
  CHECK_THROWS_AS(accuracy({0, 3}, {0, 0}), ValidationError);
  CHECK_THROWS_AS(confusion_matrix({0, 0}, {0, -1}), ValidationError);
}

TEST_CASE("fifteen calls fold into five exact one-per-class test sets") {
  Corpus corpus;
  for (int i = 0; i < 15; ++i)
    corpus.push_back(
        stub_call("c" + std::to_string(i), static_cast<Label>(i % 3)));
  const auto folds = make_folds(corpus, 5, 99);
  REQUIRE(folds.size() == 5);

  std::set<std::string> seen_tests;
  for (const auto& fold : folds) {
    CHECK(fold.test_call_ids.size() == 3);
    CHECK(fold.train_call_ids.size() == 12);
    std::set<Label> test_labels;
    for (const auto& id : fold.test_call_ids) {
      CHECK(seen_tests.insert(id).second);  // each call tests exactly once
      test_labels.insert(static_cast<Label>(std::stoi(id.substr(1)) % 3));
    }
    CHECK(test_labels.size() == 3);  // one of each class
    // train and test partition the corpus
    std::set<std::string> all(fold.train_call_ids.begin(),
                              fold.train_call_ids.end());
    for (const auto& id : fold.test_call_ids) CHECK(all.insert(id).second);
    CHECK(all.size() == corpus.size());
  }
  CHECK(seen_tests.size() == corpus.size());
}

TEST_CASE("make_folds is seed-deterministic and seed-sensitive") {
  const Corpus corpus = generate_synthetic_corpus(3, 30, SignalSpec::mixed());
  const auto a = make_folds(corpus, 5, 11);
  const auto b = make_folds(corpus, 5, 11);
  REQUIRE(a.size() == b.size());
  for (std::size_t f = 0; f < a.size(); ++f) {
    CHECK(a[f].test_call_ids == b[f].test_call_ids);
    CHECK(a[f].train_call_ids == b[f].train_call_ids);
  }
  const auto c = make_folds(corpus, 5, 12);
  bool any_difference = false;
  for (std::size_t f = 0; f < a.size(); ++f)
    if (a[f].test_call_ids != c[f].test_call_ids) any_difference = true;
  CHECK(any_difference);
}

TEST_CASE("make_folds names the class that is too small") {
  Corpus corpus;
  for (int i = 0; i < 5; ++i) corpus.push_back(stub_call("a" + std::to_string(i), 0));
  for (int i = 0; i < 4; ++i) corpus.push_back(stub_call("b" + std::to_string(i), 1));
  for (int i = 0; i < 5; ++i) corpus.push_back(stub_call("c" + std::to_string(i), 2));
  try {
    make_folds(corpus, 5, 0);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("class 1") != std::string::npos);
    CHECK(std::string(e.what()).find("4") != std::string::npos);
  }
  CHECK_THROWS_AS(make_folds(corpus, 1, 0), ValidationError);

  Corpus dup = {stub_call("x", 0), stub_call("x", 1)};
  CHECK_THROWS_AS(make_folds(dup, 2, 0), ValidationError);
}

TEST_CASE("assemble_report recomputes means and population stds") {
  std::vector<FoldMetrics> folds(2);
  folds[0].accuracy = 0.8;
  folds[0].macro_f1 = 0.6;
  folds[1].accuracy = 1.0;
  folds[1].macro_f1 = 0.8;
  const EvalReport r = assemble_report(folds, "fp", 9);
  CHECK(r.mean_accuracy == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(r.std_accuracy == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(r.mean_macro_f1 == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(r.std_macro_f1 == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(r.std_convention == "population");
  CHECK_THROWS_AS(assemble_report({}, "fp", 9), ValidationError);
}

TEST_CASE("reports survive a serialize-parse-serialize round trip") {
  std::vector<FoldMetrics> folds(3);
  folds[0].accuracy = 0.75;
  folds[0].macro_f1 = 0.7123456789012345;
  folds[0].confusion = {{{4, 1, 0}, {0, 5, 0}, {1, 0, 4}}};
  folds[1].accuracy = 1.0;
  folds[1].macro_f1 = 1.0;
  folds[2].accuracy = 0.5;
  folds[2].macro_f1 = 1.0 / 3.0;
  const EvalReport r = assemble_report(folds, "0123456789abcdef", 42);

  const std::string text = serialize_report(r);
  const EvalReport back = parse_report(text);
  CHECK(serialize_report(back) == text);
  CHECK(back.per_fold.size() == 3);
  CHECK(back.per_fold[0].confusion == folds[0].confusion);
  CHECK(back.seed == 42);

  CHECK_THROWS_AS(parse_report("not json"), ParseError);
  CHECK_THROWS_AS(parse_report("{\"schema_version\": 2}"), ParseError);
  CHECK_THROWS_AS(parse_report("{\"schema_version\": 1}"), ParseError);
}

TEST_CASE("config fingerprints separate configs field by field") {
  PipelineConfig base;
  const std::string fp = config_fingerprint(base);
  CHECK(fp.size() == 16);
  CHECK(fp.find_first_not_of("0123456789abcdef") == std::string::npos);
  CHECK(config_fingerprint(base) == fp);

  PipelineConfig other = base;
  other.train.learning_rate = 1.5;
  CHECK(config_fingerprint(other) != fp);
  other = base;
  other.use_augmentation = false;
  CHECK(config_fingerprint(other) != fp);
  other = base;
  other.seed = 1;
  CHECK(config_fingerprint(other) != fp);
  other = base;
  other.taf.threshold_low = 5;
  CHECK(config_fingerprint(other) != fp);
}

TEST_CASE("run_cv on the mixed corpus clears 0.9 and reruns byte-identically") {
  const Corpus corpus = generate_synthetic_corpus(7, 60, SignalSpec::mixed());
  PipelineConfig cfg;
  cfg.seed = 7;
  cfg.train.seed = 7;
  cfg.train.epochs = 8;
  cfg.train.batch_size = 512;

  const EvalReport report = run_cv(corpus, cfg);
  CHECK(report.mean_macro_f1 >= 0.9);
  CHECK(report.per_fold.size() == 5);
  CHECK(report.config_fingerprint == config_fingerprint(cfg));

  const std::string again = serialize_report(run_cv(corpus, cfg));
  CHECK(again == serialize_report(report));
}

TEST_CASE("run_ablations emits the four variants over the same folds") {
  const Corpus corpus = generate_synthetic_corpus(21, 15, SignalSpec::mixed());
  PipelineConfig cfg;
  cfg.seed = 21;
  cfg.train.seed = 21;
  cfg.train.epochs = 2;
  cfg.train.batch_size = 512;

  const auto rows = run_ablations(corpus, cfg);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].name == "full");
  CHECK(rows[1].name == "no_augmentation");
  CHECK(rows[2].name == "no_annotations");
  CHECK(rows[3].name == "no_auxiliary_loss");
  for (const auto& row : rows) CHECK(row.report.per_fold.size() == 5);
  // each ablation flips one switch, so fingerprints are pairwise distinct
  std::set<std::string> fps;
  for (const auto& row : rows) fps.insert(row.report.config_fingerprint);
  CHECK(fps.size() == 4);
}
