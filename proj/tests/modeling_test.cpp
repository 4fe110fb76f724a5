#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "triage/augmentation.hpp"
#include "triage/errors.hpp"
#include "triage/modeling.hpp"
#include "triage/random.hpp"
#include "triage/synthetic.hpp"

using namespace triage;

namespace {

Chunk tiny_chunk(const std::string& call_id, Label label,
                 const std::string& caller_text) {
  Call c;
  c.call_id = call_id;
  c.label = label;
  Segment s1;
  s1.speaker = Speaker::kOperator;
  s1.start_s = 0.0;
  s1.end_s = 3.0;
  s1.text = "Take your time.";
  Segment s2;
  s2.speaker = Speaker::kCaller;
  s2.start_s = 3.5;
  s2.end_s = 9.0;
  s2.text = caller_text;
  s2.annotation =
      ParalinguisticAnnotation{{"steady voice"}, "collected", {"Calm"}};
  c.segments = {s1, s2};
  return whole_call_chunk(c);
}

std::vector<TrainItem> separable_items(int per_class) {
  static const char* kMarkers[3] = {"sunlit", "restless", "hopeless"};
  const TafConfig taf;
  std::vector<TrainItem> items;
  for (Label label = 0; label < kNumLabels; ++label)
    for (int i = 0; i < per_class; ++i) {
      TrainItem item;
      item.label = label;
      item.chunk = tiny_chunk(
          "c" + std::to_string(label) + "-" + std::to_string(i), label,
          std::string("The week felt ") + kMarkers[label] + " most days.");
      item.reasoning = generate_reasoning_template(
          render_enriched(item.chunk.segments, true), label, taf,
          static_cast<std::uint64_t>(label * 31 + i));
      items.push_back(std::move(item));
    }
  return items;
}

}  // namespace

TEST_CASE("build_prompts pins the classification prompt") {
  const auto items = separable_items(1);
  const TafConfig taf;
  const PromptBundle b =
      build_prompts(items[0].chunk, items[0].reasoning, true);
  CHECK(b.classification_prompt == kClassificationPrompt);
  const std::string suffix = "crisis level (0, 1, or 2) as:";
  REQUIRE(b.classification_prompt.size() >= suffix.size());
  CHECK(b.classification_prompt.substr(b.classification_prompt.size() -
                                       suffix.size()) == suffix);
  CHECK(b.context.find("steady voice") != std::string::npos);
  CHECK(b.reasoning_target == items[0].reasoning.text);
  CHECK_FALSE(b.generation_prompt.empty());
  CHECK(b == build_prompts(items[0].chunk, items[0].reasoning, true));
}

TEST_CASE("annotations disappear from the context when switched off") {
  const auto items = separable_items(1);
  const PromptBundle b =
      build_prompts(items[0].chunk, items[0].reasoning, false);
  CHECK(b.context.find('[') == std::string::npos);
  CHECK(b.context.find("steady voice") == std::string::npos);
}

TEST_CASE("uniform logits give exactly ln 3") {
  const CategoryReadout r = make_readout(Eigen::Vector3d(4.2, 4.2, 4.2));
  for (int i = 0; i < 3; ++i)
    CHECK(r.probs[i] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  for (Label l = 0; l < 3; ++l)
    CHECK(std::abs(classification_loss(r, l) - std::log(3.0)) < 1e-12);
}

TEST_CASE("softmax is shift invariant") {
  rnd::Rng rng(81);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Vector3d logits(rng.uniform(-5.0, 5.0),
                                 rng.uniform(-5.0, 5.0),
                                 rng.uniform(-5.0, 5.0));
    const double shift = rng.uniform(-100.0, 100.0);
    const CategoryReadout a = make_readout(logits);
    const CategoryReadout b =
        make_readout(logits + Eigen::Vector3d::Constant(shift));
    for (int i = 0; i < 3; ++i)
      CHECK(std::abs(a.probs[i] - b.probs[i]) <= 1e-12);
    CHECK(std::abs(a.probs.sum() - 1.0) <= 1e-9);
  }
}

TEST_CASE("readout probabilities stay positive under extreme gaps") {
  const CategoryReadout r = make_readout(Eigen::Vector3d(0.0, -2000.0, 0.0));
  CHECK(r.probs[1] > 0.0);
  CHECK(std::isfinite(classification_loss(r, 1)));
  CHECK_THROWS_AS(
      make_readout(Eigen::Vector3d(0.0, std::nan(""), 0.0)),
      ValidationError);
}

TEST_CASE("pinned classification loss value") {
  // softmax(2,0,0)[0] = e^2/(e^2+2), -log = ln(1 + 2 e^-2)
  const CategoryReadout r = make_readout(Eigen::Vector3d(2.0, 0.0, 0.0));
  CHECK(classification_loss(r, 0) ==
        doctest::Approx(std::log(1.0 + 2.0 * std::exp(-2.0))).epsilon(1e-12));
  CHECK(classification_loss(r, 0) == doctest::Approx(0.2395).epsilon(1e-3));
}

TEST_CASE("combined loss is the exact sum and rejects non-finite terms") {
  CHECK(combined_loss(0.7, 1.3) == 2.0);
  CHECK(combined_loss(1.234, 0.0) == 1.234);
  CHECK_THROWS_AS(combined_loss(std::nan(""), 1.0), ValidationError);
  CHECK_THROWS_AS(combined_loss(1.0, INFINITY), ValidationError);
}

TEST_CASE("fresh backends read out uniformly and ln(vocab) generation loss") {
  ReferenceBackend backend;
  const Eigen::Vector3d logits = backend.category_logits("anything at all");
  CHECK(logits == Eigen::Vector3d::Zero());
  CHECK(backend.generation_nll("ctx", "some target words") ==
        std::log(4096.0));

  ReferenceBackend small(64, 32);
  CHECK(small.generation_nll("ctx", "tokens here") == std::log(32.0));
}

TEST_CASE("tokenizer lowercases and isolates structural characters") {
  const auto tokens =
      ReferenceBackend::tokenize("Caller: I'm FINE [sigh; Emotion: Calm]");
  const std::vector<std::string> expected = {
      "caller", ":", "i'm", "fine", "[", "sigh", ";",
      "emotion", ":", "calm", "]"};
  CHECK(tokens == expected);
  CHECK(ReferenceBackend::tokenize("   \n\t ").empty());
}

TEST_CASE("feature vectors are normalized frequencies") {
  ReferenceBackend backend(64, 32);
  const auto phi = backend.features("a b a");
  double total = 0.0;
  for (const auto& [idx, v] : phi) {
    CHECK(idx >= 0);
    CHECK(idx < 64);
    total += v;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(backend.features("").empty());
  CHECK_THROWS_AS(backend.target_frequencies(""), ValidationError);
}

TEST_CASE("analytic gradients match central finite differences") {
  ReferenceBackend backend(48, 24);
  rnd::Rng rng(505);
  const auto items = separable_items(2);
  std::vector<TrainingExample> batch;
  for (const auto& item : items)
    batch.push_back(make_example(build_prompts(item.chunk, item.reasoning,
                                               true),
                                 item.label));

  // random parameter point
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 48; ++c) backend.cls_weights()(r, c) = 0.3 * rng.normal();
  for (int r = 0; r < 3; ++r) backend.cls_bias()[r] = 0.3 * rng.normal();
  for (int g = 0; g < 24; ++g) backend.gen_weights()[g] = 0.3 * rng.normal();

  // analytic gradient recovered from one unit-rate update
  ReferenceBackend probe = backend;
  UpdateOptions opts;
  opts.learning_rate = 1.0;
  probe.apply_update(batch, opts);
  const Eigen::MatrixXd grad_w = backend.cls_weights() - probe.cls_weights();
  const Eigen::Vector3d grad_b = backend.cls_bias() - probe.cls_bias();
  const Eigen::VectorXd grad_g = backend.gen_weights() - probe.gen_weights();

  const double h = 1e-5;
  int checked = 0;
  const auto fd_check = [&](double analytic, double* param) {
    const double saved = *param;
    *param = saved + h;
    const double up = backend.evaluate_batch(batch).total;
    *param = saved - h;
    const double down = backend.evaluate_batch(batch).total;
    *param = saved;
    const double fd = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(fd), std::abs(analytic), 1e-8});
    CHECK(std::abs(fd - analytic) / denom <= 1e-4);
    ++checked;
  };
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 48; ++c)
      fd_check(grad_w(r, c), &backend.cls_weights()(r, c));
  for (int r = 0; r < 3; ++r) fd_check(grad_b[r], &backend.cls_bias()[r]);
  for (int g = 0; g < 24; ++g)
    fd_check(grad_g[g], &backend.gen_weights()[g]);
  CHECK(checked >= 100);
}

TEST_CASE("one small step never increases the batch loss") {
  rnd::Rng rng(7171);
  const auto items = separable_items(3);
  for (const double lr : {1e-3, 1e-4}) {
    ReferenceBackend backend(128, 64);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 128; ++c)
        backend.cls_weights()(r, c) = 0.5 * rng.normal();
    for (int g = 0; g < 64; ++g)
      backend.gen_weights()[g] = 0.5 * rng.normal();
    std::vector<TrainingExample> batch;
    for (const auto& item : items)
      batch.push_back(make_example(
          build_prompts(item.chunk, item.reasoning, true), item.label));
    const double before = backend.evaluate_batch(batch).total;
    UpdateOptions opts;
    opts.learning_rate = lr;
    const TrainingLosses reported = backend.apply_update(batch, opts);
    CHECK(reported.total == doctest::Approx(before).epsilon(1e-12));
    const double after = backend.evaluate_batch(batch).total;
    CHECK(after <= before);
  }
}

TEST_CASE("losses accumulate bitwise as l_cls plus l_gen") {
  const auto items = separable_items(2);
  ReferenceBackend backend;
  std::vector<TrainingExample> batch;
  for (const auto& item : items)
    batch.push_back(make_example(build_prompts(item.chunk, item.reasoning,
                                               true),
                                 item.label));
  UpdateOptions opts;
  opts.learning_rate = 0.5;
  for (int step = 0; step < 20; ++step) {
    const TrainingLosses l = backend.apply_update(batch, opts);
    CHECK(l.total == l.l_cls + l.l_gen);  // bitwise
  }
}

TEST_CASE("disabling the auxiliary loss freezes the generation head") {
  const auto items = separable_items(2);
  std::vector<TrainingExample> batch;
  for (const auto& item : items)
    batch.push_back(make_example(build_prompts(item.chunk, item.reasoning,
                                               true),
                                 item.label));
  ReferenceBackend backend(256, 128);
  const Eigen::VectorXd gen_before = backend.gen_weights();
  UpdateOptions opts;
  opts.learning_rate = 1.0;
  opts.use_auxiliary_loss = false;
  const TrainingLosses l = backend.apply_update(batch, opts);
  CHECK(backend.gen_weights() == gen_before);
  // the batch mean rounds, so exact equality with log(128) is not guaranteed
  CHECK(std::abs(l.l_gen - std::log(128.0)) <= 1e-12);
  CHECK(backend.cls_weights() != Eigen::MatrixXd::Zero(3, 256));
}

TEST_CASE("checkpoints round-trip bitwise") {
  const auto items = separable_items(2);
  ReferenceBackend backend(128, 64);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.learning_rate = 1.0;
  train(items, backend, cfg);

  const auto path =
      (std::filesystem::temp_directory_path() / "triage_ckpt.bin").string();
  backend.save(path);
  ReferenceBackend restored(8, 8);  // dimensions come from the file
  restored.load(path);
  CHECK(restored.feature_dim() == 128);
  CHECK(restored.vocab_dim() == 64);
  CHECK(restored.cls_weights() == backend.cls_weights());
  CHECK(restored.gen_weights() == backend.gen_weights());
  const std::string probe = "The week felt restless most days.";
  CHECK(restored.category_logits(probe) == backend.category_logits(probe));
  std::remove(path.c_str());

  CHECK_THROWS_AS(backend.load("/nonexistent/ckpt.bin"), ConfigError);
}

TEST_CASE("corrupt checkpoints are rejected") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto path = (dir / "triage_bad_ckpt.bin").string();
  {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    REQUIRE(f != nullptr);
    std::fputs("definitely not a checkpoint", f);
    std::fclose(f);
  }
  ReferenceBackend backend(8, 8);
  CHECK_THROWS_AS(backend.load(path), ParseError);
  std::remove(path.c_str());
}

TEST_CASE("training is deterministic and separable data reaches accuracy 1") {
  const auto items = separable_items(4);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.learning_rate = 4.0;
  cfg.batch_size = 12;  // full batch; minibatches oscillate at this rate
  cfg.seed = 99;

  ReferenceBackend a;
  const TrainResult ra = train(items, a, cfg);
  ReferenceBackend b;
  const TrainResult rb = train(items, b, cfg);
  REQUIRE(ra.steps.size() == rb.steps.size());
  for (std::size_t i = 0; i < ra.steps.size(); ++i) {
    CHECK(ra.steps[i].total == rb.steps[i].total);  // bitwise
    CHECK(ra.steps[i].total == ra.steps[i].l_cls + ra.steps[i].l_gen);
  }

  int correct = 0;
  for (const auto& item : items) {
    const auto input =
        render_enriched(item.chunk.segments, true) + "\n" +
        kClassificationPrompt;
    const auto readout = make_readout(a.category_logits(input));
    Label best = 0;
    for (Label l = 1; l < 3; ++l)
      if (readout.probs[l] >= readout.probs[best]) best = l;
    if (best == item.label) ++correct;
  }
  CHECK(correct == static_cast<int>(items.size()));
}

TEST_CASE("zero learning rate keeps the loss curve flat") {
  const auto items = separable_items(2);
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.learning_rate = 0.0;
  cfg.patience = 100;  // flat curves stop early otherwise
  ReferenceBackend backend;
  const TrainResult r = train(items, backend, cfg);
  REQUIRE(r.steps.size() >= 2);
  for (const auto& step : r.steps) CHECK(step.total == r.steps[0].total);
}

TEST_CASE("early stopping halts a converged run") {
  const auto items = separable_items(2);
  TrainConfig cfg;
  cfg.epochs = 500;
  cfg.learning_rate = 0.0;  // never improves
  cfg.patience = 5;
  ReferenceBackend backend;
  const TrainResult r = train(items, backend, cfg);
  CHECK(r.early_stopped);
  // first epoch sets the best; then patience epochs with no improvement
  CHECK(r.epochs_run == 6);
}

namespace {

// Backend that misbehaves at a chosen update; exercises train()'s divergence
// reporting without depending on how fast real parameters can blow up.
class BlowUpBackend final : public ModelBackend {
 public:
  enum class Mode { kNanTotal, kThrowValidation };
  BlowUpBackend(Mode mode, int bad_step) : mode_(mode), bad_step_(bad_step) {}

  Eigen::Vector3d category_logits(const std::string&) override {
    return Eigen::Vector3d::Zero();
  }
  double generation_nll(const std::string&, const std::string&) override {
    return 1.0;
  }
  TrainingLosses evaluate_batch(const std::vector<TrainingExample>&) override {
    return ok_losses();
  }
  TrainingLosses apply_update(const std::vector<TrainingExample>&,
                              const UpdateOptions&) override {
    ++updates_;
    if (updates_ < bad_step_) return ok_losses();
    if (mode_ == Mode::kThrowValidation)
      throw ValidationError("non-finite category logit");
    TrainingLosses l;
    l.l_cls = std::nan("");
    l.l_gen = 1.0;
    l.total = std::nan("");
    return l;
  }
  void save(const std::string&) const override {}
  void load(const std::string&) override {}

 private:
  static TrainingLosses ok_losses() {
    TrainingLosses l;
    l.l_cls = 1.0;
    l.l_gen = 1.0;
    l.total = 2.0;
    return l;
  }
  Mode mode_;
  int bad_step_;
  int updates_ = 0;
};

}  // namespace

TEST_CASE("divergence is reported with the step index") {
  const auto items = separable_items(2);  // 6 items
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.batch_size = 2;  // 3 steps per epoch

  SUBCASE("non-finite loss total") {
    BlowUpBackend backend(BlowUpBackend::Mode::kNanTotal, 5);
    try {
      train(items, backend, cfg);
      FAIL("expected divergence");
    } catch (const TriageError& e) {
      CHECK(std::string(e.what()).find("step 5") != std::string::npos);
    }
  }

  SUBCASE("backend rejects blown-up parameters") {
    BlowUpBackend backend(BlowUpBackend::Mode::kThrowValidation, 2);
    try {
      train(items, backend, cfg);
      FAIL("expected divergence");
    } catch (const TriageError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("step 2") != std::string::npos);
      CHECK(msg.find("non-finite category logit") != std::string::npos);
    }
  }
}

TEST_CASE("cosine schedule anneals from full rate toward zero") {
  TrainConfig cfg;
  cfg.learning_rate = 2.0;
  cfg.schedule = "cosine";
  CHECK(scheduled_learning_rate(cfg, 0, 100) == 2.0);
  CHECK(scheduled_learning_rate(cfg, 50, 100) == doctest::Approx(1.0));
  CHECK(scheduled_learning_rate(cfg, 100, 100) ==
        doctest::Approx(0.0).epsilon(1e-12));
  cfg.schedule = "constant";
  CHECK(scheduled_learning_rate(cfg, 99, 100) == 2.0);
}

TEST_CASE("train config validation rejects bad values") {
  TrainConfig cfg;
  CHECK_NOTHROW(validate_train_config(cfg));
  cfg.schedule = "linear";
  CHECK_THROWS_AS(validate_train_config(cfg), ConfigError);
  cfg = TrainConfig{};
  cfg.epochs = 0;
  CHECK_THROWS_AS(validate_train_config(cfg), ConfigError);
  cfg = TrainConfig{};
  cfg.learning_rate = -1.0;
  CHECK_THROWS_AS(validate_train_config(cfg), ConfigError);
  cfg = TrainConfig{};
  cfg.batch_size = 0;
  CHECK_THROWS_AS(validate_train_config(cfg), ConfigError);
  ReferenceBackend empty_target(16, 16);
  CHECK_THROWS_AS(train({}, empty_target, TrainConfig{}), ValidationError);
}

TEST_CASE("grad_accum concatenation equals one big batch") {
  const auto items = separable_items(2);  // 6 examples
  TrainConfig small;
  small.epochs = 3;
  small.batch_size = 2;
  small.grad_accum = 3;
  small.seed = 5;
  TrainConfig big;
  big.epochs = 3;
  big.batch_size = 6;
  big.grad_accum = 1;
  big.seed = 5;
  ReferenceBackend a;
  ReferenceBackend b;
  const TrainResult ra = train(items, a, small);
  const TrainResult rb = train(items, b, big);
  REQUIRE(ra.steps.size() == rb.steps.size());
  for (std::size_t i = 0; i < ra.steps.size(); ++i)
    CHECK(ra.steps[i].total == rb.steps[i].total);
  CHECK(a.cls_weights() == b.cls_weights());
}
