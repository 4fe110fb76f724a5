#include "triage/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

#include "triage/errors.hpp"
#include "triage/random.hpp"

namespace triage {

namespace {

void check_label_vectors(const std::vector<Label>& truth,
                         const std::vector<Label>& predicted) {
  if (truth.empty())
    throw ValidationError("metric over empty label vectors");
  if (truth.size() != predicted.size())
    throw ValidationError("label vector length mismatch: " +
                          std::to_string(truth.size()) + " vs " +
                          std::to_string(predicted.size()));
  for (const Label l : truth)
    if (!label_valid(l))
      throw ValidationError("invalid true label " + std::to_string(l));
  for (const Label l : predicted)
    if (!label_valid(l))
      throw ValidationError("invalid predicted label " + std::to_string(l));
}

double population_std(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (const double x : xs) mean += x;
  mean /= n;
  double sq = 0.0;
  for (const double x : xs) sq += (x - mean) * (x - mean);
  return std::sqrt(sq / n);
}

double mean_of(const std::vector<double>& xs) {
  double m = 0.0;
  for (const double x : xs) m += x;
  return m / static_cast<double>(xs.size());
}

}  // namespace

std::vector<FoldSplit> make_folds(const Corpus& corpus, int k,
                                  std::uint64_t seed) {
  if (k < 2) throw ValidationError("fold count must be at least 2");
  std::set<std::string> seen;
  for (const auto& call : corpus)
    if (!seen.insert(call.call_id).second)
      throw ValidationError("duplicate call_id \"" + call.call_id + "\"");

  std::array<std::vector<std::string>, 3> by_class;
  for (const auto& call : corpus) {
    if (!label_valid(call.label))
      throw ValidationError("call " + call.call_id + " has invalid label");
    by_class[static_cast<std::size_t>(call.label)].push_back(call.call_id);
  }
  for (Label l = 0; l < kNumLabels; ++l)
    if (by_class[static_cast<std::size_t>(l)].size() <
        static_cast<std::size_t>(k))
      throw ValidationError("class " + std::to_string(l) + " has only " +
                            std::to_string(
                                by_class[static_cast<std::size_t>(l)].size()) +
                            " calls, fewer than k=" + std::to_string(k));

  std::vector<FoldSplit> folds(static_cast<std::size_t>(k));
  for (int f = 0; f < k; ++f) folds[static_cast<std::size_t>(f)].fold_index = f;

  for (Label l = 0; l < kNumLabels; ++l) {
    auto ids = by_class[static_cast<std::size_t>(l)];
    rnd::Rng rng(rnd::derive_seed(seed, "fold-class-" + std::to_string(l)));
    rng.shuffle(ids);
    for (std::size_t j = 0; j < ids.size(); ++j) {
      const std::size_t test_fold = j % static_cast<std::size_t>(k);
      for (int f = 0; f < k; ++f) {
        auto& fold = folds[static_cast<std::size_t>(f)];
        if (static_cast<std::size_t>(f) == test_fold)
          fold.test_call_ids.push_back(ids[j]);
        else
          fold.train_call_ids.push_back(ids[j]);
      }
    }
  }
  return folds;
}

Confusion confusion_matrix(const std::vector<Label>& truth,
                           const std::vector<Label>& predicted) {
  check_label_vectors(truth, predicted);
  Confusion m = {};
  for (std::size_t i = 0; i < truth.size(); ++i)
    ++m[static_cast<std::size_t>(truth[i])]
       [static_cast<std::size_t>(predicted[i])];
  return m;
}

double accuracy(const std::vector<Label>& truth,
                const std::vector<Label>& predicted) {
  check_label_vectors(truth, predicted);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    if (truth[i] == predicted[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double macro_f1(const std::vector<Label>& truth,
                const std::vector<Label>& predicted) {
  const Confusion m = confusion_matrix(truth, predicted);
  double f1_sum = 0.0;
  for (std::size_t c = 0; c < 3; ++c) {
    const double tp = static_cast<double>(m[c][c]);
    double fp = 0.0;
    double fn = 0.0;
    for (std::size_t o = 0; o < 3; ++o) {
      if (o == c) continue;
      fp += static_cast<double>(m[o][c]);
      fn += static_cast<double>(m[c][o]);
    }
    const double precision = (tp + fp) > 0.0 ? tp / (tp + fp) : 0.0;
    const double recall = (tp + fn) > 0.0 ? tp / (tp + fn) : 0.0;
    const double f1 = (precision + recall) > 0.0
                          ? 2.0 * precision * recall / (precision + recall)
                          : 0.0;
    f1_sum += f1;
  }
  return f1_sum / 3.0;
}

EvalReport assemble_report(std::vector<FoldMetrics> per_fold,
                           std::string fingerprint, std::uint64_t seed) {
  if (per_fold.empty())
    throw ValidationError("report needs at least one fold");
  EvalReport r;
  r.per_fold = std::move(per_fold);
  r.config_fingerprint = std::move(fingerprint);
  r.seed = seed;
  std::vector<double> accs;
  std::vector<double> f1s;
  for (const auto& fm : r.per_fold) {
    accs.push_back(fm.accuracy);
    f1s.push_back(fm.macro_f1);
  }
  r.mean_accuracy = mean_of(accs);
  r.std_accuracy = population_std(accs);
  r.mean_macro_f1 = mean_of(f1s);
  r.std_macro_f1 = population_std(f1s);
  return r;
}

std::string serialize_report(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["seed"] = report.seed;
  j["config_fingerprint"] = report.config_fingerprint;
  j["std_convention"] = report.std_convention;
  j["folds"] = nlohmann::ordered_json::array();
  for (std::size_t f = 0; f < report.per_fold.size(); ++f) {
    const auto& fm = report.per_fold[f];
    nlohmann::ordered_json fold;
    fold["fold"] = f;
    fold["accuracy"] = fm.accuracy;
    fold["macro_f1"] = fm.macro_f1;
    fold["confusion"] = fm.confusion;
    j["folds"].push_back(fold);
  }
  j["mean_accuracy"] = report.mean_accuracy;
  j["std_accuracy"] = report.std_accuracy;
  j["mean_macro_f1"] = report.mean_macro_f1;
  j["std_macro_f1"] = report.std_macro_f1;
  return j.dump(2) + "\n";
}

EvalReport parse_report(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("report is not valid JSON: ") + e.what());
  }
  try {
    EvalReport r;
    if (j.at("schema_version").get<int>() != 1)
      throw ParseError("unsupported report schema version");
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config_fingerprint = j.at("config_fingerprint").get<std::string>();
    r.std_convention = j.at("std_convention").get<std::string>();
    for (const auto& fold : j.at("folds")) {
      FoldMetrics fm;
      fm.accuracy = fold.at("accuracy").get<double>();
      fm.macro_f1 = fold.at("macro_f1").get<double>();
      fm.confusion = fold.at("confusion").get<Confusion>();
      r.per_fold.push_back(fm);
    }
    r.mean_accuracy = j.at("mean_accuracy").get<double>();
    r.std_accuracy = j.at("std_accuracy").get<double>();
    r.mean_macro_f1 = j.at("mean_macro_f1").get<double>();
    r.std_macro_f1 = j.at("std_macro_f1").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("report is missing fields: ") + e.what());
  }
}

std::string config_fingerprint(const PipelineConfig& cfg) {
  std::ostringstream canon;
  canon.precision(17);
  canon << "chunk.target=" << cfg.chunk.target_duration_s
        << ";chunk.tail=" << cfg.chunk.min_tail_fraction
        << ";taf.low=" << cfg.taf.threshold_low
        << ";taf.high=" << cfg.taf.threshold_high;
  for (const auto& domain : cfg.taf.criteria)
    for (const auto& text : domain) canon << ";crit=" << text;
  canon << ";train.lr=" << cfg.train.learning_rate
        << ";train.schedule=" << cfg.train.schedule
        << ";train.epochs=" << cfg.train.epochs
        << ";train.batch=" << cfg.train.batch_size
        << ";train.accum=" << cfg.train.grad_accum
        << ";train.seed=" << cfg.train.seed
        << ";train.aux=" << cfg.train.use_auxiliary_loss
        << ";train.ann=" << cfg.train.include_annotations
        << ";train.patience=" << cfg.train.patience
        << ";train.tol=" << cfg.train.tolerance
        << ";k=" << cfg.k << ";seed=" << cfg.seed
        << ";aug=" << cfg.use_augmentation
        << ";probmean=" << cfg.aggregate.use_probability_mean
        << ";D=" << cfg.feature_dim << ";G=" << cfg.vocab_dim;
  std::ostringstream hex;
  hex << std::hex << std::setw(16) << std::setfill('0')
      << rnd::hash64(canon.str());
  return hex.str();
}

EvalReport run_cv(const Corpus& corpus, const PipelineConfig& cfg) {
  const auto folds = make_folds(corpus, cfg.k, cfg.seed);
  std::map<std::string, const Call*> calls;
  for (const auto& call : corpus) calls[call.call_id] = &call;

  const auto chunks_of = [&](const std::string& call_id) {
    const Call& call = *calls.at(call_id);
    return cfg.use_augmentation
               ? chunk_call(call, cfg.chunk)
               : std::vector<Chunk>{whole_call_chunk(call)};
  };

  std::vector<FoldMetrics> per_fold;
  for (const auto& fold : folds) {
    try {
      const std::set<std::string> test_ids(fold.test_call_ids.begin(),
                                           fold.test_call_ids.end());
      std::vector<TrainItem> items;
      for (const auto& call_id : fold.train_call_ids)
        for (auto& chunk : chunks_of(call_id)) {
          if (test_ids.count(call_id_of_chunk(chunk.chunk_id)) > 0)
            throw TriageError("leakage: training chunk " + chunk.chunk_id +
                              " belongs to a test call");
          TrainItem item;
          item.label = chunk.label;
          item.reasoning = generate_reasoning_template(
              render_enriched(chunk.segments, cfg.train.include_annotations),
              chunk.label, cfg.taf,
              rnd::derive_seed(cfg.seed, chunk.chunk_id));
          item.chunk = std::move(chunk);
          items.push_back(std::move(item));
        }

      ReferenceBackend backend(cfg.feature_dim, cfg.vocab_dim);
      TrainConfig fold_train = cfg.train;
      fold_train.seed = rnd::derive_seed(
          cfg.train.seed, "fold-" + std::to_string(fold.fold_index));
      train(items, backend, fold_train);

      std::vector<Label> truth;
      std::vector<Label> predicted;
      for (const auto& call_id : fold.test_call_ids) {
        std::vector<Prediction> preds;
        for (const auto& chunk : chunks_of(call_id))
          preds.push_back(predict_chunk(backend, chunk,
                                        cfg.train.include_annotations));
        truth.push_back(calls.at(call_id)->label);
        predicted.push_back(aggregate_call(preds, cfg.aggregate));
      }
      FoldMetrics fm;
      fm.accuracy = accuracy(truth, predicted);
      fm.macro_f1 = macro_f1(truth, predicted);
      fm.confusion = confusion_matrix(truth, predicted);
      per_fold.push_back(fm);
    } catch (const TriageError& e) {
      throw TriageError("fold " + std::to_string(fold.fold_index) + ": " +
                        e.what());
    }
  }
  return assemble_report(std::move(per_fold), config_fingerprint(cfg),
                         cfg.seed);
}

std::vector<AblationRow> run_ablations(const Corpus& corpus,
                                       const PipelineConfig& cfg) {
  std::vector<AblationRow> rows;
  rows.push_back({"full", run_cv(corpus, cfg)});

  PipelineConfig no_aug = cfg;
  no_aug.use_augmentation = false;
  rows.push_back({"no_augmentation", run_cv(corpus, no_aug)});

  PipelineConfig no_ann = cfg;
  no_ann.train.include_annotations = false;
  rows.push_back({"no_annotations", run_cv(corpus, no_ann)});

  PipelineConfig no_aux = cfg;
  no_aux.train.use_auxiliary_loss = false;
  rows.push_back({"no_auxiliary_loss", run_cv(corpus, no_aux)});
  return rows;
}

}  // namespace triage
