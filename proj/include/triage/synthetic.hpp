#pragma once

#include <cstdint>
#include <string>

#include "triage/corpus.hpp"

namespace triage {

// Where the label-predictive signal is planted.
enum class SignalKind { kLexical, kCue, kMixed };

const char* signal_kind_name(SignalKind k);
SignalKind signal_kind_from_name(const std::string& name);

// Shape of the generated corpus. Labels are assigned as evenly as possible
// across calls; the planted signal makes them recoverable from caller text
// (lexical), from paralinguistic annotations (cue), or both (mixed).
struct SignalSpec {
  SignalKind kind = SignalKind::kMixed;
  int min_segments = 18;
  int max_segments = 30;
  double min_segment_s = 5.0;
  double max_segment_s = 18.0;
  double max_gap_s = 2.0;
  // Probability that a caller segment carries planted signal.
  double signal_rate = 0.35;
  // Signal may appear only in the last fraction of the segment list
  // (1.0 = anywhere). Models escalation late in a call; small values plus
  // long calls create the localized-signal regime.
  double signal_tail_fraction = 1.0;
  // Probability that a call contains one decoy burst: a short contiguous run
  // of caller segments dense with another class's signal words (quoted or
  // reported speech). A burst stays local, so votes over chunks shrug it off
  // while a whole-call readout soaks in it.
  double decoy_rate = 0.0;
  int decoy_caller_segments = 4;
  int decoy_words_per_segment = 3;
  // Periodic signal placement: every round(1/signal_rate)-th caller segment
  // carries signal. Keeps planted-token counts per chunk exact instead of
  // Bernoulli-noisy.
  bool periodic_signal = false;
  // When positive, every segment is padded with filler tokens to exactly this
  // token count. Constant segment lengths keep relative token frequencies
  // free of length-driven class noise.
  int tokens_per_segment = 0;
  // Distractor pseudo-word pool; fresh draws per call create per-call noise.
  int noise_vocab = 4000;
  double noise_tokens_per_segment = 2.0;

  static SignalSpec mixed() { return {}; }

  static SignalSpec lexical_only() {
    SignalSpec s;
    s.kind = SignalKind::kLexical;
    return s;
  }

  // Text carries no label information at all; only annotations do.
  static SignalSpec cue_only() {
    SignalSpec s;
    s.kind = SignalKind::kCue;
    return s;
  }

  // Long calls with sparse, spread-out signal and heavy distractor noise;
  // the regime where chunk augmentation earns its keep. Durations are fixed
  // so every call splits into the same number of chunks and chunking cannot
  // skew the training class balance.
  static SignalSpec sparse_long() {
    SignalSpec s;
    s.kind = SignalKind::kLexical;
    s.min_segments = 100;
    s.max_segments = 100;
    s.min_segment_s = 12.0;
    s.max_segment_s = 12.0;
    s.max_gap_s = 0.0;
    s.signal_rate = 1.0 / 3.0;
    s.noise_vocab = 8000;
    s.noise_tokens_per_segment = 2.0;
    s.decoy_rate = 1.0;
    s.decoy_caller_segments = 4;
    s.decoy_words_per_segment = 5;
    s.periodic_signal = true;
    s.tokens_per_segment = 34;
    return s;
  }
};

SignalSpec signal_spec_preset(const std::string& name);  // mixed|lexical|cue|sparse

// Deterministic pure function of (seed, n_calls, spec). Every generated call
// passes validate_call; labels are stratified to within one call of uniform.
// Throws ValidationError when n_calls < 3 (one call per class is the floor).
Corpus generate_synthetic_corpus(std::uint64_t seed, std::size_t n_calls,
                                 const SignalSpec& spec);

}  // namespace triage
