#include "triage/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>

#include "triage/errors.hpp"
#include "triage/random.hpp"

namespace triage {

const char* signal_kind_name(SignalKind k) {
  switch (k) {
    case SignalKind::kLexical: return "lexical";
    case SignalKind::kCue: return "cue";
    case SignalKind::kMixed: return "mixed";
  }
  return "mixed";
}

SignalKind signal_kind_from_name(const std::string& name) {
  if (name == "lexical") return SignalKind::kLexical;
  if (name == "cue") return SignalKind::kCue;
  if (name == "mixed") return SignalKind::kMixed;
  throw ConfigError("unknown signal kind \"" + name + "\"");
}

SignalSpec signal_spec_preset(const std::string& name) {
  if (name == "mixed") return SignalSpec::mixed();
  if (name == "lexical") return SignalSpec::lexical_only();
  if (name == "cue") return SignalSpec::cue_only();
  if (name == "sparse") return SignalSpec::sparse_long();
  throw ConfigError("unknown signal preset \"" + name +
                    "\" (expected mixed|lexical|cue|sparse)");
}

namespace {

using rnd::Rng;

const std::vector<std::string> kCallerBase = {
    "I wanted to talk to someone today.",
    "Things at school have kept me busy this week.",
    "My roommate and I had a long conversation yesterday.",
    "I went for a walk in the evening like usual.",
    "Work has been about the same as last month.",
    "I have been cooking for myself most days.",
    "My family called me over the weekend.",
    "I watched something on my phone before bed.",
    "The weather changed a lot this week.",
    "I met a friend from my old class recently.",
    "I have been keeping a small routine in the mornings.",
    "There was a lot going on at home lately.",
};

const std::vector<std::string> kOperatorBase = {
    "Can you tell me more about that?",
    "How long has this been going on?",
    "I hear you, please go on.",
    "What happened after that?",
    "How did that make you feel?",
    "Is there anyone around you right now?",
    "Thank you for sharing that with me.",
    "Let's take this one step at a time.",
    "What usually helps you in moments like this?",
    "I'm listening, take your time.",
};

// Carrier sentences with one {} slot for a planted word. The slot is never
// sentence-final: the tokenizer keeps trailing periods attached, and a fused
// "word." form would split the planted token's mass across two dimensions.
const std::vector<std::string> kSignalCarriers = {
    "Lately everything feels {} to me.",
    "Most days I would say I am {} at best.",
    "When I think about it, {} is the word.",
    "Honestly it has been {} for a while now.",
    "I told my friend that things are {} these days.",
};

std::string fill_slot(const std::string& carrier, const std::string& word) {
  const auto pos = carrier.find("{}");
  return carrier.substr(0, pos) + word + carrier.substr(pos + 2);
}

const std::array<std::vector<std::string>, 3> kSignalWords = {{
    {"manageable", "steady", "coping", "settled"},
    {"overwhelmed", "restless", "struggling", "anxious"},
    {"hopeless", "unbearable", "worthless", "desperate"},
}};

// Reported-speech frames for decoy bursts. The {} slot takes a joined list of
// another class's signal words, so the burst reads as someone else's state.
const std::vector<std::string> kDecoyFrames = {
    "My neighbour kept saying they feel {} lately.",
    "Someone on the radio described feeling {} all week.",
    "My sister said her flatmate sounded {} on the phone.",
    "A coworker keeps telling everyone he is {} right now.",
};

std::string decoy_text(Label decoy_label, int words, int turn) {
  const auto& pool = kSignalWords[static_cast<std::size_t>(decoy_label)];
  // Pool words cycle from the turn index: any window of consecutive turns
  // covers the pool evenly, so burst composition is exact, not sampled.
  std::string joined = pool[static_cast<std::size_t>(turn) % pool.size()];
  for (int i = 1; i < words; ++i) {
    joined += (i + 1 == words ? " and " : ", ");
    joined += pool[static_cast<std::size_t>(turn + i) % pool.size()];
  }
  // Frames cycle with the caller turn: consecutive decoy turns use distinct
  // frames, so frame-word counts do not depend on the burst position.
  return fill_slot(
      kDecoyFrames[static_cast<std::size_t>(turn) % kDecoyFrames.size()],
      joined);
}

struct CueProfile {
  std::vector<std::string> cues;
  std::vector<std::string> summaries;
  std::vector<std::string> emotions;
};

const std::array<CueProfile, 3> kCueProfiles = {{
    {{"steady voice", "even pacing", "relaxed breathing", "light laugh"},
     {"sounding settled and composed", "keeping a calm and open tone"},
     {"Calm", "Neutral"}},
    {{"audible sighing", "strained voice", "restless pauses", "quickened speech"},
     {"expressing worry and tension", "sounding uneasy and wound up"},
     {"Anxiety", "Sadness"}},
    {{"trembling voice", "obvious sobbing", "long silences", "low volume"},
     {"expressing deep despair and exhaustion",
      "sounding drained and close to tears"},
     {"Sadness", "Despair"}},
}};

const CueProfile kNeutralCueProfile = {
    {"clear voice", "normal pace"},
    {"describing recent events in an even tone"},
    {"Neutral"}};

// Deterministic pseudo-word for a distractor id; three CV syllables.
std::string pseudo_word(int id) {
  static const char onsets[] = "bdfgklmnprstvz";
  static const char nuclei[] = "aeiou";
  std::string w;
  for (int s = 0; s < 3; ++s) {
    w.push_back(onsets[(id % 70) / 5]);
    w.push_back(nuclei[id % 5]);
    id /= 70;
  }
  return w;
}

// Token count under the model tokenizer's rules: "[],;>:" are standalone,
// whitespace splits, everything else (periods included) stays attached.
int token_count(const std::string& s) {
  auto is_sep = [](char c) {
    return c == '[' || c == ']' || c == ',' || c == ';' || c == '>' ||
           c == ':';
  };
  int n = 0;
  bool in_word = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      in_word = false;
    } else if (is_sep(c)) {
      ++n;
      in_word = false;
    } else {
      if (!in_word) ++n;
      in_word = true;
    }
  }
  return n;
}

// Filler clause bringing `text` to exactly spec.tokens_per_segment tokens:
// "We talked about" plus k pseudo-words is 3 + k tokens. Filler identities
// are keyed to the segment position, not drawn: identical positions carry
// identical filler in every call, so filler frequencies are class-exact and
// hash collisions with real words stay constant instead of noisy.
std::string pad_clause(const SignalSpec& spec, const std::string& text,
                       int seg_index) {
  const int k = spec.tokens_per_segment - token_count(text) - 3;
  if (k < 1)
    throw ValidationError("tokens_per_segment " +
                          std::to_string(spec.tokens_per_segment) +
                          " leaves no room after \"" + text + "\"");
  std::string clause = " We talked about";
  for (int i = 0; i < k; ++i) {
    const int id = (seg_index * 131 + i * 17) % std::max(spec.noise_vocab, 1);
    clause += " " + pseudo_word(id);
  }
  clause += ".";
  return clause;
}

std::string noise_clause(Rng& rng, const SignalSpec& spec) {
  // Fixed count per segment; only the token identities vary. Connector-word
  // frequencies then carry no class information at all.
  const int n = static_cast<int>(spec.noise_tokens_per_segment + 0.5);
  if (n == 0) return "";
  std::string clause = " We talked about";
  for (int i = 0; i < n; ++i) {
    const int id = static_cast<int>(rng.uniform_int(0, spec.noise_vocab - 1));
    clause += (i == 0 ? " " : " and ") + pseudo_word(id);
  }
  clause += ".";
  return clause;
}

ParalinguisticAnnotation make_annotation(Rng& rng, const CueProfile& profile) {
  ParalinguisticAnnotation a;
  const int n_cues = static_cast<int>(rng.uniform_int(
      2, static_cast<std::int64_t>(std::min<std::size_t>(3, profile.cues.size()))));
  std::vector<std::size_t> order(profile.cues.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  for (int i = 0; i < n_cues; ++i) a.cues.push_back(profile.cues[order[i]]);
  a.affect_summary = rng.choice(profile.summaries);
  a.emotion_ranking = profile.emotions;
  return a;
}

Call make_call(std::uint64_t call_seed, const std::string& call_id, Label label,
               const SignalSpec& spec, int decoy_slot) {
  Rng rng(call_seed);
  Call call;
  call.call_id = call_id;
  call.label = label;
  if (!rng.bernoulli(0.05))
    call.age = static_cast<int>(std::clamp(22.0 + 8.0 * rng.normal(), 16.0, 70.0));
  if (rng.bernoulli(0.64))
    call.gender = rng.bernoulli(0.58) ? Gender::kMale : Gender::kFemale;

  const int n_segments =
      static_cast<int>(rng.uniform_int(spec.min_segments, spec.max_segments));

  // Decoy burst: a contiguous window whose caller segments quote another
  // class's language. The decoy class alternates per slot instead of being
  // drawn, so the two off-class token masses stay balanced even in a small
  // corpus. The window position is slot-keyed too: it lands in a different
  // third of the call per slot, and since every class sees the same slot
  // sequence, the content displaced by the burst is identical across
  // classes. Draws are skipped entirely at rate 0 so the stream of a
  // decoy-free spec is unaffected.
  int decoy_lo = n_segments;
  int decoy_hi = n_segments;
  Label decoy_label = label;
  if (spec.decoy_rate > 0.0 && rng.bernoulli(spec.decoy_rate)) {
    decoy_label = static_cast<Label>(
        (static_cast<int>(label) + 1 + decoy_slot % 2) % kNumLabels);
    const int window = std::max(1, spec.decoy_caller_segments) * 2;
    const int band = decoy_slot % 3;
    decoy_lo = std::min(band * n_segments / 3 + n_segments / 10,
                        std::max(0, n_segments - window));
    decoy_hi = decoy_lo + window;
  }

  // Periodic placement: every period-th caller turn carries signal, same
  // residue for every call, so the carrier skeleton is identical across the
  // corpus and classes differ only in which words fill the slots.
  const int period =
      std::max(1, static_cast<int>(1.0 / std::max(spec.signal_rate, 1e-9) + 0.5));
  int signal_ordinal = 0;

  double t = 0.0;
  for (int i = 0; i < n_segments; ++i) {
    Segment seg;
    seg.speaker = (i % 2 == 0) ? Speaker::kOperator : Speaker::kCaller;
    seg.start_s = t;
    seg.end_s = t + rng.uniform(spec.min_segment_s, spec.max_segment_s);
    t = seg.end_s + rng.uniform(0.0, spec.max_gap_s);

    if (seg.speaker == Speaker::kOperator) {
      // Base sentences cycle with position, so base-word frequencies are
      // class-independent and classes differ only in planted content.
      seg.text = kOperatorBase[static_cast<std::size_t>(i / 2) %
                               kOperatorBase.size()];
      if (spec.tokens_per_segment > 0) seg.text += pad_clause(spec, seg.text, i);
      call.segments.push_back(std::move(seg));
      continue;
    }

    const int turn = i / 2;
    const bool eligible =
        static_cast<double>(i) >=
        static_cast<double>(n_segments) * (1.0 - spec.signal_tail_fraction);
    const bool carries_signal =
        spec.periodic_signal
            ? (turn % period == 0 && eligible)
            : (rng.bernoulli(spec.signal_rate) && eligible);
    const bool lexical =
        spec.kind == SignalKind::kLexical || spec.kind == SignalKind::kMixed;
    const bool cue =
        spec.kind == SignalKind::kCue || spec.kind == SignalKind::kMixed;

    if (carries_signal && lexical) {
      // Carriers cycle with position; the planted word cycles its pool, so
      // per-chunk pool counts are exact rather than multinomial.
      const auto& pool = kSignalWords[static_cast<std::size_t>(label)];
      const auto& carrier =
          spec.periodic_signal
              ? kSignalCarriers[static_cast<std::size_t>(turn) %
                                kSignalCarriers.size()]
              : rng.choice(kSignalCarriers);
      const auto& word =
          spec.periodic_signal
              ? pool[static_cast<std::size_t>(signal_ordinal++) % pool.size()]
              : rng.choice(pool);
      seg.text = fill_slot(carrier, word);
    } else {
      seg.text = kCallerBase[static_cast<std::size_t>(i / 2) %
                             kCallerBase.size()];
    }
    // The burst is appended to an intact segment, never substituted for it:
    // the surrounding skeleton keeps its exact frequencies and only the
    // quoted material distinguishes a contaminated window.
    if (i >= decoy_lo && i < decoy_hi && lexical)
      seg.text += " " + decoy_text(decoy_label, spec.decoy_words_per_segment,
                                   turn);
    if (spec.tokens_per_segment > 0)
      seg.text += pad_clause(spec, seg.text, i);
    else
      seg.text += noise_clause(rng, spec);

    if (cue) {
      if (carries_signal) {
        seg.annotation =
            make_annotation(rng, kCueProfiles[static_cast<std::size_t>(label)]);
      } else if (rng.bernoulli(0.3)) {
        seg.annotation = make_annotation(rng, kNeutralCueProfile);
      }
    }
    call.segments.push_back(std::move(seg));
  }

  // A call needs at least one caller segment; n_segments >= 2 guarantees it.
  return call;
}

}  // namespace

Corpus generate_synthetic_corpus(std::uint64_t seed, std::size_t n_calls,
                                 const SignalSpec& spec) {
  if (n_calls < 3)
    throw ValidationError("n_calls = " + std::to_string(n_calls) +
                          " too small for stratified generation (need >= 3)");
  if (spec.min_segments < 2 || spec.max_segments < spec.min_segments)
    throw ValidationError("bad segment count range in SignalSpec");

  // Even label assignment, then a seeded shuffle of the order.
  std::vector<Label> labels;
  labels.reserve(n_calls);
  for (std::size_t i = 0; i < n_calls; ++i)
    labels.push_back(static_cast<Label>(i % kNumLabels));
  Rng order_rng(rnd::derive_seed(seed, "label-order"));
  order_rng.shuffle(labels);

  Corpus corpus;
  corpus.reserve(n_calls);
  std::array<int, kNumLabels> decoy_slots{};
  for (std::size_t i = 0; i < n_calls; ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "syn-%04zu", i);
    const int slot = decoy_slots[static_cast<std::size_t>(labels[i])]++;
    Call call = make_call(rnd::derive_seed(seed, i), id, labels[i], spec, slot);
    validate_call(call);
    corpus.push_back(std::move(call));
  }
  return corpus;
}

}  // namespace triage
