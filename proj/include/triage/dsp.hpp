#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "triage/corpus.hpp"

namespace triage {

// Low-level descriptors for one 25 ms analysis frame (10 ms hop). f0_hz is 0
// when the frame is unvoiced; all other values follow the usual short-time
// definitions over the raw frame.
struct FrameLlds {
  double start_s = 0.0;  // frame onset, for mapping frames onto segments
  double f0_hz = 0.0;
  double rms_energy = 0.0;
  double zero_crossing_rate = 0.0;  // crossings per sample
  double spectral_centroid_hz = 0.0;
};

inline constexpr int kNumLlds = 4;
inline constexpr int kNumFunctionals = 6;
inline constexpr int kFeatureDim = kNumLlds * kNumFunctionals;

inline constexpr double kFrameLengthS = 0.025;
inline constexpr double kFrameHopS = 0.010;

// Frame the waveform and extract the descriptors. Frames are full windows on
// the hop grid; a waveform shorter than one window yields a single frame over
// all of it. Throws ValidationError on an empty or non-finite waveform or a
// sample rate below 8 kHz.
std::vector<FrameLlds> compute_llds(const std::vector<double>& samples,
                                    double sample_rate);

// {mean, std, p20, p50, p80, range} per descriptor, in FrameLlds field order,
// computed over caller frames only. std is the population convention. Throws
// ValidationError when the mask length mismatches or selects zero frames.
Eigen::VectorXd functionals(const std::vector<FrameLlds>& frames,
                            const std::vector<bool>& caller_mask);

// Column labels matching the functionals() layout, for feature CSV headers.
std::vector<std::string> feature_names();

// A frame is the caller's iff its center falls inside a caller segment.
std::vector<bool> caller_mask_from_segments(
    const std::vector<FrameLlds>& frames,
    const std::vector<Segment>& segments);

// Percentile with linear interpolation between order statistics: rank
// p/100 * (n-1) into the sorted values, so p50 of [1..100] is 50.5.
double percentile(std::vector<double> values, double p);

// Precomputed per-call feature rows: header "call_id,f1,...", one row per
// call. Every row must carry the same dimensionality. Throws ParseError on
// malformed input.
struct FeatureRow {
  std::string call_id;
  Eigen::VectorXd features;
};
std::vector<FeatureRow> parse_feature_csv(const std::string& text);
std::vector<FeatureRow> load_feature_csv(const std::string& path);
std::string format_feature_csv(const std::vector<FeatureRow>& rows);

}  // namespace triage
