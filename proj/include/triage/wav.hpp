#pragma once

#include <string>
#include <vector>

namespace triage {

struct Waveform {
  std::vector<double> samples;  // mono, in [-1, 1]
  double sample_rate = 0.0;
};

// 16-bit PCM RIFF/WAVE reader. Mono is returned as-is; stereo is downmixed by
// averaging the channels. Anything else (other codecs, bit depths, channel
// counts, truncated chunks) throws ParseError.
Waveform parse_wav(const std::vector<unsigned char>& bytes);
Waveform read_wav(const std::string& path);

// Mono 16-bit PCM writer; samples are clamped to [-1, 1] before quantizing.
std::vector<unsigned char> format_wav(const Waveform& wave);
void write_wav(const std::string& path, const Waveform& wave);

}  // namespace triage
