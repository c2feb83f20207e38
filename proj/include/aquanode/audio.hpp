// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace aquanode::dsp {

// Sampled waveform. Amplitudes are dimensionless; the processing chain keeps
// them in [-1, 1] once normalized.
struct AudioClip {
  std::vector<double> samples;
  double sample_rate_hz = 0.0;

  bool empty() const { return samples.empty(); }
  std::size_t size() const { return samples.size(); }
  double duration_s() const {
    return sample_rate_hz > 0.0 ? static_cast<double>(samples.size()) / sample_rate_hz : 0.0;
  }
};

// 16-bit PCM mono RIFF/WAVE only; float and compressed encodings are rejected
// with a FormatError that names the offending field.
AudioClip read_wav(const std::string& path);
void write_wav(const std::string& path, const AudioClip& clip);

}  // namespace aquanode::dsp
