// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "aquanode/audio.hpp"
#include "aquanode/device.hpp"
#include "aquanode/parallel.hpp"

namespace aquanode::dsp {

// Raw converter codes as they would sit in the MCU buffer.
struct AdcTrace {
  std::vector<int> codes;
  int bits = 12;
  double sample_rate_hz = 330.0;
  double vref = 1.9;
  double dc_offset = 0.95;
};

// Magnitude spectrogram, row-major frames x bins.
struct Spectrogram {
  std::vector<double> values;
  int num_frames = 0;
  int num_bins = 0;
  int window_size = 0;
  int window_step = 0;

  double at(int frame, int bin) const { return values[static_cast<std::size_t>(frame) * num_bins + bin]; }
  double max_value() const;
};

// Square model input, row-major n x n, values in [0, 1].
struct InputPlane {
  std::vector<float> values;
  int n = 0;

  float at(int r, int c) const { return values[static_cast<std::size_t>(r) * n + c]; }
};

// Linear-interpolation rate conversion. target == source returns the clip
// unchanged.
AudioClip resample(const AudioClip& clip, double target_rate_hz);

// Peak-normalize to [-1, 1]. All-zero input passes through.
AudioClip normalize(const AudioClip& clip);

// Amplitude 1.0 spans vref/2 volts, so a [-1, 1] signal riding on the
// midscale bias exactly fills the converter range.
double adc_gain_v(const device::DeviceProfile& profile);

// Unipolar converter with the front-end bias: v = x*gain + dc_offset, coded
// as round(v/vref * (2^bits - 1)) and clamped. Keeps at most window_len
// samples. The clip must already be at the converter rate.
AdcTrace adc_sample(const AudioClip& clip, const device::DeviceProfile& profile);

// Subtracts every Fourier component below cutoff_hz. A projection, so it is
// idempotent and takes a constant exactly to zero, which an IIR high-pass
// cannot do.
AudioClip project_highpass(const AudioClip& clip, double cutoff_hz);

// Undoes the bias in software: codes back to volts, then to amplitude, then
// project_highpass to strip the residual offset (the bias lives at 0 Hz).
AudioClip remove_dc(const AdcTrace& trace, double cutoff_hz = 5.0);

// Hann-windowed magnitude STFT, no zero padding, frame starts every
// window_step samples. num_frames = (len - window_size)/window_step + 1,
// num_bins = window_size/2 + 1.
Spectrogram stft(const AudioClip& clip, int window_size, int window_step,
                 Exec exec = Exec::parallel);

// Bilinear resize (corner-aligned) to n x n, then scale so the max becomes 1.
// An all-zero spectrogram maps to an all-zero plane.
InputPlane to_input_plane(const Spectrogram& spec, int n);

}  // namespace aquanode::dsp
