// SPDX-License-Identifier: Apache-2.0
#include "aquanode/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "aquanode/errors.hpp"

namespace aquanode::dsp {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double Spectrogram::max_value() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, v);
  return m;
}

AudioClip resample(const AudioClip& clip, double target_rate_hz) {
  if (clip.empty()) throw InvalidInput("resample: empty clip");
  if (!(clip.sample_rate_hz > 0.0)) throw InvalidInput("resample: clip has no sample rate");
  if (!(target_rate_hz > 0.0)) throw InvalidInput("resample: target rate must be positive");

  const std::size_t len = clip.size();
  const double ratio = target_rate_hz / clip.sample_rate_hz;
  const std::size_t n_out = static_cast<std::size_t>(
      std::max<long long>(1, std::llround(static_cast<double>(len) * ratio)));
  const double step = clip.sample_rate_hz / target_rate_hz;

  AudioClip out;
  out.sample_rate_hz = target_rate_hz;
  out.samples.resize(n_out);
  for (std::size_t i = 0; i < n_out; ++i) {
    double pos = static_cast<double>(i) * step;
    if (pos > static_cast<double>(len - 1)) pos = static_cast<double>(len - 1);
    std::size_t i0 = static_cast<std::size_t>(pos);
    if (i0 > len - 1) i0 = len - 1;
    const std::size_t i1 = std::min(i0 + 1, len - 1);
    const double frac = pos - static_cast<double>(i0);
    const double a = clip.samples[i0];
    out.samples[i] = a + frac * (clip.samples[i1] - a);
  }
  return out;
}

AudioClip normalize(const AudioClip& clip) {
  if (clip.empty()) throw InvalidInput("normalize: empty clip");
  double peak = 0.0;
  for (double x : clip.samples) peak = std::max(peak, std::fabs(x));
  if (!std::isfinite(peak)) throw InvalidInput("normalize: non-finite sample");
  if (peak == 0.0) return clip;
  AudioClip out;
  out.sample_rate_hz = clip.sample_rate_hz;
  out.samples.resize(clip.size());
  for (std::size_t i = 0; i < clip.size(); ++i) out.samples[i] = clip.samples[i] / peak;
  return out;
}

double adc_gain_v(const device::DeviceProfile& profile) { return profile.vref / 2.0; }

AdcTrace adc_sample(const AudioClip& clip, const device::DeviceProfile& profile) {
  profile.validate();
  if (clip.empty()) throw InvalidInput("adc_sample: empty clip");
  if (std::fabs(clip.sample_rate_hz - profile.adc_rate_hz) > 1e-9 * profile.adc_rate_hz)
    throw InvalidInput("adc_sample: clip rate " + std::to_string(clip.sample_rate_hz) +
                       " Hz does not match converter rate " +
                       std::to_string(profile.adc_rate_hz) + " Hz; resample first");

  const int full = (1 << profile.adc_bits) - 1;
  const double gain = adc_gain_v(profile);
  const std::size_t n =
      std::min(clip.size(), static_cast<std::size_t>(profile.window_len));

  AdcTrace t;
  t.bits = profile.adc_bits;
  t.sample_rate_hz = profile.adc_rate_hz;
  t.vref = profile.vref;
  t.dc_offset = profile.dc_offset;
  t.codes.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double volts = clip.samples[i] * gain + profile.dc_offset;
    long long code = std::llround(volts / profile.vref * full);
    if (code < 0) code = 0;
    if (code > full) code = full;
    t.codes[i] = static_cast<int>(code);
  }
  return t;
}

AudioClip project_highpass(const AudioClip& clip, double cutoff_hz) {
  if (clip.empty()) throw InvalidInput("project_highpass: empty clip");
  if (!(cutoff_hz >= 0.0)) throw InvalidInput("project_highpass: negative cutoff");
  if (!(clip.sample_rate_hz > 0.0))
    throw InvalidInput("project_highpass: clip has no sample rate");

  const std::size_t len = clip.size();
  AudioClip out = clip;

  const double bin_hz = clip.sample_rate_hz / static_cast<double>(len);
  int k_max = static_cast<int>(std::ceil(cutoff_hz / bin_hz)) - 1;
  if (k_max < 0) k_max = 0;  // always drop the mean
  k_max = std::min<int>(k_max, static_cast<int>(len) / 2);

  for (int k = 0; k <= k_max; ++k) {
    double re = 0.0, im = 0.0;
    const double w = 2.0 * kPi * k / static_cast<double>(len);
    for (std::size_t n = 0; n < len; ++n) {
      re += out.samples[n] * std::cos(w * static_cast<double>(n));
      im -= out.samples[n] * std::sin(w * static_cast<double>(n));
    }
    const bool self_conjugate = (k == 0) || (2 * k == static_cast<int>(len));
    const double norm = (self_conjugate ? 1.0 : 2.0) / static_cast<double>(len);
    for (std::size_t n = 0; n < len; ++n) {
      out.samples[n] -= norm * (re * std::cos(w * static_cast<double>(n)) -
                                im * std::sin(w * static_cast<double>(n)));
    }
  }
  return out;
}

AudioClip remove_dc(const AdcTrace& trace, double cutoff_hz) {
  if (trace.codes.empty()) throw InvalidInput("remove_dc: empty trace");
  if (trace.bits < 1 || trace.bits > 24)
    throw InvalidInput("remove_dc: converter width out of range");

  const std::size_t len = trace.codes.size();
  const int full = (1 << trace.bits) - 1;
  const double gain = trace.vref / 2.0;

  AudioClip decoded;
  decoded.sample_rate_hz = trace.sample_rate_hz;
  decoded.samples.resize(len);
  for (std::size_t i = 0; i < len; ++i) {
    const double volts = static_cast<double>(trace.codes[i]) / full * trace.vref;
    decoded.samples[i] = (volts - trace.dc_offset) / gain;
  }
  return project_highpass(decoded, cutoff_hz);
}

Spectrogram stft(const AudioClip& clip, int window_size, int window_step, Exec exec) {
  if (window_size < 2 || window_size % 2 != 0)
    throw InvalidInput("stft: window size must be even and at least 2");
  if (window_step < 1) throw InvalidInput("stft: window step must be at least 1");
  if (clip.size() < static_cast<std::size_t>(window_size))
    throw InvalidInput("stft: clip of " + std::to_string(clip.size()) +
                       " samples is shorter than the window (" +
                       std::to_string(window_size) + ")");

  const int num_frames =
      static_cast<int>((clip.size() - window_size) / window_step) + 1;
  const int num_bins = window_size / 2 + 1;

  std::vector<double> hann(window_size);
  for (int n = 0; n < window_size; ++n)
    hann[n] = 0.5 * (1.0 - std::cos(2.0 * kPi * n / window_size));

  // one period of the twiddle factors; index (k*n) mod window_size
  std::vector<double> ct(window_size), st(window_size);
  for (int m = 0; m < window_size; ++m) {
    ct[m] = std::cos(2.0 * kPi * m / window_size);
    st[m] = std::sin(2.0 * kPi * m / window_size);
  }

  Spectrogram sp;
  sp.num_frames = num_frames;
  sp.num_bins = num_bins;
  sp.window_size = window_size;
  sp.window_step = window_step;
  sp.values.assign(static_cast<std::size_t>(num_frames) * num_bins, 0.0);

  auto do_frame = [&](int f) {
    const std::size_t base = static_cast<std::size_t>(f) * window_step;
    for (int k = 0; k < num_bins; ++k) {
      double re = 0.0, im = 0.0;
      for (int n = 0; n < window_size; ++n) {
        const double x = clip.samples[base + n] * hann[n];
        const int m = (k * n) % window_size;
        re += x * ct[m];
        im -= x * st[m];
      }
      sp.values[static_cast<std::size_t>(f) * num_bins + k] =
          std::sqrt(re * re + im * im);
    }
  };

  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (int f = 0; f < num_frames; ++f) do_frame(f);
  } else {
    for (int f = 0; f < num_frames; ++f) do_frame(f);
  }
  return sp;
}

InputPlane to_input_plane(const Spectrogram& spec, int n) {
  if (spec.num_frames < 1 || spec.num_bins < 1)
    throw InvalidInput("to_input_plane: empty spectrogram");
  if (n < 2) throw InvalidInput("to_input_plane: side must be at least 2");

  const int R = spec.num_frames;
  const int B = spec.num_bins;
  const double mx = spec.max_value();

  InputPlane plane;
  plane.n = n;
  plane.values.assign(static_cast<std::size_t>(n) * n, 0.0f);
  if (mx <= 0.0) return plane;  // silence stays silence

  // corner-aligned bilinear: plane corners sample spectrogram corners exactly
  for (int i = 0; i < n; ++i) {
    const double r = R > 1 ? static_cast<double>(i) * (R - 1) / (n - 1) : 0.0;
    int r0 = std::min(static_cast<int>(r), R - 2);
    if (r0 < 0) r0 = 0;
    const double fr = R > 1 ? r - r0 : 0.0;
    for (int j = 0; j < n; ++j) {
      const double c = B > 1 ? static_cast<double>(j) * (B - 1) / (n - 1) : 0.0;
      int c0 = std::min(static_cast<int>(c), B - 2);
      if (c0 < 0) c0 = 0;
      const double fc = B > 1 ? c - c0 : 0.0;

      const int r1 = std::min(r0 + 1, R - 1);
      const int c1 = std::min(c0 + 1, B - 1);
      const double top = spec.at(r0, c0) + fc * (spec.at(r0, c1) - spec.at(r0, c0));
      const double bot = spec.at(r1, c0) + fc * (spec.at(r1, c1) - spec.at(r1, c0));
      plane.values[static_cast<std::size_t>(i) * n + j] =
          static_cast<float>((top + fr * (bot - top)) / mx);
    }
  }
  return plane;
}

}  // namespace aquanode::dsp
