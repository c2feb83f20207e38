// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <filesystem>
#include <vector>

#include "aquanode/audio.hpp"
#include "aquanode/dsp.hpp"
#include "aquanode/errors.hpp"
#include "aquanode/rng.hpp"

using namespace aquanode;
using dsp::AudioClip;

namespace {

constexpr double kPi = 3.14159265358979323846;

AudioClip tone(double freq, double amp, std::size_t len, double rate, double phase = 0.0) {
  AudioClip c;
  c.sample_rate_hz = rate;
  c.samples.resize(len);
  for (std::size_t i = 0; i < len; ++i)
    c.samples[i] = amp * std::sin(2.0 * kPi * freq * i / rate + phase);
  return c;
}

AudioClip random_clip(std::size_t len, double rate, std::uint64_t seed) {
  rng::Stream rs(seed);
  AudioClip c;
  c.sample_rate_hz = rate;
  c.samples.resize(len);
  for (auto& x : c.samples) x = rs.uniform(-1.0, 1.0);
  return c;
}

double rms(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s / v.size());
}

// independent magnitude DFT, complex accumulation instead of twiddle tables
double naive_frame_bin(const AudioClip& clip, int frame, int w, int s, int k) {
  std::complex<double> acc{0.0, 0.0};
  for (int n = 0; n < w; ++n) {
    const double hann = 0.5 * (1.0 - std::cos(2.0 * kPi * n / w));
    const double x = clip.samples[frame * s + n] * hann;
    acc += x * std::exp(std::complex<double>(0.0, -2.0 * kPi * k * n / w));
  }
  return std::abs(acc);
}

}  // namespace

TEST_CASE("resample keeps the clip when rates already match") {
  const AudioClip c = random_clip(101, 330.0, 1);
  const AudioClip r = dsp::resample(c, 330.0);
  REQUIRE(r.size() == c.size());
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(r.samples[i] == c.samples[i]);
}

TEST_CASE("resample doubles a ramp through its midpoints") {
  AudioClip c;
  c.sample_rate_hz = 100.0;
  c.samples = {0.0, 1.0, 2.0, 3.0};
  const AudioClip r = dsp::resample(c, 200.0);
  REQUIRE(r.size() == 8);
  for (std::size_t i = 0; i < 7; ++i)
    CHECK(r.samples[i] == doctest::Approx(0.5 * i).epsilon(1e-12));
  CHECK(r.samples[7] == doctest::Approx(3.0));  // clamped tail
}

TEST_CASE("resample preserves duration within half an output sample") {
  for (double target : {330.0, 441.0, 8000.0, 123.0}) {
    const AudioClip c = random_clip(977, 1000.0, 2);
    const AudioClip r = dsp::resample(c, target);
    CHECK(std::fabs(r.duration_s() - c.duration_s()) <= 0.5 / target + 1e-12);
  }
}

TEST_CASE("resample rejects bad input") {
  CHECK_THROWS_AS(dsp::resample(AudioClip{}, 100.0), InvalidInput);
  CHECK_THROWS_AS(dsp::resample(random_clip(8, 100.0, 3), 0.0), InvalidInput);
  CHECK_THROWS_AS(dsp::resample(random_clip(8, 100.0, 3), -5.0), InvalidInput);
}

TEST_CASE("normalize brings the peak to one and is scale invariant") {
  AudioClip c = random_clip(200, 330.0, 4);
  for (auto& x : c.samples) x *= 0.3;
  const AudioClip n1 = dsp::normalize(c);
  double peak = 0.0;
  for (double x : n1.samples) peak = std::max(peak, std::fabs(x));
  CHECK(peak == doctest::Approx(1.0).epsilon(1e-12));

  AudioClip scaled = c;
  for (auto& x : scaled.samples) x *= 4.0;  // power of two: exact
  const AudioClip n2 = dsp::normalize(scaled);
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(n1.samples[i] == n2.samples[i]);
}

TEST_CASE("normalize leaves silence alone") {
  AudioClip c;
  c.sample_rate_hz = 330.0;
  c.samples.assign(64, 0.0);
  const AudioClip n = dsp::normalize(c);
  for (double x : n.samples) CHECK(x == 0.0);
}

TEST_CASE("adc codes for constant inputs land on the rail and midscale") {
  device::DeviceProfile p;
  AudioClip c;
  c.sample_rate_hz = p.adc_rate_hz;

  c.samples.assign(16, 0.0);
  auto tr = dsp::adc_sample(c, p);
  REQUIRE(tr.codes.size() == 16);
  // 0.95/1.9 * 4095 = 2047.5, ties round away from zero
  for (int code : tr.codes) CHECK(code == 2048);

  c.samples.assign(16, 1.0);
  tr = dsp::adc_sample(c, p);
  for (int code : tr.codes) CHECK(code == 4095);

  c.samples.assign(16, -1.0);
  tr = dsp::adc_sample(c, p);
  for (int code : tr.codes) CHECK(code == 0);

  // beyond full scale clamps instead of wrapping
  c.samples.assign(16, 1.7);
  tr = dsp::adc_sample(c, p);
  for (int code : tr.codes) CHECK(code == 4095);
}

TEST_CASE("adc keeps at most one window of samples") {
  device::DeviceProfile p;
  const AudioClip c = random_clip(700, p.adc_rate_hz, 5);
  const auto tr = dsp::adc_sample(c, p);
  CHECK(tr.codes.size() == static_cast<std::size_t>(p.window_len));
}

TEST_CASE("adc refuses a clip at the wrong rate") {
  device::DeviceProfile p;
  CHECK_THROWS_AS(dsp::adc_sample(random_clip(64, 44100.0, 6), p), InvalidInput);
}

TEST_CASE("adc then bias removal round-trips within one code step") {
  device::DeviceProfile p;
  // 16 whole periods in 512 samples: 10.3125 Hz, above the 5 Hz cutoff
  const double f = 16.0 * p.adc_rate_hz / 512.0;
  const AudioClip x = dsp::normalize(tone(f, 0.8, 512, p.adc_rate_hz, 0.35));
  const auto tr = dsp::adc_sample(x, p);
  const AudioClip y = dsp::remove_dc(tr);

  const double bound = p.vref / (1 << p.adc_bits) / dsp::adc_gain_v(p);  // 4.88e-4
  REQUIRE(y.size() == x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    CHECK(std::fabs(y.samples[i] - x.samples[i]) <= bound);
}

TEST_CASE("bias removal sends a constant trace exactly to zero") {
  dsp::AdcTrace tr;
  tr.codes.assign(512, 2048);
  const AudioClip y = dsp::remove_dc(tr);
  for (double v : y.samples) CHECK(std::fabs(v) < 1e-12);
  double mean = 0.0;
  for (double v : y.samples) mean += v;
  CHECK(std::fabs(mean / y.size()) < 1e-13);
}

TEST_CASE("highpass projection is idempotent") {
  AudioClip c = random_clip(512, 330.0, 7);
  for (auto& x : c.samples) x += 0.9;  // strong offset
  const AudioClip once = dsp::project_highpass(c, 5.0);
  const AudioClip twice = dsp::project_highpass(once, 5.0);
  std::vector<double> diff(once.size());
  for (std::size_t i = 0; i < once.size(); ++i)
    diff[i] = twice.samples[i] - once.samples[i];
  CHECK(rms(diff) < 1e-6);
  CHECK(rms(diff) < 1e-12);  // projection, not a filter: machine-level
}

TEST_CASE("highpass projection keeps a 50 Hz tone within 5 percent") {
  device::DeviceProfile p;
  const AudioClip x = tone(50.0, 0.7, 512, p.adc_rate_hz);
  const AudioClip y = dsp::project_highpass(x, 5.0);
  CHECK(rms(y.samples) == doctest::Approx(rms(x.samples)).epsilon(0.05));
}

TEST_CASE("stft dimensions follow the shape law") {
  const AudioClip c = random_clip(512, 330.0, 8);
  const auto sp = dsp::stft(c, 64, 32);
  CHECK(sp.num_frames == 15);
  CHECK(sp.num_bins == 33);
  CHECK(sp.values.size() == std::size_t(15) * 33);

  const auto sp2 = dsp::stft(random_clip(300, 330.0, 9), 64, 17);
  CHECK(sp2.num_frames == (300 - 64) / 17 + 1);
  CHECK(sp2.num_bins == 33);
}

TEST_CASE("stft magnitudes match an independent dft") {
  const AudioClip c = random_clip(256, 330.0, 10);
  const auto sp = dsp::stft(c, 64, 32);
  for (int f : {0, 3, 6}) {
    for (int k = 0; k < sp.num_bins; ++k) {
      const double want = naive_frame_bin(c, f, 64, 32, k);
      CHECK(sp.at(f, k) == doctest::Approx(want).epsilon(1e-9));
    }
  }
}

TEST_CASE("stft satisfies parseval per frame") {
  const AudioClip c = random_clip(200, 330.0, 11);
  const int w = 64, s = 32;
  const auto sp = dsp::stft(c, w, s);
  for (int f = 0; f < sp.num_frames; ++f) {
    double time_energy = 0.0;
    for (int n = 0; n < w; ++n) {
      const double hann = 0.5 * (1.0 - std::cos(2.0 * kPi * n / w));
      const double x = c.samples[f * s + n] * hann;
      time_energy += x * x;
    }
    double freq_energy = sp.at(f, 0) * sp.at(f, 0);
    for (int k = 1; k < w / 2; ++k) freq_energy += 2.0 * sp.at(f, k) * sp.at(f, k);
    freq_energy += sp.at(f, w / 2) * sp.at(f, w / 2);
    freq_energy /= w;
    CHECK(freq_energy == doctest::Approx(time_energy).epsilon(1e-9));
  }
}

TEST_CASE("stft puts a tone's energy in the right bin") {
  device::DeviceProfile p;
  // bin 8 of a 64-point window at 330 S/s sits at 41.25 Hz
  const AudioClip c = tone(8.0 * p.adc_rate_hz / 64.0, 0.9, 512, p.adc_rate_hz);
  const auto sp = dsp::stft(c, 64, 32);
  for (int f = 0; f < sp.num_frames; ++f) {
    int arg = 1;
    for (int k = 1; k < sp.num_bins; ++k)
      if (sp.at(f, k) > sp.at(f, arg)) arg = k;
    CHECK(arg == 8);
  }
}

TEST_CASE("stft ignores the first sample through the hann window") {
  AudioClip a = random_clip(96, 330.0, 12);
  AudioClip b = a;
  b.samples[0] = 42.0;  // window weight there is exactly zero
  const auto sa = dsp::stft(a, 64, 32);
  const auto sb = dsp::stft(b, 64, 32);
  for (int k = 0; k < sa.num_bins; ++k) CHECK(sa.at(0, k) == sb.at(0, k));
}

TEST_CASE("stft input validation") {
  CHECK_THROWS_AS(dsp::stft(random_clip(63, 330.0, 13), 64, 32), InvalidInput);
  CHECK_THROWS_AS(dsp::stft(random_clip(128, 330.0, 13), 63, 32), InvalidInput);
  CHECK_THROWS_AS(dsp::stft(random_clip(128, 330.0, 13), 64, 0), InvalidInput);
}

TEST_CASE("input plane hits spectrogram corners exactly and stays in range") {
  const AudioClip c = random_clip(512, 330.0, 14);
  const auto sp = dsp::stft(c, 64, 32);
  const double mx = sp.max_value();
  const auto plane = dsp::to_input_plane(sp, 16);
  REQUIRE(plane.n == 16);

  CHECK(plane.at(0, 0) == doctest::Approx(sp.at(0, 0) / mx).epsilon(1e-6));
  CHECK(plane.at(0, 15) == doctest::Approx(sp.at(0, 32) / mx).epsilon(1e-6));
  CHECK(plane.at(15, 0) == doctest::Approx(sp.at(14, 0) / mx).epsilon(1e-6));
  CHECK(plane.at(15, 15) == doctest::Approx(sp.at(14, 32) / mx).epsilon(1e-6));
  for (float v : plane.values) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
}

TEST_CASE("input plane reproduces a separable ramp") {
  dsp::Spectrogram sp;
  sp.num_frames = 5;
  sp.num_bins = 9;
  sp.values.resize(45);
  for (int r = 0; r < 5; ++r)
    for (int b = 0; b < 9; ++b) sp.values[r * 9 + b] = r + b;  // max 12 at the corner
  const auto plane = dsp::to_input_plane(sp, 8);
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) {
      const double r = i * 4.0 / 7.0;
      const double b = j * 8.0 / 7.0;
      CHECK(plane.at(i, j) == doctest::Approx((r + b) / 12.0).epsilon(1e-6));
    }
  }
  CHECK(plane.at(7, 7) == doctest::Approx(1.0).epsilon(1e-7));  // max sits at a corner
}

TEST_CASE("input plane maps silence to zeros") {
  dsp::Spectrogram sp;
  sp.num_frames = 4;
  sp.num_bins = 4;
  sp.values.assign(16, 0.0);
  const auto plane = dsp::to_input_plane(sp, 8);
  for (float v : plane.values) CHECK(v == 0.0f);
}

TEST_CASE("wav files round-trip their samples") {
  namespace fs = std::filesystem;
  const fs::path path = fs::temp_directory_path() / "aq_test_roundtrip.wav";
  AudioClip c = random_clip(333, 330.0, 15);
  dsp::write_wav(path.string(), c);
  const AudioClip r = dsp::read_wav(path.string());
  REQUIRE(r.size() == c.size());
  CHECK(r.sample_rate_hz == 330.0);
  for (std::size_t i = 0; i < c.size(); ++i)
    CHECK(std::fabs(r.samples[i] - c.samples[i]) <= 0.5 / 32767.0 + 1e-12);
  fs::remove(path);
}

TEST_CASE("wav reader rejects what the capture chain cannot use") {
  namespace fs = std::filesystem;
  const fs::path path = fs::temp_directory_path() / "aq_test_bad.wav";

  auto write_raw = [&](const std::vector<std::uint8_t>& b) {
    std::FILE* f = std::fopen(path.string().c_str(), "wb");
    std::fwrite(b.data(), 1, b.size(), f);
    std::fclose(f);
  };

  write_raw({'R', 'I', 'F', 'F', 0, 0, 0, 0, 'J', 'U', 'N', 'K'});
  CHECK_THROWS_AS(dsp::read_wav(path.string()), FormatError);

  // stereo: patch a valid file's channel count
  AudioClip c = random_clip(64, 330.0, 16);
  dsp::write_wav(path.string(), c);
  {
    std::FILE* f = std::fopen(path.string().c_str(), "rb+");
    std::fseek(f, 22, SEEK_SET);
    const std::uint8_t two[2] = {2, 0};
    std::fwrite(two, 1, 2, f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(dsp::read_wav(path.string()), FormatError);

  // float format tag
  dsp::write_wav(path.string(), c);
  {
    std::FILE* f = std::fopen(path.string().c_str(), "rb+");
    std::fseek(f, 20, SEEK_SET);
    const std::uint8_t fmt3[2] = {3, 0};
    std::fwrite(fmt3, 1, 2, f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(dsp::read_wav(path.string()), FormatError);

  CHECK_THROWS_AS(dsp::read_wav("/nonexistent/nowhere.wav"), FormatError);
  fs::remove(path);
}
