// SPDX-License-Identifier: Apache-2.0
// Times the OpenMP kernels against their serial references.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "aquanode/dsp.hpp"
#include "aquanode/nn.hpp"
#include "aquanode/rng.hpp"
#include "aquanode/sim.hpp"

using namespace aquanode;

namespace {

double time_s(const std::function<void()>& fn, int reps) {
  // one warmup, then best of reps
  fn();
  double best = 1e30;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

void row(const char* name, double serial_s, double parallel_s) {
  std::printf("%-22s %10.4f s %10.4f s %8.2fx\n", name, serial_s, parallel_s,
              serial_s / parallel_s);
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
  std::printf("built without OpenMP; both columns run serial code\n");
#endif
  std::printf("%-22s %12s %12s %9s\n", "kernel", "serial", "parallel", "speedup");

  device::DeviceProfile profile;

  // long capture, many frames
  {
    rng::Stream rs(7);
    dsp::AudioClip clip;
    clip.sample_rate_hz = profile.adc_rate_hz;
    clip.samples.resize(200000);
    for (auto& x : clip.samples) x = rs.uniform(-1.0, 1.0);
    const double ts = time_s([&] { dsp::stft(clip, 64, 32, Exec::serial); }, 3);
    const double tp = time_s([&] { dsp::stft(clip, 64, 32, Exec::parallel); }, 3);
    row("stft 200k samples", ts, tp);
  }

  // batch inference
  {
    nn::ModelConfig cfg;
    const nn::Model model = nn::init_model(cfg, 11);
    rng::Stream rs(13);
    std::vector<dsp::InputPlane> planes(20000);
    for (auto& p : planes) {
      p.n = cfg.n;
      p.values.resize(static_cast<std::size_t>(cfg.n) * cfg.n);
      for (auto& v : p.values) v = static_cast<float>(rs.uniform());
    }
    const double ts = time_s([&] { nn::forward_batch(model, planes, Exec::serial); }, 3);
    const double tp = time_s([&] { nn::forward_batch(model, planes, Exec::parallel); }, 3);
    row("forward 20k planes", ts, tp);
  }

  // feature extraction across a dataset
  {
    sim::SyntheticDatasetSpec spec = sim::SyntheticDatasetSpec::defaults();
    spec.clips_per_class = 150;
    const sim::Dataset ds = sim::synth_dataset(spec);
    const double ts =
        time_s([&] { sim::batch_features(ds, profile, 16, true, Exec::serial); }, 3);
    const double tp =
        time_s([&] { sim::batch_features(ds, profile, 16, true, Exec::parallel); }, 3);
    row("features 600 clips", ts, tp);
  }
  return 0;
}
