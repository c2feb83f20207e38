// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "aquanode/device.hpp"
#include "aquanode/dsp.hpp"
#include "aquanode/link.hpp"
#include "aquanode/nn.hpp"
#include "aquanode/parallel.hpp"
#include "aquanode/quant.hpp"

namespace aquanode::sim {

// One acoustic class: a pure tone, a linear chirp, or a band of random
// partials. Parsed from "tone:F", "chirp:F0:F1", "noise:F0:F1".
struct SignalFamily {
  enum class Kind { tone, chirp, noise_band };
  Kind kind = Kind::tone;
  double f0 = 0.0;
  double f1 = 0.0;

  std::string to_string() const;
  static SignalFamily parse(const std::string& text);
  bool operator==(const SignalFamily&) const = default;
};

struct SyntheticDatasetSpec {
  std::vector<SignalFamily> families;  // one per class
  int clips_per_class = 50;
  int clip_len = 512;
  double sample_rate_hz = 330.0;
  std::uint64_t seed = 1;

  int num_classes() const { return static_cast<int>(families.size()); }
  static SyntheticDatasetSpec defaults();
  void validate() const;
};

struct LabeledClip {
  dsp::AudioClip clip;
  int label = 0;
  std::string name;
};

struct Dataset {
  std::vector<LabeledClip> clips;
  std::vector<std::string> class_names;
};

// Deterministic in the spec seed, clip by clip.
Dataset synth_dataset(const SyntheticDatasetSpec& spec);

// One subdirectory per class plus a manifest.json; clips as 16-bit WAV.
// The tree is a pure function of the spec, byte for byte.
void write_dataset(const Dataset& ds, const std::string& dir);

// Labels come from the sorted class subdirectory names.
Dataset load_dataset_dir(const std::string& dir);

// resample to the converter rate, peak-normalize, zero-pad or truncate to
// window_len, then either the full converter chain (bias, quantize, bias
// removal) or straight to the spectrogram, then resize to n x n.
dsp::InputPlane clip_features(const dsp::AudioClip& clip,
                              const device::DeviceProfile& profile, int n,
                              bool through_adc);

std::vector<std::pair<dsp::InputPlane, int>> batch_features(
    const Dataset& ds, const device::DeviceProfile& profile, int n,
    bool through_adc, Exec exec = Exec::parallel);

struct TrainSettings {
  nn::ModelConfig config;
  int epochs = 40;
  double learning_rate = 0.05;
  std::uint64_t seed = 1;        // weight init and SGD order
  std::uint64_t split_seed = 1;  // dataset shuffle before the 80/10/10 cut
};

struct SplitCounts {
  int train = 0, val = 0, test = 0;
};

struct TrainOutcome {
  nn::Model model;
  SplitCounts counts;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::vector<std::string> class_names;
  TrainSettings settings;
  std::string generated_at;

  std::string to_json() const;
};

// 80/10/10 split after a seeded shuffle; every class must contribute at
// least 10 clips. Training itself is serial; feature extraction and the
// accuracy sweeps use `exec`.
TrainOutcome run_training(const Dataset& ds, const device::DeviceProfile& profile,
                          const TrainSettings& settings, Exec exec = Exec::parallel);

struct Scenario {
  device::DeviceProfile profile;
  std::string model_path;
  std::string dataset_dir;  // empty: synthesize `synth` in memory
  SyntheticDatasetSpec synth = SyntheticDatasetSpec::defaults();
  link::ChannelModel channel;  // channel.seed is derived from `seed` per trial
  int trials = 16;
  std::uint64_t seed = 1;
};

struct TrialRecord {
  int index = 0;
  std::string clip_name;
  int true_label = 0;
  int predicted = 0;
  double prob_max = 0.0;
  std::string rx_status;
  std::int64_t received_value = -1;  // -1: nothing decoded
  int payload_bit_errors = -1;       // -1: no payload recovered
};

struct LinkStats {
  int ok = 0, no_preamble = 0, fm0_violation = 0, crc_mismatch = 0;
  long long bits_compared = 0;
  double ber = 0.0;
  double tx_duration_s = 0.0;  // per trial; every frame is the same length
  double tx_energy_mj = 0.0;
};

struct MissionReport {
  bool refused = false;
  quant::FootprintReport footprint;
  bool model_quantized = false;
  int model_n = 0;
  int num_classes = 0;
  std::vector<TrialRecord> trials;
  double accuracy = 0.0;
  LinkStats link;
  device::EnergyLedger energy_per_trial;
  double total_energy_mj = 0.0;
  Scenario scenario;
  std::string generated_at;

  std::string to_json() const;
};

// End-to-end dry run: per trial, one clip through the converter chain, the
// model, framing, the channel, and the receiver. Refuses (report.refused)
// when the model does not fit the profile's memory limit.
MissionReport run_mission(const Scenario& sc, Exec exec = Exec::parallel);

struct TradeoffReport {
  device::EnergyLedger inference;
  device::EnergyLedger raw;
  double inference_total_mj = 0.0;
  double raw_total_mj = 0.0;
  double excess_percent = 0.0;     // raw over inference
  double crossover_inference_s = 0.0;
  device::DeviceProfile profile;
  std::string generated_at;

  std::string to_json() const;
};

TradeoffReport run_tradeoff(const device::DeviceProfile& profile);

// Load either weights flavor; `quantized` reports which one was found.
nn::Model load_model_any(const std::string& path, bool& quantized,
                         quant::QuantizedModel* qm_out = nullptr);

// Human-readable summary of any report produced above.
std::string render_report_text(const std::string& json_text);

std::string utc_timestamp();

}  // namespace aquanode::sim
