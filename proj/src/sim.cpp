// SPDX-License-Identifier: Apache-2.0
#include "aquanode/sim.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "aquanode/errors.hpp"
#include "aquanode/rng.hpp"
#include "textfmt.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace aquanode::sim {

namespace {

constexpr int kStftWindow = 64;
constexpr int kStftStep = 32;
constexpr double kPi = 3.14159265358979323846;

// seed salts, one per independent random purpose
constexpr std::uint64_t kSaltClip = 0x434c4950;
constexpr std::uint64_t kSaltSplit = 0x53504c54;
constexpr std::uint64_t kSaltInit = 0x494e4954;
constexpr std::uint64_t kSaltSgd = 0x53474420;
constexpr std::uint64_t kSaltSelect = 0x53454c43;
constexpr std::uint64_t kSaltChannel = 0x4348414e;

ordered_json profile_json(const device::DeviceProfile& p) {
  ordered_json j;
  j["adc_rate_hz"] = p.adc_rate_hz;
  j["adc_bits"] = p.adc_bits;
  j["window_len"] = p.window_len;
  j["supply_v"] = p.supply_v;
  j["p_sampling_uw"] = p.p_sampling_uw;
  j["p_inference_uw"] = p.p_inference_uw;
  j["p_backscatter_uw"] = p.p_backscatter_uw;
  j["t_sampling_s"] = p.t_sampling_s;
  j["t_inference_s"] = p.t_inference_s;
  j["uplink_bps"] = p.uplink_bps;
  j["memory_limit_bytes"] = p.memory_limit_bytes;
  j["vref"] = p.vref;
  j["dc_offset"] = p.dc_offset;
  j["harvest_efficiency"] = p.harvest_efficiency;
  return j;
}

ordered_json ledger_json(const device::EnergyLedger& l) {
  ordered_json j;
  j["entries"] = ordered_json::array();
  for (const auto& e : l.entries) {
    ordered_json je;
    je["stage"] = e.stage;
    je["power_uw"] = e.power_uw;
    je["duration_s"] = e.duration_s;
    je["energy_mj"] = e.energy_mj;
    j["entries"].push_back(je);
  }
  j["total_mj"] = l.total_mj();
  return j;
}

ordered_json footprint_json(const quant::FootprintReport& f) {
  ordered_json j;
  j["model_bytes"] = f.model_bytes;
  j["working_buffer_bytes"] = f.working_buffer_bytes;
  j["total_bytes"] = f.total_bytes;
  j["limit_bytes"] = f.limit_bytes;
  j["fits"] = f.fits;
  return j;
}

ordered_json synth_json(const SyntheticDatasetSpec& s) {
  ordered_json j;
  j["families"] = ordered_json::array();
  for (const auto& f : s.families) j["families"].push_back(f.to_string());
  j["clips_per_class"] = s.clips_per_class;
  j["clip_len"] = s.clip_len;
  j["sample_rate_hz"] = s.sample_rate_hz;
  j["seed"] = s.seed;
  return j;
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

dsp::AudioClip fit_to_window(dsp::AudioClip c, int window_len) {
  if (static_cast<int>(c.size()) > window_len) c.samples.resize(window_len);
  while (static_cast<int>(c.size()) < window_len) c.samples.push_back(0.0);
  return c;
}

double subset_accuracy(const nn::Model& model,
                       const std::vector<std::pair<dsp::InputPlane, int>>& feats,
                       const std::vector<std::size_t>& idx, std::size_t begin,
                       std::size_t end, Exec exec) {
  if (begin >= end) return 0.0;
  std::vector<dsp::InputPlane> planes;
  planes.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) planes.push_back(feats[idx[i]].first);
  const auto results = nn::forward_batch(model, planes, exec);
  std::size_t hit = 0;
  for (std::size_t i = begin; i < end; ++i)
    if (results[i - begin].predicted_class == feats[idx[i]].second) ++hit;
  return static_cast<double>(hit) / static_cast<double>(end - begin);
}

}  // namespace

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string SignalFamily::to_string() const {
  switch (kind) {
    case Kind::tone: return "tone:" + fmt_double(f0);
    case Kind::chirp: return "chirp:" + fmt_double(f0) + ":" + fmt_double(f1);
    case Kind::noise_band: return "noise:" + fmt_double(f0) + ":" + fmt_double(f1);
  }
  return "?";
}

SignalFamily SignalFamily::parse(const std::string& text) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : text) {
    if (ch == ':') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  parts.push_back(cur);

  auto num = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument("trailing junk");
      return v;
    } catch (const std::exception&) {
      throw FormatError("signal family: bad number '" + s + "' in '" + text + "'");
    }
  };

  SignalFamily f;
  if (parts[0] == "tone" && parts.size() == 2) {
    f.kind = Kind::tone;
    f.f0 = f.f1 = num(parts[1]);
  } else if (parts[0] == "chirp" && parts.size() == 3) {
    f.kind = Kind::chirp;
    f.f0 = num(parts[1]);
    f.f1 = num(parts[2]);
  } else if (parts[0] == "noise" && parts.size() == 3) {
    f.kind = Kind::noise_band;
    f.f0 = num(parts[1]);
    f.f1 = num(parts[2]);
  } else {
    throw FormatError("signal family: '" + text +
                      "' is not tone:F, chirp:F0:F1, or noise:F0:F1");
  }
  return f;
}

SyntheticDatasetSpec SyntheticDatasetSpec::defaults() {
  SyntheticDatasetSpec s;
  s.families = {SignalFamily::parse("tone:30"), SignalFamily::parse("tone:90"),
                SignalFamily::parse("chirp:20:60"), SignalFamily::parse("noise:100:140")};
  return s;
}

void SyntheticDatasetSpec::validate() const {
  auto fail = [](const std::string& m) { throw InvalidInput("dataset spec: " + m); };
  if (families.empty()) fail("no signal families");
  if (families.size() > 99) fail("too many classes");
  if (clips_per_class < 1) fail("clips_per_class must be positive");
  if (clip_len < 16) fail("clip_len must be at least 16");
  if (!(sample_rate_hz > 0.0)) fail("sample rate must be positive");
  const double nyquist = sample_rate_hz / 2.0;
  for (const auto& f : families) {
    if (!(f.f0 > 0.0) || !(f.f1 > 0.0)) fail("family frequency must be positive");
    if (f.f0 >= nyquist || f.f1 >= nyquist)
      fail("family '" + f.to_string() + "' reaches past the Nyquist rate");
    if (f.kind == SignalFamily::Kind::noise_band && !(f.f1 > f.f0))
      fail("noise band '" + f.to_string() + "' needs f1 > f0");
  }
  for (std::size_t a = 0; a < families.size(); ++a)
    for (std::size_t b = a + 1; b < families.size(); ++b)
      if (families[a] == families[b])
        fail("families " + std::to_string(a) + " and " + std::to_string(b) +
             " are identical");
}

namespace {

dsp::AudioClip synth_clip(const SignalFamily& fam, const SyntheticDatasetSpec& spec,
                          rng::Stream& rs) {
  dsp::AudioClip c;
  c.sample_rate_hz = spec.sample_rate_hz;
  c.samples.assign(spec.clip_len, 0.0);
  const double dt = 1.0 / spec.sample_rate_hz;
  const double T = spec.clip_len * dt;

  switch (fam.kind) {
    case SignalFamily::Kind::tone: {
      const double amp = rs.uniform(0.6, 1.0);
      const double phase = rs.uniform(0.0, 2.0 * kPi);
      for (int i = 0; i < spec.clip_len; ++i)
        c.samples[i] = amp * std::sin(2.0 * kPi * fam.f0 * i * dt + phase);
      break;
    }
    case SignalFamily::Kind::chirp: {
      const double amp = rs.uniform(0.6, 1.0);
      const double phase = rs.uniform(0.0, 2.0 * kPi);
      const double slope = (fam.f1 - fam.f0) / T;
      for (int i = 0; i < spec.clip_len; ++i) {
        const double t = i * dt;
        c.samples[i] =
            amp * std::sin(2.0 * kPi * (fam.f0 * t + 0.5 * slope * t * t) + phase);
      }
      break;
    }
    case SignalFamily::Kind::noise_band: {
      constexpr int kPartials = 24;
      const double norm = 1.0 / std::sqrt(static_cast<double>(kPartials));
      for (int p = 0; p < kPartials; ++p) {
        const double f = rs.uniform(fam.f0, fam.f1);
        const double amp = rs.uniform(0.5, 1.0) * norm;
        const double phase = rs.uniform(0.0, 2.0 * kPi);
        for (int i = 0; i < spec.clip_len; ++i)
          c.samples[i] += amp * std::sin(2.0 * kPi * f * i * dt + phase);
      }
      break;
    }
  }

  for (auto& x : c.samples) x += 0.05 * rs.gaussian();  // sensor noise floor
  double peak = 0.0;
  for (double x : c.samples) peak = std::max(peak, std::fabs(x));
  if (peak > 1.0)
    for (auto& x : c.samples) x /= peak;
  return c;
}

std::string class_dir_name(int label, const SignalFamily& fam) {
  std::string s = fam.to_string();
  for (auto& ch : s)
    if (ch == ':' || ch == '.') ch = '_';
  char buf[16];
  std::snprintf(buf, sizeof buf, "c%02d_", label);
  return buf + s;
}

}  // namespace

Dataset synth_dataset(const SyntheticDatasetSpec& spec) {
  spec.validate();
  Dataset ds;
  for (int label = 0; label < spec.num_classes(); ++label)
    ds.class_names.push_back(class_dir_name(label, spec.families[label]));

  for (int label = 0; label < spec.num_classes(); ++label) {
    for (int k = 0; k < spec.clips_per_class; ++k) {
      rng::Stream rs(rng::derive(rng::derive(spec.seed, kSaltClip + label), k));
      LabeledClip lc;
      lc.clip = synth_clip(spec.families[label], spec, rs);
      lc.label = label;
      char buf[16];
      std::snprintf(buf, sizeof buf, "%03d.wav", k);
      lc.name = ds.class_names[label] + "/" + buf;
      ds.clips.push_back(std::move(lc));
    }
  }
  return ds;
}

void write_dataset(const Dataset& ds, const std::string& dir) {
  if (ds.clips.empty()) throw InvalidInput("write_dataset: empty dataset");
  fs::create_directories(dir);

  ordered_json manifest;
  manifest["classes"] = ds.class_names;
  ordered_json files = ordered_json::array();
  for (const auto& lc : ds.clips) {
    const fs::path p = fs::path(dir) / lc.name;
    fs::create_directories(p.parent_path());
    dsp::write_wav(p.string(), lc.clip);
    ordered_json jf;
    jf["path"] = lc.name;
    jf["label"] = lc.label;
    jf["samples"] = lc.clip.size();
    files.push_back(jf);
  }
  manifest["sample_rate_hz"] =
      ds.clips.empty() ? 0.0 : ds.clips.front().clip.sample_rate_hz;
  manifest["files"] = files;

  std::ofstream mf(fs::path(dir) / "manifest.json", std::ios::trunc);
  if (!mf) throw FormatError("dataset: cannot write manifest in '" + dir + "'");
  mf << dump(manifest);
}

Dataset load_dataset_dir(const std::string& dir) {
  if (!fs::is_directory(dir)) throw InvalidInput("dataset: '" + dir + "' is not a directory");

  std::vector<std::string> class_dirs;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory()) class_dirs.push_back(e.path().filename().string());
  std::sort(class_dirs.begin(), class_dirs.end());
  if (class_dirs.empty())
    throw InvalidInput("dataset: '" + dir + "' has no class subdirectories");

  Dataset ds;
  ds.class_names = class_dirs;
  for (std::size_t label = 0; label < class_dirs.size(); ++label) {
    std::vector<std::string> wavs;
    for (const auto& e : fs::directory_iterator(fs::path(dir) / class_dirs[label]))
      if (e.is_regular_file() && e.path().extension() == ".wav")
        wavs.push_back(e.path().filename().string());
    std::sort(wavs.begin(), wavs.end());
    for (const auto& w : wavs) {
      LabeledClip lc;
      lc.clip = dsp::read_wav((fs::path(dir) / class_dirs[label] / w).string());
      lc.label = static_cast<int>(label);
      lc.name = class_dirs[label] + "/" + w;
      ds.clips.push_back(std::move(lc));
    }
  }
  if (ds.clips.empty()) throw InvalidInput("dataset: '" + dir + "' holds no wav files");
  return ds;
}

dsp::InputPlane clip_features(const dsp::AudioClip& clip,
                              const device::DeviceProfile& profile, int n,
                              bool through_adc) {
  profile.validate();
  if (profile.window_len < kStftWindow)
    throw InvalidInput("features: profile window_len is shorter than the analysis window");

  dsp::AudioClip c = clip;
  if (std::fabs(c.sample_rate_hz - profile.adc_rate_hz) > 1e-9 * profile.adc_rate_hz)
    c = dsp::resample(c, profile.adc_rate_hz);
  c = dsp::normalize(c);
  c = fit_to_window(std::move(c), profile.window_len);

  if (through_adc) {
    const dsp::AdcTrace tr = dsp::adc_sample(c, profile);
    c = dsp::remove_dc(tr);
    c = dsp::normalize(c);
  }
  const dsp::Spectrogram sp = dsp::stft(c, kStftWindow, kStftStep, Exec::serial);
  return dsp::to_input_plane(sp, n);
}

std::vector<std::pair<dsp::InputPlane, int>> batch_features(
    const Dataset& ds, const device::DeviceProfile& profile, int n,
    bool through_adc, Exec exec) {
  std::vector<std::pair<dsp::InputPlane, int>> out(ds.clips.size());
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(ds.clips.size()); ++i)
      out[i] = {clip_features(ds.clips[i].clip, profile, n, through_adc),
                ds.clips[i].label};
  } else {
    for (std::size_t i = 0; i < ds.clips.size(); ++i)
      out[i] = {clip_features(ds.clips[i].clip, profile, n, through_adc),
                ds.clips[i].label};
  }
  return out;
}

TrainOutcome run_training(const Dataset& ds, const device::DeviceProfile& profile,
                          const TrainSettings& settings, Exec exec) {
  settings.config.validate();
  profile.validate();
  if (ds.clips.empty()) throw InvalidInput("training data: no clips");
  if (settings.epochs < 1) throw InvalidInput("training: epochs must be positive");
  if (!(settings.learning_rate > 0.0)) throw InvalidInput("training: learning rate must be positive");

  const int classes = static_cast<int>(ds.class_names.size());
  if (classes != settings.config.num_classes)
    throw InvalidInput("training: dataset has " + std::to_string(classes) +
                       " classes but the model config says " +
                       std::to_string(settings.config.num_classes));
  std::vector<int> per_class(classes, 0);
  for (const auto& lc : ds.clips) {
    if (lc.label < 0 || lc.label >= classes)
      throw InvalidInput("training data: label out of range");
    ++per_class[lc.label];
  }
  for (int c = 0; c < classes; ++c)
    if (per_class[c] < 10)
      throw InvalidInput("training data: class '" + ds.class_names[c] + "' has " +
                         std::to_string(per_class[c]) + " clips; need at least 10");

  const auto feats = batch_features(ds, profile, settings.config.n, false, exec);

  std::vector<std::size_t> order(feats.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng::Stream split_rs(rng::derive(settings.split_seed, kSaltSplit));
  split_rs.shuffle(order);

  const std::size_t n = order.size();
  const std::size_t n_train = n * 8 / 10;
  const std::size_t n_val = (n - n_train) / 2;
  const std::size_t n_test = n - n_train - n_val;

  std::vector<std::pair<dsp::InputPlane, int>> train_set;
  train_set.reserve(n_train);
  for (std::size_t i = 0; i < n_train; ++i) train_set.push_back(feats[order[i]]);

  nn::Model model = nn::init_model(settings.config, rng::derive(settings.seed, kSaltInit));
  nn::TrainOptions opt;
  opt.epochs = settings.epochs;
  opt.learning_rate = settings.learning_rate;
  opt.seed = rng::derive(settings.seed, kSaltSgd);
  model = nn::train(std::move(model), train_set, opt);

  TrainOutcome out;
  out.model = std::move(model);
  out.counts = {static_cast<int>(n_train), static_cast<int>(n_val),
                static_cast<int>(n_test)};
  out.train_accuracy = subset_accuracy(out.model, feats, order, 0, n_train, exec);
  out.val_accuracy = subset_accuracy(out.model, feats, order, n_train, n_train + n_val, exec);
  out.test_accuracy = subset_accuracy(out.model, feats, order, n_train + n_val, n, exec);
  out.class_names = ds.class_names;
  out.settings = settings;
  out.generated_at = utc_timestamp();
  return out;
}

std::string TrainOutcome::to_json() const {
  ordered_json j;
  j["report_type"] = "training";
  j["generated_at"] = generated_at;
  ordered_json cfg;
  cfg["n"] = settings.config.n;
  cfg["num_classes"] = settings.config.num_classes;
  cfg["num_filters"] = settings.config.num_filters;
  cfg["epochs"] = settings.epochs;
  cfg["learning_rate"] = settings.learning_rate;
  cfg["seed"] = settings.seed;
  cfg["split_seed"] = settings.split_seed;
  j["config"] = cfg;
  j["classes"] = class_names;
  ordered_json split;
  split["train"] = counts.train;
  split["val"] = counts.val;
  split["test"] = counts.test;
  j["split"] = split;
  ordered_json acc;
  acc["train"] = train_accuracy;
  acc["val"] = val_accuracy;
  acc["test"] = test_accuracy;
  j["accuracy"] = acc;
  return dump(j);
}

nn::Model load_model_any(const std::string& path, bool& quantized,
                         quant::QuantizedModel* qm_out) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("weights: cannot open '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  quantized = quant::is_quantized_container(bytes);
  if (quantized) {
    const quant::QuantizedModel qm = quant::load_quantized(bytes);
    if (qm_out) *qm_out = qm;
    return qm.dequantize();
  }
  return nn::load_model(bytes);
}

MissionReport run_mission(const Scenario& sc, Exec exec) {
  sc.profile.validate();
  if (sc.trials < 1) throw InvalidInput("mission: trial count must be positive");
  if (sc.model_path.empty()) throw InvalidInput("mission: no model path");

  MissionReport rep;
  rep.scenario = sc;
  rep.generated_at = utc_timestamp();

  quant::QuantizedModel qm;
  bool quantized = false;
  nn::Model model = load_model_any(sc.model_path, quantized, &qm);
  rep.model_quantized = quantized;
  rep.model_n = model.config.n;
  rep.num_classes = model.config.num_classes;
  rep.footprint = quantized ? quant::footprint(qm, sc.profile)
                            : quant::footprint_float(model, sc.profile);

  // a model that cannot live in the target's RAM never leaves the bench
  if (!rep.footprint.fits) {
    rep.refused = true;
    return rep;
  }

  const Dataset ds =
      sc.dataset_dir.empty() ? synth_dataset(sc.synth) : load_dataset_dir(sc.dataset_dir);
  for (const auto& lc : ds.clips)
    if (lc.label >= rep.num_classes)
      throw InvalidInput("mission: dataset label " + std::to_string(lc.label) +
                         " is outside the model's " +
                         std::to_string(rep.num_classes) + " classes");
  if (rep.num_classes > (1 << device::kResultBits))
    throw InvalidInput("mission: class index does not fit the result word");

  std::vector<std::size_t> order(ds.clips.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng::Stream sel(rng::derive(sc.seed, kSaltSelect));
  sel.shuffle(order);

  rep.trials.resize(sc.trials);
  auto run_trial = [&](int t) {
    const LabeledClip& lc = ds.clips[order[t % order.size()]];
    TrialRecord& tr = rep.trials[t];
    tr.index = t;
    tr.clip_name = lc.name;
    tr.true_label = lc.label;

    const dsp::InputPlane plane = clip_features(lc.clip, sc.profile, rep.model_n, true);
    const nn::InferenceResult res = nn::forward(model, plane);
    tr.predicted = res.predicted_class;
    tr.prob_max = res.probabilities[res.predicted_class];

    const link::BitStream payload =
        link::bits_from_word(static_cast<std::uint64_t>(res.predicted_class),
                             device::kResultBits);
    const link::Packet pkt = link::frame(payload);
    link::ChannelModel ch = sc.channel;
    ch.seed = rng::derive(rng::derive(sc.seed, kSaltChannel), t);
    const link::TxReport tx = link::transmit(pkt, ch, sc.profile);
    const link::RxResult rx = link::receive(tx.samples);

    tr.rx_status = link::rx_status_name(rx.status);
    if (rx.payload.size() == static_cast<std::size_t>(device::kResultBits)) {
      tr.received_value = static_cast<std::int64_t>(link::word_from_bits(rx.payload));
      int errs = 0;
      for (std::size_t i = 0; i < rx.payload.size(); ++i)
        if (rx.payload[i] != payload[i]) ++errs;
      tr.payload_bit_errors = errs;
    }
  };

  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (int t = 0; t < sc.trials; ++t) run_trial(t);
  } else {
    for (int t = 0; t < sc.trials; ++t) run_trial(t);
  }

  int hit = 0;
  for (const auto& tr : rep.trials) {
    if (tr.predicted == tr.true_label) ++hit;
    if (tr.rx_status == "ok") ++rep.link.ok;
    else if (tr.rx_status == "no_preamble") ++rep.link.no_preamble;
    else if (tr.rx_status == "fm0_violation") ++rep.link.fm0_violation;
    else ++rep.link.crc_mismatch;
    if (tr.payload_bit_errors >= 0) {
      rep.link.bits_compared += device::kResultBits;
      rep.link.ber += tr.payload_bit_errors;
    }
  }
  rep.accuracy = static_cast<double>(hit) / sc.trials;
  rep.link.ber = rep.link.bits_compared > 0
                     ? rep.link.ber / static_cast<double>(rep.link.bits_compared)
                     : 0.0;

  // every frame has the same wire length, so per-trial cost is flat
  const double frame_bits =
      link::kPreambleBits + device::kResultBits + link::kCrcBits;
  rep.link.tx_duration_s = frame_bits / sc.profile.uplink_bps;
  rep.link.tx_energy_mj =
      device::stage_energy(sc.profile.p_backscatter_uw, rep.link.tx_duration_s);

  rep.energy_per_trial = device::inference_mission_energy(sc.profile);
  rep.total_energy_mj = rep.energy_per_trial.total_mj() * sc.trials;
  return rep;
}

std::string MissionReport::to_json() const {
  ordered_json j;
  j["report_type"] = "mission";
  j["generated_at"] = generated_at;

  ordered_json cfg;
  cfg["model_path"] = scenario.model_path;
  ordered_json jm;
  jm["n"] = model_n;
  jm["num_classes"] = num_classes;
  jm["quantized"] = model_quantized;
  cfg["model"] = jm;
  ordered_json jd;
  if (scenario.dataset_dir.empty()) jd["synthetic"] = synth_json(scenario.synth);
  else jd["dir"] = scenario.dataset_dir;
  cfg["dataset"] = jd;
  cfg["trials"] = scenario.trials;
  cfg["seed"] = scenario.seed;
  ordered_json jc;
  jc["attenuation"] = scenario.channel.attenuation;
  jc["noise_sigma"] = scenario.channel.noise_sigma;
  cfg["channel"] = jc;
  cfg["profile"] = profile_json(scenario.profile);
  j["config"] = cfg;

  j["refused"] = refused;
  j["footprint"] = footprint_json(footprint);
  if (refused) return dump(j);

  ordered_json res;
  res["accuracy"] = accuracy;
  ordered_json jl;
  jl["ok"] = link.ok;
  jl["no_preamble"] = link.no_preamble;
  jl["fm0_violation"] = link.fm0_violation;
  jl["crc_mismatch"] = link.crc_mismatch;
  jl["bits_compared"] = link.bits_compared;
  jl["ber"] = link.ber;
  jl["tx_duration_s"] = link.tx_duration_s;
  jl["tx_energy_mj"] = link.tx_energy_mj;
  res["link"] = jl;
  res["energy_per_trial"] = ledger_json(energy_per_trial);
  res["total_energy_mj"] = total_energy_mj;
  j["results"] = res;

  ordered_json jt = ordered_json::array();
  for (const auto& t : trials) {
    ordered_json e;
    e["index"] = t.index;
    e["clip"] = t.clip_name;
    e["true_label"] = t.true_label;
    e["predicted"] = t.predicted;
    e["prob_max"] = t.prob_max;
    e["rx_status"] = t.rx_status;
    e["received_value"] = t.received_value;
    e["payload_bit_errors"] = t.payload_bit_errors;
    jt.push_back(e);
  }
  j["trials"] = jt;
  return dump(j);
}

TradeoffReport run_tradeoff(const device::DeviceProfile& profile) {
  profile.validate();
  TradeoffReport r;
  r.inference = device::inference_mission_energy(profile);
  r.raw = device::raw_transmission_energy(profile);
  r.inference_total_mj = r.inference.total_mj();
  r.raw_total_mj = r.raw.total_mj();
  r.excess_percent = (r.raw_total_mj / r.inference_total_mj - 1.0) * 100.0;
  const double t_raw_tx =
      static_cast<double>(profile.window_len) * profile.adc_bits / profile.uplink_bps;
  const double t_result_tx = device::kResultBits / profile.uplink_bps;
  r.crossover_inference_s =
      profile.p_backscatter_uw * (t_raw_tx - t_result_tx) / profile.p_inference_uw;
  r.profile = profile;
  r.generated_at = utc_timestamp();
  return r;
}

std::string TradeoffReport::to_json() const {
  ordered_json j;
  j["report_type"] = "tradeoff";
  j["generated_at"] = generated_at;
  j["profile"] = profile_json(profile);
  j["inference_mission"] = ledger_json(inference);
  j["raw_transmission"] = ledger_json(raw);
  j["excess_percent"] = excess_percent;
  j["crossover_inference_s"] = crossover_inference_s;
  return dump(j);
}

namespace {

std::string render_ledger(const ordered_json& l, const std::string& title) {
  std::ostringstream os;
  os << title << ":\n";
  for (const auto& e : l.at("entries")) {
    os << "  " << e.at("stage").get<std::string>() << ": "
       << e.at("power_uw").get<double>() << " uW x "
       << e.at("duration_s").get<double>() << " s = "
       << e.at("energy_mj").get<double>() << " mJ\n";
  }
  os << "  total: " << l.at("total_mj").get<double>() << " mJ\n";
  return os.str();
}

}  // namespace

std::string render_report_text(const std::string& json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("report: not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("report_type"))
    throw FormatError("report: missing report_type");
  const std::string type = j.at("report_type").get<std::string>();

  std::ostringstream os;
  try {
    if (type == "tradeoff") {
      os << "energy tradeoff (" << j.at("generated_at").get<std::string>() << ")\n";
      os << render_ledger(j.at("inference_mission"), "inference mission");
      os << render_ledger(j.at("raw_transmission"), "raw transmission");
      os << "raw costs " << j.at("excess_percent").get<double>()
         << " % more than inference\n";
      os << "inference wins while the model runs under "
         << j.at("crossover_inference_s").get<double>() << " s\n";
    } else if (type == "mission") {
      os << "mission (" << j.at("generated_at").get<std::string>() << ")\n";
      if (j.at("refused").get<bool>()) {
        const auto& f = j.at("footprint");
        os << "refused: model needs " << f.at("total_bytes").get<std::int64_t>()
           << " B, limit " << f.at("limit_bytes").get<std::int64_t>() << " B\n";
      } else {
        const auto& r = j.at("results");
        os << "trials: " << j.at("trials").size() << "\n";
        os << "classifier accuracy: " << r.at("accuracy").get<double>() << "\n";
        const auto& l = r.at("link");
        os << "link: " << l.at("ok").get<int>() << " ok, "
           << l.at("no_preamble").get<int>() << " no_preamble, "
           << l.at("fm0_violation").get<int>() << " fm0_violation, "
           << l.at("crc_mismatch").get<int>() << " crc_mismatch, ber "
           << l.at("ber").get<double>() << "\n";
        os << render_ledger(r.at("energy_per_trial"), "energy per trial");
        os << "total energy: " << r.at("total_energy_mj").get<double>() << " mJ\n";
      }
    } else if (type == "training") {
      os << "training (" << j.at("generated_at").get<std::string>() << ")\n";
      const auto& s = j.at("split");
      os << "split: " << s.at("train").get<int>() << "/" << s.at("val").get<int>()
         << "/" << s.at("test").get<int>() << "\n";
      const auto& a = j.at("accuracy");
      os << "accuracy: train " << a.at("train").get<double>() << ", val "
         << a.at("val").get<double>() << ", test " << a.at("test").get<double>()
         << "\n";
    } else if (type == "convert") {
      os << "conversion (" << j.at("generated_at").get<std::string>() << ")\n";
      const auto& f = j.at("footprint");
      os << "model " << f.at("model_bytes").get<std::int64_t>() << " B + working "
         << f.at("working_buffer_bytes").get<std::int64_t>() << " B = "
         << f.at("total_bytes").get<std::int64_t>() << " B, limit "
         << f.at("limit_bytes").get<std::int64_t>() << " B, "
         << (f.at("fits").get<bool>() ? "fits" : "does not fit") << "\n";
    } else {
      throw FormatError("report: unknown report_type '" + type + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("report: malformed ") + type + " report: " + e.what());
  }
  return os.str();
}

}  // namespace aquanode::sim
