// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cctype>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "aquanode/errors.hpp"
#include "aquanode/sim.hpp"

using namespace aquanode;
namespace fs = std::filesystem;

namespace {

// a 4-class dataset small enough to train in well under a second
sim::SyntheticDatasetSpec small_spec() {
  auto spec = sim::SyntheticDatasetSpec::defaults();
  spec.clips_per_class = 30;
  return spec;
}

sim::TrainSettings small_settings() {
  sim::TrainSettings st;
  st.epochs = 25;
  return st;
}

struct TrainedFixture {
  sim::TrainOutcome outcome;
  std::string float_path;
  std::string quant_path;
};

// train once, reuse across cases
const TrainedFixture& trained() {
  static const TrainedFixture fx = [] {
    TrainedFixture f;
    const auto ds = sim::synth_dataset(small_spec());
    f.outcome = sim::run_training(ds, device::DeviceProfile{}, small_settings());
    const fs::path dir = fs::temp_directory_path() / "aq_test_sim";
    fs::create_directories(dir);
    f.float_path = (dir / "model_f32.bin").string();
    f.quant_path = (dir / "model_q16.bin").string();
    nn::save_model_file(f.outcome.model, f.float_path);
    quant::save_quantized_file(quant::quantize(f.outcome.model), f.quant_path);
    return f;
  }();
  return fx;
}

std::string without_timestamp(const std::string& json_text) {
  auto j = nlohmann::ordered_json::parse(json_text);
  j.erase("generated_at");
  return j.dump();
}

}  // namespace

TEST_CASE("signal family text form round-trips") {
  const auto tone = sim::SignalFamily::parse("tone:30");
  CHECK(tone.kind == sim::SignalFamily::Kind::tone);
  CHECK(tone.f0 == 30.0);
  CHECK(tone.to_string() == "tone:30");

  const auto chirp = sim::SignalFamily::parse("chirp:20:60");
  CHECK(chirp.kind == sim::SignalFamily::Kind::chirp);
  CHECK(chirp.f0 == 20.0);
  CHECK(chirp.f1 == 60.0);

  const auto noise = sim::SignalFamily::parse("noise:100:140");
  CHECK(noise.kind == sim::SignalFamily::Kind::noise_band);
  CHECK(sim::SignalFamily::parse(noise.to_string()) == noise);

  const auto frac = sim::SignalFamily::parse("tone:32.5");
  CHECK(frac.f0 == 32.5);
  CHECK(sim::SignalFamily::parse(frac.to_string()) == frac);

  CHECK_THROWS_AS(sim::SignalFamily::parse("tone"), FormatError);
  CHECK_THROWS_AS(sim::SignalFamily::parse("tone:x"), FormatError);
  CHECK_THROWS_AS(sim::SignalFamily::parse("tone:30z"), FormatError);
  CHECK_THROWS_AS(sim::SignalFamily::parse("blob:1:2"), FormatError);
  CHECK_THROWS_AS(sim::SignalFamily::parse("chirp:1"), FormatError);
  CHECK_THROWS_AS(sim::SignalFamily::parse("noise:1:2:3"), FormatError);
}

TEST_CASE("dataset spec validation") {
  CHECK_NOTHROW(sim::SyntheticDatasetSpec::defaults().validate());

  auto broken = [](auto mutate) {
    auto s = sim::SyntheticDatasetSpec::defaults();
    mutate(s);
    return s;
  };
  CHECK_THROWS_AS(broken([](auto& s) { s.families.clear(); }).validate(), InvalidInput);
  CHECK_THROWS_AS(broken([](auto& s) { s.clips_per_class = 0; }).validate(), InvalidInput);
  CHECK_THROWS_AS(broken([](auto& s) { s.clip_len = 8; }).validate(), InvalidInput);
  // 330 Hz sampling puts Nyquist at 165
  CHECK_THROWS_AS(
      broken([](auto& s) { s.families[0] = sim::SignalFamily::parse("tone:200"); }).validate(),
      InvalidInput);
  CHECK_THROWS_AS(
      broken([](auto& s) { s.families[1] = sim::SignalFamily::parse("noise:90:40"); }).validate(),
      InvalidInput);
  CHECK_THROWS_AS(
      broken([](auto& s) { s.families[1] = s.families[0]; }).validate(), InvalidInput);
}

TEST_CASE("synthesis is a pure function of the spec") {
  auto spec = small_spec();
  spec.clips_per_class = 5;
  const auto a = sim::synth_dataset(spec);
  const auto b = sim::synth_dataset(spec);

  REQUIRE(a.clips.size() == 20);
  REQUIRE(a.class_names.size() == 4);
  CHECK(a.class_names[0] == "c00_tone_30");
  CHECK(a.class_names[2] == "c02_chirp_20_60");
  CHECK(a.class_names[3] == "c03_noise_100_140");
  CHECK(a.clips[0].name == "c00_tone_30/000.wav");

  for (std::size_t i = 0; i < a.clips.size(); ++i) {
    CHECK(a.clips[i].clip.samples == b.clips[i].clip.samples);
    CHECK(a.clips[i].name == b.clips[i].name);
    CHECK(a.clips[i].clip.size() == 512);
    CHECK(a.clips[i].clip.sample_rate_hz == 330.0);
    for (double x : a.clips[i].clip.samples) CHECK(std::fabs(x) <= 1.0 + 1e-12);
  }

  auto other = spec;
  other.seed = 2;
  const auto c = sim::synth_dataset(other);
  CHECK(c.clips[0].clip.samples != a.clips[0].clip.samples);
}

TEST_CASE("a dataset tree survives write and load") {
  auto spec = small_spec();
  spec.clips_per_class = 3;
  spec.families = {sim::SignalFamily::parse("tone:30"),
                   sim::SignalFamily::parse("tone:90")};
  const auto ds = sim::synth_dataset(spec);

  const fs::path dir = fs::temp_directory_path() / "aq_test_sim_ds";
  fs::remove_all(dir);
  sim::write_dataset(ds, dir.string());

  CHECK(fs::exists(dir / "manifest.json"));
  std::ifstream mf(dir / "manifest.json");
  const auto manifest = nlohmann::ordered_json::parse(mf);
  CHECK(manifest.at("classes").get<std::vector<std::string>>() == ds.class_names);
  CHECK(manifest.at("files").size() == ds.clips.size());

  const auto back = sim::load_dataset_dir(dir.string());
  REQUIRE(back.clips.size() == ds.clips.size());
  CHECK(back.class_names == ds.class_names);
  for (std::size_t i = 0; i < ds.clips.size(); ++i) {
    CHECK(back.clips[i].name == ds.clips[i].name);
    CHECK(back.clips[i].label == ds.clips[i].label);
    REQUIRE(back.clips[i].clip.size() == ds.clips[i].clip.size());
    for (std::size_t k = 0; k < ds.clips[i].clip.size(); ++k)
      CHECK(std::fabs(back.clips[i].clip.samples[k] - ds.clips[i].clip.samples[k]) <=
            0.5 / 32767.0 + 1e-12);
  }

  // the tree is byte-deterministic
  const fs::path dir2 = fs::temp_directory_path() / "aq_test_sim_ds2";
  fs::remove_all(dir2);
  sim::write_dataset(ds, dir2.string());
  auto slurp = [](const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)),
                       std::istreambuf_iterator<char>());
  };
  CHECK(slurp(dir / "manifest.json") == slurp(dir2 / "manifest.json"));
  CHECK(slurp(dir / ds.clips[0].name) == slurp(dir2 / ds.clips[0].name));

  fs::remove_all(dir2);
  CHECK_THROWS_AS(sim::load_dataset_dir(dir2.string()), InvalidInput);
  fs::create_directories(dir2 / "c00_empty");
  CHECK_THROWS_AS(sim::load_dataset_dir(dir2.string()), InvalidInput);
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST_CASE("feature extraction yields a clean n x n plane") {
  device::DeviceProfile prof;
  auto spec = small_spec();
  spec.clips_per_class = 1;
  const auto ds = sim::synth_dataset(spec);

  for (bool through_adc : {false, true}) {
    const auto p = sim::clip_features(ds.clips[0].clip, prof, 16, through_adc);
    CHECK(p.n == 16);
    REQUIRE(p.values.size() == 256);
    for (float v : p.values) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
    }
    const auto again = sim::clip_features(ds.clips[0].clip, prof, 16, through_adc);
    CHECK(p.values == again.values);
  }

  // a clip at a foreign rate is resampled rather than rejected
  dsp::AudioClip fast;
  fast.sample_rate_hz = 1000.0;
  fast.samples.assign(1200, 0.0);
  for (std::size_t i = 0; i < fast.samples.size(); ++i)
    fast.samples[i] = std::sin(2.0 * 3.14159265358979 * 40.0 * i / 1000.0);
  CHECK(sim::clip_features(fast, prof, 12, true).n == 12);

  device::DeviceProfile narrow;
  narrow.window_len = 32;  // shorter than the 64-sample analysis window
  CHECK_THROWS_AS(sim::clip_features(ds.clips[0].clip, narrow, 16, false), InvalidInput);

  const auto batch = sim::batch_features(ds, prof, 16, false, Exec::serial);
  REQUIRE(batch.size() == ds.clips.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    CHECK(batch[i].second == ds.clips[i].label);
    CHECK(batch[i].first.values ==
          sim::clip_features(ds.clips[i].clip, prof, 16, false).values);
  }
}

TEST_CASE("training separates the four families") {
  const auto& fx = trained();
  const auto& out = fx.outcome;

  // 120 clips split 80/10/10
  CHECK(out.counts.train == 96);
  CHECK(out.counts.val == 12);
  CHECK(out.counts.test == 12);
  CHECK(out.train_accuracy >= 0.95);
  CHECK(out.val_accuracy >= 0.9);
  CHECK(out.test_accuracy >= 0.9);
  CHECK(out.class_names.size() == 4);
  CHECK_FALSE(out.generated_at.empty());

  const auto j = nlohmann::ordered_json::parse(out.to_json());
  CHECK(j.at("report_type") == "training");
  CHECK(j.at("split").at("train") == 96);
  CHECK(j.at("accuracy").at("test").get<double>() == out.test_accuracy);
  CHECK(j.at("classes").size() == 4);

  const auto text = sim::render_report_text(out.to_json());
  CHECK(text.find("split: 96/12/12") != std::string::npos);
}

TEST_CASE("training is deterministic in its seeds") {
  const auto ds = sim::synth_dataset(small_spec());
  auto st = small_settings();
  st.epochs = 4;  // enough to exercise the SGD path
  const auto a = sim::run_training(ds, device::DeviceProfile{}, st);
  const auto b = sim::run_training(ds, device::DeviceProfile{}, st);
  CHECK(nn::save_model(a.model) == nn::save_model(b.model));
  CHECK(a.test_accuracy == b.test_accuracy);

  st.seed = 99;
  const auto c = sim::run_training(ds, device::DeviceProfile{}, st);
  CHECK(nn::save_model(c.model) != nn::save_model(a.model));
}

TEST_CASE("the default split law is 80/10/10") {
  const auto ds = sim::synth_dataset(sim::SyntheticDatasetSpec::defaults());
  auto st = small_settings();
  st.epochs = 1;
  const auto out = sim::run_training(ds, device::DeviceProfile{}, st);
  CHECK(out.counts.train == 160);
  CHECK(out.counts.val == 20);
  CHECK(out.counts.test == 20);
}

TEST_CASE("training rejects datasets it cannot learn from") {
  device::DeviceProfile prof;
  auto st = small_settings();

  CHECK_THROWS_AS(sim::run_training(sim::Dataset{}, prof, st), InvalidInput);

  auto spec = small_spec();
  spec.clips_per_class = 5;
  CHECK_THROWS_WITH_AS(sim::run_training(sim::synth_dataset(spec), prof, st),
                       doctest::Contains("c00_tone_30"), InvalidInput);

  auto mismatched = st;
  mismatched.config.num_classes = 3;
  CHECK_THROWS_AS(sim::run_training(sim::synth_dataset(small_spec()), prof, mismatched),
                  InvalidInput);

  auto bad = st;
  bad.epochs = 0;
  CHECK_THROWS_AS(sim::run_training(sim::synth_dataset(small_spec()), prof, bad),
                  InvalidInput);
  bad = st;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(sim::run_training(sim::synth_dataset(small_spec()), prof, bad),
                  InvalidInput);
}

TEST_CASE("a noiseless mission decodes every result it sends") {
  const auto& fx = trained();
  sim::Scenario sc;
  sc.model_path = fx.quant_path;
  sc.synth = small_spec();

  const auto rep = sim::run_mission(sc);
  CHECK_FALSE(rep.refused);
  CHECK(rep.model_quantized);
  CHECK(rep.model_n == 16);
  CHECK(rep.num_classes == 4);
  CHECK(rep.footprint.fits);
  REQUIRE(rep.trials.size() == 16);

  CHECK(rep.link.ok == 16);
  CHECK(rep.link.no_preamble + rep.link.fm0_violation + rep.link.crc_mismatch == 0);
  CHECK(rep.link.ber == 0.0);
  CHECK(rep.link.bits_compared == 16 * 12);
  CHECK(rep.link.tx_duration_s == doctest::Approx(0.036).epsilon(1e-15));

  int hits = 0;
  for (const auto& t : rep.trials) {
    CHECK(t.rx_status == "ok");
    CHECK(t.received_value == t.predicted);
    CHECK(t.payload_bit_errors == 0);
    CHECK(t.prob_max > 0.25);
    CHECK_FALSE(t.clip_name.empty());
    if (t.predicted == t.true_label) ++hits;
  }
  CHECK(rep.accuracy == doctest::Approx(hits / 16.0));
  CHECK(rep.accuracy >= 0.75);

  CHECK(rep.energy_per_trial.total_mj() == doctest::Approx(5.402024).epsilon(1e-12));
  CHECK(rep.total_energy_mj == doctest::Approx(16 * 5.402024).epsilon(1e-12));

  const auto j = nlohmann::ordered_json::parse(rep.to_json());
  CHECK(j.at("report_type") == "mission");
  CHECK(j.at("refused") == false);
  CHECK(j.at("trials").size() == 16);
  CHECK(j.at("results").at("link").at("ok") == 16);

  const auto text = sim::render_report_text(rep.to_json());
  CHECK(text.find("classifier accuracy") != std::string::npos);
  CHECK(text.find("16 ok") != std::string::npos);
}

TEST_CASE("an oversized model is refused before any trial runs") {
  const auto& fx = trained();
  sim::Scenario sc;
  sc.model_path = fx.float_path;  // float32 blows the 8 KiB budget
  sc.synth = small_spec();

  const auto rep = sim::run_mission(sc);
  CHECK(rep.refused);
  CHECK_FALSE(rep.model_quantized);
  CHECK_FALSE(rep.footprint.fits);
  CHECK(rep.trials.empty());

  const auto j = nlohmann::ordered_json::parse(rep.to_json());
  CHECK(j.at("refused") == true);
  CHECK_FALSE(j.contains("results"));
  const auto text = sim::render_report_text(rep.to_json());
  CHECK(text.find("refused") != std::string::npos);

  // the same model clears a roomier part
  sim::Scenario roomy = sc;
  roomy.profile.memory_limit_bytes = 16384;
  CHECK_FALSE(sim::run_mission(roomy).refused);
}

TEST_CASE("mission input validation") {
  const auto& fx = trained();
  sim::Scenario sc;
  sc.model_path = fx.quant_path;
  sc.synth = small_spec();

  auto bad = sc;
  bad.trials = 0;
  CHECK_THROWS_AS(sim::run_mission(bad), InvalidInput);
  bad = sc;
  bad.model_path.clear();
  CHECK_THROWS_AS(sim::run_mission(bad), InvalidInput);
  bad = sc;
  bad.model_path = "/nonexistent/weights.bin";
  CHECK_THROWS_AS(sim::run_mission(bad), FormatError);

  // a fifth family produces labels the 4-class model cannot name
  bad = sc;
  bad.synth.families.push_back(sim::SignalFamily::parse("tone:150"));
  CHECK_THROWS_AS(sim::run_mission(bad), InvalidInput);
}

TEST_CASE("mission reports are identical modulo the timestamp") {
  const auto& fx = trained();
  sim::Scenario sc;
  sc.model_path = fx.quant_path;
  sc.synth = small_spec();
  sc.channel.noise_sigma = 0.1;

  const auto a = sim::run_mission(sc);
  const auto b = sim::run_mission(sc);
  CHECK(without_timestamp(a.to_json()) == without_timestamp(b.to_json()));

  // channel noise cannot touch the classifier path
  sim::Scenario quiet = sc;
  quiet.channel.noise_sigma = 0.0;
  const auto c = sim::run_mission(quiet);
  CHECK(c.accuracy == a.accuracy);
  CHECK(a.link.ok + a.link.no_preamble + a.link.fm0_violation +
            a.link.crc_mismatch ==
        16);
}

TEST_CASE("either weights flavor loads through the same door") {
  const auto& fx = trained();
  bool quantized = true;
  const auto mf = sim::load_model_any(fx.float_path, quantized);
  CHECK_FALSE(quantized);
  CHECK(mf.config.n == 16);

  quant::QuantizedModel qm;
  const auto mq = sim::load_model_any(fx.quant_path, quantized, &qm);
  CHECK(quantized);
  CHECK(qm.config.n == 16);
  CHECK(mq.config.num_classes == 4);
  // the dequantized view drives inference, so the two must agree
  CHECK(nn::save_model(mq) == nn::save_model(qm.dequantize()));

  CHECK_THROWS_AS(sim::load_model_any("/nonexistent/w.bin", quantized), FormatError);
}

TEST_CASE("the tradeoff report reproduces the measured numbers") {
  const auto r = sim::run_tradeoff(device::DeviceProfile{});
  CHECK(r.inference_total_mj == doctest::Approx(5.402024).epsilon(1e-12));
  CHECK(r.raw_total_mj == doctest::Approx(7.033088).epsilon(1e-12));
  CHECK(r.excess_percent == doctest::Approx(30.193571890832025).epsilon(1e-9));
  CHECK(r.crossover_inference_s == doctest::Approx(4.2546646153846153).epsilon(1e-12));

  const auto j = nlohmann::ordered_json::parse(r.to_json());
  CHECK(j.at("report_type") == "tradeoff");
  CHECK(j.at("inference_mission").at("entries").size() == 3);
  CHECK(j.at("raw_transmission").at("entries").size() == 2);

  const auto text = sim::render_report_text(r.to_json());
  CHECK(text.find("30.19") != std::string::npos);
  // the text view rounds to the stream's six significant digits
  CHECK(text.find("total: 5.40202 mJ") != std::string::npos);
  CHECK(text.find("total: 7.03309 mJ") != std::string::npos);
}

TEST_CASE("the report renderer rejects what it cannot read") {
  CHECK_THROWS_AS(sim::render_report_text("not json at all"), FormatError);
  CHECK_THROWS_AS(sim::render_report_text("[1,2,3]"), FormatError);
  CHECK_THROWS_AS(sim::render_report_text("{\"foo\":1}"), FormatError);
  CHECK_THROWS_WITH_AS(sim::render_report_text("{\"report_type\":\"weather\"}"),
                       doctest::Contains("weather"), FormatError);
  // right type, missing body
  CHECK_THROWS_AS(sim::render_report_text("{\"report_type\":\"mission\"}"), FormatError);
}

TEST_CASE("timestamps are compact UTC") {
  const std::string ts = sim::utc_timestamp();
  REQUIRE(ts.size() == 20);
  CHECK(ts[4] == '-');
  CHECK(ts[7] == '-');
  CHECK(ts[10] == 'T');
  CHECK(ts[13] == ':');
  CHECK(ts[16] == ':');
  CHECK(ts[19] == 'Z');
  for (int i : {0, 1, 2, 3, 5, 6, 8, 9, 11, 12, 14, 15, 17, 18})
    CHECK(std::isdigit(static_cast<unsigned char>(ts[i])));
}
