// SPDX-License-Identifier: Apache-2.0
// Scenario runner: synthesize datasets, train, convert, and dry-run missions.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "aquanode/device.hpp"
#include "aquanode/errors.hpp"
#include "aquanode/nn.hpp"
#include "aquanode/quant.hpp"
#include "aquanode/sim.hpp"

using aquanode::device::DeviceProfile;
using ordered_json = nlohmann::ordered_json;

namespace {

DeviceProfile load_profile(const std::string& path) {
  return path.empty() ? DeviceProfile{} : DeviceProfile::load_file(path);
}

// "-" sends the report to stdout; empty drops it
void emit_report(const std::string& path, const std::string& text) {
  if (path.empty()) return;
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw aquanode::FormatError("report: cannot write '" + path + "'");
  f << text;
}

std::vector<aquanode::sim::SignalFamily> parse_families(
    const std::vector<std::string>& specs) {
  std::vector<aquanode::sim::SignalFamily> out;
  out.reserve(specs.size());
  for (const auto& s : specs) out.push_back(aquanode::sim::SignalFamily::parse(s));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"battery-free acoustic inference node, desk-scale simulation"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "write a synthetic labeled WAV dataset");
  std::string synth_out;
  std::vector<std::string> synth_families;
  aquanode::sim::SyntheticDatasetSpec synth_spec;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--family", synth_families,
                    "class signal family (tone:F, chirp:F0:F1, noise:F0:F1); "
                    "repeat per class; default is a 4-class mix");
  synth->add_option("--clips-per-class", synth_spec.clips_per_class);
  synth->add_option("--clip-len", synth_spec.clip_len, "samples per clip");
  synth->add_option("--rate", synth_spec.sample_rate_hz, "sample rate, Hz");
  synth->add_option("--seed", synth_spec.seed);

  // train
  auto* train = app.add_subcommand("train", "train a model on a WAV dataset");
  std::string train_data, train_out, train_profile, train_report;
  aquanode::sim::TrainSettings train_settings;
  train->add_option("--data", train_data, "dataset directory (one subdir per class)")
      ->required();
  train->add_option("--out", train_out, "weights file to write")->required();
  train->add_option("--n", train_settings.config.n, "model input side");
  train->add_option("--filters", train_settings.config.num_filters);
  train->add_option("--epochs", train_settings.epochs);
  train->add_option("--lr", train_settings.learning_rate);
  train->add_option("--seed", train_settings.seed);
  train->add_option("--split-seed", train_settings.split_seed);
  train->add_option("--profile", train_profile, "device profile file");
  train->add_option("--report", train_report, "JSON report path, '-' for stdout");

  // convert
  auto* convert = app.add_subcommand("convert", "quantize float weights to int16");
  std::string conv_in, conv_out, conv_profile, conv_report;
  convert->add_option("--model", conv_in, "float weights file")->required();
  convert->add_option("--out", conv_out, "quantized weights file")->required();
  convert->add_option("--profile", conv_profile, "device profile file");
  convert->add_option("--report", conv_report, "JSON report path, '-' for stdout");

  // mission
  auto* mission = app.add_subcommand("mission", "end-to-end capture/infer/uplink trials");
  std::string mis_model, mis_data, mis_profile, mis_report;
  std::vector<std::string> mis_families;
  aquanode::sim::Scenario scenario;
  mission->add_option("--model", mis_model, "weights file (either flavor)")->required();
  mission->add_option("--data", mis_data,
                      "dataset directory; omitted: synthesize the default mix");
  mission->add_option("--family", mis_families, "synthetic class family (with no --data)");
  mission->add_option("--trials", scenario.trials);
  mission->add_option("--seed", scenario.seed);
  mission->add_option("--attenuation", scenario.channel.attenuation);
  mission->add_option("--noise", scenario.channel.noise_sigma, "channel noise sigma");
  mission->add_option("--profile", mis_profile, "device profile file");
  mission->add_option("--report", mis_report, "JSON report path, '-' for stdout");
  auto* mis_serial = mission->add_flag("--serial", "run trials on the serial path");

  // tradeoff
  auto* tradeoff = app.add_subcommand("tradeoff", "inference vs raw-streaming energy");
  std::string trd_profile, trd_report;
  tradeoff->add_option("--profile", trd_profile, "device profile file");
  tradeoff->add_option("--report", trd_report, "JSON report path, '-' for stdout");

  // report
  auto* report = app.add_subcommand("report", "render a JSON report as text");
  std::string rpt_in;
  report->add_option("--in", rpt_in, "report JSON file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      if (!synth_families.empty()) synth_spec.families = parse_families(synth_families);
      if (synth_spec.families.empty())
        synth_spec.families = aquanode::sim::SyntheticDatasetSpec::defaults().families;
      const auto ds = aquanode::sim::synth_dataset(synth_spec);
      aquanode::sim::write_dataset(ds, synth_out);
      std::cout << "wrote " << ds.clips.size() << " clips in "
                << ds.class_names.size() << " classes to " << synth_out << "\n";
    } else if (*train) {
      const DeviceProfile profile = load_profile(train_profile);
      auto ds = aquanode::sim::load_dataset_dir(train_data);
      train_settings.config.num_classes = static_cast<int>(ds.class_names.size());
      const auto outcome = aquanode::sim::run_training(ds, profile, train_settings);
      aquanode::nn::save_model_file(outcome.model, train_out);
      emit_report(train_report, outcome.to_json());
      if (train_report != "-")
        std::cout << "test accuracy " << outcome.test_accuracy << ", weights in "
                  << train_out << "\n";
    } else if (*convert) {
      const DeviceProfile profile = load_profile(conv_profile);
      const aquanode::nn::Model m = aquanode::nn::load_model_file(conv_in);
      const auto qm = aquanode::quant::quantize(m);
      aquanode::quant::save_quantized_file(qm, conv_out);
      const auto fp = aquanode::quant::footprint(qm, profile);

      ordered_json j;
      j["report_type"] = "convert";
      j["generated_at"] = aquanode::sim::utc_timestamp();
      j["model_path"] = conv_in;
      j["out_path"] = conv_out;
      ordered_json jf;
      jf["model_bytes"] = fp.model_bytes;
      jf["working_buffer_bytes"] = fp.working_buffer_bytes;
      jf["total_bytes"] = fp.total_bytes;
      jf["limit_bytes"] = fp.limit_bytes;
      jf["fits"] = fp.fits;
      j["footprint"] = jf;
      emit_report(conv_report, j.dump(2) + "\n");
      if (conv_report != "-")
        std::cout << "quantized weights in " << conv_out << " ("
                  << fp.total_bytes << " B total, "
                  << (fp.fits ? "fits" : "does not fit") << ")\n";
    } else if (*mission) {
      scenario.profile = load_profile(mis_profile);
      scenario.model_path = mis_model;
      scenario.dataset_dir = mis_data;
      if (!mis_families.empty()) scenario.synth.families = parse_families(mis_families);
      const auto rep = aquanode::sim::run_mission(
          scenario, *mis_serial ? aquanode::Exec::serial : aquanode::Exec::parallel);
      emit_report(mis_report, rep.to_json());
      if (rep.refused) {
        std::cerr << "mission refused: model needs " << rep.footprint.total_bytes
                  << " B but the device limit is " << rep.footprint.limit_bytes
                  << " B\n";
        return 1;
      }
      if (mis_report != "-")
        std::cout << "accuracy " << rep.accuracy << ", link ok " << rep.link.ok << "/"
                  << scenario.trials << ", energy " << rep.total_energy_mj << " mJ\n";
    } else if (*tradeoff) {
      const DeviceProfile profile = load_profile(trd_profile);
      const auto rep = aquanode::sim::run_tradeoff(profile);
      emit_report(trd_report, rep.to_json());
      if (trd_report != "-")
        std::cout << "inference " << rep.inference_total_mj << " mJ, raw "
                  << rep.raw_total_mj << " mJ, excess " << rep.excess_percent
                  << " %\n";
    } else if (*report) {
      std::ifstream f(rpt_in);
      if (!f) throw aquanode::FormatError("report: cannot open '" + rpt_in + "'");
      std::ostringstream os;
      os << f.rdbuf();
      std::cout << aquanode::sim::render_report_text(os.str());
    }
  } catch (const aquanode::InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 1;
  } catch (const aquanode::FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
