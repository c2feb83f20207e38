// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace aquanode::device {

// Electrical constants of the harvesting node. Defaults are the measured
// values for the reference build; everything is overridable through a flat
// key=value text file whose keys are exactly the field names below.
struct DeviceProfile {
  double adc_rate_hz = 330.0;
  int adc_bits = 12;
  int window_len = 512;
  double supply_v = 1.9;
  double p_sampling_uw = 932.0;
  double p_inference_uw = 1300.0;
  double p_backscatter_uw = 902.0;
  double t_sampling_s = 1.6;
  double t_inference_s = 3.0;
  double uplink_bps = 1000.0;
  std::int64_t memory_limit_bytes = 8192;
  double vref = 1.9;
  double dc_offset = 0.95;
  double harvest_efficiency = 1.0;

  void validate() const;  // throws InvalidInput
  std::string to_text() const;
  static DeviceProfile from_text(const std::string& text);
  static DeviceProfile load_file(const std::string& path);
};

// The classification result goes out as a single 12-bit word.
inline constexpr int kResultBits = 12;

// E[mJ] = P[uW] * t[s] * 1e-3
double stage_energy(double power_uw, double duration_s);

struct StageEntry {
  std::string stage;
  double power_uw = 0.0;
  double duration_s = 0.0;
  double energy_mj = 0.0;
};

struct EnergyLedger {
  std::vector<StageEntry> entries;

  void add(const std::string& stage, double power_uw, double duration_s);
  double total_mj() const;
};

// sample + infer + send the 12-bit result
EnergyLedger inference_mission_energy(const DeviceProfile& profile);
// sample + send every raw ADC word, no inference
EnergyLedger raw_transmission_energy(const DeviceProfile& profile);

struct Capacitor {
  double capacitance_f = 100e-6;
  double voltage_v = 0.0;
  double v_min_operate = 0.0;  // regulator dropout; energy below it is stranded
  double v_rated = 12.0;

  double stored_mj() const;
  double usable_mj() const;    // stored above the dropout
  double capacity_mj() const;  // stored at rated voltage
  double usable_capacity_mj() const;

  static Capacitor with_energy(double capacitance_f, double energy_mj);
};

// Pushes harvested energy into the capacitor, clipped at the rated voltage.
Capacitor harvest(Capacitor cap, double harvest_power_mw, double dt_s,
                  const DeviceProfile& profile);

enum class Stage { sample, infer, backscatter };

const char* stage_name(Stage s);
double stage_cost_mj(Stage s, const DeviceProfile& profile);
double stage_duration_s(Stage s, const DeviceProfile& profile);

enum class EventKind { wait, sample, infer, backscatter, starved };

const char* event_name(EventKind k);

struct ScheduleEvent {
  EventKind kind;
  double t_start_s = 0.0;
  double t_end_s = 0.0;
  double harvested_mj = 0.0;
  double consumed_mj = 0.0;
  double stored_after_mj = 0.0;
};

struct ScheduleTrace {
  std::vector<ScheduleEvent> events;
  double total_time_s = 0.0;
  int stages_completed = 0;
  bool starved = false;
};

// Intermittent executor: each stage waits until the capacitor holds its cost
// plus a reserve margin, then runs to completion. A stage that can never be
// afforded (no harvest, or cost above usable capacity) produces a terminal
// starved event instead of an exception.
ScheduleTrace run_intermittent(Capacitor cap, const DeviceProfile& profile,
                               const std::vector<Stage>& mission,
                               double harvest_power_mw,
                               double reserve_frac = 0.05);

}  // namespace aquanode::device
