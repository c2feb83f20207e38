// SPDX-License-Identifier: Apache-2.0
#include "aquanode/device.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "aquanode/errors.hpp"
#include "textfmt.hpp"

namespace aquanode::device {

namespace {

// shortest round-trip decimal, so a profile survives save/load bit-exactly
using aquanode::fmt_double;

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_num(const std::string& key, const std::string& val) {
  try {
    std::size_t used = 0;
    double v = std::stod(val, &used);
    if (used != val.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw FormatError("profile: bad value '" + val + "' for key '" + key + "'");
  }
}

}  // namespace

void DeviceProfile::validate() const {
  auto fail = [](const std::string& msg) { throw InvalidInput("profile: " + msg); };
  if (!(adc_rate_hz > 0.0)) fail("adc_rate_hz must be positive");
  if (adc_bits < 1 || adc_bits > 24) fail("adc_bits must be in [1, 24]");
  if (window_len < 1) fail("window_len must be positive");
  if (!(supply_v > 0.0)) fail("supply_v must be positive");
  if (!(p_sampling_uw > 0.0)) fail("p_sampling_uw must be positive");
  if (!(p_inference_uw > 0.0)) fail("p_inference_uw must be positive");
  if (!(p_backscatter_uw > 0.0)) fail("p_backscatter_uw must be positive");
  if (!(t_sampling_s > 0.0)) fail("t_sampling_s must be positive");
  if (!(t_inference_s >= 0.0)) fail("t_inference_s must not be negative");
  if (!(uplink_bps > 0.0)) fail("uplink_bps must be positive");
  if (memory_limit_bytes < 1) fail("memory_limit_bytes must be positive");
  if (!(vref > 0.0)) fail("vref must be positive");
  if (!(dc_offset >= 0.0) || dc_offset > vref) fail("dc_offset must sit inside [0, vref]");
  if (!(harvest_efficiency >= 0.0) || harvest_efficiency > 1.0)
    fail("harvest_efficiency must sit inside [0, 1]");
}

std::string DeviceProfile::to_text() const {
  std::ostringstream os;
  os << "adc_rate_hz = " << fmt_double(adc_rate_hz) << "\n";
  os << "adc_bits = " << adc_bits << "\n";
  os << "window_len = " << window_len << "\n";
  os << "supply_v = " << fmt_double(supply_v) << "\n";
  os << "p_sampling_uw = " << fmt_double(p_sampling_uw) << "\n";
  os << "p_inference_uw = " << fmt_double(p_inference_uw) << "\n";
  os << "p_backscatter_uw = " << fmt_double(p_backscatter_uw) << "\n";
  os << "t_sampling_s = " << fmt_double(t_sampling_s) << "\n";
  os << "t_inference_s = " << fmt_double(t_inference_s) << "\n";
  os << "uplink_bps = " << fmt_double(uplink_bps) << "\n";
  os << "memory_limit_bytes = " << memory_limit_bytes << "\n";
  os << "vref = " << fmt_double(vref) << "\n";
  os << "dc_offset = " << fmt_double(dc_offset) << "\n";
  os << "harvest_efficiency = " << fmt_double(harvest_efficiency) << "\n";
  return os.str();
}

DeviceProfile DeviceProfile::from_text(const std::string& text) {
  DeviceProfile p;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw FormatError("profile: line " + std::to_string(lineno) + " has no '='");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string val = trim(stripped.substr(eq + 1));

    if (key == "adc_rate_hz") p.adc_rate_hz = parse_num(key, val);
    else if (key == "adc_bits") p.adc_bits = static_cast<int>(parse_num(key, val));
    else if (key == "window_len") p.window_len = static_cast<int>(parse_num(key, val));
    else if (key == "supply_v") p.supply_v = parse_num(key, val);
    else if (key == "p_sampling_uw") p.p_sampling_uw = parse_num(key, val);
    else if (key == "p_inference_uw") p.p_inference_uw = parse_num(key, val);
    else if (key == "p_backscatter_uw") p.p_backscatter_uw = parse_num(key, val);
    else if (key == "t_sampling_s") p.t_sampling_s = parse_num(key, val);
    else if (key == "t_inference_s") p.t_inference_s = parse_num(key, val);
    else if (key == "uplink_bps") p.uplink_bps = parse_num(key, val);
    else if (key == "memory_limit_bytes")
      p.memory_limit_bytes = static_cast<std::int64_t>(parse_num(key, val));
    else if (key == "vref") p.vref = parse_num(key, val);
    else if (key == "dc_offset") p.dc_offset = parse_num(key, val);
    else if (key == "harvest_efficiency") p.harvest_efficiency = parse_num(key, val);
    else throw FormatError("profile: unknown key '" + key + "'");
  }
  p.validate();
  return p;
}

DeviceProfile DeviceProfile::load_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw FormatError("profile: cannot open '" + path + "'");
  std::ostringstream os;
  os << f.rdbuf();
  return from_text(os.str());
}

double stage_energy(double power_uw, double duration_s) {
  if (!(power_uw >= 0.0)) throw InvalidInput("stage_energy: negative power");
  if (!(duration_s >= 0.0)) throw InvalidInput("stage_energy: negative duration");
  return power_uw * duration_s * 1e-3;  // uW*s = uJ, so 1e-3 mJ
}

void EnergyLedger::add(const std::string& stage, double power_uw, double duration_s) {
  entries.push_back({stage, power_uw, duration_s, stage_energy(power_uw, duration_s)});
}

double EnergyLedger::total_mj() const {
  double t = 0.0;
  for (const auto& e : entries) t += e.energy_mj;
  return t;
}

EnergyLedger inference_mission_energy(const DeviceProfile& p) {
  p.validate();
  EnergyLedger l;
  l.add("sample", p.p_sampling_uw, p.t_sampling_s);
  l.add("infer", p.p_inference_uw, p.t_inference_s);
  l.add("backscatter", p.p_backscatter_uw, kResultBits / p.uplink_bps);
  return l;
}

EnergyLedger raw_transmission_energy(const DeviceProfile& p) {
  p.validate();
  EnergyLedger l;
  l.add("sample", p.p_sampling_uw, p.t_sampling_s);
  const double payload_bits = static_cast<double>(p.window_len) * p.adc_bits;
  l.add("backscatter", p.p_backscatter_uw, payload_bits / p.uplink_bps);
  return l;
}

double Capacitor::stored_mj() const {
  return 0.5 * capacitance_f * voltage_v * voltage_v * 1e3;
}

double Capacitor::usable_mj() const {
  const double floor_mj = 0.5 * capacitance_f * v_min_operate * v_min_operate * 1e3;
  const double s = stored_mj();
  return s > floor_mj ? s - floor_mj : 0.0;
}

double Capacitor::capacity_mj() const {
  return 0.5 * capacitance_f * v_rated * v_rated * 1e3;
}

double Capacitor::usable_capacity_mj() const {
  const double floor_mj = 0.5 * capacitance_f * v_min_operate * v_min_operate * 1e3;
  return capacity_mj() - floor_mj;
}

Capacitor Capacitor::with_energy(double capacitance_f, double energy_mj) {
  if (!(capacitance_f > 0.0)) throw InvalidInput("capacitor: capacitance must be positive");
  if (!(energy_mj >= 0.0)) throw InvalidInput("capacitor: negative energy");
  Capacitor c;
  c.capacitance_f = capacitance_f;
  c.voltage_v = std::sqrt(2.0 * energy_mj * 1e-3 / capacitance_f);
  if (c.voltage_v > c.v_rated)
    throw InvalidInput("capacitor: " + std::to_string(energy_mj) +
                       " mJ needs more than the rated voltage");
  return c;
}

Capacitor harvest(Capacitor cap, double harvest_power_mw, double dt_s,
                  const DeviceProfile& profile) {
  if (!(harvest_power_mw >= 0.0)) throw InvalidInput("harvest: negative power");
  if (!(dt_s >= 0.0)) throw InvalidInput("harvest: negative duration");
  double e = cap.stored_mj() + harvest_power_mw * dt_s * profile.harvest_efficiency;
  const double cap_mj = cap.capacity_mj();
  if (e > cap_mj) e = cap_mj;  // clipped at rated voltage
  cap.voltage_v = std::sqrt(2.0 * e * 1e-3 / cap.capacitance_f);
  return cap;
}

const char* stage_name(Stage s) {
  switch (s) {
    case Stage::sample: return "sample";
    case Stage::infer: return "infer";
    case Stage::backscatter: return "backscatter";
  }
  return "?";
}

const char* event_name(EventKind k) {
  switch (k) {
    case EventKind::wait: return "wait";
    case EventKind::sample: return "sample";
    case EventKind::infer: return "infer";
    case EventKind::backscatter: return "backscatter";
    case EventKind::starved: return "starved";
  }
  return "?";
}

double stage_duration_s(Stage s, const DeviceProfile& p) {
  switch (s) {
    case Stage::sample: return p.t_sampling_s;
    case Stage::infer: return p.t_inference_s;
    case Stage::backscatter: return kResultBits / p.uplink_bps;
  }
  return 0.0;
}

double stage_cost_mj(Stage s, const DeviceProfile& p) {
  switch (s) {
    case Stage::sample: return stage_energy(p.p_sampling_uw, p.t_sampling_s);
    case Stage::infer: return stage_energy(p.p_inference_uw, p.t_inference_s);
    case Stage::backscatter:
      return stage_energy(p.p_backscatter_uw, kResultBits / p.uplink_bps);
  }
  return 0.0;
}

ScheduleTrace run_intermittent(Capacitor cap, const DeviceProfile& profile,
                               const std::vector<Stage>& mission,
                               double harvest_power_mw, double reserve_frac) {
  profile.validate();
  if (!(harvest_power_mw >= 0.0)) throw InvalidInput("scheduler: negative harvest power");
  if (!(reserve_frac >= 0.0)) throw InvalidInput("scheduler: negative reserve fraction");
  if (!(cap.capacitance_f > 0.0)) throw InvalidInput("scheduler: capacitance must be positive");
  if (cap.voltage_v > cap.v_rated + 1e-12)
    throw InvalidInput("scheduler: capacitor above rated voltage");

  const double floor_mj =
      0.5 * cap.capacitance_f * cap.v_min_operate * cap.v_min_operate * 1e3;
  double stored = cap.stored_mj();
  const double inflow = harvest_power_mw * profile.harvest_efficiency;  // mJ per s

  ScheduleTrace tr;
  double t = 0.0;

  auto set_voltage = [&](double e_mj) {
    cap.voltage_v = std::sqrt(2.0 * e_mj * 1e-3 / cap.capacitance_f);
  };

  for (Stage s : mission) {
    const double cost = stage_cost_mj(s, profile);
    const double need = cost * (1.0 + reserve_frac);
    const double usable = stored > floor_mj ? stored - floor_mj : 0.0;

    if (usable < need) {
      const bool can_ever = inflow > 0.0 && need <= cap.usable_capacity_mj();
      if (!can_ever) {
        tr.events.push_back({EventKind::starved, t, t, 0.0, 0.0, stored});
        tr.starved = true;
        tr.total_time_s = t;
        return tr;
      }
      // refill to floor + need: climbing back above the dropout comes first
      const double missing = floor_mj + need - stored;
      const double dt = missing / inflow;
      stored += missing;
      set_voltage(stored);
      tr.events.push_back({EventKind::wait, t, t + dt, missing, 0.0, stored});
      t += dt;
    }

    const double dur = stage_duration_s(s, profile);
    stored -= cost;
    set_voltage(stored);
    EventKind kind = s == Stage::sample ? EventKind::sample
                     : s == Stage::infer ? EventKind::infer
                                         : EventKind::backscatter;
    tr.events.push_back({kind, t, t + dur, 0.0, cost, stored});
    t += dur;
    ++tr.stages_completed;
  }
  tr.total_time_s = t;
  return tr;
}

}  // namespace aquanode::device
