#pragma once

// The twelve benchmark scenarios: four protocol/QBER groups, each at 1, 3
// and 4 mapper instances. The 4-instance rows use 983,040 input bits, the
// others 1,007,616.

#include <qkd/config.hpp>

#include <string>
#include <vector>

namespace qkd {

struct Scenario {
  std::string preset;  // file name under presets/
  ProtocolKind protocol;
  double qber;
  std::size_t instances;
  std::uint64_t input_bits;
};

inline constexpr std::uint64_t kInputLarge = 1'007'616;
inline constexpr std::uint64_t kInputSmall = 983'040;
inline constexpr std::size_t kInstanceCounts[] = {1, 3, 4};

struct ScenarioGroup {
  const char* preset;
  ProtocolKind protocol;
  double qber;
};

// The 25% stress row names no protocol; it runs as BB84.
inline constexpr ScenarioGroup kScenarioGroups[] = {
    {"stress_25.json", ProtocolKind::BB84, 0.25},
    {"bb84_low_qber.json", ProtocolKind::BB84, 0.0263},
    {"cow_high_qber.json", ProtocolKind::COW, 0.2140},
    {"bbm92_mid_qber.json", ProtocolKind::BBM92, 0.0903},
};

inline std::uint64_t scenario_input_bits(std::size_t instances) {
  return instances == 4 ? kInputSmall : kInputLarge;
}

inline std::vector<Scenario> benchmark_scenarios() {
  std::vector<Scenario> out;
  for (const auto& g : kScenarioGroups)
    for (auto p : kInstanceCounts) out.push_back({g.preset, g.protocol, g.qber, p, scenario_input_bits(p)});
  return out;
}

inline std::string preset_dir() { return std::string(QKD_ASSET_DIR) + "/presets"; }

/// Preset for the scenario's group with the row's instance count and input
/// size applied.
inline SessionConfig scenario_config(const Scenario& s, const std::string& dir = preset_dir()) {
  auto c = load_config(dir + "/" + s.preset);
  c.plan.instances = s.instances;
  c.input_bits = s.input_bits;
  c.pulses = 0;
  return c;
}

}  // namespace qkd
