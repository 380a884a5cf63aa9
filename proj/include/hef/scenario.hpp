#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "hef/destabilizer.hpp"
#include "hef/donaldson_flow.hpp"

namespace hef {

// Complete description of one run: geometry, bundle, flow controls, analysis
// thresholds, and output routing.  Parsed strictly from JSON (unknown or
// missing required keys raise errors naming the dotted path) or built from a
// named preset.
struct Scenario {
  std::string name = "custom";

  // geometry
  int n = 1;
  std::vector<double> periods;  // per complex factor; default all 1.0
  int grid = 32;

  // bundle
  std::vector<int> block_ranks;  // default: all-1 blocks, one per degree
  std::vector<int> degrees;      // per block; required
  std::string a_preset = "direct_sum";  // direct_sum | extension | random_smooth
  std::vector<std::string> a_files;     // overrides a_preset when nonempty
  std::uint64_t seed = 1;
  double amplitude = 0.0;
  int band = 2;

  FlowControls flow;
  DestabParams analysis;

  std::string out_dir = ".";
};

// Strict JSON parsing; throws std::runtime_error naming the offending key
// (e.g. missing "geometry.grid").
Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& s);

// Named presets: stable_extension_r2, split_1_-1, split_2_0,
// unstable_extension_r2.
Scenario scenario_preset(const std::string& name);
std::vector<std::string> scenario_preset_names();

// FNV-1a hash of the canonical JSON form; embedded in every report.
std::uint64_t scenario_hash(const Scenario& s);

TorusGeometry make_geometry(const Scenario& s);
Bundle make_bundle(const Scenario& s, const TorusGeometry& g);

}  // namespace hef
