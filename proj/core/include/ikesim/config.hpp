#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ikesim/engine.hpp"
#include "ikesim/netsim.hpp"
#include "ikesim/suite.hpp"

namespace ikesim {

/// Named link: mean RTT plus loss process.
struct LinkPreset {
  std::string name;
  double rtt_ms = 0.0;
  LossSpec loss;
  std::string description;
};

/// Internet site pairs (SGE loss) followed by wireless uniform-loss links.
const std::vector<LinkPreset>& link_presets();

/// Throws ValidationError (field "preset") for unknown names.
const LinkPreset& find_preset(std::string_view name);

struct LossPoint {
  std::string label;
  LossSpec loss;
};

struct OutputPaths {
  std::string csv;
  std::string json;
};

/// Everything one batch needs. Loaded from YAML:
///
///   scenario_id: jpn-swi
///   preset: JPN-SWI          # fills rtt_ms, P, R
///   suite: both              # classical | qrc | both | custom
///   iterations: 1000
///   seed: 1
///   rtt_ms: 259.319          # P, R, uniform_rate, mtu, jitter_ms,
///                            # channel_mode are top-level too
///   loss_points:             # optional sweep instead of P/R
///     - { preset: FL-PA-2 }
///     - { uniform_rate: 0.12, label: wifi-12 }
///   engine: { additional_ke_rounds: 2, max_retries: 5, ... }
///   custom_suite: { key_establishments: [...], authentication: {...} }
///   output: { csv: out.csv, json: out.json }
struct ScenarioConfig {
  std::string scenario_id = "scenario";
  LinkParams link;
  ChannelMode channel_mode = ChannelMode::shared;
  std::vector<LossPoint> loss_points;
  std::vector<SuiteId> suites{SuiteId::classical, SuiteId::qrc};
  std::optional<CryptoSuite> custom_suite;
  std::uint64_t iterations = 1000;
  std::uint64_t material_seed = 0;
  EngineConfig engine;
  OutputPaths output;

  /// Preset or custom suite for `id`.
  CryptoSuite suite(SuiteId id) const;
  void validate() const;
};

/// Throws ParseError for malformed YAML and ValidationError (with the dotted
/// field path) for unknown keys or out-of-range values.
ScenarioConfig parse_config(std::string_view text);
ScenarioConfig load_config(const std::filesystem::path& path);

}  // namespace ikesim
