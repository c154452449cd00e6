#include <gtest/gtest.h>

#include <filesystem>

#include "ikesim/config.hpp"
#include "ikesim/errors.hpp"

namespace ikesim {
namespace {

std::string field_of(const std::string& yaml) {
  try {
    parse_config(yaml);
  } catch (const ValidationError& e) {
    return e.field();
  }
  return "";
}

TEST(Config, PresetResolves) {
  const auto cfg = parse_config("preset: JPN-SWI\n");
  EXPECT_DOUBLE_EQ(cfg.link.rtt_ms, 259.319);
  ASSERT_EQ(cfg.loss_points.size(), 1U);
  EXPECT_DOUBLE_EQ(cfg.loss_points[0].loss.p, 0.6e-3);
  EXPECT_DOUBLE_EQ(cfg.loss_points[0].loss.r, 7.7e-3);
  EXPECT_EQ(cfg.loss_points[0].label, "JPN-SWI");
}

TEST(Config, Defaults) {
  const auto cfg = parse_config("P: 0.01\nR: 0.2\n");
  EXPECT_EQ(cfg.iterations, 1000U);
  EXPECT_EQ(cfg.suites, (std::vector<SuiteId>{SuiteId::classical, SuiteId::qrc}));
  EXPECT_EQ(cfg.engine.fragment_threshold_bytes, 576U);
  EXPECT_EQ(cfg.engine.additional_ke_rounds, 2);
  EXPECT_EQ(cfg.link.mtu, 1500U);
  EXPECT_EQ(cfg.channel_mode, ChannelMode::shared);
}

TEST(Config, EmptyDocumentIsLossless) {
  const auto cfg = parse_config("");
  ASSERT_EQ(cfg.loss_points.size(), 1U);
  EXPECT_EQ(cfg.loss_points[0].loss.steady_state(), 0.0);
}

TEST(Config, ProbabilityOutOfRange) {
  EXPECT_EQ(field_of("P: 1.5\nR: 0.1\n"), "P");
  EXPECT_EQ(field_of("uniform_rate: -0.1\n"), "uniform_rate");
  EXPECT_EQ(field_of("loss_points:\n  - { P: 0.1, R: 2 }\n"), "loss_points[0].R");
}

TEST(Config, UnknownKeysRejectedWithPath) {
  EXPECT_EQ(field_of("bogus: 1\n"), "bogus");
  EXPECT_EQ(field_of("engine:\n  max_retires: 3\n"), "engine.max_retires");
  EXPECT_EQ(field_of("output: { csv: a.csv, xml: b.xml }\n"), "output.xml");
}

TEST(Config, InvalidValues) {
  EXPECT_EQ(field_of("iterations: 0\n"), "iterations");
  EXPECT_EQ(field_of("preset: MARS-VENUS\n"), "preset");
  EXPECT_EQ(field_of("engine: { additional_ke_rounds: 9 }\n"), "engine.additional_ke_rounds");
  EXPECT_EQ(field_of("engine: { fragment_threshold_bytes: 2000 }\n"), "engine.fragment_threshold_bytes");
  EXPECT_EQ(field_of("suite: custom\n"), "custom_suite");
  EXPECT_EQ(field_of("P: 1\nR: 0\n"), "loss_points[0]");
  EXPECT_EQ(field_of("uniform_rate: 0.1\nP: 0.1\n"), "uniform_rate");
  EXPECT_EQ(field_of("loss_points:\n  - { loss_rate: 0.5, mean_burst: 0.5 }\n"),
            "loss_points[0].mean_burst");
  EXPECT_EQ(field_of("channel_mode: diagonal\n"), "channel_mode");
}

TEST(Config, MalformedYaml) { EXPECT_THROW(parse_config("a: [1, 2\n"), ParseError); }

TEST(Config, LossPoints) {
  const auto cfg = parse_config(R"(
rtt_ms: 40
loss_points:
  - { preset: FL-PA-2 }
  - { uniform_rate: 0.12, label: wifi }
  - { P: 0.01, R: 0.5 }
  - { loss_rate: 0.08, mean_burst: 10 }
)");
  ASSERT_EQ(cfg.loss_points.size(), 4U);
  EXPECT_DOUBLE_EQ(cfg.link.rtt_ms, 40.0);  // presets in a sweep carry only loss
  EXPECT_EQ(cfg.loss_points[0].label, "FL-PA-2");
  EXPECT_EQ(cfg.loss_points[1].label, "wifi");
  EXPECT_DOUBLE_EQ(cfg.loss_points[1].loss.steady_state(), 0.12);
  EXPECT_DOUBLE_EQ(cfg.loss_points[2].loss.r, 0.5);
  EXPECT_NEAR(cfg.loss_points[3].loss.steady_state(), 0.08, 1e-12);
  EXPECT_DOUBLE_EQ(cfg.loss_points[3].loss.r, 0.1);
  EXPECT_THROW(parse_config("preset: FL-PA-2\nloss_points:\n  - { preset: FL-PA-1 }\n"),
               ValidationError);
}

TEST(Config, EngineAndCustomSuite) {
  const auto cfg = parse_config(R"(
suite: custom
engine:
  additional_ke_rounds: 3
  max_restarts: 4
  sa_init_policy: ip_fragment
  reassembly_scope: merge
custom_suite:
  key_establishments:
    - { name: KEM-X, key_length: 32, public_object_size: 1000 }
  authentication: { name: SIG-X, key_length: 64, public_object_size: 100, signature_size: 200 }
)");
  EXPECT_EQ(cfg.engine.additional_ke_rounds, 3);
  EXPECT_EQ(cfg.engine.max_restarts, 4);
  EXPECT_EQ(cfg.engine.sa_init_policy, SaInitPolicy::ip_fragment);
  EXPECT_EQ(cfg.engine.reassembly_scope, ReassemblyScope::merge);
  const auto suite = cfg.suite(SuiteId::custom);
  EXPECT_EQ(suite.key_establishments.at(0).public_object_size, 1000U);
  EXPECT_EQ(suite.key_establishments.at(0).response_object_size, 1000U);
  EXPECT_EQ(suite.authentication.signature_size, 200U);
}

TEST(Config, ShippedConfigsLoad) {
  std::size_t n = 0;
  for (const auto& entry : std::filesystem::directory_iterator(IKESIM_CONFIG_DIR)) {
    if (entry.path().extension() != ".yaml") continue;
    EXPECT_NO_THROW(load_config(entry.path())) << entry.path();
    ++n;
  }
  EXPECT_GE(n, 3U);
}

TEST(Config, MissingFile) { EXPECT_THROW(load_config("/nonexistent/x.yaml"), IoError); }

TEST(Presets, TableRowsAndWireless) {
  EXPECT_EQ(link_presets().size(), 9U);
  EXPECT_DOUBLE_EQ(find_preset("FL-PA-2").rtt_ms, 31.408);
  EXPECT_DOUBLE_EQ(find_preset("LA-NY-2").loss.p, 9.0e-3);
  EXPECT_DOUBLE_EQ(find_preset("WIFI-20").loss.steady_state(), 0.2);
  EXPECT_THROW(find_preset("nope"), ValidationError);
}

}  // namespace
}  // namespace ikesim
