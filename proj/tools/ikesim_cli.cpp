#include <atomic>
#include <csignal>
#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ikesim/config.hpp"
#include "ikesim/errors.hpp"
#include "ikesim/live.hpp"
#include "ikesim/results.hpp"
#include "ikesim/simulation.hpp"

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

std::vector<ikesim::SuiteId> parse_suites(const std::string& s) {
  if (s == "both") return {ikesim::SuiteId::classical, ikesim::SuiteId::qrc};
  return {ikesim::parse_suite_id(s)};
}

std::string default_path(const std::string& configured, const ikesim::ScenarioConfig& cfg,
                         const char* ext) {
  return configured.empty() ? cfg.scenario_id + ext : configured;
}

void print_summary(const std::vector<ikesim::ResultSet>& results) {
  for (const auto& rs : results) {
    std::printf("%-12s loss=%.4f", rs.loss_label.c_str(), rs.loss_rate);
    for (const auto& s : rs.summaries) {
      std::printf("  %s %zu/%zu", s.suite_id.c_str(), s.successes, s.runs);
      if (s.total_bytes) {
        std::printf(" bytes_p95=%.0f setup_p50=%.1fms", s.total_bytes->p95, s.setup_time_ms->median);
      }
    }
    if (rs.bytes_p95_ratio) std::printf("  ratio_p95=%.1f", *rs.bytes_p95_ratio);
    std::printf("\n");
  }
}

void write(const std::vector<ikesim::ResultSet>& results, const ikesim::ScenarioConfig& cfg,
           const std::string& formats) {
  const auto fmts = ikesim::parse_formats(formats);
  const auto csv = default_path(cfg.output.csv, cfg, ".csv");
  const auto json = default_path(cfg.output.json, cfg, ".json");
  ikesim::emit_results(results, fmts, csv, json);
  for (auto f : fmts) {
    std::fprintf(stderr, "wrote %s\n", (f == ikesim::OutputFormat::csv ? csv : json).c_str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IKEv2 classical vs. quantum-resistant handshake simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string suite;
  std::string formats = "csv,json";
  unsigned parallel = 1;

  auto* run = app.add_subcommand("run", "Run a simulated batch");
  run->add_option("--config", config_path, "Scenario YAML")->required()->check(CLI::ExistingFile);
  run->add_option("--suite", suite, "classical, qrc, both or custom");
  run->add_option("--format", formats, "csv, json or csv,json")->capture_default_str();
  run->add_option("--parallel", parallel, "Worker threads")->check(CLI::PositiveNumber);

  auto* presets = app.add_subcommand("presets", "Link presets");
  presets->require_subcommand(1);
  auto* list = presets->add_subcommand("list", "List built-in link presets");

  std::string role;
  std::string peer;
  auto* live = app.add_subcommand("live", "Run handshakes over real UDP sockets");
  live->add_option("--config", config_path, "Scenario YAML")->required()->check(CLI::ExistingFile);
  live->add_option("--role", role, "initiator or responder")
      ->required()
      ->check(CLI::IsMember({"initiator", "responder"}));
  live->add_option("--peer", peer, "Peer addr:port (initiator) or bind addr:port (responder)")
      ->required();
  live->add_option("--suite", suite, "classical, qrc, both or custom");
  live->add_option("--format", formats, "csv, json or csv,json")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*list) {
      std::printf("%-8s %10s %10s %10s %8s  %s\n", "name", "rtt_ms", "P", "R", "loss", "model");
      for (const auto& p : ikesim::link_presets()) {
        std::printf("%-8s %10.3f %10.4g %10.4g %7.2f%%  %s\n", p.name.c_str(), p.rtt_ms, p.loss.p,
                    p.loss.r, 100.0 * p.loss.steady_state(), p.description.c_str());
      }
      return 0;
    }

    const auto cfg = ikesim::load_config(config_path);
    if (*run) {
      ikesim::BatchOptions opts;
      opts.parallel = parallel;
      if (!suite.empty()) opts.suites = parse_suites(suite);
      const auto results = ikesim::run_batch(cfg, opts);
      print_summary(results);
      write(results, cfg, formats);
      return 0;
    }

    const auto address = ikesim::parse_peer(peer);
    if (role == "responder") {
      ikesim::LiveResponder responder(cfg, address);
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::fprintf(stderr, "listening on port %u\n", static_cast<unsigned>(responder.port()));
      responder.serve(g_stop);
      std::fprintf(stderr, "served %llu connections\n",
                   static_cast<unsigned long long>(responder.connections()));
      return 0;
    }
    ikesim::LiveOptions opts;
    if (!suite.empty()) opts.suites = parse_suites(suite);
    const std::vector<ikesim::ResultSet> results{ikesim::live_run(cfg, address, opts)};
    print_summary(results);
    write(results, cfg, formats);
    return 0;
  } catch (const ikesim::ValidationError& e) {
    std::fprintf(stderr, "invalid %s: %s\n", e.field().c_str(), e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
