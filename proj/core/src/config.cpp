#include "ikesim/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "ikesim/errors.hpp"

namespace ikesim {
namespace {

LossSpec sge(double p, double r) { return LossSpec{p, r, std::nullopt}; }
LossSpec uniform(double rate) { return LossSpec{rate, 1.0 - rate, rate}; }

std::string join(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

/// Walks one YAML mapping, remembering which keys were read so that the
/// leftovers can be rejected.
class Section {
 public:
  Section(const YAML::Node& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.IsMap()) throw ValidationError(path_.empty() ? "<root>" : path_, "expected a mapping");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return static_cast<bool>(node_[key]);
  }

  template <class T>
  std::optional<T> get(const std::string& key) {
    seen_.insert(key);
    const YAML::Node value = node_[key];
    if (!value) return std::nullopt;
    try {
      return value.as<T>();
    } catch (const YAML::Exception&) {
      throw ValidationError(field(key), "has the wrong type");
    }
  }

  template <class T>
  void read(const std::string& key, T& target) {
    if (auto v = get<T>(key)) target = *v;
  }

  YAML::Node child(const std::string& key) {
    seen_.insert(key);
    return node_[key];
  }

  std::string field(const std::string& key) const { return join(path_, key); }

  void reject_unknown() const {
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!seen_.contains(key)) throw ValidationError(field(key), "unknown key");
    }
  }

 private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

std::size_t read_size(Section& s, const std::string& key, std::size_t fallback) {
  auto v = s.get<long long>(key);
  if (!v) return fallback;
  if (*v < 0) throw ValidationError(s.field(key), "must be >= 0");
  return static_cast<std::size_t>(*v);
}

void check_probability(double v, const std::string& field) {
  if (!(v >= 0.0 && v <= 1.0)) {
    std::ostringstream msg;
    msg << "probability " << v << " outside [0, 1]";
    throw ValidationError(field, msg.str());
  }
}

/// Reads preset/P/R/uniform_rate/loss_rate+mean_burst from `s` into `loss`. Returns true when any
/// of them was present.
bool read_loss(Section& s, LossSpec& loss, std::optional<double>* rtt_from_preset) {
  bool any = false;
  if (auto name = s.get<std::string>("preset")) {
    const auto& preset = find_preset(*name);
    loss = preset.loss;
    if (rtt_from_preset) *rtt_from_preset = preset.rtt_ms;
    any = true;
  }
  auto p = s.get<double>("P");
  auto r = s.get<double>("R");
  auto rate = s.get<double>("uniform_rate");
  auto target = s.get<double>("loss_rate");
  auto burst = s.get<double>("mean_burst");
  if (rate && (p || r)) {
    throw ValidationError(s.field("uniform_rate"), "cannot be combined with P/R");
  }
  if (burst && !target) throw ValidationError(s.field("mean_burst"), "needs loss_rate");
  if (target) {
    if (rate || p || r) {
      throw ValidationError(s.field("loss_rate"), "cannot be combined with P/R/uniform_rate");
    }
    if (!burst) throw ValidationError(s.field("loss_rate"), "needs mean_burst");
    if (!(*target >= 0.0 && *target < 1.0)) {
      throw ValidationError(s.field("loss_rate"), "must be in [0, 1)");
    }
    if (!(*burst >= 1.0)) throw ValidationError(s.field("mean_burst"), "must be >= 1");
    if (*target / (1.0 - *target) > *burst) {
      throw ValidationError(s.field("mean_burst"), "too short for this loss rate");
    }
    loss = sge_from_loss_rate(*target, *burst);
    return true;
  }
  if (p) check_probability(*p, s.field("P"));
  if (r) check_probability(*r, s.field("R"));
  if (rate) {
    check_probability(*rate, s.field("uniform_rate"));
    loss = uniform(*rate);
    any = true;
  } else if (p || r) {
    if (loss.uniform_rate) loss = sge(loss.p, loss.r);
    if (p) loss.p = *p;
    if (r) loss.r = *r;
    if (loss.p + loss.r <= 0.0) throw ValidationError(s.field("P"), "P = R = 0 is degenerate");
    any = true;
  }
  return any;
}

AlgorithmSpec read_algorithm(const YAML::Node& node, const std::string& path, AlgorithmRole role,
                             const AlgorithmSpec& fallback) {
  Section s(node, path);
  AlgorithmSpec spec = fallback;
  spec.role = role;
  s.read("name", spec.name);
  spec.key_length = read_size(s, "key_length", spec.key_length);
  spec.public_object_size = read_size(s, "public_object_size", spec.public_object_size);
  spec.response_object_size =
      read_size(s, "response_object_size",
                s.has("public_object_size") ? spec.public_object_size : spec.response_object_size);
  spec.signature_size = read_size(s, "signature_size", spec.signature_size);
  s.reject_unknown();
  spec.validate(path);
  return spec;
}

CryptoSuite read_custom_suite(const YAML::Node& node) {
  Section s(node, "custom_suite");
  CryptoSuite suite = qrc_suite();
  suite.id = SuiteId::custom;
  if (auto n = s.child("encryption")) {
    suite.encryption =
        read_algorithm(n, "custom_suite.encryption", AlgorithmRole::encryption, aes256_cbc());
  }
  if (auto n = s.child("integrity")) {
    suite.integrity =
        read_algorithm(n, "custom_suite.integrity", AlgorithmRole::integrity, hmac_sha256());
  }
  if (auto n = s.child("key_establishments")) {
    if (!n.IsSequence() || n.size() == 0) {
      throw ValidationError("custom_suite.key_establishments", "expected a non-empty list");
    }
    suite.key_establishments.clear();
    for (std::size_t i = 0; i < n.size(); ++i) {
      suite.key_establishments.push_back(read_algorithm(
          n[i], "custom_suite.key_establishments[" + std::to_string(i) + "]",
          AlgorithmRole::key_establishment, AlgorithmSpec{}));
    }
  }
  if (auto n = s.child("authentication")) {
    suite.authentication = read_algorithm(n, "custom_suite.authentication",
                                          AlgorithmRole::authentication, ml_dsa_87());
  }
  s.reject_unknown();
  suite.validate("custom_suite");
  return suite;
}

void read_engine(const YAML::Node& node, EngineConfig& engine) {
  Section s(node, "engine");
  engine.fragment_threshold_bytes =
      read_size(s, "fragment_threshold_bytes", engine.fragment_threshold_bytes);
  engine.fragment_overhead_bytes =
      read_size(s, "fragment_overhead_bytes", engine.fragment_overhead_bytes);
  engine.ip_udp_overhead_bytes = read_size(s, "ip_udp_overhead_bytes", engine.ip_udp_overhead_bytes);
  s.read("additional_ke_rounds", engine.additional_ke_rounds);
  s.read("initial_timeout_ms", engine.initial_timeout_ms);
  s.read("backoff_factor", engine.backoff_factor);
  s.read("max_retries", engine.max_retries);
  if (auto v = s.get<int>("max_restarts")) engine.max_restarts = *v;
  if (auto v = s.get<std::string>("sa_init_policy")) {
    if (*v == "error") {
      engine.sa_init_policy = SaInitPolicy::error;
    } else if (*v == "ip_fragment") {
      engine.sa_init_policy = SaInitPolicy::ip_fragment;
    } else {
      throw ValidationError("engine.sa_init_policy", "expected error | ip_fragment");
    }
  }
  if (auto v = s.get<std::string>("reassembly_scope")) {
    if (*v == "per_transmission") {
      engine.reassembly_scope = ReassemblyScope::per_transmission;
    } else if (*v == "merge") {
      engine.reassembly_scope = ReassemblyScope::merge;
    } else {
      throw ValidationError("engine.reassembly_scope", "expected per_transmission | merge");
    }
  }
  s.reject_unknown();
}

std::string default_label(const LossSpec& loss) {
  std::ostringstream out;
  if (loss.uniform_rate) {
    out << "uniform-" << *loss.uniform_rate;
  } else {
    out << "sge-P" << loss.p << "-R" << loss.r;
  }
  return out.str();
}

}  // namespace

const std::vector<LinkPreset>& link_presets() {
  static const std::vector<LinkPreset> presets = {
      {"FL-PA-2", 31.408, sge(3.0e-3, 128.0e-3), "Florida - Pennsylvania, SGE 2.29%"},
      {"LA-NY-1", 66.015, sge(4.0e-3, 81.0e-3), "Los Angeles - New York, SGE 4.71%"},
      {"FL-PA-1", 31.387, sge(2.5e-3, 43.1e-3), "Florida - Pennsylvania, SGE 5.3%"},
      {"JPN-SWI", 259.319, sge(0.6e-3, 7.7e-3), "Tokyo - Geneva, SGE 7.34%"},
      {"LA-NY-2", 66.035, sge(9.0e-3, 82.0e-3), "Los Angeles - New York, SGE 9.89%"},
      {"WIFI-10", 5.0, uniform(0.10), "campus Wi-Fi, uniform 10% loss"},
      {"WIFI-12", 5.0, uniform(0.12), "campus Wi-Fi, uniform 12% loss"},
      {"WIFI-16", 5.0, uniform(0.16), "campus Wi-Fi, uniform 16% loss"},
      {"WIFI-20", 5.0, uniform(0.20), "campus Wi-Fi, uniform 20% loss"},
  };
  return presets;
}

const LinkPreset& find_preset(std::string_view name) {
  for (const auto& p : link_presets()) {
    if (p.name == name) return p;
  }
  throw ValidationError("preset", "unknown preset '" + std::string(name) + "'");
}

CryptoSuite ScenarioConfig::suite(SuiteId id) const {
  switch (id) {
    case SuiteId::classical:
      return classical_suite();
    case SuiteId::qrc:
      return qrc_suite();
    case SuiteId::custom:
      if (!custom_suite) throw ValidationError("custom_suite", "suite 'custom' needs custom_suite");
      return *custom_suite;
  }
  throw ValidationError("suite", "unknown suite id");
}

void ScenarioConfig::validate() const {
  if (scenario_id.empty()) throw ValidationError("scenario_id", "must not be empty");
  if (iterations < 1) throw ValidationError("iterations", "must be >= 1");
  if (suites.empty()) throw ValidationError("suite", "no suite selected");
  if (loss_points.empty()) throw ValidationError("loss_points", "no loss point configured");
  link.validate();
  engine.validate();
  if (engine.fragment_threshold_bytes > link.mtu) {
    throw ValidationError("engine.fragment_threshold_bytes", "exceeds link mtu");
  }
  for (std::size_t i = 0; i < loss_points.size(); ++i) {
    const auto field = "loss_points[" + std::to_string(i) + "]";
    double pi = 0.0;
    try {
      pi = loss_points[i].loss.steady_state();
    } catch (const DegenerateChain&) {
      throw ValidationError(field, "P = R = 0 is degenerate");
    }
    if (!engine.max_restarts && pi >= 1.0) {
      throw ValidationError(field, "total loss with unbounded restarts never terminates");
    }
  }
  for (auto id : suites) suite(id).validate(std::string("suite.") + std::string(to_string(id)));
}

ScenarioConfig parse_config(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  if (!root || root.IsNull()) root = YAML::Node(YAML::NodeType::Map);

  ScenarioConfig cfg;
  Section s(root, "");
  s.read("scenario_id", cfg.scenario_id);
  if (auto v = s.get<long long>("iterations")) {
    if (*v < 1) throw ValidationError("iterations", "must be >= 1");
    cfg.iterations = static_cast<std::uint64_t>(*v);
  }
  if (auto v = s.get<long long>("seed")) cfg.link.seed = static_cast<std::uint64_t>(*v);
  if (auto v = s.get<long long>("material_seed")) cfg.material_seed = static_cast<std::uint64_t>(*v);

  LossSpec loss = sge(0.0, 1.0);
  std::optional<double> preset_rtt;
  const bool top_level_loss = read_loss(s, loss, &preset_rtt);
  if (preset_rtt) cfg.link.rtt_ms = *preset_rtt;
  s.read("rtt_ms", cfg.link.rtt_ms);
  cfg.link.mtu = read_size(s, "mtu", cfg.link.mtu);
  s.read("jitter_ms", cfg.link.jitter_ms);
  if (auto v = s.get<std::string>("channel_mode")) {
    if (*v == "shared") {
      cfg.channel_mode = ChannelMode::shared;
    } else if (*v == "per_direction") {
      cfg.channel_mode = ChannelMode::per_direction;
    } else {
      throw ValidationError("channel_mode", "expected shared | per_direction");
    }
  }

  if (auto v = s.get<std::string>("suite")) {
    if (*v == "both") {
      cfg.suites = {SuiteId::classical, SuiteId::qrc};
    } else {
      cfg.suites = {parse_suite_id(*v)};
    }
  }
  if (auto n = s.child("custom_suite")) cfg.custom_suite = read_custom_suite(n);
  if (auto n = s.child("engine")) read_engine(n, cfg.engine);

  if (auto n = s.child("loss_points")) {
    if (top_level_loss) {
      throw ValidationError("loss_points", "cannot be combined with top-level preset/P/R");
    }
    if (!n.IsSequence() || n.size() == 0) {
      throw ValidationError("loss_points", "expected a non-empty list");
    }
    for (std::size_t i = 0; i < n.size(); ++i) {
      Section point(n[i], "loss_points[" + std::to_string(i) + "]");
      LossPoint lp{"", sge(0.0, 1.0)};
      point.read("label", lp.label);
      if (!read_loss(point, lp.loss, nullptr)) {
        throw ValidationError(point.field("P"), "loss point needs preset, P/R or uniform_rate");
      }
      if (lp.label.empty()) {
        lp.label = point.has("preset") ? n[i]["preset"].as<std::string>() : default_label(lp.loss);
      }
      point.reject_unknown();
      cfg.loss_points.push_back(std::move(lp));
    }
  } else {
    std::string label = root["preset"] ? root["preset"].as<std::string>() : default_label(loss);
    cfg.loss_points.push_back(LossPoint{std::move(label), loss});
  }

  if (auto n = s.child("output")) {
    Section out(n, "output");
    out.read("csv", cfg.output.csv);
    out.read("json", cfg.output.json);
    out.reject_unknown();
  }
  s.reject_unknown();

  cfg.validate();
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

}  // namespace ikesim
