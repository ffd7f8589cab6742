#pragma once

// Session configuration: defaults, strict JSON loading (unknown keys are
// errors, every violation is reported), and a fingerprint for key files.

#include <qkd/chansim.hpp>
#include <qkd/errors.hpp>
#include <qkd/ldpc.hpp>
#include <qkd/rng.hpp>

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <string>
#include <vector>

#ifndef QKD_ASSET_DIR
#define QKD_ASSET_DIR "assets"
#endif

namespace qkd {

inline std::string default_rate_table() { return std::string(QKD_ASSET_DIR) + "/rate_table.json"; }

struct PipelinePlan {
  std::size_t block_size = 0;       // payload bits per mapper block; 0 = n - f from the rate table
  std::size_t pa_block = 1'000'000; // target reducer input; rounded down to whole blocks
  std::size_t instances = 1;
  std::size_t queue_depth = 0;      // split -> map capacity in blocks; 0 = 2 * instances
  std::function<void(std::uint64_t)> before_decode;  // test hook (inject delays)
};

struct SessionConfig {
  ProtocolKind protocol = ProtocolKind::BB84;
  std::uint64_t pulses = 0;      // 0: derived from input_bits
  std::uint64_t input_bits = 0;  // sifted bits handed to distillation; 0: all of them
  std::uint64_t seed = 1;
  std::uint64_t session_id = 1;
  ChannelParams channel;

  std::uint64_t align_window = 1000;
  double align_threshold = 0.8;

  double sample_fraction = 0.05;
  double epsilon_pe = 1e-10;
  double abort_threshold = 0.25;

  std::string rate_table = default_rate_table();
  double rate_margin = 0.003;
  std::size_t max_iter = 50;
  ldpc::CheckRule check_rule = ldpc::CheckRule::sum_product;

  double epsilon_pa = 1e-10;
  std::size_t pa_parts = 0;  // 0: as few as the FFT span cap allows
  bool count_sample_leak = false;  // sampled bits are discarded, so they leak nothing about the rest

  bool countermeasure = true;
  std::uint64_t preshared_seed = 0x5eed;
  std::size_t auth_pool = 64;  // one-time keys per direction

  PipelinePlan plan;

  std::string key_out;
  std::string metrics_out;
  std::string session_out;
};

namespace detail {

class Validator {
 public:
  void error(const std::string& where, const std::string& what) { errors_.push_back(where + ": " + what); }
  bool ok() const { return errors_.empty(); }
  std::string joined() const {
    std::string s;
    for (const auto& e : errors_) s += "\n  " + e;
    return s;
  }

  void known_keys(const nlohmann::json& obj, const std::string& where, std::initializer_list<const char*> keys) {
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (auto it = obj.begin(); it != obj.end(); ++it)
      if (!allowed.count(it.key())) error(where + "." + it.key(), "unknown key");
  }

  template <class T>
  void get(const nlohmann::json& obj, const char* key, const std::string& where, T& out) {
    if (!obj.contains(key)) return;
    try {
      out = obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      error(where + "." + key, "wrong type");
    }
  }

  const nlohmann::json* group(const nlohmann::json& root, const char* key) {
    if (!root.contains(key)) return nullptr;
    if (!root.at(key).is_object()) {
      error(key, "must be an object");
      return nullptr;
    }
    return &root.at(key);
  }

 private:
  std::vector<std::string> errors_;
};

}  // namespace detail

/// Range checks shared by the JSON loader and the CLI flag path.
inline std::vector<std::string> validate(const SessionConfig& c) {
  std::vector<std::string> errs;
  auto check = [&](bool ok, const char* what) {
    if (!ok) errs.emplace_back(what);
  };
  try {
    c.channel.validate();
  } catch (const Error& e) {
    errs.emplace_back(e.what());
  }
  check(c.pulses > 0 || c.input_bits > 0, "one of pulses / input_bits must be positive");
  check(c.sample_fraction > 0.0 && c.sample_fraction < 1.0, "estimation.sample_fraction must be in (0,1)");
  check(c.epsilon_pe > 0.0 && c.epsilon_pe < 1.0, "estimation.epsilon must be in (0,1)");
  check(c.abort_threshold > 0.0 && c.abort_threshold < 0.5, "estimation.abort_threshold must be in (0,0.5)");
  check(c.align_threshold > -1.0 && c.align_threshold <= 1.0, "sifting.threshold must be in (-1,1]");
  check(c.max_iter >= 1, "reconciliation.max_iter must be >= 1");
  check(c.rate_margin >= 0.0, "reconciliation.margin must be >= 0");
  check(c.epsilon_pa > 0.0 && c.epsilon_pa < 1.0, "privacy_amplification.epsilon must be in (0,1)");
  check(c.plan.instances >= 1, "pipeline.instances must be >= 1");
  check(c.plan.pa_block >= 16 * 128, "pipeline.pa_block must be >= 2048");
  check(c.auth_pool >= 1, "auth.pool must be >= 1");
  return errs;
}

inline SessionConfig config_from_json(const nlohmann::json& j) {
  SessionConfig c;
  detail::Validator v;
  if (!j.is_object()) fail(ErrorKind::config, "config must be a JSON object");
  v.known_keys(j, "config",
               {"protocol", "pulses", "input_bits", "seed", "session_id", "channel", "sifting", "estimation",
                "reconciliation", "privacy_amplification", "auth", "pipeline", "output", "description"});
  if (j.contains("protocol")) {
    try {
      c.protocol = parse_protocol(j.at("protocol").get<std::string>());
    } catch (const std::exception&) {
      v.error("config.protocol", "must be one of bb84, bbm92, cow");
    }
  }
  v.get(j, "pulses", "config", c.pulses);
  v.get(j, "input_bits", "config", c.input_bits);
  v.get(j, "seed", "config", c.seed);
  v.get(j, "session_id", "config", c.session_id);

  if (auto* g = v.group(j, "channel")) {
    v.known_keys(*g, "channel",
                 {"transmissivity", "detector_efficiency", "flip_probability", "clock_offset", "decoy_fraction",
                  "monitor_fraction", "dark_count", "sync_fraction"});
    v.get(*g, "transmissivity", "channel", c.channel.transmissivity);
    v.get(*g, "detector_efficiency", "channel", c.channel.detector_efficiency);
    v.get(*g, "flip_probability", "channel", c.channel.flip_probability);
    v.get(*g, "clock_offset", "channel", c.channel.clock_offset);
    v.get(*g, "decoy_fraction", "channel", c.channel.decoy_fraction);
    v.get(*g, "monitor_fraction", "channel", c.channel.monitor_fraction);
    v.get(*g, "dark_count", "channel", c.channel.dark_count);
    v.get(*g, "sync_fraction", "channel", c.channel.sync_fraction);
  }
  if (auto* g = v.group(j, "sifting")) {
    v.known_keys(*g, "sifting", {"window", "threshold"});
    v.get(*g, "window", "sifting", c.align_window);
    v.get(*g, "threshold", "sifting", c.align_threshold);
  }
  if (auto* g = v.group(j, "estimation")) {
    v.known_keys(*g, "estimation", {"sample_fraction", "epsilon", "abort_threshold"});
    v.get(*g, "sample_fraction", "estimation", c.sample_fraction);
    v.get(*g, "epsilon", "estimation", c.epsilon_pe);
    v.get(*g, "abort_threshold", "estimation", c.abort_threshold);
  }
  if (auto* g = v.group(j, "reconciliation")) {
    v.known_keys(*g, "reconciliation", {"rate_table", "margin", "max_iter", "check_rule"});
    v.get(*g, "rate_table", "reconciliation", c.rate_table);
    v.get(*g, "margin", "reconciliation", c.rate_margin);
    v.get(*g, "max_iter", "reconciliation", c.max_iter);
    if (g->contains("check_rule")) {
      std::string rule;
      v.get(*g, "check_rule", "reconciliation", rule);
      if (rule == "sum_product")
        c.check_rule = ldpc::CheckRule::sum_product;
      else if (rule == "min_sum")
        c.check_rule = ldpc::CheckRule::min_sum;
      else
        v.error("reconciliation.check_rule", "must be sum_product or min_sum");
    }
  }
  if (auto* g = v.group(j, "privacy_amplification")) {
    v.known_keys(*g, "privacy_amplification", {"epsilon", "parts", "count_sample_leak"});
    v.get(*g, "epsilon", "privacy_amplification", c.epsilon_pa);
    v.get(*g, "parts", "privacy_amplification", c.pa_parts);
    v.get(*g, "count_sample_leak", "privacy_amplification", c.count_sample_leak);
  }
  if (auto* g = v.group(j, "auth")) {
    v.known_keys(*g, "auth", {"countermeasure", "preshared_seed", "pool"});
    v.get(*g, "countermeasure", "auth", c.countermeasure);
    v.get(*g, "preshared_seed", "auth", c.preshared_seed);
    v.get(*g, "pool", "auth", c.auth_pool);
  }
  if (auto* g = v.group(j, "pipeline")) {
    v.known_keys(*g, "pipeline", {"block_size", "pa_block", "instances", "queue_depth"});
    v.get(*g, "block_size", "pipeline", c.plan.block_size);
    v.get(*g, "pa_block", "pipeline", c.plan.pa_block);
    v.get(*g, "instances", "pipeline", c.plan.instances);
    v.get(*g, "queue_depth", "pipeline", c.plan.queue_depth);
  }
  if (auto* g = v.group(j, "output")) {
    v.known_keys(*g, "output", {"key", "metrics", "session"});
    v.get(*g, "key", "output", c.key_out);
    v.get(*g, "metrics", "output", c.metrics_out);
    v.get(*g, "session", "output", c.session_out);
  }
  if (v.ok())
    for (const auto& e : validate(c)) v.error("config", e);
  if (!v.ok()) fail(ErrorKind::config, "invalid configuration:" + v.joined());
  return c;
}

inline SessionConfig load_config(const std::string& path) {
  std::ifstream f(path);
  require(static_cast<bool>(f), ErrorKind::config, "cannot open config " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::config, path + ": " + e.what());
  }
  auto c = config_from_json(j);
  // Relative rate-table paths resolve against the config file's directory.
  if (j.contains("reconciliation") && j["reconciliation"].contains("rate_table")) {
    std::filesystem::path p(c.rate_table);
    if (p.is_relative()) c.rate_table = (std::filesystem::path(path).parent_path() / p).lexically_normal().string();
  }
  return c;
}

/// Everything that determines the session output, as JSON.
inline nlohmann::json to_json(const SessionConfig& c) {
  return {
      {"protocol", to_string(c.protocol)},
      {"pulses", c.pulses},
      {"input_bits", c.input_bits},
      {"seed", c.seed},
      {"session_id", c.session_id},
      {"channel",
       {{"transmissivity", c.channel.transmissivity},
        {"detector_efficiency", c.channel.detector_efficiency},
        {"flip_probability", c.channel.flip_probability},
        {"clock_offset", c.channel.clock_offset},
        {"decoy_fraction", c.channel.decoy_fraction},
        {"monitor_fraction", c.channel.monitor_fraction},
        {"dark_count", c.channel.dark_count},
        {"sync_fraction", c.channel.sync_fraction}}},
      {"sifting", {{"window", c.align_window}, {"threshold", c.align_threshold}}},
      {"estimation",
       {{"sample_fraction", c.sample_fraction}, {"epsilon", c.epsilon_pe}, {"abort_threshold", c.abort_threshold}}},
      {"reconciliation",
       {{"rate_table", c.rate_table},
        {"margin", c.rate_margin},
        {"max_iter", c.max_iter},
        {"check_rule", c.check_rule == ldpc::CheckRule::min_sum ? "min_sum" : "sum_product"}}},
      {"privacy_amplification",
       {{"epsilon", c.epsilon_pa}, {"parts", c.pa_parts}, {"count_sample_leak", c.count_sample_leak}}},
      {"auth", {{"countermeasure", c.countermeasure}, {"preshared_seed", c.preshared_seed}, {"pool", c.auth_pool}}},
      {"pipeline",
       {{"block_size", c.plan.block_size},
        {"pa_block", c.plan.pa_block},
        {"instances", c.plan.instances},
        {"queue_depth", c.plan.queue_depth}}},
  };
}

/// Hash of the canonical JSON minus the scheduling knobs, which must not
/// change the key.
inline std::uint64_t fingerprint(const SessionConfig& c) {
  auto j = to_json(c);
  j["pipeline"].erase("instances");
  j["pipeline"].erase("queue_depth");
  j["reconciliation"].erase("rate_table");
  const auto s = j.dump();
  return derive_seed(0, std::string_view(s));
}

}  // namespace qkd
