// qkd-distill: simulate, distill, sweep, encrypt/decrypt, report.
// Exit codes: 0 ok, 2 configuration/IO, 3 session abort, 4 key exhaustion.
#include <qkd/keystore.hpp>
#include <qkd/pipeline.hpp>
#include <qkd/report.hpp>
#include <qkd/scenarios.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>

namespace {

using namespace qkd;

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::config:
    case ErrorKind::io:
    case ErrorKind::size:
    case ErrorKind::construction: return 2;
    case ErrorKind::key_exhaustion: return 4;
    default: return 3;
  }
}

const char* kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::config: return "config";
    case ErrorKind::size: return "size";
    case ErrorKind::alignment: return "alignment";
    case ErrorKind::estimation_abort: return "estimation-abort";
    case ErrorKind::authentication: return "authentication";
    case ErrorKind::key_exhaustion: return "key-exhaustion";
    case ErrorKind::no_code: return "no-code";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::construction: return "construction";
    case ErrorKind::empty_sample: return "empty-sample";
    case ErrorKind::session: return "session";
    case ErrorKind::io: return "io";
  }
  return "error";
}

std::vector<std::uint8_t> read_all(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(static_cast<bool>(f), ErrorKind::io, "cannot open " + path);
  return {std::istreambuf_iterator<char>(f), {}};
}

void write_all(const std::string& path, std::span<const std::uint8_t> data) {
  std::ofstream f(path, std::ios::binary);
  require(static_cast<bool>(f), ErrorKind::io, "cannot write " + path);
  f.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  require(static_cast<bool>(f), ErrorKind::io, "write failed: " + path);
}

// Flags shared by simulate and run; each overrides the config file.
struct Overrides {
  std::string config;
  std::string protocol;
  std::uint64_t pulses = 0, input_bits = 0, seed = 0;
  double qber = -1;
  std::size_t block_size = 0, pa_block = 0, instances = 0;
  std::string rate_table;

  void add(CLI::App* app, bool pipeline_flags) {
    app->add_option("--config", config, "session config (JSON)");
    app->add_option("--protocol", protocol, "bb84 | bbm92 | cow");
    app->add_option("--pulses", pulses, "pulses to simulate");
    app->add_option("--qber", qber, "channel flip probability");
    app->add_option("--seed", seed, "session seed");
    if (!pipeline_flags) return;
    app->add_option("--input-bits", input_bits, "sifted bits to distill (sizes the simulation)");
    app->add_option("--block-size", block_size, "payload bits per mapper block");
    app->add_option("--pa-block", pa_block, "bits per privacy-amplification window");
    app->add_option("--instances", instances, "parallel mapper instances");
    app->add_option("--rate-table", rate_table, "rate table JSON");
  }

  SessionConfig apply() const {
    SessionConfig c = config.empty() ? SessionConfig{} : load_config(config);
    if (!protocol.empty()) c.protocol = parse_protocol(protocol);
    if (pulses) {
      c.pulses = pulses;
      if (!input_bits) c.input_bits = 0;
    }
    if (input_bits) c.input_bits = input_bits;
    if (qber >= 0) c.channel.flip_probability = qber;
    if (seed) c.seed = seed;
    if (block_size) c.plan.block_size = block_size;
    if (pa_block) c.plan.pa_block = pa_block;
    if (instances) c.plan.instances = instances;
    if (!rate_table.empty()) c.rate_table = rate_table;
    if (c.pulses == 0 && c.input_bits == 0) c.pulses = 1'000'000;
    const auto errs = validate(c);
    if (!errs.empty()) {
      std::string msg = "invalid configuration:";
      for (const auto& e : errs) msg += "\n  " + e;
      fail(ErrorKind::config, msg);
    }
    return c;
  }
};

void print_metrics(const pipeline::SessionMetrics& m, std::FILE* out) {
  std::fprintf(out,
               "protocol %s  input %zu  qber %.4f (bound %.4f)  code %s p=%zu s=%zu\n"
               "blocks %zu (failed %zu)  corrected %zu  final %zu  f_ec %.3f  iterations %.2f\n"
               "time %.3f s (align %.3f sift %.3f est %.3f rec %.3f verify %.3f pa %.3f; sim %.3f)  rate %.1f kbit/s\n",
               to_string(m.protocol), m.input_bits, m.qber, m.qber_bound, m.code.c_str(), m.punctured,
               m.shortened, m.blocks, m.blocks_failed, m.n_corrected, m.n_final, m.f_ec, m.mean_iterations,
               m.wall_time, m.t.align, m.t.sift, m.t.estimate, m.t.reconcile, m.t.verify, m.t.pa, m.t.simulate,
               m.key_rate / 1000.0);
}

nlohmann::json metrics_json(const pipeline::SessionMetrics& m) {
  return {{"protocol", to_string(m.protocol)}, {"input_bits", m.input_bits}, {"instances", m.instances},
          {"qber", m.qber},                    {"qber_bound", m.qber_bound}, {"n_sift", m.n_sift},
          {"n_corrected", m.n_corrected},      {"n_final", m.n_final},       {"blocks", m.blocks},
          {"blocks_failed", m.blocks_failed},  {"code", m.code},             {"punctured", m.punctured},
          {"shortened", m.shortened},          {"leak_ec", m.leak_ec},       {"wall_time_s", m.wall_time}};
}

int cmd_simulate(const Overrides& o, const std::string& out) {
  const auto cfg = o.apply();
  const auto rec = pipeline::simulate(cfg);
  std::printf("%s: %llu pulses, %zu detections, %zu sync markers\n", to_string(rec.protocol),
              static_cast<unsigned long long>(rec.n_pulses), rec.bob.size(), rec.sync_slots.size());
  if (!out.empty()) {
    save_session(out, rec);
    std::printf("session written to %s\n", out.c_str());
  }
  return 0;
}

int cmd_run(const Overrides& o, const std::string& session_in, std::string metrics, std::string key, bool quiet) {
  auto cfg = o.apply();
  if (metrics.empty()) metrics = cfg.metrics_out;
  if (key.empty()) key = cfg.key_out;
  const auto codes = ldpc::CodeEnsemble::load(cfg.rate_table);

  pipeline::SessionResult res;
  try {
    if (!session_in.empty()) {
      const auto rec = load_session(session_in);
      cfg.protocol = rec.protocol;
      res = pipeline::distill(rec, cfg, codes);
    } else {
      const auto rec = pipeline::simulate(cfg);
      if (!cfg.session_out.empty()) save_session(cfg.session_out, rec);
      res = pipeline::distill(rec, cfg, codes);
    }
  } catch (const pipeline::SessionAbort& a) {
    if (!metrics.empty()) report::write_csv(metrics, {report::row_from(a.metrics)});
    throw;
  }
  const auto& m = res.metrics;
  if (!quiet) print_metrics(m, stdout);
  require(m.keys_match, ErrorKind::session, "final keys differ between the two ends");
  if (!metrics.empty()) report::write_csv(metrics, {report::row_from(m)});
  if (!key.empty()) {
    KeyFile kf;
    kf.session_id = cfg.session_id;
    kf.created = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count());
    kf.fingerprint = fingerprint(cfg);
    kf.metadata = nlohmann::json{{"config", to_json(cfg)}, {"metrics", metrics_json(m)}}.dump();
    kf.bits = res.alice_key;
    write_key_file(key, kf);
    if (!quiet) std::printf("key: %zu bits -> %s (fingerprint %016llx)\n", kf.bits.size(), key.c_str(),
                            static_cast<unsigned long long>(kf.fingerprint));
  }
  return 0;
}

int cmd_sweep(const std::string& dir, std::uint64_t seed, std::uint64_t input_bits, const std::string& metrics) {
  std::vector<report::Row> rows;
  int worst = 0;
  for (const auto& s : benchmark_scenarios()) {
    auto cfg = scenario_config(s, dir);
    if (seed) cfg.seed = seed;
    if (input_bits) cfg.input_bits = input_bits;
    const auto codes = ldpc::CodeEnsemble::load(cfg.rate_table);
    try {
      const auto res = pipeline::run_session(cfg, codes);
      rows.push_back(report::row_from(res.metrics));
    } catch (const pipeline::SessionAbort& a) {
      std::fprintf(stderr, "%s x%zu: %s\n", s.preset.c_str(), s.instances, a.what());
      auto m = a.metrics;
      m.protocol = s.protocol;
      m.instances = s.instances;
      rows.push_back(report::row_from(m));
      worst = std::max(worst, exit_code(a.kind()));
    }
  }
  report::write_table(std::cout, rows);
  if (!metrics.empty()) report::write_csv(metrics, rows);
  return worst;
}

int cmd_encrypt(const std::string& key, const std::string& in, const std::string& out, bool ct) {
  auto store = KeyStore::open(key);
  const auto c = encrypt_payload(read_all(in), store, ct);
  std::ofstream f(out, std::ios::binary);
  require(static_cast<bool>(f), ErrorKind::io, "cannot write " + out);
  write_container(f, c);
  require(static_cast<bool>(f), ErrorKind::io, "write failed: " + out);
  store.save_ledger(key + ".ledger");
  std::printf("%zu bytes encrypted; %llu key bits left\n", c.data.size(),
              static_cast<unsigned long long>(store.available()));
  return 0;
}

int cmd_decrypt(const std::string& key, const std::string& in, const std::string& out, bool ct) {
  const auto store = KeyStore::open(key);
  std::ifstream f(in, std::ios::binary);
  require(static_cast<bool>(f), ErrorKind::io, "cannot open " + in);
  const auto c = read_container(f);
  write_all(out, decrypt_payload(c, store, ct));
  return 0;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& csv) {
  std::vector<report::Row> rows;
  for (const auto& p : inputs) {
    auto r = report::read_csv(p);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  report::write_table(std::cout, rows);
  if (!csv.empty()) report::write_csv(csv, rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"QKD key distillation"};
  app.require_subcommand(1);

  Overrides sim_o, run_o;
  std::string emit;
  auto* sim = app.add_subcommand("simulate", "simulate a transmission record");
  sim_o.add(sim, false);
  sim->add_option("--emit-session", emit, "write the record to a session file");

  std::string session_in, metrics, key;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "simulate (or load) a session and distill a key");
  run_o.add(run, true);
  run->add_option("--session", session_in, "distill a saved session file instead of simulating");
  run->add_option("--metrics", metrics, "metrics CSV");
  run->add_option("--key", key, "output key file");
  run->add_flag("-q,--quiet", quiet);

  std::string preset_path = preset_dir(), sweep_csv;
  std::uint64_t sweep_seed = 0, sweep_input = 0;
  auto* sweep = app.add_subcommand("sweep", "run the 12 benchmark scenarios");
  sweep->add_option("--presets", preset_path, "preset directory");
  sweep->add_option("--seed", sweep_seed, "override every preset's seed");
  sweep->add_option("--input-bits", sweep_input, "override the input size (quick runs)");
  sweep->add_option("--metrics", sweep_csv, "metrics CSV");

  std::string ekey, ein, eout;
  bool ct = false;
  auto* enc = app.add_subcommand("encrypt", "AES-128-CTR with key bits from a key file");
  enc->add_option("--key", ekey)->required();
  enc->add_option("--in", ein)->required();
  enc->add_option("--out", eout)->required();
  enc->add_flag("--constant-time", ct, "S-box scan instead of T-tables");
  std::string dkey, din, dout;
  bool dct = false;
  auto* dec = app.add_subcommand("decrypt", "decrypt a container produced by encrypt");
  dec->add_option("--key", dkey)->required();
  dec->add_option("--in", din)->required();
  dec->add_option("--out", dout)->required();
  dec->add_flag("--constant-time", dct);

  std::vector<std::string> rep_in;
  std::string rep_csv;
  auto* rep = app.add_subcommand("report", "merge metrics CSVs into one table");
  rep->add_option("inputs", rep_in, "metrics CSV files")->required();
  rep->add_option("--csv", rep_csv, "write the merged CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*sim) return cmd_simulate(sim_o, emit);
    if (*run) return cmd_run(run_o, session_in, metrics, key, quiet);
    if (*sweep) return cmd_sweep(preset_path, sweep_seed, sweep_input, sweep_csv);
    if (*enc) return cmd_encrypt(ekey, ein, eout, ct);
    if (*dec) return cmd_decrypt(dkey, din, dout, dct);
    if (*rep) return cmd_report(rep_in, rep_csv);
  } catch (const Error& e) {
    std::fprintf(stderr, "qkd-distill: %s error: %s\n", kind_name(e.kind()), e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "qkd-distill: %s\n", e.what());
    return 2;
  }
  return 0;
}
