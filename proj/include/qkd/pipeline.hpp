#pragma once

// Map-reduce distillation: split the sifted key into code blocks, decode them
// on p mapper workers, combine passing blocks per PA window in block order,
// verify, then hash each window down to the final key.

#include <qkd/auth.hpp>
#include <qkd/chansim.hpp>
#include <qkd/config.hpp>
#include <qkd/estimation.hpp>
#include <qkd/keystore.hpp>
#include <qkd/ldpc.hpp>
#include <qkd/pa.hpp>
#include <qkd/ratetable.hpp>
#include <qkd/sifting.hpp>
#include <qkd/verify.hpp>

#include <chrono>
#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace qkd::pipeline {

/// Fixed-capacity FIFO; push blocks while full, pop blocks while empty, and
/// close() releases every waiter.
template <class T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : cap_(capacity ? capacity : 1) {}

  bool push(T v) {
    std::unique_lock lk(mu_);
    not_full_.wait(lk, [&] { return closed_ || q_.size() < cap_; });
    if (closed_) return false;
    q_.push_back(std::move(v));
    high_water_ = std::max(high_water_, q_.size());
    not_empty_.notify_one();
    return true;
  }

  std::optional<T> pop() {
    std::unique_lock lk(mu_);
    not_empty_.wait(lk, [&] { return closed_ || !q_.empty(); });
    if (q_.empty()) return std::nullopt;
    T v = std::move(q_.front());
    q_.pop_front();
    not_full_.notify_one();
    return v;
  }

  void close() {
    std::lock_guard lk(mu_);
    closed_ = true;
    not_full_.notify_all();
    not_empty_.notify_all();
  }

  std::size_t capacity() const noexcept { return cap_; }
  std::size_t high_water() const {
    std::lock_guard lk(mu_);
    return high_water_;
  }

 private:
  std::size_t cap_;
  mutable std::mutex mu_;
  std::condition_variable not_full_, not_empty_;
  std::deque<T> q_;
  bool closed_ = false;
  std::size_t high_water_ = 0;
};

// ---------------------------------------------------------------------------
// split / combine

struct Split {
  std::vector<BitBlock> blocks;  // full blocks, index = position
  BitBlock carry;                // ragged tail kept for the next window
};

inline Split split(const BitBlock& sifted, std::size_t block_size) {
  require(block_size > 0, ErrorKind::config, "block_size must be positive");
  Split s;
  const std::size_t nb = sifted.size() / block_size;
  for (std::size_t i = 0; i < nb; ++i) {
    auto b = sifted.slice(i * block_size, block_size);
    b.set_index(i);
    s.blocks.push_back(std::move(b));
  }
  s.carry = sifted.slice(nb * block_size, sifted.size() - nb * block_size);
  s.carry.set_index(nb);
  return s;
}

struct BlockResult {
  std::uint64_t index = 0;
  BitBlock payload;  // corrected payload (Bob) or original payload (Alice)
  bool passed = false;
  std::size_t iterations = 0;
};

/// Passing payloads in block-index order, whatever order they arrived in.
inline BitBlock combine(std::vector<BlockResult> results) {
  std::sort(results.begin(), results.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
  BitBlock out;
  bool any = false;
  for (const auto& r : results)
    if (r.passed) {
      out.append(r.payload);
      any = true;
    }
  if (!any) fail(ErrorKind::session, "combine: no passing blocks in window");
  return out;
}

// ---------------------------------------------------------------------------
// Metrics

struct StageTimes {
  double simulate = 0, align = 0, sift = 0, estimate = 0, reconcile = 0, verify = 0, pa = 0;
};

struct SessionMetrics {
  ProtocolKind protocol = ProtocolKind::BB84;
  std::size_t input_bits = 0;  // sifted bits handed to distillation
  std::size_t instances = 1;
  double qber = 0;             // estimate from the sample
  double qber_bound = 0;
  double delta = 0;
  std::size_t n_sift = 0;
  std::size_t n_sample = 0;
  std::size_t n_reconciled = 0;  // bits entering reconciliation
  std::size_t n_corrected = 0;   // bits surviving decode + verification
  std::size_t n_final = 0;
  std::size_t blocks = 0;
  std::size_t blocks_failed = 0;
  std::size_t chunks_discarded = 0;
  std::size_t carry_bits = 0;
  std::size_t leak_ec = 0;
  std::size_t verify_bits = 0;
  std::size_t windows = 0;
  double f_ec = 0;           // disclosed / (payload * h2(qber))
  double mean_iterations = 0;
  std::string code;
  std::size_t punctured = 0, shortened = 0;
  std::int64_t offset = 0;
  double correlation = 0;
  std::size_t classical_bits = 0;
  std::size_t auth_messages = 0;
  std::size_t auth_key_bits = 0;
  std::size_t r_formula = 0;  // sum over windows of output_length
  double wall_time = 0;       // distillation time (alignment to final key)
  double key_rate = 0;        // n_final / wall_time
  StageTimes t;
  bool keys_match = false;    // ground truth, only available in simulation
};

/// A session that stopped early, with whatever metrics were collected.
class SessionAbort : public Error {
 public:
  SessionAbort(const Error& e, SessionMetrics m) : Error(e.kind(), e.detail()), metrics(std::move(m)) {}
  SessionMetrics metrics;
};

struct SessionResult {
  BitBlock alice_key;
  BitBlock bob_key;
  SessionMetrics metrics;
};

// ---------------------------------------------------------------------------
// run_session

namespace detail {

using clock = std::chrono::steady_clock;

inline double secs(clock::time_point a, clock::time_point b) { return std::chrono::duration<double>(b - a).count(); }

/// Expected sifted bits per pulse, used to size the simulation.
inline double sift_yield(const SessionConfig& c) {
  const auto& p = c.channel;
  const double click = p.transmissivity * p.detector_efficiency * (1.0 - p.sync_fraction);
  switch (c.protocol) {
    case ProtocolKind::BB84: return click * 0.5;
    case ProtocolKind::BBM92: return click * p.detector_efficiency * 0.5;
    case ProtocolKind::COW: return click * (1.0 - p.decoy_fraction) * (1.0 - p.monitor_fraction);
  }
  return 0.0;
}

[[noreturn]] inline void stage_fail(const char* stage, const Error& e) {
  throw Error(e.kind(), std::string(stage) + ": " + e.detail());
}

template <class F>
auto at_stage(const char* stage, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    stage_fail(stage, e);
  }
}

struct Job {
  std::uint64_t index;
  BitBlock noisy;  // Bob's key vector (n - |shortened|), punctured slots zero
  BitBlock syndrome;
};

}  // namespace detail

inline std::uint64_t pulses_for(const SessionConfig& c) {
  if (c.pulses) return c.pulses;
  const double y = detail::sift_yield(c);
  require(y > 0, ErrorKind::config, "channel yields no sifted bits");
  return static_cast<std::uint64_t>(static_cast<double>(c.input_bits) / y * 1.03) + 4096;
}

/// Decodes a sequence of jobs on `instances` workers. Block i goes to worker
/// i mod p (striping); every hand-off goes through a bounded queue.
inline std::vector<BlockResult> run_mappers(const ldpc::ParityCheckMatrix& H, const ldpc::RateAdaptation& ra,
                                            const std::vector<std::uint32_t>& payload_pos, double qber,
                                            const ldpc::DecoderOptions& opt, std::vector<detail::Job> jobs,
                                            const PipelinePlan& plan) {
  const std::size_t p = std::max<std::size_t>(1, plan.instances);
  const std::size_t depth = plan.queue_depth ? plan.queue_depth : 2 * p;
  const std::size_t per_worker = std::max<std::size_t>(1, depth / p);
  const ldpc::Decoder dec(H, ra, opt);

  std::vector<std::unique_ptr<BoundedQueue<detail::Job>>> inq;
  for (std::size_t w = 0; w < p; ++w) inq.push_back(std::make_unique<BoundedQueue<detail::Job>>(per_worker));
  BoundedQueue<BlockResult> outq(jobs.size() + 1);

  std::vector<std::thread> workers;
  std::exception_ptr err;
  std::mutex err_mu;
  for (std::size_t w = 0; w < p; ++w)
    workers.emplace_back([&, w] {
      try {
        while (auto job = inq[w]->pop()) {
          if (plan.before_decode) plan.before_decode(job->index);
          ldpc::Syndrome syn{std::move(job->syndrome), job->index};
          const auto r = dec.decode(job->noisy, syn, qber);
          BlockResult br;
          br.index = job->index;
          br.iterations = r.iterations_used;
          br.passed = r.converged;
          br.payload = BitBlock(payload_pos.size(), job->index);
          for (std::size_t i = 0; i < payload_pos.size(); ++i)
            if (r.corrected.get(payload_pos[i])) br.payload.set(i, true);
          outq.push(std::move(br));
        }
      } catch (...) {
        std::lock_guard lk(err_mu);
        if (!err) err = std::current_exception();
      }
    });

  const std::size_t n = jobs.size();
  for (auto& j : jobs) {
    const auto w = j.index % p;
    inq[w]->push(std::move(j));
  }
  for (auto& q : inq) q->close();
  std::vector<BlockResult> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n && !err; ++i) {
    auto r = outq.pop();
    if (!r) break;
    out.push_back(std::move(*r));
  }
  for (auto& t : workers) t.join();
  if (err) std::rethrow_exception(err);
  require(out.size() == n, ErrorKind::session, "mapper results missing");
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
  return out;
}

inline SessionResult distill_impl(const TransmissionRecord& rec, const SessionConfig& cfg,
                                  const ldpc::CodeEnsemble& codes, SessionMetrics& m_out);

/// Sifting onward, for an existing transmission record. Alice's and Bob's
/// halves exchange every classical message through the authenticated link.
/// Failures surface as SessionAbort carrying the partial metrics.
inline SessionResult distill(const TransmissionRecord& rec, const SessionConfig& cfg,
                             const ldpc::CodeEnsemble& codes) {
  SessionMetrics m;
  try {
    return distill_impl(rec, cfg, codes, m);
  } catch (const SessionAbort&) {
    throw;
  } catch (const Error& e) {
    throw SessionAbort(e, m);
  }
}

inline SessionResult distill_impl(const TransmissionRecord& rec, const SessionConfig& cfg,
                                  const ldpc::CodeEnsemble& codes, SessionMetrics& m) {
  using detail::at_stage;
  using detail::clock;
  using detail::secs;
  SessionResult res;
  m.protocol = rec.protocol;
  m.instances = cfg.plan.instances;
  const auto t_start = clock::now();

  // Pre-shared secret: authentication keys for both directions, then one
  // 256-bit verification key per PA window, drawn in that order.
  KeyStore preshared;
  const std::size_t max_windows = 64;
  preshared.append(deterministic_rng(cfg.preshared_seed, 2 * 128 * (1 + cfg.auth_pool) + 256 * max_windows),
                   "pre-shared");
  const auto link_bits = preshared.consume(2 * 128 * (1 + cfg.auth_pool), "auth link keys");
  const auto keys = auth::make_link_keys(link_bits, cfg.auth_pool, cfg.countermeasure,
                                         derive_seed(cfg.seed, "trng"));
  auto [ta, tb] = auth::in_process_pair();
  auto [alice, bob] = auth::make_channel_pair(cfg.session_id, keys, std::move(ta), std::move(tb));

  // --- alignment on the public sync markers
  auto t0 = clock::now();
  const auto al = at_stage("alignment", [&] {
    return align(rec.sync_slots, rec.sync_times, cfg.align_window, cfg.align_threshold);
  });
  m.offset = al.offset;
  m.correlation = al.correlation;
  auto t1 = clock::now();
  m.t.align = secs(t0, t1);

  // --- sifting
  SiftResult sr = at_stage("sifting", [&] {
    if (rec.protocol == ProtocolKind::COW) {
      bob.send(auth::MsgType::sift_announce, cow_announcement(rec.bob, al.offset));
      alice.recv(auth::MsgType::sift_announce);
    } else {
      bob.send(auth::MsgType::sift_announce, basis_announcement(rec.bob));
      alice.recv(auth::MsgType::sift_announce);
    }
    auto s = sift(rec, al.offset);
    if (rec.protocol != ProtocolKind::COW) {
      BitBlock match(s.stats.n_q);  // Alice's one-bit answers (match flags)
      alice.send(auth::MsgType::sift_reply, match.to_bytes());
      bob.recv(auth::MsgType::sift_reply);
    }
    return s;
  });
  m.classical_bits = sr.stats.classical_bits_used;
  BitBlock ka = std::move(sr.alice.bits), kb = std::move(sr.bob.bits);
  m.n_sift = ka.size();
  if (cfg.input_bits) {
    if (ka.size() < cfg.input_bits)
      fail(ErrorKind::session, "sifting: " + std::to_string(ka.size()) + " sifted bits, " +
                                   std::to_string(cfg.input_bits) + " requested");
    ka.resize(cfg.input_bits);
    kb.resize(cfg.input_bits);
  }
  m.input_bits = ka.size();
  auto t2 = clock::now();
  m.t.sift = secs(t1, t2);

  // --- parameter estimation
  const auto est = at_stage("estimation", [&] {
    const auto idx = sample_indices(ka.size(), cfg.sample_fraction, derive_seed(cfg.seed, "sample"));
    alice.send(auth::MsgType::disclosure, disclosure_message(idx, select_bits(ka, idx)));
    const auto d = parse_disclosure(bob.recv(auth::MsgType::disclosure));
    auto e = estimate_qber(d.sample, select_bits(kb, d.indices), cfg.epsilon_pe);
    ka = remove_bits(ka, idx);
    kb = remove_bits(kb, d.indices);
    return e;
  });
  m.qber = est.qber_hat;
  m.qber_bound = est.qber_bound;
  m.delta = est.delta;
  m.n_sample = est.sample_size;
  if (abort_check(est, cfg.abort_threshold) == Decision::abort)
    fail(ErrorKind::estimation_abort, "estimation: qber bound " + std::to_string(est.qber_bound) + " exceeds " +
                                          std::to_string(cfg.abort_threshold));
  auto t3 = clock::now();
  m.t.estimate = secs(t2, t3);

  // --- reconciliation: rate choice, split, syndromes, map
  const auto choice = at_stage("reconciliation", [&] { return codes.select(est.qber_hat, cfg.rate_margin); });
  const auto& H = codes.code(choice.code);
  auto ra = choice.ra;
  std::size_t payload = H.n() - ra.punctured.size() - ra.shortened.size();
  if (cfg.plan.block_size) {
    require(cfg.plan.block_size <= payload, ErrorKind::config,
            "block_size " + std::to_string(cfg.plan.block_size) + " exceeds code payload " + std::to_string(payload));
    ra = ldpc::make_adaptation(H, ra.punctured.size(), ra.shortened.size() + payload - cfg.plan.block_size);
    payload = cfg.plan.block_size;
  }
  m.code = choice.row.code;
  m.punctured = ra.punctured.size();
  m.shortened = ra.shortened.size();
  const std::size_t disclosed = ldpc::disclosed_bits(H, ra);

  // payload positions inside the decoder's key vector (n - |shortened|)
  std::vector<std::uint32_t> payload_pos;
  {
    std::vector<char> punct(H.n(), 0);
    for (auto c : ra.punctured) punct[c] = 1;
    const auto cols = ldpc::key_columns(H.n(), ra);
    for (std::size_t k = 0; k < cols.size(); ++k)
      if (!punct[cols[k]]) payload_pos.push_back(static_cast<std::uint32_t>(k));
  }
  const std::size_t keylen = H.n() - ra.shortened.size();

  const auto sa = split(ka, payload);
  const auto sb = split(kb, payload);
  m.n_reconciled = ka.size();
  m.blocks = sa.blocks.size();
  m.carry_bits = sa.carry.size();
  require(m.blocks > 0, ErrorKind::session, "reconciliation: fewer sifted bits than one block");
  const std::size_t per_window = std::max<std::size_t>(1, cfg.plan.pa_block / payload);
  const std::size_t n_windows = (m.blocks + per_window - 1) / per_window;
  require(n_windows <= max_windows, ErrorKind::config, "too many PA windows for the pre-shared key budget");

  // Alice: key vector = payload + private random filler in punctured slots.
  const std::uint64_t filler_seed = derive_seed(cfg.seed, "filler");
  std::vector<BitBlock> syndromes(m.blocks);
  for (std::size_t w = 0; w < n_windows; ++w) {
    std::vector<std::uint8_t> msg;
    for (std::size_t i = w * per_window; i < std::min(m.blocks, (w + 1) * per_window); ++i) {
      BitBlock x(keylen, i);
      Rng filler(derive_seed(filler_seed, i));
      for (std::size_t k = 0; k < keylen; ++k) x.set(k, filler.bit());
      for (std::size_t k = 0; k < payload_pos.size(); ++k) x.set(payload_pos[k], sa.blocks[i].get(k));
      const auto syn = ldpc::encode_syndrome(H, x, ra);
      for (int b = 0; b < 4; ++b) msg.push_back(static_cast<std::uint8_t>(i >> (8 * b)));
      const auto bytes = syn.bits.to_bytes();
      msg.insert(msg.end(), bytes.begin(), bytes.end());
    }
    alice.send(auth::MsgType::syndrome, msg);
    const auto got = bob.recv(auth::MsgType::syndrome);
    const std::size_t rec_len = 4 + (H.m() + 7) / 8;
    require(got.size() % rec_len == 0, ErrorKind::session, "reconciliation: malformed syndrome message");
    for (std::size_t off = 0; off < got.size(); off += rec_len) {
      std::uint32_t bi = 0;
      for (int b = 0; b < 4; ++b) bi |= static_cast<std::uint32_t>(got[off + static_cast<std::size_t>(b)]) << (8 * b);
      require(bi < m.blocks, ErrorKind::session, "reconciliation: syndrome for unknown block");
      syndromes[bi] = BitBlock::from_bytes(std::span(got).subspan(off + 4, rec_len - 4), H.m());
    }
  }

  ldpc::DecoderOptions opt;
  opt.max_iter = cfg.max_iter;
  opt.rule = cfg.check_rule;
  const double qdec = std::clamp(est.qber_hat, 1e-3, 0.45);
  std::vector<detail::Job> jobs;
  jobs.reserve(m.blocks);
  for (std::size_t i = 0; i < m.blocks; ++i) {
    BitBlock y(keylen, i);
    for (std::size_t k = 0; k < payload_pos.size(); ++k) y.set(payload_pos[k], sb.blocks[i].get(k));
    jobs.push_back({i, std::move(y), std::move(syndromes[i])});
  }
  const auto bob_blocks = at_stage("reconciliation", [&] {
    return run_mappers(H, ra, payload_pos, qdec, opt, std::move(jobs), cfg.plan);
  });
  double iters = 0;
  for (const auto& b : bob_blocks) {
    iters += static_cast<double>(b.iterations);
    if (!b.passed) ++m.blocks_failed;
  }
  m.mean_iterations = iters / static_cast<double>(m.blocks);
  auto t4 = clock::now();
  m.t.reconcile = secs(t3, t4);

  // --- per window: flags, combine, verify, privacy amplification
  double t_verify = 0, t_pa = 0;
  BitBlock final_a, final_b;
  for (std::size_t w = 0; w < n_windows; ++w) {
    const auto tw0 = clock::now();
    const std::size_t lo = w * per_window, hi = std::min(m.blocks, (w + 1) * per_window);
    BitBlock flags(hi - lo);
    for (std::size_t i = lo; i < hi; ++i) flags.set(i - lo, bob_blocks[i].passed);
    bob.send(auth::MsgType::block_flags, flags.to_bytes());
    const auto fl = BitBlock::from_bytes(alice.recv(auth::MsgType::block_flags), hi - lo);

    std::vector<BlockResult> ra_res, rb_res;
    std::size_t leak = 0;
    for (std::size_t i = lo; i < hi; ++i) {
      ra_res.push_back({i, sa.blocks[i], fl.get(i - lo), 0});
      rb_res.push_back(bob_blocks[i]);
      if (fl.get(i - lo)) leak += disclosed;
    }
    std::size_t passing = 0;
    for (std::size_t i = lo; i < hi; ++i) passing += fl.get(i - lo);
    if (passing == 0) continue;  // nothing to distill in this window
    ++m.windows;
    BitBlock ca = combine(std::move(ra_res)), cb = combine(std::move(rb_res));
    if (ca.size() < verify::kChunks * verify::kDigestBits) continue;

    const auto vk = verify::VerifyKey::from_bits(preshared.consume(256, "verification key"));
    const auto rep = at_stage("verification", [&] {
      return verify::verify_key(ca, cb, vk, static_cast<std::uint32_t>(w), alice, bob);
    });
    m.chunks_discarded += rep.discarded_chunks.size();
    ca = verify::keep_passing(ca, rep.mask);
    cb = verify::keep_passing(cb, rep.mask);
    m.n_corrected += ca.size();
    m.leak_ec += leak;
    const auto tw1 = clock::now();
    t_verify += secs(tw0, tw1);

    pa::PaPolicy pol;
    pol.epsilon_pa = cfg.epsilon_pa;
    pol.leak_ec = leak;
    pol.leak_pe = cfg.count_sample_leak ? est.sample_size : 0;
    pol.verify_bits = verify::kChunks * verify::kDigestBits;
    m.verify_bits += pol.verify_bits;
    const std::size_t r = pa::output_length(ca.size(), est.qber_bound, pol);
    m.r_formula += r;
    if (r > 0) {
      at_stage("privacy amplification", [&] {
        const auto seed = pa::ToeplitzSeed::random(ca.size(), r, derive_seed(derive_seed(cfg.seed, "pa"), w));
        alice.send(auth::MsgType::pa_seed, pa::seed_message(seed));
        const auto seed_b = pa::parse_seed_message(bob.recv(auth::MsgType::pa_seed));
        const std::size_t parts = cfg.pa_parts ? cfg.pa_parts : pa::parts_needed(ca.size(), r);
        pa::SplitOptions so;
        so.shuffle = parts > 1;
        so.shuffle_seed = derive_seed(cfg.seed, "pa-shuffle") ^ w;
        so.threads = std::min(parts, cfg.plan.instances);
        final_a.append(parts == 1 ? pa::toeplitz_hash_fft(seed, ca) : pa::split_shuffle_merge(ca, seed, parts, so));
        final_b.append(parts == 1 ? pa::toeplitz_hash_fft(seed_b, cb)
                                  : pa::split_shuffle_merge(cb, seed_b, parts, so));
        return 0;
      });
    }
    t_pa += secs(tw1, clock::now());
  }
  m.t.verify = t_verify;
  m.t.pa = t_pa;

  const std::size_t payload_total = m.blocks * payload;
  const double h = ldpc::binary_entropy(est.qber_hat);
  m.f_ec = h > 0 ? static_cast<double>(m.blocks * disclosed) / (static_cast<double>(payload_total) * h) : 0.0;
  m.auth_messages = alice.endpoint().sent() + bob.endpoint().sent();
  m.auth_key_bits = 128 * (alice.endpoint().send_keys().k2_pool.cursor() + bob.endpoint().send_keys().k2_pool.cursor());
  m.n_final = final_a.size();
  m.keys_match = final_a == final_b;
  m.wall_time = secs(t_start, clock::now());
  m.key_rate = m.wall_time > 0 ? static_cast<double>(m.n_final) / m.wall_time : 0.0;
  if (m.n_final == 0)
    fail(ErrorKind::session, "privacy amplification: output length is 0 (qber bound " +
                                 std::to_string(est.qber_bound) + ", leak " + std::to_string(m.leak_ec) + ")");
  res.alice_key = std::move(final_a);
  res.bob_key = std::move(final_b);
  res.metrics = m;
  return res;
}

inline TransmissionRecord simulate(const SessionConfig& cfg) {
  ChannelParams p = cfg.channel;
  p.seed = derive_seed(cfg.seed, "chansim");
  return simulate_session(cfg.protocol, pulses_for(cfg), p);
}

/// Full session: channel simulation, then distillation.
inline SessionResult run_session(const SessionConfig& cfg, const ldpc::CodeEnsemble& codes) {
  const auto t0 = detail::clock::now();
  const auto rec = detail::at_stage("simulation", [&] { return simulate(cfg); });
  const double tsim = detail::secs(t0, detail::clock::now());
  try {
    auto res = distill(rec, cfg, codes);
    res.metrics.t.simulate = tsim;
    return res;
  } catch (SessionAbort& a) {
    a.metrics.t.simulate = tsim;
    throw;
  }
}

}  // namespace qkd::pipeline
