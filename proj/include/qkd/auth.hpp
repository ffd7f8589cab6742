#pragma once

// Wegman-Carter authentication: polynomial hash mod 2^130-5 (Horner), masked
// with a one-time key, plus the hash-key refresh k1 <- T_r * k2.

#include <qkd/bits.hpp>
#include <qkd/errors.hpp>
#include <qkd/rng.hpp>

#include <array>
#include <condition_variable>
#include <cstdint>
#include <cstring>
#include <deque>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

namespace qkd::auth {

using Key128 = std::array<std::uint8_t, 16>;

/// Fully reduced residue mod 2^130 - 5 as little-endian 64-bit words (w[2] < 4).
struct U130 {
  std::array<std::uint64_t, 3> w{};
  friend bool operator==(const U130&, const U130&) = default;
};

inline std::uint64_t load_le64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

inline void store_le64(std::uint8_t* p, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

/// Clears the 22 bits the 1305 convention fixes: the top four bits of bytes
/// 3, 7, 11, 15 and the bottom two bits of bytes 4, 8, 12.
inline Key128 clamp(Key128 r) {
  for (int i : {3, 7, 11, 15}) r[i] &= 0x0f;
  for (int i : {4, 8, 12}) r[i] &= 0xfc;
  return r;
}

/// Low 128 bits of a residue.
inline Key128 low128(const U130& h) {
  Key128 out;
  store_le64(out.data(), h.w[0]);
  store_le64(out.data() + 8, h.w[1]);
  return out;
}

/// Horner evaluation over 16-byte chunks, each with a 1 byte appended: the
/// accumulator does exactly one multiplication by r per chunk. k1 is clamped
/// here. `mults`, when given, counts the multiplications.
inline U130 poly_hash(std::span<const std::uint8_t> msg, const Key128& k1, std::size_t* mults = nullptr) {
  constexpr std::uint64_t m44 = (std::uint64_t{1} << 44) - 1;
  constexpr std::uint64_t m42 = (std::uint64_t{1} << 42) - 1;
  using u128 = unsigned __int128;

  const Key128 r = clamp(k1);
  const std::uint64_t t0 = load_le64(r.data()), t1 = load_le64(r.data() + 8);
  const std::uint64_t r0 = t0 & m44;
  const std::uint64_t r1 = ((t0 >> 44) | (t1 << 20)) & m44;
  const std::uint64_t r2 = (t1 >> 24) & m42;
  const std::uint64_t s1 = r1 * (5 << 2);
  const std::uint64_t s2 = r2 * (5 << 2);

  std::uint64_t h0 = 0, h1 = 0, h2 = 0;
  for (std::size_t off = 0; off < msg.size(); off += 16) {
    std::uint8_t block[16] = {};
    const std::size_t len = std::min<std::size_t>(16, msg.size() - off);
    std::memcpy(block, msg.data() + off, len);
    std::uint64_t hibit = 0;
    if (len == 16)
      hibit = std::uint64_t{1} << 40;  // 2^128 lands in limb 2 at bit 40
    else
      block[len] = 1;
    const std::uint64_t m0 = load_le64(block), m1 = load_le64(block + 8);
    h0 += m0 & m44;
    h1 += ((m0 >> 44) | (m1 << 20)) & m44;
    h2 += ((m1 >> 24) & m42) | hibit;

    const u128 d0 = u128(h0) * r0 + u128(h1) * s2 + u128(h2) * s1;
    u128 d1 = u128(h0) * r1 + u128(h1) * r0 + u128(h2) * s2;
    u128 d2 = u128(h0) * r2 + u128(h1) * r1 + u128(h2) * r0;
    if (mults) ++*mults;

    std::uint64_t c = static_cast<std::uint64_t>(d0 >> 44);
    h0 = static_cast<std::uint64_t>(d0) & m44;
    d1 += c;
    c = static_cast<std::uint64_t>(d1 >> 44);
    h1 = static_cast<std::uint64_t>(d1) & m44;
    d2 += c;
    c = static_cast<std::uint64_t>(d2 >> 42);
    h2 = static_cast<std::uint64_t>(d2) & m42;
    h0 += c * 5;
    c = h0 >> 44;
    h0 &= m44;
    h1 += c;
  }

  // full carry, then subtract p if h >= p
  std::uint64_t c = h1 >> 44;
  h1 &= m44;
  h2 += c;
  c = h2 >> 42;
  h2 &= m42;
  h0 += c * 5;
  c = h0 >> 44;
  h0 &= m44;
  h1 += c;
  c = h1 >> 44;
  h1 &= m44;
  h2 += c;
  c = h2 >> 42;
  h2 &= m42;
  h0 += c * 5;
  c = h0 >> 44;
  h0 &= m44;
  h1 += c;

  std::uint64_t g0 = h0 + 5;
  c = g0 >> 44;
  g0 &= m44;
  std::uint64_t g1 = h1 + c;
  c = g1 >> 44;
  g1 &= m44;
  const std::uint64_t g2 = h2 + c - (std::uint64_t{1} << 42);
  const std::uint64_t keep_g = (g2 >> 63) - 1;  // all ones when h >= p
  h0 = (h0 & ~keep_g) | (g0 & keep_g);
  h1 = (h1 & ~keep_g) | (g1 & keep_g);
  h2 = (h2 & ~keep_g) | (g2 & keep_g);

  U130 out;
  out.w[0] = h0 | (h1 << 44);
  out.w[1] = (h1 >> 20) | (h2 << 24);
  out.w[2] = h2 >> 40;
  return out;
}

inline Key128 xor128(const Key128& a, const Key128& b) {
  Key128 o;
  for (std::size_t i = 0; i < 16; ++i) o[i] = a[i] ^ b[i];
  return o;
}

/// Compares every byte regardless of where the first difference is.
inline bool tags_equal(const Key128& a, const Key128& b) {
  volatile std::uint8_t acc = 0;
  for (std::size_t i = 0; i < 16; ++i) acc = acc | static_cast<std::uint8_t>(a[i] ^ b[i]);
  return acc == 0;
}

inline BitBlock to_bits(const Key128& k) { return BitBlock::from_bytes(k, 128); }

inline Key128 from_bits(const BitBlock& b) {
  require(b.size() == 128, ErrorKind::size, "expected 128 bits");
  Key128 k{};
  const auto bytes = b.to_bytes();
  std::copy(bytes.begin(), bytes.end(), k.begin());
  return k;
}

/// k1_new = T_r * k2 over GF(2) with T_r[i][j] = trng_bits[i - j + N - 1]
/// (N = L = 128), before clamping.
inline Key128 refresh_k1(const Key128& k2, const BitBlock& trng_bits) {
  constexpr std::size_t N = 128, L = 128;
  require(trng_bits.size() == N + L - 1, ErrorKind::size, "refresh_k1 needs N + L - 1 = 255 seed bits");
  const BitBlock x = to_bits(k2);
  // Row i reads the seed backwards from i + N - 1 down to i; reverse once so
  // every row is a contiguous slice.
  BitBlock rev(N + L - 1);
  for (std::size_t k = 0; k < rev.size(); ++k) rev.set(k, trng_bits.get(rev.size() - 1 - k));
  BitBlock out(L);
  for (std::size_t i = 0; i < L; ++i) out.set(i, dot(rev.slice(L - 1 - i, N), x));
  return from_bits(out);
}

// ---------------------------------------------------------------------------
// Keys

struct KeyId {
  std::uint32_t epoch = 0;
  std::uint32_t index = 0;
  friend bool operator==(const KeyId&, const KeyId&) = default;
};

struct Tag128 {
  Key128 tag{};
  KeyId key_id;
};

/// One-time keys with a single consumption cursor. Every key is handed out at
/// most once; `used()` is the audit trail.
class KeyPool {
 public:
  KeyPool() = default;
  explicit KeyPool(std::vector<Key128> keys) : keys_(std::move(keys)) {}

  static KeyPool from_bits(const BitBlock& material) {
    std::vector<Key128> keys(material.size() / 128);
    for (std::size_t i = 0; i < keys.size(); ++i) keys[i] = auth::from_bits(material.slice(128 * i, 128));
    return KeyPool(std::move(keys));
  }

  std::size_t remaining() const noexcept { return keys_.size() - cursor_; }
  std::size_t cursor() const noexcept { return cursor_; }
  const std::vector<std::uint32_t>& used() const noexcept { return used_; }

  std::pair<std::uint32_t, Key128> take() {
    if (cursor_ >= keys_.size()) fail(ErrorKind::key_exhaustion, "one-time key pool exhausted");
    const auto i = static_cast<std::uint32_t>(cursor_++);
    used_.push_back(i);
    return {i, keys_[i]};
  }

 private:
  std::vector<Key128> keys_;
  std::size_t cursor_ = 0;
  std::vector<std::uint32_t> used_;
};

/// k1 and the pool of one-time k2 for one direction of the channel. With the
/// countermeasure on, every message derives a fresh k1 from its own k2 and a
/// per-epoch Toeplitz seed (both ends regenerate the seed from trng_seed).
struct MacKeyPair {
  Key128 k1{};
  KeyPool k2_pool;
  bool countermeasure = true;
  std::uint64_t trng_seed = 0;
  std::uint32_t epoch = 0;

  BitBlock toeplitz_seed(std::uint32_t ep) const { return deterministic_rng(derive_seed(trng_seed, ep), 255); }
};

/// tag = (poly_hash(m, k1) mod 2^128) xor k2. Consumes one k2.
inline Tag128 mac(std::span<const std::uint8_t> message, MacKeyPair& keys) {
  auto [index, k2] = keys.k2_pool.take();
  Key128 k1 = keys.k1;
  if (keys.countermeasure) {
    ++keys.epoch;
    k1 = clamp(refresh_k1(k2, keys.toeplitz_seed(keys.epoch)));
  }
  return {xor128(low128(poly_hash(message, k1)), k2), {keys.epoch, index}};
}

/// Plain one-key tag used by verification: r || s split of a 256-bit key.
inline Key128 mac_rs(std::span<const std::uint8_t> message, const Key128& r, const Key128& s) {
  return xor128(low128(poly_hash(message, r)), s);
}

// ---------------------------------------------------------------------------
// Framing: "QKDC", session u64, type u8, epoch u32, index u32, length u32,
// payload, tag[16]. The tag covers everything before it.

enum class MsgType : std::uint8_t {
  sift_announce = 1,
  sift_reply = 2,
  disclosure = 3,
  syndrome = 4,
  block_flags = 5,
  verify_tags = 6,
  verify_reply = 7,
  pa_seed = 8,
  app = 9,
};

struct Frame {
  std::uint64_t session = 0;
  MsgType type = MsgType::app;
  KeyId key_id;
  std::vector<std::uint8_t> payload;
  Key128 tag{};
};

inline std::vector<std::uint8_t> frame_header(std::uint64_t session, MsgType type, KeyId id, std::size_t len) {
  require(len <= 0xffffffffu, ErrorKind::size, "frame payload too large");
  std::vector<std::uint8_t> h{'Q', 'K', 'D', 'C'};
  for (int i = 0; i < 8; ++i) h.push_back(static_cast<std::uint8_t>(session >> (8 * i)));
  h.push_back(static_cast<std::uint8_t>(type));
  for (auto v : {id.epoch, id.index, static_cast<std::uint32_t>(len)})
    for (int i = 0; i < 4; ++i) h.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  return h;
}

inline constexpr std::size_t kFrameHeader = 4 + 8 + 1 + 4 + 4 + 4;

inline Frame parse_frame(std::span<const std::uint8_t> bytes) {
  require(bytes.size() >= kFrameHeader + 16 && std::memcmp(bytes.data(), "QKDC", 4) == 0, ErrorKind::authentication,
          "malformed frame");
  auto le = [&](std::size_t at, int n) {
    std::uint64_t v = 0;
    for (int i = n - 1; i >= 0; --i) v = (v << 8) | bytes[at + static_cast<std::size_t>(i)];
    return v;
  };
  Frame f;
  f.session = le(4, 8);
  f.type = static_cast<MsgType>(bytes[12]);
  f.key_id = {static_cast<std::uint32_t>(le(13, 4)), static_cast<std::uint32_t>(le(17, 4))};
  const auto len = static_cast<std::size_t>(le(21, 4));
  require(bytes.size() == kFrameHeader + len + 16, ErrorKind::authentication, "frame length mismatch");
  f.payload.assign(bytes.begin() + kFrameHeader, bytes.begin() + static_cast<std::ptrdiff_t>(kFrameHeader + len));
  std::copy(bytes.end() - 16, bytes.end(), f.tag.begin());
  return f;
}

/// One party's view of an authenticated link: outbound keys and a mirror of
/// the peer's outbound keys. Cursors advance in lockstep on both ends.
class AuthEndpoint {
 public:
  AuthEndpoint(std::uint64_t session, MacKeyPair send_keys, MacKeyPair recv_keys)
      : session_(session), send_(std::move(send_keys)), recv_(std::move(recv_keys)) {}

  std::vector<std::uint8_t> seal(MsgType type, std::span<const std::uint8_t> payload) {
    // key id is known before the tag: peek at what mac() will consume
    const KeyId id{send_.countermeasure ? send_.epoch + 1 : send_.epoch,
                   static_cast<std::uint32_t>(send_.k2_pool.cursor())};
    auto bytes = frame_header(session_, type, id, payload.size());
    bytes.insert(bytes.end(), payload.begin(), payload.end());
    const auto t = mac(bytes, send_);
    bytes.insert(bytes.end(), t.tag.begin(), t.tag.end());
    ++sent_;
    return bytes;
  }

  /// Verifies and returns the frame; any mismatch raises an authentication error.
  Frame open(std::span<const std::uint8_t> bytes) {
    Frame f = parse_frame(bytes);
    const KeyId expect{recv_.countermeasure ? recv_.epoch + 1 : recv_.epoch,
                       static_cast<std::uint32_t>(recv_.k2_pool.cursor())};
    const auto t = mac(bytes.first(bytes.size() - 16), recv_);  // consumes the mirrored k2
    const bool ok = tags_equal(t.tag, f.tag) && f.session == session_ && f.key_id == expect;
    if (!ok) fail(ErrorKind::authentication, "tag verification failed");
    ++received_;
    return f;
  }

  const MacKeyPair& send_keys() const noexcept { return send_; }
  const MacKeyPair& recv_keys() const noexcept { return recv_; }
  std::size_t sent() const noexcept { return sent_; }
  std::size_t received() const noexcept { return received_; }

 private:
  std::uint64_t session_;
  MacKeyPair send_;
  MacKeyPair recv_;
  std::size_t sent_ = 0;
  std::size_t received_ = 0;
};

// ---------------------------------------------------------------------------
// Transports

class Transport {
 public:
  virtual ~Transport() = default;
  virtual void send(std::vector<std::uint8_t> frame) = 0;
  virtual std::vector<std::uint8_t> recv() = 0;
};

/// Unbounded in-memory mailbox shared by the two ends of a link.
class Mailbox {
 public:
  void put(std::vector<std::uint8_t> m) {
    {
      std::lock_guard lk(mu_);
      q_.push_back(std::move(m));
    }
    cv_.notify_one();
  }
  std::vector<std::uint8_t> get() {
    std::unique_lock lk(mu_);
    cv_.wait(lk, [&] { return !q_.empty(); });
    auto m = std::move(q_.front());
    q_.pop_front();
    return m;
  }
  std::size_t size() const {
    std::lock_guard lk(mu_);
    return q_.size();
  }

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::vector<std::uint8_t>> q_;
};

class InProcessTransport : public Transport {
 public:
  InProcessTransport(std::shared_ptr<Mailbox> out, std::shared_ptr<Mailbox> in) : out_(std::move(out)), in_(std::move(in)) {}
  void send(std::vector<std::uint8_t> frame) override { out_->put(std::move(frame)); }
  std::vector<std::uint8_t> recv() override { return in_->get(); }

 private:
  std::shared_ptr<Mailbox> out_, in_;
};

inline std::pair<std::unique_ptr<Transport>, std::unique_ptr<Transport>> in_process_pair() {
  auto ab = std::make_shared<Mailbox>();
  auto ba = std::make_shared<Mailbox>();
  return {std::make_unique<InProcessTransport>(ab, ba), std::make_unique<InProcessTransport>(ba, ab)};
}

/// Endpoint plus transport.
class Channel {
 public:
  Channel(AuthEndpoint ep, std::unique_ptr<Transport> t) : ep_(std::move(ep)), t_(std::move(t)) {}

  void send(MsgType type, std::span<const std::uint8_t> payload) {
    bytes_sent_ += payload.size();
    t_->send(ep_.seal(type, payload));
  }

  std::vector<std::uint8_t> recv(MsgType expect) {
    auto f = ep_.open(t_->recv());
    require(f.type == expect, ErrorKind::session, "unexpected message type");
    return std::move(f.payload);
  }

  AuthEndpoint& endpoint() noexcept { return ep_; }
  std::size_t payload_bytes_sent() const noexcept { return bytes_sent_; }

 private:
  AuthEndpoint ep_;
  std::unique_ptr<Transport> t_;
  std::size_t bytes_sent_ = 0;
};

/// Both directions' key material from shared secret bits: k1 (128) then
/// `pool` one-time keys, per direction.
struct LinkKeys {
  MacKeyPair a_to_b;
  MacKeyPair b_to_a;
};

inline LinkKeys make_link_keys(const BitBlock& secret, std::size_t pool, bool countermeasure, std::uint64_t trng_seed) {
  const std::size_t per_dir = 128 * (1 + pool);
  require(secret.size() >= 2 * per_dir, ErrorKind::key_exhaustion, "not enough pre-shared bits for the link");
  LinkKeys lk;
  for (int d = 0; d < 2; ++d) {
    auto& k = d == 0 ? lk.a_to_b : lk.b_to_a;
    const std::size_t base = d * per_dir;
    k.k1 = clamp(from_bits(secret.slice(base, 128)));
    k.k2_pool = KeyPool::from_bits(secret.slice(base + 128, 128 * pool));
    k.countermeasure = countermeasure;
    k.trng_seed = derive_seed(trng_seed, static_cast<std::uint64_t>(d));
  }
  return lk;
}

inline std::pair<Channel, Channel> make_channel_pair(std::uint64_t session, const LinkKeys& keys,
                                                     std::unique_ptr<Transport> ta, std::unique_ptr<Transport> tb) {
  return {Channel(AuthEndpoint(session, keys.a_to_b, keys.b_to_a), std::move(ta)),
          Channel(AuthEndpoint(session, keys.b_to_a, keys.a_to_b), std::move(tb))};
}

}  // namespace qkd::auth
