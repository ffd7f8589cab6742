#pragma once

// AES-128 with 32-bit T-tables, a plain S-box round function kept as the
// reference (and constant-time fallback), and counter mode.

#include <qkd/errors.hpp>

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

namespace qkd::aes {

using Block = std::array<std::uint8_t, 16>;
using Key = std::array<std::uint8_t, 16>;

namespace detail {

constexpr std::uint8_t xtime(std::uint8_t x) { return static_cast<std::uint8_t>((x << 1) ^ ((x & 0x80) ? 0x1b : 0)); }

constexpr std::uint8_t gmul(std::uint8_t a, std::uint8_t b) {
  std::uint8_t p = 0;
  for (int i = 0; i < 8; ++i) {
    if (b & 1) p ^= a;
    a = xtime(a);
    b >>= 1;
  }
  return p;
}

constexpr std::uint8_t rotl8(std::uint8_t x, int s) { return static_cast<std::uint8_t>((x << s) | (x >> (8 - s))); }

// S(x) = affine(x^-1) in GF(2^8) mod x^8 + x^4 + x^3 + x + 1.
constexpr std::array<std::uint8_t, 256> make_sbox() {
  std::array<std::uint8_t, 256> s{};
  for (int x = 0; x < 256; ++x) {
    std::uint8_t inv = 0;
    for (int y = 1; y < 256 && x; ++y)
      if (gmul(static_cast<std::uint8_t>(x), static_cast<std::uint8_t>(y)) == 1) {
        inv = static_cast<std::uint8_t>(y);
        break;
      }
    s[static_cast<std::size_t>(x)] = static_cast<std::uint8_t>(inv ^ rotl8(inv, 1) ^ rotl8(inv, 2) ^ rotl8(inv, 3) ^
                                                                rotl8(inv, 4) ^ 0x63);
  }
  return s;
}

constexpr std::array<std::uint8_t, 256> invert(const std::array<std::uint8_t, 256>& s) {
  std::array<std::uint8_t, 256> r{};
  for (int i = 0; i < 256; ++i) r[s[static_cast<std::size_t>(i)]] = static_cast<std::uint8_t>(i);
  return r;
}

inline constexpr auto kSbox = make_sbox();
inline constexpr auto kInvSbox = invert(kSbox);

constexpr std::uint32_t word(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d) {
  return (std::uint32_t{a} << 24) | (std::uint32_t{b} << 16) | (std::uint32_t{c} << 8) | d;
}

constexpr std::uint32_t rotr(std::uint32_t x, int s) { return std::rotr(x, s); }

// Te0[x] = (2s, s, s, 3s), Td0[x] = (e t, 9 t, d t, b t) with t = InvS(x);
// the other three tables are byte rotations.
constexpr std::array<std::array<std::uint32_t, 256>, 4> make_te() {
  std::array<std::array<std::uint32_t, 256>, 4> t{};
  for (int x = 0; x < 256; ++x) {
    const auto s = kSbox[static_cast<std::size_t>(x)];
    const std::uint32_t w = word(gmul(s, 2), s, s, gmul(s, 3));
    for (int k = 0; k < 4; ++k) t[static_cast<std::size_t>(k)][static_cast<std::size_t>(x)] = rotr(w, 8 * k);
  }
  return t;
}

constexpr std::array<std::array<std::uint32_t, 256>, 4> make_td() {
  std::array<std::array<std::uint32_t, 256>, 4> t{};
  for (int x = 0; x < 256; ++x) {
    const auto s = kInvSbox[static_cast<std::size_t>(x)];
    const std::uint32_t w = word(gmul(s, 14), gmul(s, 9), gmul(s, 13), gmul(s, 11));
    for (int k = 0; k < 4; ++k) t[static_cast<std::size_t>(k)][static_cast<std::size_t>(x)] = rotr(w, 8 * k);
  }
  return t;
}

inline constexpr auto kTe = make_te();
inline constexpr auto kTd = make_td();

inline std::uint32_t load_be32(const std::uint8_t* p) { return word(p[0], p[1], p[2], p[3]); }

inline void store_be32(std::uint8_t* p, std::uint32_t v) {
  p[0] = static_cast<std::uint8_t>(v >> 24);
  p[1] = static_cast<std::uint8_t>(v >> 16);
  p[2] = static_cast<std::uint8_t>(v >> 8);
  p[3] = static_cast<std::uint8_t>(v);
}

inline std::uint32_t sub_word(std::uint32_t w) {
  return word(kSbox[w >> 24], kSbox[(w >> 16) & 0xff], kSbox[(w >> 8) & 0xff], kSbox[w & 0xff]);
}

}  // namespace detail

inline const std::array<std::uint8_t, 256>& sbox() { return detail::kSbox; }

/// 11 round keys as 44 big-endian words.
struct KeySchedule {
  std::array<std::uint32_t, 44> w{};

  Block round_key(std::size_t r) const {
    Block b;
    for (std::size_t k = 0; k < 4; ++k) detail::store_be32(b.data() + 4 * k, w[4 * r + k]);
    return b;
  }
  static constexpr std::size_t rounds() { return 11; }
};

inline KeySchedule expand_key(const Key& key) {
  KeySchedule ks;
  for (std::size_t i = 0; i < 4; ++i) ks.w[i] = detail::load_be32(key.data() + 4 * i);
  std::uint8_t rcon = 1;
  for (std::size_t i = 4; i < 44; ++i) {
    std::uint32_t t = ks.w[i - 1];
    if (i % 4 == 0) {
      t = detail::sub_word((t << 8) | (t >> 24)) ^ (std::uint32_t{rcon} << 24);
      rcon = detail::xtime(rcon);
    }
    ks.w[i] = ks.w[i - 4] ^ t;
  }
  return ks;
}

/// Decryption round keys for the equivalent inverse cipher: reversed order,
/// InvMixColumns applied to the middle nine.
struct DecryptSchedule {
  std::array<std::uint32_t, 44> w{};
};

inline DecryptSchedule decrypt_schedule(const KeySchedule& ks) {
  using namespace detail;
  DecryptSchedule d;
  for (std::size_t r = 0; r <= 10; ++r)
    for (std::size_t k = 0; k < 4; ++k) {
      const std::uint32_t v = ks.w[4 * (10 - r) + k];
      if (r == 0 || r == 10) {
        d.w[4 * r + k] = v;
      } else {
        d.w[4 * r + k] = kTd[0][kSbox[v >> 24]] ^ kTd[1][kSbox[(v >> 16) & 0xff]] ^ kTd[2][kSbox[(v >> 8) & 0xff]] ^
                         kTd[3][kSbox[v & 0xff]];
      }
    }
  return d;
}

inline Block encrypt_block(const Block& in, const KeySchedule& ks) {
  using namespace detail;
  std::uint32_t s0 = load_be32(in.data()) ^ ks.w[0], s1 = load_be32(in.data() + 4) ^ ks.w[1],
                s2 = load_be32(in.data() + 8) ^ ks.w[2], s3 = load_be32(in.data() + 12) ^ ks.w[3];
  for (std::size_t r = 1; r < 10; ++r) {
    const std::uint32_t t0 = kTe[0][s0 >> 24] ^ kTe[1][(s1 >> 16) & 0xff] ^ kTe[2][(s2 >> 8) & 0xff] ^ kTe[3][s3 & 0xff] ^ ks.w[4 * r];
    const std::uint32_t t1 = kTe[0][s1 >> 24] ^ kTe[1][(s2 >> 16) & 0xff] ^ kTe[2][(s3 >> 8) & 0xff] ^ kTe[3][s0 & 0xff] ^ ks.w[4 * r + 1];
    const std::uint32_t t2 = kTe[0][s2 >> 24] ^ kTe[1][(s3 >> 16) & 0xff] ^ kTe[2][(s0 >> 8) & 0xff] ^ kTe[3][s1 & 0xff] ^ ks.w[4 * r + 2];
    const std::uint32_t t3 = kTe[0][s3 >> 24] ^ kTe[1][(s0 >> 16) & 0xff] ^ kTe[2][(s1 >> 8) & 0xff] ^ kTe[3][s2 & 0xff] ^ ks.w[4 * r + 3];
    s0 = t0, s1 = t1, s2 = t2, s3 = t3;
  }
  auto last = [&](std::uint32_t a, std::uint32_t b, std::uint32_t c, std::uint32_t d, std::uint32_t k) {
    return word(kSbox[a >> 24], kSbox[(b >> 16) & 0xff], kSbox[(c >> 8) & 0xff], kSbox[d & 0xff]) ^ k;
  };
  Block out;
  store_be32(out.data(), last(s0, s1, s2, s3, ks.w[40]));
  store_be32(out.data() + 4, last(s1, s2, s3, s0, ks.w[41]));
  store_be32(out.data() + 8, last(s2, s3, s0, s1, ks.w[42]));
  store_be32(out.data() + 12, last(s3, s0, s1, s2, ks.w[43]));
  return out;
}

inline Block decrypt_block(const Block& in, const DecryptSchedule& dk) {
  using namespace detail;
  std::uint32_t s0 = load_be32(in.data()) ^ dk.w[0], s1 = load_be32(in.data() + 4) ^ dk.w[1],
                s2 = load_be32(in.data() + 8) ^ dk.w[2], s3 = load_be32(in.data() + 12) ^ dk.w[3];
  for (std::size_t r = 1; r < 10; ++r) {
    const std::uint32_t t0 = kTd[0][s0 >> 24] ^ kTd[1][(s3 >> 16) & 0xff] ^ kTd[2][(s2 >> 8) & 0xff] ^ kTd[3][s1 & 0xff] ^ dk.w[4 * r];
    const std::uint32_t t1 = kTd[0][s1 >> 24] ^ kTd[1][(s0 >> 16) & 0xff] ^ kTd[2][(s3 >> 8) & 0xff] ^ kTd[3][s2 & 0xff] ^ dk.w[4 * r + 1];
    const std::uint32_t t2 = kTd[0][s2 >> 24] ^ kTd[1][(s1 >> 16) & 0xff] ^ kTd[2][(s0 >> 8) & 0xff] ^ kTd[3][s3 & 0xff] ^ dk.w[4 * r + 2];
    const std::uint32_t t3 = kTd[0][s3 >> 24] ^ kTd[1][(s2 >> 16) & 0xff] ^ kTd[2][(s1 >> 8) & 0xff] ^ kTd[3][s0 & 0xff] ^ dk.w[4 * r + 3];
    s0 = t0, s1 = t1, s2 = t2, s3 = t3;
  }
  auto last = [&](std::uint32_t a, std::uint32_t b, std::uint32_t c, std::uint32_t d, std::uint32_t k) {
    return word(kInvSbox[a >> 24], kInvSbox[(b >> 16) & 0xff], kInvSbox[(c >> 8) & 0xff], kInvSbox[d & 0xff]) ^ k;
  };
  Block out;
  store_be32(out.data(), last(s0, s3, s2, s1, dk.w[40]));
  store_be32(out.data() + 4, last(s1, s0, s3, s2, dk.w[41]));
  store_be32(out.data() + 8, last(s2, s1, s0, s3, dk.w[42]));
  store_be32(out.data() + 12, last(s3, s2, s1, s0, dk.w[43]));
  return out;
}

inline Block decrypt_block(const Block& in, const KeySchedule& ks) { return decrypt_block(in, decrypt_schedule(ks)); }

// ---------------------------------------------------------------------------
// Byte-oriented round functions. With constant_time set, every S-box lookup
// scans the whole table so the access pattern does not depend on the data.

namespace reference {

inline std::uint8_t sub(std::uint8_t x, bool constant_time, const std::array<std::uint8_t, 256>& box) {
  if (!constant_time) return box[x];
  std::uint8_t r = 0;
  for (unsigned i = 0; i < 256; ++i) {
    const auto mask = static_cast<std::uint8_t>(-static_cast<int>(((i ^ x) - 1u) >> 8 & 1u));
    r |= box[i] & mask;
  }
  return r;
}

inline Block encrypt_block(const Block& in, const KeySchedule& ks, bool constant_time = false) {
  using detail::gmul;
  Block s = in;
  auto add_round_key = [&](std::size_t r) {
    const Block k = ks.round_key(r);
    for (std::size_t i = 0; i < 16; ++i) s[i] ^= k[i];
  };
  add_round_key(0);
  for (std::size_t r = 1; r <= 10; ++r) {
    for (auto& b : s) b = sub(b, constant_time, detail::kSbox);
    Block t;  // ShiftRows: column-major state, row i rotates left by i
    for (std::size_t c = 0; c < 4; ++c)
      for (std::size_t i = 0; i < 4; ++i) t[4 * c + i] = s[4 * ((c + i) % 4) + i];
    s = t;
    if (r != 10)
      for (std::size_t c = 0; c < 4; ++c) {
        const std::uint8_t a0 = s[4 * c], a1 = s[4 * c + 1], a2 = s[4 * c + 2], a3 = s[4 * c + 3];
        s[4 * c] = gmul(a0, 2) ^ gmul(a1, 3) ^ a2 ^ a3;
        s[4 * c + 1] = a0 ^ gmul(a1, 2) ^ gmul(a2, 3) ^ a3;
        s[4 * c + 2] = a0 ^ a1 ^ gmul(a2, 2) ^ gmul(a3, 3);
        s[4 * c + 3] = gmul(a0, 3) ^ a1 ^ a2 ^ gmul(a3, 2);
      }
    add_round_key(r);
  }
  return s;
}

inline Block decrypt_block(const Block& in, const KeySchedule& ks, bool constant_time = false) {
  using detail::gmul;
  Block s = in;
  auto add_round_key = [&](std::size_t r) {
    const Block k = ks.round_key(r);
    for (std::size_t i = 0; i < 16; ++i) s[i] ^= k[i];
  };
  add_round_key(10);
  for (std::size_t r = 10; r-- > 0;) {
    Block t;  // InvShiftRows
    for (std::size_t c = 0; c < 4; ++c)
      for (std::size_t i = 0; i < 4; ++i) t[4 * ((c + i) % 4) + i] = s[4 * c + i];
    s = t;
    for (auto& b : s) b = sub(b, constant_time, detail::kInvSbox);
    add_round_key(r);
    if (r != 0)
      for (std::size_t c = 0; c < 4; ++c) {
        const std::uint8_t a0 = s[4 * c], a1 = s[4 * c + 1], a2 = s[4 * c + 2], a3 = s[4 * c + 3];
        s[4 * c] = gmul(a0, 14) ^ gmul(a1, 11) ^ gmul(a2, 13) ^ gmul(a3, 9);
        s[4 * c + 1] = gmul(a0, 9) ^ gmul(a1, 14) ^ gmul(a2, 11) ^ gmul(a3, 13);
        s[4 * c + 2] = gmul(a0, 13) ^ gmul(a1, 9) ^ gmul(a2, 14) ^ gmul(a3, 11);
        s[4 * c + 3] = gmul(a0, 11) ^ gmul(a1, 13) ^ gmul(a2, 9) ^ gmul(a3, 14);
      }
  }
  return s;
}

}  // namespace reference

// ---------------------------------------------------------------------------
// Counter mode: counter block = nonce (96 bits) || big-endian u32 block counter.

using Nonce = std::array<std::uint8_t, 12>;

inline void ctr_xor(std::span<std::uint8_t> data, const KeySchedule& ks, const Nonce& nonce, bool constant_time = false) {
  require(data.size() / 16 < 0xffffffffu, ErrorKind::size, "payload too long for a 32-bit block counter");
  Block ctr{};
  std::copy(nonce.begin(), nonce.end(), ctr.begin());
  std::uint32_t counter = 0;
  for (std::size_t off = 0; off < data.size(); off += 16, ++counter) {
    detail::store_be32(ctr.data() + 12, counter);
    const Block ks_block = constant_time ? reference::encrypt_block(ctr, ks, true) : encrypt_block(ctr, ks);
    const std::size_t len = std::min<std::size_t>(16, data.size() - off);
    for (std::size_t i = 0; i < len; ++i) data[off + i] ^= ks_block[i];
  }
}

}  // namespace qkd::aes
