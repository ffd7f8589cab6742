#pragma once

// Post-correction check: 16 chunks, each XOR-folded to 128 bits and tagged
// with the polynomial MAC; chunks whose tags disagree are discarded.

#include <qkd/auth.hpp>
#include <qkd/bits.hpp>
#include <qkd/errors.hpp>

#include <array>
#include <cstdint>
#include <vector>

namespace qkd::verify {

inline constexpr std::size_t kChunks = 16;
inline constexpr std::size_t kDigestBits = 128;

/// Halve-and-XOR until 128 bits remain. Inputs that are not 128 * 2^j long
/// are zero-padded up to the next such length first.
inline BitBlock xor_reduce(BitBlock chunk) {
  require(!chunk.empty(), ErrorKind::size, "xor_reduce: empty chunk");
  std::size_t len = kDigestBits;
  while (len < chunk.size()) len *= 2;
  chunk.resize(len);
  while (chunk.size() > kDigestBits) {
    const std::size_t half = chunk.size() / 2;
    chunk = chunk.slice(0, half) ^ chunk.slice(half, half);
  }
  return chunk;
}

/// Chunk boundaries: ceil(N/16) bits each, the last one possibly shorter.
inline std::size_t chunk_size(std::size_t n) { return (n + kChunks - 1) / kChunks; }

inline std::vector<BitBlock> split_chunks(const BitBlock& key) {
  require(key.size() >= kChunks * kDigestBits, ErrorKind::size, "verify: key shorter than 16 x 128 bits");
  const std::size_t cs = chunk_size(key.size());
  std::vector<BitBlock> out;
  for (std::size_t i = 0; i < kChunks; ++i) {
    const std::size_t start = std::min(key.size(), i * cs);
    const std::size_t len = std::min(cs, key.size() - start);
    out.push_back(key.slice(start, len));
  }
  return out;
}

struct VerifyKey {
  auth::Key128 r{};
  auth::Key128 s{};

  static VerifyKey from_bits(const BitBlock& k256) {
    require(k256.size() == 256, ErrorKind::size, "verification key must be 256 bits");
    return {auth::from_bits(k256.slice(0, 128)), auth::from_bits(k256.slice(128, 128))};
  }
};

using Tags = std::array<auth::Key128, kChunks>;

/// Tag i = MAC_{r,s}(i || block_index || padded length || digest_i).
inline Tags chunk_tags(const BitBlock& key, const VerifyKey& vk, std::uint32_t block_index) {
  const auto chunks = split_chunks(key);
  Tags tags;
  for (std::size_t i = 0; i < kChunks; ++i) {
    std::vector<std::uint8_t> msg;
    msg.push_back(static_cast<std::uint8_t>(i));
    for (int k = 0; k < 4; ++k) msg.push_back(static_cast<std::uint8_t>(block_index >> (8 * k)));
    const auto n = static_cast<std::uint64_t>(key.size());
    for (int k = 0; k < 8; ++k) msg.push_back(static_cast<std::uint8_t>(n >> (8 * k)));
    const auto d = xor_reduce(chunks[i]).to_bytes();
    msg.insert(msg.end(), d.begin(), d.end());
    tags[i] = auth::mac_rs(msg, vk.r, vk.s);
  }
  return tags;
}

struct VerifyReport {
  std::array<bool, kChunks> per_chunk{};
  std::size_t kept_bits = 0;
  std::vector<std::size_t> discarded_chunks;
  std::uint16_t mask = 0;  // bit i set when chunk i passed
};

inline VerifyReport compare_tags(const Tags& alice, const Tags& bob, std::size_t n) {
  VerifyReport rep;
  const auto cs = chunk_size(n);
  for (std::size_t i = 0; i < kChunks; ++i) {
    rep.per_chunk[i] = auth::tags_equal(alice[i], bob[i]);
    const std::size_t start = std::min(n, i * cs);
    const std::size_t len = std::min(cs, n - start);
    if (rep.per_chunk[i]) {
      rep.kept_bits += len;
      rep.mask |= static_cast<std::uint16_t>(1u << i);
    } else {
      rep.discarded_chunks.push_back(i);
    }
  }
  return rep;
}

/// Concatenation of the chunks whose bit is set in `mask`.
inline BitBlock keep_passing(const BitBlock& key, std::uint16_t mask) {
  const auto chunks = split_chunks(key);
  BitBlock out(0, key.index());
  for (std::size_t i = 0; i < kChunks; ++i)
    if (mask & (1u << i)) out.append(chunks[i]);
  return out;
}

// Wire payloads: block_index u32 + 16 x 128-bit tags; reply u16 mask.
inline std::vector<std::uint8_t> tags_message(std::uint32_t block_index, const Tags& tags) {
  std::vector<std::uint8_t> out;
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(block_index >> (8 * k)));
  for (const auto& t : tags) out.insert(out.end(), t.begin(), t.end());
  return out;
}

inline std::pair<std::uint32_t, Tags> parse_tags_message(std::span<const std::uint8_t> msg) {
  require(msg.size() == 4 + 16 * kChunks, ErrorKind::io, "bad verification message");
  std::uint32_t bi = 0;
  for (int k = 0; k < 4; ++k) bi |= static_cast<std::uint32_t>(msg[static_cast<std::size_t>(k)]) << (8 * k);
  Tags tags;
  for (std::size_t i = 0; i < kChunks; ++i) std::copy_n(msg.begin() + 4 + 16 * i, 16, tags[i].begin());
  return {bi, tags};
}

/// Both halves over an authenticated link: Alice sends her tags, Bob compares
/// and replies with the pass mask. Returns Bob's report; each side keeps the
/// passing chunks of its own key.
inline VerifyReport verify_key(const BitBlock& alice_key, const BitBlock& bob_key, const VerifyKey& vk,
                               std::uint32_t block_index, auth::Channel& alice, auth::Channel& bob) {
  require(alice_key.size() == bob_key.size(), ErrorKind::size, "verify: key lengths differ");
  alice.send(auth::MsgType::verify_tags, tags_message(block_index, chunk_tags(alice_key, vk, block_index)));
  const auto [bi, atags] = parse_tags_message(bob.recv(auth::MsgType::verify_tags));
  require(bi == block_index, ErrorKind::session, "verification for the wrong block");
  auto rep = compare_tags(atags, chunk_tags(bob_key, vk, block_index), bob_key.size());
  const std::uint8_t reply[2] = {static_cast<std::uint8_t>(rep.mask), static_cast<std::uint8_t>(rep.mask >> 8)};
  bob.send(auth::MsgType::verify_reply, reply);
  const auto got = alice.recv(auth::MsgType::verify_reply);
  require(got.size() == 2 && (got[0] | (got[1] << 8)) == rep.mask, ErrorKind::session, "verify reply mismatch");
  if (rep.kept_bits == 0) fail(ErrorKind::session, "verification: every chunk failed");
  return rep;
}

/// Same comparison without a channel (tests, local checks).
inline VerifyReport verify_key(const BitBlock& alice_key, const BitBlock& bob_key, const VerifyKey& vk,
                               std::uint32_t block_index = 0) {
  require(alice_key.size() == bob_key.size(), ErrorKind::size, "verify: key lengths differ");
  return compare_tags(chunk_tags(alice_key, vk, block_index), chunk_tags(bob_key, vk, block_index), bob_key.size());
}

}  // namespace qkd::verify
