#pragma once

// Distilled-key files, the append/consume key store with its usage ledger,
// and the encrypted-payload container.

#include <qkd/aes.hpp>
#include <qkd/bits.hpp>
#include <qkd/chansim.hpp>
#include <qkd/errors.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace qkd {

// ---------------------------------------------------------------------------
// Key file: "QKDK", u16 version, u64 session id, u64 created (unix seconds),
// u64 config fingerprint, u32 metadata length + metadata (JSON text),
// u64 bit count, packed bits.

struct KeyFile {
  std::uint64_t session_id = 0;
  std::uint64_t created = 0;
  std::uint64_t fingerprint = 0;
  std::string metadata;
  BitBlock bits;
};

inline constexpr std::uint16_t kKeyFileVersion = 1;

inline void write_key_file(const std::string& path, const KeyFile& k) {
  using detail::put_le;
  std::ofstream f(path, std::ios::binary);
  require(static_cast<bool>(f), ErrorKind::io, "cannot write " + path);
  f.write("QKDK", 4);
  put_le<std::uint16_t>(f, kKeyFileVersion);
  put_le<std::uint64_t>(f, k.session_id);
  put_le<std::uint64_t>(f, k.created);
  put_le<std::uint64_t>(f, k.fingerprint);
  put_le<std::uint32_t>(f, static_cast<std::uint32_t>(k.metadata.size()));
  f.write(k.metadata.data(), static_cast<std::streamsize>(k.metadata.size()));
  put_le<std::uint64_t>(f, k.bits.size());
  const auto b = k.bits.to_bytes();
  f.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  require(static_cast<bool>(f), ErrorKind::io, "write failed: " + path);
}

inline KeyFile read_key_file(const std::string& path) {
  using detail::get_le;
  std::ifstream f(path, std::ios::binary);
  require(static_cast<bool>(f), ErrorKind::io, "cannot open " + path);
  detail::expect_magic(f, "QKDK");
  require(get_le<std::uint16_t>(f) == kKeyFileVersion, ErrorKind::io, "unsupported key file version");
  KeyFile k;
  k.session_id = get_le<std::uint64_t>(f);
  k.created = get_le<std::uint64_t>(f);
  k.fingerprint = get_le<std::uint64_t>(f);
  k.metadata.resize(get_le<std::uint32_t>(f));
  require(static_cast<bool>(f.read(k.metadata.data(), static_cast<std::streamsize>(k.metadata.size()))), ErrorKind::io,
          "truncated key file");
  const auto nbits = get_le<std::uint64_t>(f);
  std::vector<std::uint8_t> bytes((nbits + 7) / 8);
  require(static_cast<bool>(f.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()))),
          ErrorKind::io, "truncated key file");
  k.bits = BitBlock::from_bytes(bytes, nbits);
  return k;
}

// ---------------------------------------------------------------------------
// Key store: FIFO over appended key material. Every operation is recorded in
// the ledger; replaying the ledger reproduces the balance.

struct LedgerEntry {
  enum class Op { append, consume } op;
  std::uint64_t offset = 0;  // position in the stream of all appended bits
  std::uint64_t length = 0;
  std::string purpose;
};

class KeyStore {
 public:
  std::uint64_t append(const BitBlock& bits, std::string purpose = "append") {
    const std::uint64_t off = total_;
    pool_.append(bits);
    total_ += bits.size();
    ledger_.push_back({LedgerEntry::Op::append, off, bits.size(), std::move(purpose)});
    return off;
  }

  std::uint64_t available() const noexcept { return total_ - consumed_; }
  std::uint64_t consumed() const noexcept { return consumed_; }
  std::uint64_t total() const noexcept { return total_; }
  const std::vector<LedgerEntry>& ledger() const noexcept { return ledger_; }

  /// Oldest unused bits first.
  BitBlock consume(std::uint64_t n, std::string purpose) {
    if (n > available())
      fail(ErrorKind::key_exhaustion, "requested " + std::to_string(n) + " key bits, " + std::to_string(available()) +
                                          " available");
    BitBlock out = pool_.slice(static_cast<std::size_t>(consumed_ - base_), static_cast<std::size_t>(n));
    ledger_.push_back({LedgerEntry::Op::consume, consumed_, n, std::move(purpose)});
    consumed_ += n;
    return out;
  }

  /// Bits at an absolute stream position, without consuming (decryption side).
  BitBlock peek(std::uint64_t offset, std::uint64_t n) const {
    require(offset >= base_ && offset + n <= total_, ErrorKind::key_exhaustion, "key range not held");
    return pool_.slice(static_cast<std::size_t>(offset - base_), static_cast<std::size_t>(n));
  }

  /// Balance reconstructed from the ledger alone.
  static std::uint64_t replay_balance(const std::vector<LedgerEntry>& ledger) {
    std::uint64_t in = 0, out = 0;
    for (const auto& e : ledger) (e.op == LedgerEntry::Op::append ? in : out) += e.length;
    return in - out;
  }

  // Text ledger: one "append|consume offset length purpose" line per entry.
  void save_ledger(const std::string& path) const {
    std::ofstream f(path);
    require(static_cast<bool>(f), ErrorKind::io, "cannot write " + path);
    for (const auto& e : ledger_)
      f << (e.op == LedgerEntry::Op::append ? "append" : "consume") << ' ' << e.offset << ' ' << e.length << ' '
        << e.purpose << '\n';
  }

  static std::vector<LedgerEntry> load_ledger(const std::string& path) {
    std::vector<LedgerEntry> out;
    std::ifstream f(path);
    if (!f) return out;
    std::string line;
    while (std::getline(f, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::string op;
      LedgerEntry e{LedgerEntry::Op::append, 0, 0, {}};
      require(static_cast<bool>(ls >> op >> e.offset >> e.length), ErrorKind::io, "bad ledger line: " + line);
      require(op == "append" || op == "consume", ErrorKind::io, "bad ledger op: " + op);
      e.op = op == "append" ? LedgerEntry::Op::append : LedgerEntry::Op::consume;
      std::getline(ls >> std::ws, e.purpose);
      out.push_back(std::move(e));
    }
    return out;
  }

  /// Key file plus sidecar ledger (<path>.ledger); consumption recorded there
  /// survives across runs.
  static KeyStore open(const std::string& key_path) {
    const auto kf = read_key_file(key_path);
    KeyStore ks;
    ks.append(kf.bits, "key file session " + std::to_string(kf.session_id));
    const auto led = load_ledger(key_path + ".ledger");
    for (const auto& e : led)
      if (e.op == LedgerEntry::Op::consume) {
        require(e.offset == ks.consumed_, ErrorKind::io, "ledger is not a contiguous FIFO record");
        ks.consume(e.length, e.purpose);
      }
    return ks;
  }

 private:
  BitBlock pool_;
  std::uint64_t base_ = 0;  // stream position of pool_[0]
  std::uint64_t total_ = 0;
  std::uint64_t consumed_ = 0;
  std::vector<LedgerEntry> ledger_;
};

// ---------------------------------------------------------------------------
// Encrypted container: "QKDE", nonce (96 bits), u64 length, data. The nonce
// carries the key-stream offset of the 128 key bits used (u64) and a u32
// payload counter, so it is unique as long as key bits are never reused.

struct Ciphertext {
  aes::Nonce nonce{};
  std::vector<std::uint8_t> data;
};

inline aes::Nonce make_nonce(std::uint64_t key_offset, std::uint32_t counter) {
  aes::Nonce n{};
  for (int i = 0; i < 8; ++i) n[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(key_offset >> (8 * i));
  for (int i = 0; i < 4; ++i) n[8 + static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(counter >> (8 * i));
  return n;
}

inline std::uint64_t nonce_key_offset(const aes::Nonce& n) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | n[static_cast<std::size_t>(i)];
  return v;
}

inline aes::Key key_from_bits(const BitBlock& b) {
  require(b.size() == 128, ErrorKind::size, "AES key needs 128 bits");
  aes::Key k{};
  const auto bytes = b.to_bytes();
  std::copy(bytes.begin(), bytes.end(), k.begin());
  return k;
}

/// Consumes 128 fresh key bits and encrypts in counter mode.
inline Ciphertext encrypt_payload(std::vector<std::uint8_t> data, KeyStore& store, bool constant_time = false) {
  const std::uint64_t off = store.consumed();
  const auto key = key_from_bits(store.consume(128, "aes-128 payload key"));
  Ciphertext c;
  c.nonce = make_nonce(off, 0);
  c.data = std::move(data);
  aes::ctr_xor(c.data, aes::expand_key(key), c.nonce, constant_time);
  return c;
}

inline std::vector<std::uint8_t> decrypt_payload(const Ciphertext& c, const KeyStore& store, bool constant_time = false) {
  const auto key = key_from_bits(store.peek(nonce_key_offset(c.nonce), 128));
  auto out = c.data;
  aes::ctr_xor(out, aes::expand_key(key), c.nonce, constant_time);
  return out;
}

inline void write_container(std::ostream& os, const Ciphertext& c) {
  os.write("QKDE", 4);
  os.write(reinterpret_cast<const char*>(c.nonce.data()), 12);
  detail::put_le<std::uint64_t>(os, c.data.size());
  os.write(reinterpret_cast<const char*>(c.data.data()), static_cast<std::streamsize>(c.data.size()));
}

inline Ciphertext read_container(std::istream& is) {
  detail::expect_magic(is, "QKDE");
  Ciphertext c;
  require(static_cast<bool>(is.read(reinterpret_cast<char*>(c.nonce.data()), 12)), ErrorKind::io, "truncated container");
  c.data.resize(detail::get_le<std::uint64_t>(is));
  require(static_cast<bool>(is.read(reinterpret_cast<char*>(c.data.data()), static_cast<std::streamsize>(c.data.size()))),
          ErrorKind::io, "truncated container");
  return c;
}

}  // namespace qkd
