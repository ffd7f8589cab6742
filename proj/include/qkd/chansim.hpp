#pragma once

// Statistical stand-in for the optical link: correlated Alice/Bob records for
// BB84, BBM92 and COW through a lossy binary-symmetric channel.

#include <qkd/bits.hpp>
#include <qkd/errors.hpp>
#include <qkd/rng.hpp>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace qkd {

enum class ProtocolKind : std::uint8_t { BB84 = 0, BBM92 = 1, COW = 2 };

inline const char* to_string(ProtocolKind p) {
  switch (p) {
    case ProtocolKind::BB84: return "bb84";
    case ProtocolKind::BBM92: return "bbm92";
    case ProtocolKind::COW: return "cow";
  }
  return "?";
}

inline ProtocolKind parse_protocol(std::string_view s) {
  if (s == "bb84" || s == "BB84") return ProtocolKind::BB84;
  if (s == "bbm92" || s == "BBM92") return ProtocolKind::BBM92;
  if (s == "cow" || s == "COW") return ProtocolKind::COW;
  fail(ErrorKind::config, "unknown protocol '" + std::string(s) + "'");
}

/// One prepared state. For COW basis_or_decoy marks a decoy slot.
struct PrepRecord {
  std::uint64_t slot_index = 0;
  std::uint8_t key_bit = 0;
  std::uint8_t basis_or_decoy = 0;
  friend bool operator==(const PrepRecord&, const PrepRecord&) = default;
};

/// One click. meta_bit is the measurement basis (BB84/BBM92) or, for COW,
/// 0 = data line, 1 = monitoring line. COW timestamps count time bins (two
/// per slot); the other protocols count slots.
struct DetectionRecord {
  std::uint64_t timestamp = 0;
  std::uint8_t outcome_bit = 0;
  std::uint8_t meta_bit = 0;
  friend bool operator==(const DetectionRecord&, const DetectionRecord&) = default;
};

struct ChannelParams {
  double transmissivity = 0.7;
  double detector_efficiency = 1.0;
  double flip_probability = 0.0;
  std::int64_t clock_offset = 0;
  std::uint64_t seed = 1;
  double decoy_fraction = 0.1;    // COW
  double monitor_fraction = 0.1;  // COW: share of clicks routed to the monitoring line
  double dark_count = 0.0;        // per empty slot
  double sync_fraction = 1.0 / 64;  // slots reserved for timing markers

  void validate() const {
    require(transmissivity > 0.0 && transmissivity <= 1.0, ErrorKind::config, "transmissivity must be in (0,1]");
    require(detector_efficiency > 0.0 && detector_efficiency <= 1.0, ErrorKind::config,
            "detector_efficiency must be in (0,1]");
    require(flip_probability >= 0.0 && flip_probability < 0.5, ErrorKind::config,
            "flip_probability must be in [0,0.5)");
    require(decoy_fraction >= 0.0 && decoy_fraction < 1.0, ErrorKind::config, "decoy_fraction must be in [0,1)");
    require(monitor_fraction >= 0.0 && monitor_fraction < 1.0, ErrorKind::config,
            "monitor_fraction must be in [0,1)");
    require(dark_count >= 0.0 && dark_count < 1.0, ErrorKind::config, "dark_count must be in [0,1)");
    require(sync_fraction >= 0.0 && sync_fraction < 1.0, ErrorKind::config, "sync_fraction must be in [0,1)");
  }
};

/// Everything both sides recorded in one run. Sync markers are public timing
/// pulses interleaved with the quantum slots; they are what alignment uses.
struct TransmissionRecord {
  ProtocolKind protocol = ProtocolKind::BB84;
  std::uint64_t n_pulses = 0;
  std::vector<PrepRecord> alice;             // BB84, COW
  std::vector<DetectionRecord> alice_det;    // BBM92
  std::vector<DetectionRecord> bob;
  std::vector<std::uint64_t> sync_slots;     // Alice's frame
  std::vector<std::uint64_t> sync_times;     // Bob's clock

  friend bool operator==(const TransmissionRecord&, const TransmissionRecord&) = default;
};

/// Sync slots come from a public stream so either side can regenerate them.
inline std::vector<char> sync_mask(std::uint64_t n_pulses, const ChannelParams& p) {
  std::vector<char> mask(n_pulses, 0);
  if (p.sync_fraction <= 0.0) return mask;
  Rng rng(derive_seed(p.seed, "sync"));
  for (auto& m : mask) m = rng.bernoulli(p.sync_fraction);
  return mask;
}

inline TransmissionRecord simulate_session(ProtocolKind proto, std::uint64_t n_pulses, const ChannelParams& p) {
  require(n_pulses >= 1, ErrorKind::config, "n_pulses must be >= 1");
  p.validate();
  TransmissionRecord rec;
  rec.protocol = proto;
  rec.n_pulses = n_pulses;

  const auto sync = sync_mask(n_pulses, p);
  const std::uint64_t tick = proto == ProtocolKind::COW ? 2 : 1;  // timestamp units per slot
  const auto shifted = [&](std::uint64_t t) -> std::uint64_t {
    const auto v = static_cast<std::int64_t>(t) + p.clock_offset;
    return static_cast<std::uint64_t>(v);
  };
  require(p.clock_offset >= 0, ErrorKind::config, "clock_offset must be >= 0 (channel delay)");

  Rng alice(derive_seed(p.seed, "alice"));
  Rng chan(derive_seed(p.seed, "channel"));
  Rng bob(derive_seed(p.seed, "bob"));
  Rng syncch(derive_seed(p.seed, "sync-channel"));
  const double p_click = p.transmissivity * p.detector_efficiency;

  for (std::uint64_t s = 0; s < n_pulses; ++s) {
    if (sync[s]) {
      rec.sync_slots.push_back(s * tick);
      // Markers are bright: subject to channel loss but not detector efficiency.
      if (syncch.bernoulli(p.transmissivity)) rec.sync_times.push_back(shifted(s * tick));
      continue;
    }
    switch (proto) {
      case ProtocolKind::BB84: {
        const auto key = static_cast<std::uint8_t>(alice.bit());
        const auto basis = static_cast<std::uint8_t>(alice.bit());
        rec.alice.push_back({s, key, basis});
        const bool photon = chan.bernoulli(p_click);
        const bool dark = (p.dark_count > 0 && chan.bernoulli(p.dark_count)) && !photon;
        const bool flip = chan.bernoulli(p.flip_probability);
        if (!photon && !dark) break;
        const auto bb = static_cast<std::uint8_t>(bob.bit());
        const auto rnd = static_cast<std::uint8_t>(bob.bit());
        const std::uint8_t out = (photon && bb == basis) ? static_cast<std::uint8_t>(key ^ flip) : rnd;
        rec.bob.push_back({shifted(s), out, bb});
        break;
      }
      case ProtocolKind::BBM92: {
        // One pair per slot; Alice's half sees the detector only, Bob's half the channel too.
        const bool a_click = alice.bernoulli(p.detector_efficiency);
        const auto ab = static_cast<std::uint8_t>(alice.bit());
        const auto abit = static_cast<std::uint8_t>(alice.bit());
        if (a_click) rec.alice_det.push_back({s, abit, ab});
        const bool photon = chan.bernoulli(p_click);
        const bool dark = (p.dark_count > 0 && chan.bernoulli(p.dark_count)) && !photon;
        const bool flip = chan.bernoulli(p.flip_probability);
        if (!photon && !dark) break;
        const auto bb = static_cast<std::uint8_t>(bob.bit());
        const auto rnd = static_cast<std::uint8_t>(bob.bit());
        const std::uint8_t out = (photon && bb == ab) ? static_cast<std::uint8_t>(abit ^ flip) : rnd;
        rec.bob.push_back({shifted(s), out, bb});
        break;
      }
      case ProtocolKind::COW: {
        // bit 0: pulse in the first bin, bit 1: pulse in the second; decoy: both.
        const auto key = static_cast<std::uint8_t>(alice.bit());
        const auto decoy = static_cast<std::uint8_t>(alice.bernoulli(p.decoy_fraction));
        rec.alice.push_back({s, key, decoy});
        const bool photon = chan.bernoulli(p_click);
        const bool dark = (p.dark_count > 0 && chan.bernoulli(p.dark_count)) && !photon;
        const bool flip = chan.bernoulli(p.flip_probability);
        if (!photon && !dark) break;
        const bool monitor = bob.bernoulli(p.monitor_fraction);
        const auto rnd = static_cast<std::uint8_t>(bob.bit());
        std::uint8_t bin;
        if (photon && !decoy)
          bin = static_cast<std::uint8_t>(key ^ flip);
        else
          bin = rnd;
        // The data line reports the arrival bin; the monitoring line reports a
        // click without a key value.
        rec.bob.push_back({shifted(2 * s + bin), static_cast<std::uint8_t>(monitor ? 0 : bin),
                           static_cast<std::uint8_t>(monitor)});
        break;
      }
    }
  }
  return rec;
}

// ---------------------------------------------------------------------------
// Session file: little-endian, "QKDS", u16 version, u8 protocol, u64 n_pulses,
// then u64-length-prefixed arrays: alice prep, alice detections, bob
// detections, sync slots, sync times.

namespace detail {

template <class T>
void put_le(std::ostream& os, T v) {
  unsigned char b[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<unsigned char>(static_cast<std::uint64_t>(v) >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  unsigned char b[sizeof(T)];
  require(static_cast<bool>(is.read(reinterpret_cast<char*>(b), sizeof(T))), ErrorKind::io, "truncated file");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return static_cast<T>(v);
}

inline void expect_magic(std::istream& is, const char* magic) {
  char m[4];
  require(static_cast<bool>(is.read(m, 4)) && std::memcmp(m, magic, 4) == 0, ErrorKind::io,
          std::string("bad magic, expected ") + magic);
}

}  // namespace detail

inline constexpr std::uint16_t kSessionFileVersion = 1;

inline void write_session(std::ostream& os, const TransmissionRecord& r) {
  using detail::put_le;
  os.write("QKDS", 4);
  put_le<std::uint16_t>(os, kSessionFileVersion);
  put_le<std::uint8_t>(os, static_cast<std::uint8_t>(r.protocol));
  put_le<std::uint64_t>(os, r.n_pulses);
  put_le<std::uint64_t>(os, r.alice.size());
  for (const auto& a : r.alice) {
    put_le<std::uint64_t>(os, a.slot_index);
    put_le<std::uint8_t>(os, a.key_bit);
    put_le<std::uint8_t>(os, a.basis_or_decoy);
  }
  for (const auto* dets : {&r.alice_det, &r.bob}) {
    put_le<std::uint64_t>(os, dets->size());
    for (const auto& d : *dets) {
      put_le<std::uint64_t>(os, d.timestamp);
      put_le<std::uint8_t>(os, d.outcome_bit);
      put_le<std::uint8_t>(os, d.meta_bit);
    }
  }
  for (const auto* v : {&r.sync_slots, &r.sync_times}) {
    put_le<std::uint64_t>(os, v->size());
    for (auto t : *v) put_le<std::uint64_t>(os, t);
  }
}

inline TransmissionRecord read_session(std::istream& is) {
  using detail::get_le;
  detail::expect_magic(is, "QKDS");
  const auto ver = get_le<std::uint16_t>(is);
  require(ver == kSessionFileVersion, ErrorKind::io, "unsupported session file version " + std::to_string(ver));
  TransmissionRecord r;
  const auto proto = get_le<std::uint8_t>(is);
  require(proto <= 2, ErrorKind::io, "bad protocol byte");
  r.protocol = static_cast<ProtocolKind>(proto);
  r.n_pulses = get_le<std::uint64_t>(is);
  r.alice.resize(get_le<std::uint64_t>(is));
  for (auto& a : r.alice) {
    a.slot_index = get_le<std::uint64_t>(is);
    a.key_bit = get_le<std::uint8_t>(is);
    a.basis_or_decoy = get_le<std::uint8_t>(is);
  }
  for (auto* dets : {&r.alice_det, &r.bob}) {
    dets->resize(get_le<std::uint64_t>(is));
    for (auto& d : *dets) {
      d.timestamp = get_le<std::uint64_t>(is);
      d.outcome_bit = get_le<std::uint8_t>(is);
      d.meta_bit = get_le<std::uint8_t>(is);
    }
  }
  for (auto* v : {&r.sync_slots, &r.sync_times}) {
    v->resize(get_le<std::uint64_t>(is));
    for (auto& t : *v) t = get_le<std::uint64_t>(is);
  }
  return r;
}

inline void save_session(const std::string& path, const TransmissionRecord& r) {
  std::ofstream f(path, std::ios::binary);
  require(static_cast<bool>(f), ErrorKind::io, "cannot write " + path);
  write_session(f, r);
}

inline TransmissionRecord load_session(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(static_cast<bool>(f), ErrorKind::io, "cannot open " + path);
  return read_session(f);
}

}  // namespace qkd
