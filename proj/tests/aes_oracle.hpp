#pragma once

#include <array>
#include <cstdint>

namespace oracle {

// S-box from the definition: multiplicative inverse in GF(2^8) by search,
// then the affine map.
inline std::uint8_t gf_mul(std::uint8_t a, std::uint8_t b) {
  std::uint8_t p = 0;
  while (b) {
    if (b & 1) p ^= a;
    a = static_cast<std::uint8_t>((a << 1) ^ ((a & 0x80) ? 0x1b : 0));
    b >>= 1;
  }
  return p;
}

inline std::uint8_t aes_sbox(std::uint8_t x) {
  std::uint8_t inv = 0;
  for (int c = 1; c < 256 && x; ++c)
    if (gf_mul(x, static_cast<std::uint8_t>(c)) == 1) inv = static_cast<std::uint8_t>(c);
  std::uint8_t s = 0x63;
  for (int i = 0; i < 8; ++i) {
    const int bit = ((inv >> i) ^ (inv >> ((i + 4) % 8)) ^ (inv >> ((i + 5) % 8)) ^ (inv >> ((i + 6) % 8)) ^
                     (inv >> ((i + 7) % 8))) & 1;
    s ^= static_cast<std::uint8_t>(bit << i);
  }
  return s;
}

inline std::array<std::uint8_t, 176> aes_schedule(const std::array<std::uint8_t, 16>& key) {
  std::array<std::uint8_t, 176> w{};
  std::copy(key.begin(), key.end(), w.begin());
  std::uint8_t rcon = 1;
  for (std::size_t i = 16; i < 176; i += 4) {
    std::uint8_t t[4] = {w[i - 4], w[i - 3], w[i - 2], w[i - 1]};
    if (i % 16 == 0) {
      const std::uint8_t t0 = t[0];
      t[0] = static_cast<std::uint8_t>(aes_sbox(t[1]) ^ rcon);
      t[1] = aes_sbox(t[2]);
      t[2] = aes_sbox(t[3]);
      t[3] = aes_sbox(t0);
      rcon = gf_mul(rcon, 2);
    }
    for (int k = 0; k < 4; ++k) w[i + k] = w[i - 16 + k] ^ t[k];
  }
  return w;
}

}  // namespace oracle
