#pragma once

#include <qkd/errors.hpp>

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace qkd {

/// Packed bit string. Bit i lives in word i/64 at position i%64; bits past
/// size() in the last word are always zero.
class BitBlock {
 public:
  BitBlock() = default;
  explicit BitBlock(std::size_t nbits, std::uint64_t index = 0)
      : words_((nbits + 63) / 64, 0), size_(nbits), index_(index) {}

  static BitBlock from_bools(std::span<const std::uint8_t> bits, std::uint64_t index = 0) {
    BitBlock b(bits.size(), index);
    for (std::size_t i = 0; i < bits.size(); ++i)
      if (bits[i] & 1u) b.set(i, true);
    return b;
  }

  /// Byte j holds bits 8j..8j+7, least significant bit first.
  static BitBlock from_bytes(std::span<const std::uint8_t> bytes, std::size_t nbits) {
    require(nbits <= bytes.size() * 8, ErrorKind::size, "from_bytes: not enough bytes");
    BitBlock b(nbits);
    for (std::size_t i = 0; i < nbits; ++i)
      if ((bytes[i / 8] >> (i % 8)) & 1u) b.set(i, true);
    return b;
  }

  std::vector<std::uint8_t> to_bytes() const {
    std::vector<std::uint8_t> out((size_ + 7) / 8, 0);
    for (std::size_t w = 0; w < words_.size(); ++w)
      for (std::size_t k = 0; k < 8 && w * 8 + k < out.size(); ++k)
        out[w * 8 + k] = static_cast<std::uint8_t>(words_[w] >> (8 * k));
    return out;
  }

  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }
  std::uint64_t index() const noexcept { return index_; }
  void set_index(std::uint64_t i) noexcept { index_ = i; }

  bool get(std::size_t i) const noexcept { return (words_[i >> 6] >> (i & 63)) & 1u; }
  bool operator[](std::size_t i) const noexcept { return get(i); }
  void set(std::size_t i, bool v) noexcept {
    const std::uint64_t m = std::uint64_t{1} << (i & 63);
    if (v)
      words_[i >> 6] |= m;
    else
      words_[i >> 6] &= ~m;
  }
  void flip(std::size_t i) noexcept { words_[i >> 6] ^= std::uint64_t{1} << (i & 63); }

  std::span<const std::uint64_t> words() const noexcept { return words_; }
  std::span<std::uint64_t> words() noexcept { return words_; }

  void push_back(bool v) {
    if ((size_ & 63) == 0) words_.push_back(0);
    ++size_;
    set(size_ - 1, v);
  }

  void resize(std::size_t nbits) {
    words_.resize((nbits + 63) / 64, 0);
    size_ = nbits;
    mask_tail();
  }

  void append(const BitBlock& other) {
    if ((size_ & 63) == 0) {
      words_.insert(words_.end(), other.words_.begin(), other.words_.end());
      size_ += other.size_;
      return;
    }
    const std::size_t base = size_;
    resize(size_ + other.size_);
    for (std::size_t i = 0; i < other.size_; ++i)
      if (other.get(i)) set(base + i, true);
  }

  BitBlock slice(std::size_t start, std::size_t len) const {
    require(start + len <= size_, ErrorKind::size, "slice out of range");
    BitBlock out(len, index_);
    if ((start & 63) == 0) {
      for (std::size_t w = 0; w < out.words_.size(); ++w) out.words_[w] = words_[(start >> 6) + w];
      out.mask_tail();
      return out;
    }
    const unsigned sh = start & 63;
    for (std::size_t w = 0; w < out.words_.size(); ++w) {
      const std::size_t src = (start >> 6) + w;
      std::uint64_t v = words_[src] >> sh;
      if (src + 1 < words_.size()) v |= words_[src + 1] << (64 - sh);
      out.words_[w] = v;
    }
    out.mask_tail();
    return out;
  }

  BitBlock& operator^=(const BitBlock& o) {
    require(o.size_ == size_, ErrorKind::size, "xor of unequal lengths");
    for (std::size_t w = 0; w < words_.size(); ++w) words_[w] ^= o.words_[w];
    return *this;
  }
  friend BitBlock operator^(BitBlock a, const BitBlock& b) { return a ^= b; }

  std::size_t popcount() const noexcept {
    std::size_t c = 0;
    for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }

  /// Bitwise equality of contents; the block index is metadata and not compared.
  friend bool operator==(const BitBlock& a, const BitBlock& b) {
    return a.size_ == b.size_ && a.words_ == b.words_;
  }

  std::string to_string() const {
    std::string s(size_, '0');
    for (std::size_t i = 0; i < size_; ++i)
      if (get(i)) s[i] = '1';
    return s;
  }

  static BitBlock from_string(const std::string& s) {
    BitBlock b(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      require(s[i] == '0' || s[i] == '1', ErrorKind::config, "bit string must be 0/1");
      if (s[i] == '1') b.set(i, true);
    }
    return b;
  }

  void mask_tail() noexcept {
    if (size_ & 63) words_.back() &= (std::uint64_t{1} << (size_ & 63)) - 1;
  }

 private:
  std::vector<std::uint64_t> words_;
  std::size_t size_ = 0;
  std::uint64_t index_ = 0;
};

inline std::size_t hamming_distance(const BitBlock& a, const BitBlock& b) {
  require(a.size() == b.size(), ErrorKind::size, "hamming distance of unequal lengths");
  std::size_t d = 0;
  auto wa = a.words();
  auto wb = b.words();
  for (std::size_t i = 0; i < wa.size(); ++i) d += static_cast<std::size_t>(std::popcount(wa[i] ^ wb[i]));
  return d;
}

/// Parity of the AND of two equal-length blocks (GF(2) inner product).
inline bool dot(const BitBlock& a, const BitBlock& b) {
  require(a.size() == b.size(), ErrorKind::size, "dot of unequal lengths");
  std::uint64_t acc = 0;
  auto wa = a.words();
  auto wb = b.words();
  for (std::size_t i = 0; i < wa.size(); ++i) acc ^= wa[i] & wb[i];
  return std::popcount(acc) & 1;
}

inline BitBlock concat(std::span<const BitBlock> parts) {
  BitBlock out;
  for (const auto& p : parts) out.append(p);
  return out;
}

}  // namespace qkd
