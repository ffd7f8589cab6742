#pragma once

// Rate-adaptive syndrome reconciliation over GF(2): quasi-cyclic parity-check
// construction from a protograph, syndrome encoding and belief-propagation
// decoding with shortening and puncturing.

#include <qkd/bits.hpp>
#include <qkd/errors.hpp>
#include <qkd/rng.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace qkd::ldpc {

/// Small dense protomatrix; entry e >= 0 is the number of parallel edges.
using Protograph = std::vector<std::vector<int>>;

/// Sparse GF(2) matrix in index-list form. Immutable after construction.
class ParityCheckMatrix {
 public:
  ParityCheckMatrix() = default;

  /// Builds from per-row column lists. Validates ranges and duplicates.
  ParityCheckMatrix(std::size_t n, std::vector<std::vector<std::uint32_t>> rows, std::uint64_t seed = 0,
                    std::size_t base_rows = 0, std::size_t base_cols = 0, std::size_t lift = 1)
      : n_(n), m_(rows.size()), seed_(seed), base_rows_(base_rows), base_cols_(base_cols), lift_(lift) {
    rows_ = std::move(rows);
    cols_.assign(n_, {});
    for (std::size_t r = 0; r < m_; ++r) {
      auto& row = rows_[r];
      std::sort(row.begin(), row.end());
      require(std::adjacent_find(row.begin(), row.end()) == row.end(), ErrorKind::construction,
              "duplicate entry in row " + std::to_string(r));
      for (auto c : row) {
        require(c < n_, ErrorKind::construction, "column index out of range in row " + std::to_string(r));
        cols_[c].push_back(static_cast<std::uint32_t>(r));
      }
    }
    edges_ = 0;
    for (auto& row : rows_) edges_ += row.size();
  }

  std::size_t n() const noexcept { return n_; }
  std::size_t m() const noexcept { return m_; }
  std::size_t edges() const noexcept { return edges_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t base_rows() const noexcept { return base_rows_; }
  std::size_t base_cols() const noexcept { return base_cols_; }
  std::size_t lift() const noexcept { return lift_; }

  std::span<const std::uint32_t> row(std::size_t r) const { return rows_[r]; }
  std::span<const std::uint32_t> col(std::size_t c) const { return cols_[c]; }
  const std::vector<std::vector<std::uint32_t>>& rows() const noexcept { return rows_; }
  const std::vector<std::vector<std::uint32_t>>& cols() const noexcept { return cols_; }

  /// H * x over GF(2); |x| must equal n.
  BitBlock multiply(const BitBlock& x) const {
    require(x.size() == n_, ErrorKind::size, "multiply: vector length != n");
    BitBlock s(m_);
    for (std::size_t r = 0; r < m_; ++r) {
      bool p = false;
      for (auto c : rows_[r]) p ^= x.get(c);
      if (p) s.set(r, true);
    }
    return s;
  }

  /// Each row list and each column list agree, with no duplicates.
  bool transpose_consistent() const {
    std::size_t col_edges = 0;
    for (std::size_t c = 0; c < n_; ++c) {
      const auto& lst = cols_[c];
      col_edges += lst.size();
      for (std::size_t k = 0; k < lst.size(); ++k) {
        if (k && lst[k - 1] >= lst[k]) return false;
        if (lst[k] >= m_) return false;
        const auto& row = rows_[lst[k]];
        if (!std::binary_search(row.begin(), row.end(), static_cast<std::uint32_t>(c))) return false;
      }
    }
    return col_edges == edges_;
  }

  /// Number of row pairs sharing two or more columns (length-4 cycles).
  std::size_t count_4cycles() const {
    std::size_t found = 0;
    std::vector<std::uint32_t> mark(m_, 0);
    std::vector<std::uint32_t> stamp(m_, std::numeric_limits<std::uint32_t>::max());
    for (std::size_t r = 0; r < m_; ++r) {
      for (auto c : rows_[r]) {
        for (auto r2 : cols_[c]) {
          if (r2 <= r) continue;
          if (stamp[r2] != r) {
            stamp[r2] = static_cast<std::uint32_t>(r);
            mark[r2] = 0;
          }
          if (++mark[r2] == 2) ++found;
        }
      }
    }
    return found;
  }

  /// Text asset: header line "n m base_rows base_cols lift seed", then one
  /// line per row with its column indices.
  void save(std::ostream& os) const {
    os << n_ << ' ' << m_ << ' ' << base_rows_ << ' ' << base_cols_ << ' ' << lift_ << ' ' << seed_ << '\n';
    for (const auto& row : rows_) {
      for (std::size_t k = 0; k < row.size(); ++k) os << (k ? " " : "") << row[k];
      os << '\n';
    }
  }

  static ParityCheckMatrix load(std::istream& is) {
    std::string line;
    require(static_cast<bool>(std::getline(is, line)), ErrorKind::io, "matrix asset: missing header");
    std::istringstream hs(line);
    std::size_t n = 0, m = 0, br = 0, bc = 0, lift = 0;
    std::uint64_t seed = 0;
    require(static_cast<bool>(hs >> n >> m >> br >> bc >> lift >> seed), ErrorKind::io, "matrix asset: bad header");
    std::vector<std::vector<std::uint32_t>> rows(m);
    for (std::size_t r = 0; r < m; ++r) {
      require(static_cast<bool>(std::getline(is, line)), ErrorKind::io, "matrix asset: truncated");
      std::istringstream ls(line);
      std::uint32_t c;
      while (ls >> c) rows[r].push_back(c);
    }
    return ParityCheckMatrix(n, std::move(rows), seed, br, bc, lift);
  }

  static ParityCheckMatrix load_file(const std::string& path) {
    std::ifstream f(path);
    require(static_cast<bool>(f), ErrorKind::io, "cannot open matrix asset " + path);
    return load(f);
  }

 private:
  std::size_t n_ = 0;
  std::size_t m_ = 0;
  std::size_t edges_ = 0;
  std::uint64_t seed_ = 0;
  std::size_t base_rows_ = 0;
  std::size_t base_cols_ = 0;
  std::size_t lift_ = 1;
  std::vector<std::vector<std::uint32_t>> rows_;
  std::vector<std::vector<std::uint32_t>> cols_;
};

/// Circulant shifts for every protograph entry, one list per (row, col).
using ShiftTable = std::vector<std::vector<std::vector<std::uint32_t>>>;

/// Expands a protograph with explicit circulant shifts. Lifted row t of block
/// (i, j) has a one in column j*lift + (t + shift) mod lift for each shift.
inline ParityCheckMatrix expand(const Protograph& base, std::size_t lift, const ShiftTable& shifts,
                                std::uint64_t seed = 0) {
  require(lift >= 1, ErrorKind::construction, "lift must be >= 1");
  require(!base.empty() && !base[0].empty(), ErrorKind::construction, "empty protograph");
  const std::size_t br = base.size(), bc = base[0].size();
  std::vector<std::vector<std::uint32_t>> rows(br * lift);
  for (std::size_t i = 0; i < br; ++i) {
    require(base[i].size() == bc, ErrorKind::construction, "ragged protograph");
    for (std::size_t j = 0; j < bc; ++j) {
      const auto& sh = shifts[i][j];
      require(sh.size() == static_cast<std::size_t>(base[i][j]), ErrorKind::construction, "shift count mismatch");
      for (auto s : sh)
        for (std::size_t t = 0; t < lift; ++t)
          rows[i * lift + t].push_back(static_cast<std::uint32_t>(j * lift + (t + s) % lift));
    }
  }
  return ParityCheckMatrix(bc * lift, std::move(rows), seed, br, bc, lift);
}

/// Seeded random circulant shifts. Parallel edges in one block get distinct
/// shifts; with avoid_4cycles, shifts closing a length-4 cycle in the lifted
/// graph are redrawn.
inline ShiftTable draw_shifts(const Protograph& base, std::size_t lift, std::uint64_t seed, bool avoid_4cycles = true,
                              int max_draws = 2000) {
  require(lift >= 1, ErrorKind::construction, "lift must be >= 1");
  require(!base.empty() && !base[0].empty(), ErrorKind::construction, "empty protograph");
  const std::size_t br = base.size(), bc = base[0].size();
  for (const auto& row : base) {
    require(row.size() == bc, ErrorKind::construction, "ragged protograph");
    for (int e : row) {
      require(e >= 0, ErrorKind::construction, "negative protograph entry");
      require(static_cast<std::size_t>(e) <= lift, ErrorKind::construction,
              "parallel-edge count exceeds the number of distinct shifts");
    }
  }
  Rng rng(seed);
  ShiftTable shifts(br, std::vector<std::vector<std::uint32_t>>(bc));

  struct Edge {
    std::size_t i, j;
    std::int64_t s;
  };
  std::vector<std::vector<Edge>> by_row(br), by_col(bc);
  const auto L = static_cast<std::int64_t>(lift);
  auto mod = [L](std::int64_t v) { return ((v % L) + L) % L; };

  // A lifted 4-cycle through the new edge e1 = (i, j, s) follows
  // e1 -> e2 = (i2, j, c) -> e3 = (i2, j2, d) -> e4 = (i, j2, b) -> e1 and
  // exists iff s - c + d - b == 0 (mod lift). e1 is not yet in the lists.
  auto closes_cycle = [&](std::size_t i, std::size_t j, std::int64_t s) {
    for (const auto& e2 : by_col[j]) {
      for (const auto& e3 : by_row[e2.i]) {
        if (e3.j == e2.j && e3.s == e2.s) continue;
        for (const auto& e4 : by_row[i]) {
          if (e4.j != e3.j) continue;
          if (e4.i == e3.i && e4.s == e3.s) continue;
          if (mod(s - e2.s + e3.s - e4.s) == 0) return true;
        }
      }
    }
    return false;
  };

  for (std::size_t i = 0; i < br; ++i) {
    for (std::size_t j = 0; j < bc; ++j) {
      for (int e = 0; e < base[i][j]; ++e) {
        std::int64_t s = 0;
        bool placed = false;
        for (int attempt = 0; attempt < max_draws; ++attempt) {
          s = static_cast<std::int64_t>(rng.below(lift));
          auto& cur = shifts[i][j];
          if (std::find(cur.begin(), cur.end(), static_cast<std::uint32_t>(s)) != cur.end()) continue;
          if (avoid_4cycles && closes_cycle(i, j, s)) continue;
          placed = true;
          break;
        }
        if (!placed) {
          if (avoid_4cycles)
            fail(ErrorKind::construction, "could not place a 4-cycle-free shift at (" + std::to_string(i) + "," +
                                              std::to_string(j) + ")");
          fail(ErrorKind::construction, "parallel-edge collision exhausted distinct shifts");
        }
        shifts[i][j].push_back(static_cast<std::uint32_t>(s));
        by_row[i].push_back({i, j, s});
        by_col[j].push_back({i, j, s});
      }
    }
  }
  return shifts;
}

/// Lifts a protograph with seeded random circulant shifts.
inline ParityCheckMatrix build_matrix(const Protograph& base, std::size_t lift, std::uint64_t seed,
                                      bool avoid_4cycles = true) {
  return expand(base, lift, draw_shifts(base, lift, seed, avoid_4cycles), seed);
}

/// Parses a protograph text asset: optional "# comment" lines, then one row
/// per line of whitespace-separated non-negative integers.
inline Protograph parse_protograph(std::istream& is) {
  Protograph p;
  std::string line;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::vector<int> row;
    int v;
    while (ls >> v) row.push_back(v);
    if (!row.empty()) p.push_back(std::move(row));
  }
  require(!p.empty(), ErrorKind::config, "protograph is empty");
  for (const auto& r : p) require(r.size() == p[0].size(), ErrorKind::config, "ragged protograph");
  return p;
}

/// Known-zero (shortened) and undisclosed random-filler (punctured) columns.
struct RateAdaptation {
  std::size_t f = 0;
  std::vector<std::uint32_t> shortened;
  std::vector<std::uint32_t> punctured;

  static RateAdaptation none() { return {}; }

  void validate(std::size_t n) const {
    std::vector<char> seen(n, 0);
    for (auto c : shortened) {
      require(c < n, ErrorKind::config, "shortened index out of range");
      require(!seen[c], ErrorKind::config, "duplicate shortened index");
      seen[c] = 1;
    }
    for (auto c : punctured) {
      require(c < n, ErrorKind::config, "punctured index out of range");
      require(!seen[c], ErrorKind::config, "shortened and punctured sets overlap");
      seen[c] = 2;
    }
    require(shortened.size() + punctured.size() == f, ErrorKind::config, "f != |shortened| + |punctured|");
  }
};

/// Columns with exactly one nonzero, ordered by descending row. Puncturing the
/// first f of these removes f rows and f columns, giving (m-f) x (n-f).
inline std::vector<std::uint32_t> puncture_order(const ParityCheckMatrix& H) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> deg1;  // (row, col)
  for (std::size_t c = 0; c < H.n(); ++c)
    if (H.col(c).size() == 1) deg1.emplace_back(H.col(c)[0], static_cast<std::uint32_t>(c));
  std::sort(deg1.begin(), deg1.end(), [](auto a, auto b) { return a.first > b.first; });
  std::vector<std::uint32_t> out;
  out.reserve(deg1.size());
  std::uint32_t last_row = std::numeric_limits<std::uint32_t>::max();
  for (auto [r, c] : deg1) {
    if (r == last_row) continue;  // one per row
    out.push_back(c);
    last_row = r;
  }
  return out;
}

/// Rate adaptation puncturing the first `punct` degree-1 columns and shortening
/// `shorten` further columns taken from the end of the remaining key positions.
inline RateAdaptation make_adaptation(const ParityCheckMatrix& H, std::size_t punct, std::size_t shorten = 0) {
  const auto order = puncture_order(H);
  require(punct <= order.size(), ErrorKind::config, "puncture count exceeds degree-1 columns");
  RateAdaptation ra;
  ra.punctured.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(punct));
  std::vector<char> used(H.n(), 0);
  for (auto c : ra.punctured) used[c] = 1;
  for (std::size_t c = H.n(); c-- > 0 && ra.shortened.size() < shorten;)
    if (!used[c]) ra.shortened.push_back(static_cast<std::uint32_t>(c));
  require(ra.shortened.size() == shorten, ErrorKind::config, "not enough columns to shorten");
  std::sort(ra.shortened.begin(), ra.shortened.end());
  ra.f = punct + shorten;
  return ra;
}

struct Syndrome {
  BitBlock bits;
  std::uint64_t block_index = 0;
};

/// Positions of the caller-visible key vector: all columns except shortened
/// ones, in increasing column order.
inline std::vector<std::uint32_t> key_columns(std::size_t n, const RateAdaptation& ra) {
  std::vector<char> sh(n, 0);
  for (auto c : ra.shortened) sh[c] = 1;
  std::vector<std::uint32_t> cols;
  cols.reserve(n - ra.shortened.size());
  for (std::size_t c = 0; c < n; ++c)
    if (!sh[c]) cols.push_back(static_cast<std::uint32_t>(c));
  return cols;
}

/// Inserts zeros at the shortened positions: key (n - |shortened|) -> word (n).
inline BitBlock embed(std::size_t n, const BitBlock& key, const RateAdaptation& ra) {
  require(key.size() + ra.shortened.size() == n, ErrorKind::size, "key length != n - |shortened|");
  const auto cols = key_columns(n, ra);
  BitBlock x(n, key.index());
  for (std::size_t k = 0; k < cols.size(); ++k)
    if (key.get(k)) x.set(cols[k], true);
  return x;
}

inline BitBlock extract(const BitBlock& word, const RateAdaptation& ra) {
  const auto cols = key_columns(word.size(), ra);
  BitBlock key(cols.size(), word.index());
  for (std::size_t k = 0; k < cols.size(); ++k)
    if (word.get(cols[k])) key.set(k, true);
  return key;
}

inline Syndrome encode_syndrome(const ParityCheckMatrix& H, const BitBlock& key, const RateAdaptation& ra) {
  ra.validate(H.n());
  return Syndrome{H.multiply(embed(H.n(), key, ra)), key.index()};
}

/// Syndrome bits that carry information: rows not masked by a punctured
/// degree-1 column.
inline std::size_t disclosed_bits(const ParityCheckMatrix& H, const RateAdaptation& ra) {
  std::size_t masked = 0;
  for (auto c : ra.punctured)
    if (H.col(c).size() == 1) ++masked;
  return H.m() - masked;
}

enum class CheckRule { sum_product, min_sum };
enum class Schedule { layered, flooding };

struct DecoderOptions {
  std::size_t max_iter = 50;
  CheckRule rule = CheckRule::sum_product;
  Schedule schedule = Schedule::layered;
  double min_sum_scale = 0.8;
};

struct DecodeResult {
  BitBlock corrected;  // same layout as the noisy key (n - |shortened| bits)
  std::size_t iterations_used = 0;
  bool converged = false;
  std::vector<float> llr_final;  // posterior per key position
};

/// Reusable decoder for one (matrix, adaptation) pair. Rows masked by punctured
/// degree-1 columns are removed from the graph and the masked columns are
/// recovered from their rows once the rest has converged.
class Decoder {
 public:
  Decoder(const ParityCheckMatrix& H, RateAdaptation ra, DecoderOptions opt = {})
      : H_(&H), ra_(std::move(ra)), opt_(opt) {
    ra_.validate(H.n());
    const std::size_t n = H.n();
    kind_.assign(n, Kind::key);
    for (auto c : ra_.shortened) kind_[c] = Kind::shortened;
    for (auto c : ra_.punctured) kind_[c] = H.col(c).size() == 1 ? Kind::masked : Kind::punctured;

    std::vector<char> row_active(H.m(), 1);
    for (std::size_t c = 0; c < n; ++c)
      if (kind_[c] == Kind::masked) {
        row_active[H.col(c)[0]] = 0;
        recover_.push_back({static_cast<std::uint32_t>(c), H.col(c)[0]});
      }

    // Dense renumbering of the participating variables.
    var_of_col_.assign(n, -1);
    for (std::size_t c = 0; c < n; ++c)
      if (kind_[c] == Kind::key || kind_[c] == Kind::punctured) {
        var_of_col_[c] = static_cast<std::int32_t>(var_col_.size());
        var_col_.push_back(static_cast<std::uint32_t>(c));
      }

    row_ptr_.push_back(0);
    for (std::size_t r = 0; r < H.m(); ++r) {
      if (!row_active[r]) continue;
      rows_.push_back(static_cast<std::uint32_t>(r));
      for (auto c : H.row(r))
        if (var_of_col_[c] >= 0) edge_var_.push_back(static_cast<std::uint32_t>(var_of_col_[c]));
      row_ptr_.push_back(static_cast<std::uint32_t>(edge_var_.size()));
    }
    key_cols_ = key_columns(n, ra_);
  }

  const RateAdaptation& adaptation() const noexcept { return ra_; }

  DecodeResult decode(const BitBlock& noisy_key, const Syndrome& syn, double qber) const {
    const auto& H = *H_;
    require(noisy_key.size() == key_cols_.size(), ErrorKind::size, "noisy key length != n - |shortened|");
    require(syn.bits.size() == H.m(), ErrorKind::size, "syndrome length != m");
    require(qber > 0.0 && qber < 0.5, ErrorKind::config, "decoder qber must be in (0, 0.5)");

    const double llr0 = std::log((1.0 - qber) / qber);
    const std::size_t nv = var_col_.size();
    std::vector<double> prior(nv), post(nv);
    {
      std::vector<std::int32_t> key_pos(H.n(), -1);
      for (std::size_t k = 0; k < key_cols_.size(); ++k) key_pos[key_cols_[k]] = static_cast<std::int32_t>(k);
      for (std::size_t v = 0; v < nv; ++v) {
        const auto c = var_col_[v];
        if (kind_[c] == Kind::punctured) {
          prior[v] = 0.0;
        } else {
          prior[v] = noisy_key.get(static_cast<std::size_t>(key_pos[c])) ? -llr0 : llr0;
        }
      }
    }
    // Syndrome parity each active row must meet (shortened columns are zero).
    std::vector<std::uint8_t> target(rows_.size());
    for (std::size_t k = 0; k < rows_.size(); ++k) target[k] = syn.bits.get(rows_[k]);

    std::vector<double> c2v(edge_var_.size(), 0.0);
    post = prior;
    std::vector<std::uint8_t> hard(nv);
    auto decide = [&] {
      for (std::size_t v = 0; v < nv; ++v) hard[v] = post[v] < 0.0;
    };
    auto satisfied = [&] {
      for (std::size_t k = 0; k < rows_.size(); ++k) {
        std::uint8_t p = target[k];
        for (auto e = row_ptr_[k]; e < row_ptr_[k + 1]; ++e) p ^= hard[edge_var_[e]];
        if (p) return false;
      }
      return true;
    };

    DecodeResult res;
    decide();
    bool ok = satisfied();
    std::size_t it = 0;
    std::vector<double> buf, fwd, bwd;
    std::vector<double> v2c_flood;
    if (opt_.schedule == Schedule::flooding) v2c_flood.assign(edge_var_.size(), 0.0);

    while (!ok && it < opt_.max_iter) {
      ++it;
      if (opt_.schedule == Schedule::layered) {
        for (std::size_t k = 0; k < rows_.size(); ++k) {
          const auto b = row_ptr_[k], e = row_ptr_[k + 1];
          const std::size_t d = e - b;
          buf.resize(d);
          for (std::size_t t = 0; t < d; ++t) buf[t] = post[edge_var_[b + t]] - c2v[b + t];
          check_update(buf, target[k], fwd, bwd);
          for (std::size_t t = 0; t < d; ++t) {
            post[edge_var_[b + t]] += buf[t] - c2v[b + t];
            c2v[b + t] = buf[t];
          }
        }
      } else {
        for (std::size_t e = 0; e < edge_var_.size(); ++e) v2c_flood[e] = post[edge_var_[e]] - c2v[e];
        for (std::size_t k = 0; k < rows_.size(); ++k) {
          const auto b = row_ptr_[k], e = row_ptr_[k + 1];
          buf.assign(v2c_flood.begin() + b, v2c_flood.begin() + e);
          check_update(buf, target[k], fwd, bwd);
          std::copy(buf.begin(), buf.end(), c2v.begin() + b);
        }
        post = prior;
        for (std::size_t e = 0; e < edge_var_.size(); ++e) post[edge_var_[e]] += c2v[e];
      }
      decide();
      ok = satisfied();
    }

    // Assemble the full word, recover masked punctured columns from their rows.
    BitBlock word(H.n(), noisy_key.index());
    for (std::size_t v = 0; v < nv; ++v)
      if (hard[v]) word.set(var_col_[v], true);
    for (auto [c, r] : recover_) {
      bool p = syn.bits.get(r);
      for (auto cc : H.row(r))
        if (cc != c) p ^= word.get(cc);
      word.set(c, p);
    }
    if (ok) ok = H.multiply(word) == syn.bits;

    res.corrected = extract(word, ra_);
    res.iterations_used = it;
    res.converged = ok;
    res.llr_final.assign(key_cols_.size(), 0.0f);
    for (std::size_t k = 0; k < key_cols_.size(); ++k) {
      const auto v = var_of_col_[key_cols_[k]];
      if (v >= 0) {
        res.llr_final[k] = static_cast<float>(post[static_cast<std::size_t>(v)]);
      } else {
        res.llr_final[k] = word.get(key_cols_[k]) ? -std::numeric_limits<float>::infinity()
                                                  : std::numeric_limits<float>::infinity();
      }
    }
    return res;
  }

 private:
  enum class Kind : std::uint8_t { key, shortened, punctured, masked };

  static constexpr double kMaxLlr = 40.0;

  // In: variable-to-check messages. Out: check-to-variable messages.
  void check_update(std::vector<double>& msg, std::uint8_t parity, std::vector<double>& fwd,
                    std::vector<double>& bwd) const {
    const std::size_t d = msg.size();
    if (d == 1) {
      msg[0] = parity ? -kMaxLlr : kMaxLlr;
      return;
    }
    if (opt_.rule == CheckRule::min_sum) {
      double min1 = std::numeric_limits<double>::infinity(), min2 = min1;
      std::size_t arg = 0;
      bool sign = parity != 0;
      for (std::size_t t = 0; t < d; ++t) {
        const double a = std::fabs(msg[t]);
        sign ^= msg[t] < 0.0;
        if (a < min1) {
          min2 = min1;
          min1 = a;
          arg = t;
        } else if (a < min2) {
          min2 = a;
        }
      }
      for (std::size_t t = 0; t < d; ++t) {
        const double mag = opt_.min_sum_scale * (t == arg ? min2 : min1);
        const bool s = sign ^ (msg[t] < 0.0);
        msg[t] = s ? -mag : mag;
      }
      return;
    }
    // tanh rule with forward/backward products (no division by small values).
    fwd.resize(d);
    bwd.resize(d);
    for (std::size_t t = 0; t < d; ++t) msg[t] = std::tanh(0.5 * std::clamp(msg[t], -kMaxLlr, kMaxLlr));
    fwd[0] = 1.0;
    for (std::size_t t = 1; t < d; ++t) fwd[t] = fwd[t - 1] * msg[t - 1];
    bwd[d - 1] = 1.0;
    for (std::size_t t = d - 1; t-- > 0;) bwd[t] = bwd[t + 1] * msg[t + 1];
    constexpr double kLim = 0.999999999999;
    for (std::size_t t = 0; t < d; ++t) {
      double p = std::clamp(fwd[t] * bwd[t], -kLim, kLim);
      if (parity) p = -p;
      msg[t] = 2.0 * std::atanh(p);
    }
  }

  const ParityCheckMatrix* H_;
  RateAdaptation ra_;
  DecoderOptions opt_;
  std::vector<Kind> kind_;
  std::vector<std::int32_t> var_of_col_;
  std::vector<std::uint32_t> var_col_;
  std::vector<std::uint32_t> rows_;
  std::vector<std::uint32_t> row_ptr_;
  std::vector<std::uint32_t> edge_var_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> recover_;
  std::vector<std::uint32_t> key_cols_;
};

inline DecodeResult decode(const ParityCheckMatrix& H, const BitBlock& noisy_key, const Syndrome& syndrome,
                           double qber, const RateAdaptation& ra, std::size_t max_iter = 50,
                           DecoderOptions opt = {}) {
  opt.max_iter = max_iter;
  return Decoder(H, ra, opt).decode(noisy_key, syndrome, qber);
}

inline double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

}  // namespace qkd::ldpc
