#pragma once

// Code ensemble plus rate table: which (code, puncturing, shortening) to use
// for a given error rate, and the Monte Carlo harness that produces the
// thresholds.

#include <qkd/ldpc.hpp>

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

namespace qkd::ldpc {

struct CodeSpec {
  std::string name;
  std::string protograph;  // path, relative to the table file
  std::size_t lift = 64;
  std::uint64_t seed = 7;
};

struct RateRow {
  std::string code;
  std::size_t punctured = 0;
  std::size_t shortened = 0;
  double threshold = 0.0;  // largest error rate meeting the target convergence
};

struct RateChoice {
  std::size_t code = 0;  // index into the ensemble
  RateRow row;
  RateAdaptation ra;
};

// ---------------------------------------------------------------------------
// Monte Carlo

struct MonteCarloResult {
  std::size_t trials = 0;
  std::size_t converged = 0;
  std::size_t miscorrected = 0;     // converged to a word other than Alice's
  std::size_t syndrome_failures = 0;  // converged flag without H x == s (must stay 0)
  double mean_iterations = 0.0;

  double ratio() const { return trials ? static_cast<double>(converged) / static_cast<double>(trials) : 0.0; }
};

/// Random keys through a binary symmetric channel, syndrome-decoded. Each
/// trial draws from its own derived stream so results do not depend on the
/// order trials are run in.
inline MonteCarloResult monte_carlo(const ParityCheckMatrix& H, const RateAdaptation& ra, double qber,
                                    std::size_t trials, std::uint64_t seed, DecoderOptions opt = {}) {
  Decoder dec(H, ra, opt);
  const std::size_t nk = H.n() - ra.shortened.size();
  MonteCarloResult res;
  res.trials = trials;
  double iters = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, t));
    BitBlock x = rng.bits(nk);
    const auto syn = encode_syndrome(H, x, ra);
    BitBlock y = x;
    for (std::size_t i = 0; i < nk; ++i)
      if (rng.bernoulli(qber)) y.flip(i);
    const auto r = dec.decode(y, syn, qber);
    iters += static_cast<double>(r.iterations_used);
    if (!r.converged) continue;
    ++res.converged;
    if (!(H.multiply(embed(H.n(), r.corrected, ra)) == syn.bits)) ++res.syndrome_failures;
    if (!(r.corrected == x)) ++res.miscorrected;
  }
  res.mean_iterations = trials ? iters / static_cast<double>(trials) : 0.0;
  return res;
}

/// Bisection for the largest error rate in [lo, hi] whose convergence ratio
/// still reaches `target`.
inline double find_threshold(const ParityCheckMatrix& H, const RateAdaptation& ra, double target, std::size_t trials,
                             std::uint64_t seed, double lo, double hi, double tol = 0.001) {
  if (monte_carlo(H, ra, lo, trials, seed).ratio() < target) return 0.0;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (monte_carlo(H, ra, mid, trials, seed).ratio() >= target)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

/// Information disclosed per payload bit for one row of the table.
inline double leak_ratio(const ParityCheckMatrix& H, const RateAdaptation& ra) {
  const double payload = static_cast<double>(H.n() - ra.punctured.size() - ra.shortened.size());
  return static_cast<double>(disclosed_bits(H, ra)) / payload;
}

// ---------------------------------------------------------------------------
// Ensemble

class CodeEnsemble {
 public:
  CodeEnsemble() = default;

  CodeEnsemble(std::vector<CodeSpec> specs, std::vector<RateRow> rows, const std::filesystem::path& base_dir,
               double target = 0.0)
      : specs_(std::move(specs)), rows_(std::move(rows)), target_(target) {
    require(!specs_.empty(), ErrorKind::config, "rate table lists no codes");
    for (const auto& s : specs_) {
      std::ifstream pf(base_dir / s.protograph);
      require(static_cast<bool>(pf), ErrorKind::io, "cannot open protograph " + (base_dir / s.protograph).string());
      codes_.push_back(std::make_shared<const ParityCheckMatrix>(build_matrix(parse_protograph(pf), s.lift, s.seed)));
    }
    for (const auto& r : rows_) {
      const auto i = code_index(r.code);
      require(r.punctured <= puncture_order(*codes_[i]).size(), ErrorKind::config, "rate row punctures too much");
    }
  }

  static CodeEnsemble load(const std::string& path) {
    std::ifstream f(path);
    require(static_cast<bool>(f), ErrorKind::io, "cannot open rate table " + path);
    nlohmann::json j;
    try {
      f >> j;
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::config, std::string("rate table: ") + e.what());
    }
    std::vector<CodeSpec> specs;
    std::vector<RateRow> rows;
    try {
      for (const auto& c : j.at("codes"))
        specs.push_back({c.at("name").get<std::string>(), c.at("protograph").get<std::string>(),
                         c.at("lift").get<std::size_t>(), c.at("seed").get<std::uint64_t>()});
      for (const auto& r : j.at("rows"))
        rows.push_back({r.at("code").get<std::string>(), r.at("punctured").get<std::size_t>(),
                        r.value("shortened", std::size_t{0}), r.at("threshold").get<double>()});
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::config, std::string("rate table: ") + e.what());
    }
    return CodeEnsemble(std::move(specs), std::move(rows), std::filesystem::path(path).parent_path(),
                        j.value("target", 0.0));
  }

  void save(const std::string& path, std::size_t trials) const {
    nlohmann::json j;
    j["target"] = target_;
    j["trials"] = trials;
    for (const auto& s : specs_)
      j["codes"].push_back({{"name", s.name}, {"protograph", s.protograph}, {"lift", s.lift}, {"seed", s.seed}});
    for (const auto& r : rows_)
      j["rows"].push_back(
          {{"code", r.code}, {"punctured", r.punctured}, {"shortened", r.shortened}, {"threshold", r.threshold}});
    std::ofstream f(path);
    require(static_cast<bool>(f), ErrorKind::io, "cannot write " + path);
    f << j.dump(1) << '\n';
  }

  std::size_t size() const noexcept { return codes_.size(); }
  const ParityCheckMatrix& code(std::size_t i) const { return *codes_.at(i); }
  const CodeSpec& spec(std::size_t i) const { return specs_.at(i); }
  const std::vector<RateRow>& rows() const noexcept { return rows_; }
  std::vector<RateRow>& rows() noexcept { return rows_; }
  double target() const noexcept { return target_; }
  void set_target(double t) noexcept { target_ = t; }

  std::size_t code_index(const std::string& name) const {
    for (std::size_t i = 0; i < specs_.size(); ++i)
      if (specs_[i].name == name) return i;
    fail(ErrorKind::config, "rate table names unknown code '" + name + "'");
  }

  RateAdaptation adaptation(const RateRow& r) const {
    return make_adaptation(*codes_[code_index(r.code)], r.punctured, r.shortened);
  }

  double leak(const RateRow& r) const { return leak_ratio(*codes_[code_index(r.code)], adaptation(r)); }

  /// Least-disclosure row whose threshold covers qber + margin. Ties go to the
  /// earlier row, so the choice is a pure function of the table.
  RateChoice select(double qber, double margin) const {
    const RateRow* best = nullptr;
    double best_leak = 0.0;
    for (const auto& r : rows_) {
      if (r.threshold < qber + margin) continue;
      const double l = leak(r);
      if (!best || l < best_leak) {
        best = &r;
        best_leak = l;
      }
    }
    if (!best) fail(ErrorKind::no_code, "no code in the rate table covers qber " + std::to_string(qber));
    return {code_index(best->code), *best, adaptation(*best)};
  }

  double max_threshold() const {
    double t = 0.0;
    for (const auto& r : rows_) t = std::max(t, r.threshold);
    return t;
  }

 private:
  std::vector<CodeSpec> specs_;
  std::vector<RateRow> rows_;
  std::vector<std::shared_ptr<const ParityCheckMatrix>> codes_;
  double target_ = 0.0;
};

}  // namespace qkd::ldpc
