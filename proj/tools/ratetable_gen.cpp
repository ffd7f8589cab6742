// Regenerates the thresholds of a rate table by Monte Carlo bisection.
//   qkd-ratetable --table assets/rate_table.json --trials 200 --target 0.95 [--out file] [--resume]
#include <qkd/ratetable.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>

namespace {

double inverse_h2(double h) {
  double lo = 0.0, hi = 0.5;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (qkd::ldpc::binary_entropy(mid) < h ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rate-table threshold generator"};
  std::string table, out;
  std::size_t trials = 200;
  double target = 0.95;
  std::uint64_t seed = 1;
  bool resume = false;
  app.add_option("--table", table, "rate table (rows give the grid)")->required();
  app.add_option("--out", out, "output path (default: overwrite --table)");
  app.add_option("--trials", trials, "blocks per bisection step");
  app.add_option("--target", target, "convergence ratio defining the threshold");
  app.add_option("--seed", seed);
  app.add_flag("--resume", resume, "keep rows that already have a threshold");
  CLI11_PARSE(app, argc, argv);
  if (out.empty()) out = table;

  try {
    auto ens = qkd::ldpc::CodeEnsemble::load(table);
    ens.set_target(target);
    for (auto& row : ens.rows()) {
      if (resume && row.threshold > 0) continue;
      const auto t0 = std::chrono::steady_clock::now();
      const auto& H = ens.code(ens.code_index(row.code));
      const auto ra = ens.adaptation(row);
      const double L = qkd::ldpc::leak_ratio(H, ra);
      const double hi = inverse_h2(std::min(L, 1.0));
      const double lo = inverse_h2(L / 2.0);
      row.threshold = qkd::ldpc::find_threshold(H, ra, target, trials, seed, lo, hi, 0.0005);
      std::printf("%-5s p=%5zu s=%4zu L=%.4f threshold=%.4f (%.1fs)\n", row.code.c_str(), row.punctured,
                  row.shortened, L, row.threshold,
                  std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      std::fflush(stdout);
    }
    ens.save(out, trials);
  } catch (const qkd::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
