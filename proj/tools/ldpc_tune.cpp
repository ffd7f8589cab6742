// Development harness: Monte Carlo convergence of a lifted protograph code.
// usage: ldpc_tune <protograph> <lift> <seed> <trials> <qber> <punct> [<qber> <punct> ...]
#include <qkd/ldpc.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

int main(int argc, char** argv) {
  using namespace qkd;
  if (argc < 7) {
    std::cerr << "usage: ldpc_tune <protograph> <lift> <seed> <trials> <qber> <punct> ...\n";
    return 1;
  }
  std::ifstream pf(argv[1]);
  auto base = ldpc::parse_protograph(pf);
  const std::size_t lift = std::stoul(argv[2]);
  const std::uint64_t seed = std::stoull(argv[3]);
  const int trials = std::stoi(argv[4]);
  auto t0 = std::chrono::steady_clock::now();
  auto H = ldpc::build_matrix(base, lift, seed);
  auto t1 = std::chrono::steady_clock::now();
  std::printf("n=%zu m=%zu edges=%zu 4cycles=%zu build=%.2fs\n", H.n(), H.m(), H.edges(), H.count_4cycles(),
              std::chrono::duration<double>(t1 - t0).count());
  for (int a = 5; a + 1 < argc; a += 2) {
    const double q = std::stod(argv[a]);
    const std::size_t p = std::stoul(argv[a + 1]);
    auto ra = ldpc::make_adaptation(H, p);
    ldpc::Decoder dec(H, ra);
    Rng rng(seed ^ 0x5555);
    int ok = 0, wrong = 0;
    double iters = 0;
    const std::size_t nk = H.n();
    auto ts = std::chrono::steady_clock::now();
    for (int t = 0; t < trials; ++t) {
      BitBlock x = rng.bits(nk);
      auto syn = ldpc::encode_syndrome(H, x, ra);
      BitBlock y = x;
      for (std::size_t i = 0; i < nk; ++i)
        if (rng.bernoulli(q)) y.flip(i);
      auto r = dec.decode(y, syn, q);
      iters += r.iterations_used;
      if (r.converged) {
        ++ok;
        // punctured filler is reconstructed too, so compare the whole word
        if (!(r.corrected == x)) {
          ++wrong;
          auto d = r.corrected ^ x;
          std::size_t core = 0;
          for (std::size_t i = 0; i < d.size(); ++i)
            if (d.get(i) && i < 12 * lift) ++core;
          std::printf("  wrong: weight=%zu core=%zu first:", d.popcount(), core);
          for (std::size_t i = 0, k = 0; i < d.size() && k < 6; ++i) if (d.get(i)) { std::printf(" %zu", i); ++k; }
          std::printf("\n");
        }
      }
    }
    auto te = std::chrono::steady_clock::now();
    const double leak = static_cast<double>(ldpc::disclosed_bits(H, ra));
    const double keyb = static_cast<double>(nk - p);
    std::printf("q=%.4f p=%zu key=%.0f leak=%.0f L=%.4f fEC=%.3f conv=%.4f wrong=%d iters=%.1f t/blk=%.1fms\n", q, p,
                keyb, leak, leak / keyb, leak / (keyb * ldpc::binary_entropy(q)), ok / double(trials), wrong,
                iters / trials, 1e3 * std::chrono::duration<double>(te - ts).count() / trials);
  }
}
