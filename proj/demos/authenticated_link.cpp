// Two endpoints exchanging authenticated frames; a tampered frame is rejected.

#include <qkd/auth.hpp>

#include <cstdio>
#include <cstring>
#include <string>
#include <thread>

int main() {
  using namespace qkd;
  using namespace qkd::auth;

  const std::size_t pool = 8;
  const auto keys = make_link_keys(deterministic_rng(7, 2 * 128 * (1 + pool)), pool, true, 99);
  auto [ta, tb] = in_process_pair();
  auto [alice, bob] = make_channel_pair(1, keys, std::move(ta), std::move(tb));

  std::thread sender([&] {
    for (const char* s : {"basis list", "syndrome", "pa seed"})
      alice.send(MsgType::app, std::span(reinterpret_cast<const std::uint8_t*>(s), std::strlen(s)));
  });
  for (int i = 0; i < 3; ++i) {
    const auto p = bob.recv(MsgType::app);
    std::printf("bob got \"%s\"\n", std::string(p.begin(), p.end()).c_str());
  }
  sender.join();
  std::printf("k2 keys used by alice: %zu, epoch %u\n", alice.endpoint().send_keys().k2_pool.cursor(),
              alice.endpoint().send_keys().epoch);

  // Mirror endpoints to show a flipped bit being caught.
  AuthEndpoint a(2, keys.a_to_b, keys.b_to_a), b(2, keys.b_to_a, keys.a_to_b);
  const std::uint8_t msg[] = {1, 2, 3};
  auto frame = a.seal(MsgType::app, msg);
  frame[kFrameHeader + 1] ^= 0x10;  // a payload byte
  try {
    b.open(frame);
    std::printf("tampered frame accepted?!\n");
    return 1;
  } catch (const Error& e) {
    std::printf("tampered frame rejected: %s\n", e.what());
  }
}
