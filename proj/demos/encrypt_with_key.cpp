// Encrypts a message with AES-128-CTR under bits drawn from a key store, then
// decrypts it again. Each payload consumes 128 fresh key bits.

#include <qkd/keystore.hpp>
#include <qkd/rng.hpp>

#include <cstdio>
#include <string>

int main() {
  using namespace qkd;
  KeyStore store;
  store.append(deterministic_rng(2024, 512), "demo key material");

  const std::string text = "attack at dawn, then regroup at the ridge";
  for (int i = 0; i < 2; ++i) {
    const auto c = encrypt_payload({text.begin(), text.end()}, store);
    const auto back = decrypt_payload(c, store);
    std::printf("payload %d: key offset %llu, %zu bytes, round trip %s\n", i,
                static_cast<unsigned long long>(nonce_key_offset(c.nonce)), c.data.size(),
                std::string(back.begin(), back.end()) == text ? "ok" : "FAILED");
  }
  std::printf("%llu of %llu key bits left\n", static_cast<unsigned long long>(store.available()),
              static_cast<unsigned long long>(store.total()));
  for (const auto& e : store.ledger())
    std::printf("  %s %llu+%llu  %s\n", e.op == LedgerEntry::Op::append ? "append " : "consume",
                static_cast<unsigned long long>(e.offset), static_cast<unsigned long long>(e.length), e.purpose.c_str());
}
