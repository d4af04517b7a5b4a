#include <gtest/gtest.h>

#include <set>

#include "ringveil/sym.hpp"

using namespace ringveil;
using namespace ringveil::sym;

namespace {

SymKey random_key(SimRng& rng) {
  SymKey k;
  fill_random(rng, k.data(), k.size());
  return k;
}

Nonce random_nonce(SimRng& rng) {
  Nonce n;
  fill_random(rng, n.data(), n.size());
  return n;
}

Bytes random_bytes(SimRng& rng, std::size_t len) {
  Bytes b(len);
  fill_random(rng, b.data(), b.size());
  return b;
}

}  // namespace

TEST(Kdf, DeterministicAndContextSeparated) {
  SimRng rng(1);
  const Gt k = Gt::random(rng);
  EXPECT_EQ(kdf(k, "ctx", 32), kdf(k, "ctx", 32));
  EXPECT_NE(kdf(k, "ctx", 32), kdf(k, "ctx2", 32));
  EXPECT_NE(kdf(k, "ctx", 32), kdf(Gt::random(rng), "ctx", 32));
  // Shorter outputs are prefixes of longer ones under HKDF.
  const Bytes long_out = kdf(k, "ctx", 64);
  EXPECT_EQ(Bytes(long_out.begin(), long_out.begin() + 32), kdf(k, "ctx", 32));
}

TEST(Kdf, LengthLimits) {
  SimRng rng(2);
  const Gt k = Gt::random(rng);
  EXPECT_TRUE(kdf(k, "x", 0).empty());
  EXPECT_EQ(kdf(k, "x", kMaxKdfOutput).size(), kMaxKdfOutput);
  try {
    (void)kdf(k, "x", kMaxKdfOutput + 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::LengthTooLarge);
  }
}

// RFC 5869 style check against OpenSSL's one-shot HMAC: with a single block,
// HKDF-Expand output is HMAC(PRK, info || 0x01) where PRK = HMAC(salt, IKM).
TEST(Kdf, MatchesHmacConstruction) {
  const Bytes ikm = to_bytes("input keying material");
  const Bytes info = to_bytes("info");
  const Bytes salt = to_bytes("ringveil-kdf-v1");
  std::array<std::uint8_t, 64> prk{};
  unsigned len = 0;
  HMAC(EVP_sha512(), salt.data(), static_cast<int>(salt.size()), ikm.data(), ikm.size(), prk.data(), &len);
  Bytes block = info;
  block.push_back(0x01);
  std::array<std::uint8_t, 64> okm{};
  HMAC(EVP_sha512(), prk.data(), static_cast<int>(prk.size()), block.data(), block.size(), okm.data(), &len);
  EXPECT_EQ(kdf_bytes(ikm, info, 64), Bytes(okm.begin(), okm.end()));
}

TEST(SymEncrypt, RoundTripAcrossLengths) {
  SimRng rng(3);
  std::vector<std::size_t> lengths = {0, 1, 15, 16, 17, 255, 4096, 65535, 65536};
  for (int i = 0; i < 40; ++i) lengths.push_back(uniform_index(rng, 65537));
  for (auto len : lengths) {
    const SymKey k = random_key(rng);
    const Nonce n = random_nonce(rng);
    const Bytes m = random_bytes(rng, len);
    const Bytes c = sym_encrypt(k, m, n);
    ASSERT_EQ(c.size(), kNonceSize + len + kAuthSize);
    EXPECT_TRUE(std::equal(n.begin(), n.end(), c.begin()));
    ASSERT_EQ(sym_decrypt(k, c, n), m) << "length " << len;
    ASSERT_EQ(sym_decrypt(k, c), m);
  }
}

TEST(SymEncrypt, EveryBitFlipRejected) {
  SimRng rng(4);
  const SymKey k = random_key(rng);
  const Nonce n = random_nonce(rng);
  const Bytes c = sym_encrypt(k, to_bytes("path 8 4 2 1"), n);
  for (std::size_t bit = 0; bit < c.size() * 8; ++bit) {
    Bytes bad = c;
    bad[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    EXPECT_THROW((void)sym_decrypt(k, bad, n), Error) << "bit " << bit;
  }
}

TEST(SymEncrypt, WrongKeyOrNonceRejected) {
  SimRng rng(5);
  const SymKey k = random_key(rng);
  const Nonce n = random_nonce(rng);
  const Bytes c = sym_encrypt(k, to_bytes("payload"), n);
  try {
    (void)sym_decrypt(random_key(rng), c, n);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::AuthFailure);
  }
  try {
    (void)sym_decrypt(k, c, random_nonce(rng));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::AuthFailure);
  }
  EXPECT_THROW((void)sym_decrypt(k, Bytes(kNonceSize + kAuthSize - 1)), Error);
}

TEST(Mac, VerifiesOnlyMatchingPair) {
  SimRng rng(6);
  const SymKey k = random_key(rng);
  const Bytes m = to_bytes("C' || t_d");
  const MacTag t = mac(k, m);
  EXPECT_TRUE(mac_verify(k, m, t));
  Bytes m2 = m;
  m2[0] ^= 1;
  EXPECT_FALSE(mac_verify(k, m2, t));
  EXPECT_FALSE(mac_verify(random_key(rng), m, t));
}

TEST(Mac, RandomMutationsNeverVerify) {
  SimRng rng(7);
  const SymKey k = random_key(rng);
  const Bytes m = random_bytes(rng, 64);
  const MacTag t = mac(k, m);
  for (int i = 0; i < 10000; ++i) {
    Bytes m2 = m;
    MacTag t2 = t;
    const bool mutate_msg = bernoulli(rng, 0.5);
    if (mutate_msg) {
      m2[uniform_index(rng, m2.size())] ^= static_cast<std::uint8_t>(1 + uniform_index(rng, 255));
    } else {
      t2[uniform_index(rng, t2.size())] ^= static_cast<std::uint8_t>(1 + uniform_index(rng, 255));
    }
    ASSERT_FALSE(mac_verify(k, m2, t2));
  }
}

TEST(ChannelKeys, IndependentAndDeterministic) {
  SimRng rng(8);
  const Gt s = Gt::random(rng);
  const auto a = derive_channel_keys(s);
  const auto b = derive_channel_keys(s);
  EXPECT_EQ(a.enc, b.enc);
  EXPECT_EQ(a.mac, b.mac);
  EXPECT_NE(a.enc, a.mac);
  EXPECT_EQ(Bytes(a.enc.begin(), a.enc.end()), kdf(s, "ringlist-enc", 32));
}

TEST(Nonce, DistinctPerCounter) {
  SimRng rng(9);
  const Gt s = Gt::random(rng);
  std::set<Nonce> seen;
  for (std::uint64_t c = 0; c < 1000; ++c) seen.insert(derive_nonce(s, c));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(derive_nonce(s, 5), derive_nonce(s, 5));
}
