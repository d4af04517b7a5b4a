#include <gtest/gtest.h>

#include <set>

#include "ringveil/ring_sig.hpp"

using namespace ringveil;

namespace {

template <class S>
struct Fixture {
  SimRng rng;
  MasterSecret ms;
  SystemParams<S> pp;
  std::vector<typename S::G1> pids;
  std::vector<typename S::G1> psks;

  explicit Fixture(std::uint64_t seed, std::size_t members = 32)
      : rng(seed), ms(MasterSecret::generate(rng)), pp(make_params<S>(ms, S::G2::generator())) {
    for (std::size_t i = 0; i < members; ++i) {
      pids.push_back(pseudonym_of<S>(to_bytes("veh-" + std::to_string(i))));
      psks.push_back(pids.back() * ms.value());
    }
  }

  SubRing<S> ring(std::size_t offset, std::size_t n) const {
    return SubRing<S>(std::vector(pids.begin() + offset, pids.begin() + offset + n));
  }

  SignedPayload payload(std::string_view m, std::uint64_t t) {
    return {to_bytes(m), Gt::random(rng), t};
  }

  RingSignature<S> sign(std::size_t offset, std::size_t n, std::size_t k, const SignedPayload& p) {
    return ring_sign(pp, psks[offset + k], k, p, ring(offset, n), rng);
  }
};

template <class S>
class RingSigTest : public ::testing::Test {};

using Suites = ::testing::Types<Bls12381, Bls12381Swapped>;
TYPED_TEST_SUITE(RingSigTest, Suites);

}  // namespace

TYPED_TEST(RingSigTest, CompletenessAcrossRingSizes) {
  using S = TypeParam;
  Fixture<S> f(200);
  for (std::size_t n = 1; n <= 30; ++n) {
    const std::size_t k = uniform_index(f.rng, n);
    const auto p = f.payload("msg", 1000 + n);
    const auto sig = f.sign(0, n, k, p);
    EXPECT_EQ(sig.u_list.size(), n);
    ASSERT_TRUE(ring_verify(f.pp, p, f.ring(0, n), sig)) << "n=" << n;
  }
}

TYPED_TEST(RingSigTest, SignerPositionDoesNotAffectVerification) {
  using S = TypeParam;
  Fixture<S> f(201);
  const auto p = f.payload("hello", 7);
  const auto first = f.sign(0, 8, 0, p);
  const auto last = f.sign(0, 8, 7, p);
  EXPECT_TRUE(ring_verify(f.pp, p, f.ring(0, 8), first));
  EXPECT_TRUE(ring_verify(f.pp, p, f.ring(0, 8), last));
  EXPECT_EQ(first.u_list.size(), last.u_list.size());
}

TYPED_TEST(RingSigTest, SignerChecks) {
  using S = TypeParam;
  Fixture<S> f(202);
  const auto p = f.payload("x", 1);
  try {
    (void)ring_sign(f.pp, f.psks[5], 0, p, f.ring(0, 4), f.rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SignerMismatch);
  }
  try {
    (void)ring_sign(f.pp, f.psks[0], 4, p, f.ring(0, 4), f.rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::IndexOutOfRange);
  }
}

TYPED_TEST(RingSigTest, Mutations) {
  using S = TypeParam;
  Fixture<S> f(203);
  const auto p = f.payload("brake warning", 500);
  const auto ring = f.ring(0, 5);
  const auto sig = f.sign(0, 5, 2, p);
  ASSERT_TRUE(ring_verify(f.pp, p, ring, sig));

  auto m = p;
  m.m[0] ^= 0x01;
  EXPECT_FALSE(ring_verify(f.pp, m, ring, sig));
  auto t = p;
  t.t ^= 1;
  EXPECT_FALSE(ring_verify(f.pp, t, ring, sig));
  auto tag = p;
  tag.tag = Gt::random(f.rng);
  EXPECT_FALSE(ring_verify(f.pp, tag, ring, sig));

  auto members = ring.members();
  std::swap(members[0], members[3]);
  auto sig_perm = sig;
  std::swap(sig_perm.u_list[0], sig_perm.u_list[3]);
  EXPECT_FALSE(ring_verify(f.pp, p, SubRing<S>(members), sig));
  EXPECT_FALSE(ring_verify(f.pp, p, SubRing<S>(members), sig_perm));

  auto u = sig;
  u.u_list[1] = u.u_list[1] + S::G1::generator();
  EXPECT_FALSE(ring_verify(f.pp, p, ring, u));
  auto v = sig;
  v.v = v.v + S::G1::generator();
  EXPECT_FALSE(ring_verify(f.pp, p, ring, v));
}

TYPED_TEST(RingSigTest, LengthMismatch) {
  using S = TypeParam;
  Fixture<S> f(204);
  const auto p = f.payload("x", 1);
  auto sig = f.sign(0, 3, 0, p);
  sig.u_list.pop_back();
  try {
    (void)ring_verify(f.pp, p, f.ring(0, 3), sig);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::LengthMismatch);
  }
}

TYPED_TEST(RingSigTest, SubRingValidation) {
  using S = TypeParam;
  Fixture<S> f(205, 3);
  EXPECT_THROW(SubRing<S>(std::vector<typename S::G1>{}), Error);
  try {
    SubRing<S>({f.pids[0], f.pids[1], f.pids[0]});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DuplicateMember);
  }
}

TYPED_TEST(RingSigTest, TwoPairingsPerVerify) {
  using S = TypeParam;
  Fixture<S> f(206);
  for (std::size_t n : {1u, 5u, 30u}) {
    const auto p = f.payload("count", n);
    const auto sig = f.sign(0, n, 0, p);
    PairingCounter c;
    EXPECT_TRUE(ring_verify(f.pp, p, f.ring(0, n), sig));
    EXPECT_EQ(c.count(), 2u);
  }
}

TYPED_TEST(RingSigTest, BatchAgreesWithSingles) {
  using S = TypeParam;
  Fixture<S> f(207);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t eta = 2 + uniform_index(f.rng, 9);
    std::vector<SignedPayload> payloads;
    std::vector<SubRing<S>> rings;
    std::vector<RingSignature<S>> sigs;
    for (std::size_t i = 0; i < eta; ++i) {
      const std::size_t n = 1 + uniform_index(f.rng, 6);
      const std::size_t off = uniform_index(f.rng, f.pids.size() - n);
      payloads.push_back(f.payload("b" + std::to_string(i), i));
      rings.push_back(f.ring(off, n));
      sigs.push_back(f.sign(off, n, uniform_index(f.rng, n), payloads.back()));
    }
    std::set<std::size_t> corrupt;
    const auto f_count = uniform_index(f.rng, 4);
    while (corrupt.size() < std::min<std::size_t>(f_count, eta)) corrupt.insert(uniform_index(f.rng, eta));
    for (auto i : corrupt) sigs[i].v = S::G1::random(f.rng);

    std::vector<std::size_t> expected;
    for (std::size_t i = 0; i < eta; ++i)
      if (!ring_verify(f.pp, payloads[i], rings[i], sigs[i])) expected.push_back(i);
    EXPECT_EQ(expected, std::vector<std::size_t>(corrupt.begin(), corrupt.end()));

    PairingCounter c;
    EXPECT_EQ(batch_verify<S>(f.pp, payloads, rings, sigs), expected.empty());
    EXPECT_EQ(c.count(), 2u);
    c.reset();
    EXPECT_EQ(random_scaling_batch_verify<S>(f.pp, payloads, rings, sigs, f.rng), expected.empty());
    EXPECT_EQ(c.count(), 2u);
    EXPECT_EQ(find_invalid<S>(f.pp, payloads, rings, sigs, f.rng), expected);
  }
}

TYPED_TEST(RingSigTest, FindInvalidExamples) {
  using S = TypeParam;
  Fixture<S> f(208);
  std::vector<SignedPayload> payloads;
  std::vector<SubRing<S>> rings;
  std::vector<RingSignature<S>> sigs;
  for (std::size_t i = 0; i < 16; ++i) {
    payloads.push_back(f.payload("fi", i));
    rings.push_back(f.ring(i, 2));
    sigs.push_back(f.sign(i, 2, i % 2, payloads.back()));
  }
  EXPECT_TRUE(find_invalid<S>(f.pp, payloads, rings, sigs, f.rng).empty());
  auto bad = sigs;
  bad[7].v = S::G1::random(f.rng);
  EXPECT_EQ(find_invalid<S>(f.pp, payloads, rings, bad, f.rng), std::vector<std::size_t>{7});

  std::span<const SignedPayload> p4(payloads.data(), 4);
  std::span<const SubRing<S>> r4(rings.data(), 4);
  std::vector<RingSignature<S>> all_bad(sigs.begin(), sigs.begin() + 4);
  for (auto& s : all_bad) s.u_list[0] = S::G1::random(f.rng);
  EXPECT_EQ(find_invalid<S>(f.pp, p4, r4, std::span<const RingSignature<S>>(all_bad), f.rng),
            (std::vector<std::size_t>{0, 1, 2, 3}));
}

TYPED_TEST(RingSigTest, BatchShapeErrors) {
  using S = TypeParam;
  Fixture<S> f(209);
  try {
    (void)batch_verify<S>(f.pp, {}, {}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyBatch);
  }
  std::vector<SignedPayload> payloads{f.payload("a", 1)};
  std::vector<SubRing<S>> rings;
  std::vector<RingSignature<S>> sigs;
  try {
    (void)batch_verify<S>(f.pp, payloads, rings, sigs);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::LengthMismatch);
  }
}

// V1 + D and V2 - D leave the aggregate equation unchanged.
TYPED_TEST(RingSigTest, CancellationForgery) {
  using S = TypeParam;
  Fixture<S> f(210);
  std::vector<SignedPayload> payloads{f.payload("one", 1), f.payload("two", 2)};
  std::vector<SubRing<S>> rings{f.ring(0, 3), f.ring(3, 3)};
  std::vector<RingSignature<S>> sigs{f.sign(0, 3, 1, payloads[0]), f.sign(3, 3, 2, payloads[1])};
  const auto delta = S::G1::random(f.rng);
  sigs[0].v = sigs[0].v + delta;
  sigs[1].v = sigs[1].v - delta;
  EXPECT_FALSE(ring_verify(f.pp, payloads[0], rings[0], sigs[0]));
  EXPECT_FALSE(ring_verify(f.pp, payloads[1], rings[1], sigs[1]));
  EXPECT_TRUE(batch_verify<S>(f.pp, payloads, rings, sigs));
  EXPECT_FALSE(random_scaling_batch_verify<S>(f.pp, payloads, rings, sigs, f.rng));
  EXPECT_EQ(find_invalid<S>(f.pp, payloads, rings, sigs, f.rng), (std::vector<std::size_t>{0, 1}));
}
