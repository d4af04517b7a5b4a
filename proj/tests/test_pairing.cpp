#include <gtest/gtest.h>

#include <set>

#include "ringveil/pairing.hpp"

using namespace ringveil;

namespace {

template <class S>
class PairingSuiteTest : public ::testing::Test {};

using Suites = ::testing::Types<Bls12381, Bls12381Swapped>;
TYPED_TEST_SUITE(PairingSuiteTest, Suites);

// r as a little-endian integer, for order annihilation checks.
std::array<std::uint8_t, 32> order_le() {
  auto r = Scalar::modulus();
  std::reverse(r.begin(), r.end());
  return r;
}

Bytes random_input(SimRng& rng, std::size_t len) {
  Bytes b(len);
  fill_random(rng, b.data(), b.size());
  return b;
}

}  // namespace

TYPED_TEST(PairingSuiteTest, HashToG1IsDeterministic) {
  using S = TypeParam;
  const Bytes vid = to_bytes("VIN-5YJ3E1EA7KF317000");
  EXPECT_EQ(hash_to_g1<S>(Dst::Pid, vid), hash_to_g1<S>(Dst::Pid, vid));
  EXPECT_FALSE(hash_to_g1<S>(Dst::Pid, vid) == hash_to_g1<S>(Dst::Tag, vid));
}

TYPED_TEST(PairingSuiteTest, HashToG2IsDeterministic) {
  using S = TypeParam;
  const Bytes region = to_bytes("region-7");
  EXPECT_EQ(hash_to_g2<S>(Dst::Rid, region), hash_to_g2<S>(Dst::Rid, region));
}

TYPED_TEST(PairingSuiteTest, HashToGroupCollisionScan) {
  using S = TypeParam;
  SimRng rng(11);
  std::set<typename S::G1::Encoded> g1;
  std::set<typename S::G2::Encoded> g2;
  constexpr int kInputs = 10000;
  for (int i = 0; i < kInputs; ++i) {
    const Bytes in = random_input(rng, 24);
    g1.insert(hash_to_g1<S>(Dst::Pid, in).to_bytes());
    g2.insert(hash_to_g2<S>(Dst::Rid, in).to_bytes());
  }
  EXPECT_EQ(g1.size(), static_cast<std::size_t>(kInputs));
  EXPECT_EQ(g2.size(), static_cast<std::size_t>(kInputs));
}

TYPED_TEST(PairingSuiteTest, HashOutputsAreAnnihilatedByOrder) {
  using S = TypeParam;
  SimRng rng(12);
  const auto r = order_le();
  for (int i = 0; i < 100; ++i) {
    const Bytes in = random_input(rng, 16);
    const auto a = hash_to_g1<S>(Dst::Pid, in);
    const auto b = hash_to_g2<S>(Dst::Rid, in);
    EXPECT_FALSE(a.is_identity());
    EXPECT_TRUE(a.mul_bits(r.data(), 255).is_identity());
    EXPECT_TRUE(b.mul_bits(r.data(), 255).is_identity());
    EXPECT_TRUE(a.in_subgroup());
    EXPECT_TRUE(b.in_subgroup());
  }
}

TEST(HashToScalar, Deterministic) {
  const Bytes in = to_bytes("m||tag||t||L||U");
  EXPECT_EQ(hash_to_scalar(Dst::RingSig, in), hash_to_scalar(Dst::RingSig, in));
  EXPECT_FALSE(hash_to_scalar(Dst::RingSig, in) == hash_to_scalar(Dst::Ibe, in));
}

TEST(HashToScalar, ChiSquareOverSixteenBuckets) {
  SimRng rng(13);
  std::array<int, 16> buckets{};
  constexpr int kSamples = 10000;
  for (int i = 0; i < kSamples; ++i) {
    const auto s = hash_to_scalar(Dst::RingSig, random_input(rng, 20)).to_bytes();
    ++buckets[s.back() & 0xf];
  }
  const double expected = kSamples / 16.0;
  double chi2 = 0;
  for (int c : buckets) chi2 += (c - expected) * (c - expected) / expected;
  // Upper 0.001 quantile of chi-square with 15 degrees of freedom.
  EXPECT_LT(chi2, 37.697);
}

TEST(HashToScalar, NeverZero) {
  for (std::uint32_t i = 0; i < 100000; ++i) {
    Bytes in;
    append_u32(in, i);
    ASSERT_FALSE(hash_to_scalar(Dst::RingSig, in).is_zero());
  }
}

TYPED_TEST(PairingSuiteTest, GeneratorPairingIsNotIdentity) {
  using S = TypeParam;
  EXPECT_FALSE(S::pair(S::G1::generator(), S::G2::generator()).is_one());
}

TYPED_TEST(PairingSuiteTest, Bilinearity) {
  using S = TypeParam;
  SimRng rng(14);
  const auto P = S::G1::generator();
  const auto Q = S::G2::generator();
  const Gt base = S::pair(P, Q);
  for (int i = 0; i < 100; ++i) {
    const Scalar x = Scalar::random(rng);
    const Scalar y = Scalar::random(rng);
    ASSERT_EQ(S::pair(P * x, Q * y), gt_exp(base, x * y));
  }
}

TYPED_TEST(PairingSuiteTest, IdentityInputGivesGtIdentity) {
  using S = TypeParam;
  EXPECT_TRUE(S::pair(S::G1::identity(), S::G2::generator()).is_one());
  EXPECT_TRUE(S::pair(S::G1::generator(), S::G2::identity()).is_one());
}

TEST(GtExp, IdentityExponent) {
  SimRng rng(15);
  const Gt h = Gt::random(rng);
  EXPECT_EQ(gt_exp(h, Scalar::one()), h);
  EXPECT_TRUE(gt_exp(h, Scalar::zero()).is_one());
}

TEST(GtExp, InverseRoundTrip) {
  SimRng rng(16);
  for (int i = 0; i < 10; ++i) {
    const Gt h = Gt::random(rng);
    const Scalar s = Scalar::random(rng);
    EXPECT_EQ(gt_exp(gt_exp(h, s), scalar_inverse(s)), h);
  }
}

TEST(GtExp, Homomorphism) {
  SimRng rng(17);
  const Gt h = Gt::random(rng);
  for (int i = 0; i < 100; ++i) {
    const Scalar a = Scalar::random(rng);
    const Scalar b = Scalar::random(rng);
    ASSERT_EQ(gt_exp(h, a) * gt_exp(h, b), gt_exp(h, a + b));
  }
}

TEST(ScalarInverse, One) { EXPECT_EQ(scalar_inverse(Scalar::one()), Scalar::one()); }

TEST(ScalarInverse, DefiningProperty) {
  SimRng rng(18);
  for (int i = 0; i < 100; ++i) {
    const Scalar s = Scalar::random(rng);
    ASSERT_EQ(s * scalar_inverse(s), Scalar::one());
  }
}

TEST(ScalarInverse, ZeroThrows) {
  try {
    (void)scalar_inverse(Scalar::zero());
    FAIL() << "expected ZeroScalar";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ZeroScalar);
  }
}

TEST(ScalarEncoding, RoundTripAndRangeCheck) {
  SimRng rng(19);
  for (int i = 0; i < 50; ++i) {
    const Scalar s = Scalar::random(rng);
    EXPECT_EQ(Scalar::from_bytes(s.to_bytes()), s);
  }
  EXPECT_THROW((void)Scalar::from_bytes(Scalar::modulus()), Error);
  auto r_minus_1 = Scalar::modulus();
  r_minus_1.back() -= 1;
  EXPECT_EQ(Scalar::from_bytes(r_minus_1), -Scalar::one());
}

TYPED_TEST(PairingSuiteTest, PointEncodingRoundTrip) {
  using S = TypeParam;
  SimRng rng(20);
  for (int i = 0; i < 50; ++i) {
    const auto a = S::G1::random(rng);
    const auto b = S::G2::random(rng);
    EXPECT_EQ(S::G1::from_bytes(a.to_bytes()), a);
    EXPECT_EQ(S::G2::from_bytes(b.to_bytes()), b);
  }
  EXPECT_TRUE(S::G1::from_bytes(S::G1::identity().to_bytes()).is_identity());
}

// Compressed encodings carry the y-sign in bit 5 of the first byte; flipping
// it yields the negated point by construction. Every other single-bit
// corruption must be rejected.
TYPED_TEST(PairingSuiteTest, CorruptedPointEncodingRejected) {
  using S = TypeParam;
  using G1 = typename S::G1;
  SimRng rng(21);
  const auto a = G1::random(rng);
  const auto enc = a.to_bytes();
  int rejected = 0;
  for (std::size_t bit = 0; bit < enc.size() * 8; ++bit) {
    auto bad = enc;
    bad[bit / 8] ^= static_cast<std::uint8_t>(0x80 >> (bit % 8));
    if (bit == 2) {
      EXPECT_EQ(G1::from_bytes(bad), -a);
      continue;
    }
    try {
      const auto decoded = G1::from_bytes(bad);
      ADD_FAILURE() << "bit " << bit << " decoded to "
                    << (decoded == a ? "the same" : "a different") << " element";
    } catch (const Error&) {
      ++rejected;
    }
  }
  EXPECT_EQ(rejected, static_cast<int>(enc.size() * 8 - 1));
}

TEST(GtEncoding, RoundTripAndCorruption) {
  SimRng rng(22);
  const Gt h = Gt::random(rng);
  const auto enc = h.to_bytes();
  EXPECT_EQ(Gt::from_bytes(enc), h);
  for (int i = 0; i < 200; ++i) {
    auto bad = enc;
    const auto bit = uniform_index(rng, bad.size() * 8);
    bad[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    EXPECT_THROW((void)Gt::from_bytes(bad), Error);
  }
}

TEST(PairingCounter, CountsEvaluations) {
  PairingCounter c;
  (void)pairing(G1Point::generator(), G2Point::generator());
  (void)Bls12381Swapped::pair(G2Point::generator(), G1Point::generator());
  EXPECT_EQ(c.count(), 2u);
}

TEST(Suites, ElementSizesDiffer) {
  EXPECT_EQ(Bls12381::G1::kSize, 48u);
  EXPECT_EQ(Bls12381Swapped::G1::kSize, 96u);
  EXPECT_EQ(Gt::kSize, 576u);
  EXPECT_EQ(Scalar::kSize, 32u);
}

TYPED_TEST(PairingSuiteTest, MultiScalarMatchesNaiveSum) {
  using S = TypeParam;
  SimRng rng(77);
  for (std::size_t n : {0u, 1u, 2u, 3u, 17u, 64u}) {
    std::vector<typename S::G1> pts1;
    std::vector<typename S::G2> pts2;
    std::vector<Scalar> sc;
    typename S::G1 want1;
    typename S::G2 want2;
    for (std::size_t i = 0; i < n; ++i) {
      pts1.push_back(S::G1::random(rng));
      pts2.push_back(S::G2::random(rng));
      sc.push_back(i == 1 ? Scalar::from_u64(1) : Scalar::random(rng));
      want1 += pts1.back() * sc.back();
      want2 += pts2.back() * sc.back();
    }
    EXPECT_EQ(S::G1::msm(pts1, sc), want1) << n;
    EXPECT_EQ(S::G2::msm(pts2, sc), want2) << n;
  }
  std::vector<typename S::G1> one{S::G1::generator()};
  EXPECT_THROW((void)S::G1::msm(one, std::vector<Scalar>{}), Error);
}
