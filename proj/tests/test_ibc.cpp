#include <gtest/gtest.h>

#include "ringveil/ibc.hpp"

using namespace ringveil;

namespace {

template <class S>
class IbcTest : public ::testing::Test {
 protected:
  SimRng rng{100};
  MasterSecret ms = MasterSecret::generate(rng);
  typename S::G2 pk_trac = S::G2::generator() * Scalar::random(rng);
  SystemParams<S> pp = make_params<S>(ms, pk_trac);
  revocation::RevocationTree bt{8};
};

using Suites = ::testing::Types<Bls12381, Bls12381Swapped>;
TYPED_TEST_SUITE(IbcTest, Suites);

Bytes vid_of(int i) { return to_bytes("VID-" + std::to_string(i)); }

}  // namespace

TYPED_TEST(IbcTest, ParamsConsistent) {
  using S = TypeParam;
  EXPECT_TRUE(this->pp.consistent());
  const auto other = make_params<S>(MasterSecret::generate(this->rng), this->pk_trac);
  EXPECT_FALSE(other.pk1 == this->pp.pk1);
  SystemParams<S> broken = this->pp;
  broken.pk2 = broken.pk2 + S::G2::generator();
  EXPECT_FALSE(broken.consistent());
}

TYPED_TEST(IbcTest, VehicleCredentialInvariants) {
  using S = TypeParam;
  const auto c = issue_vehicle<S>(this->ms, vid_of(1), this->bt);
  EXPECT_TRUE(credential_consistent(this->pp, c));
  EXPECT_EQ(c.pid, hash_to_g1<S>(Dst::Pid, vid_of(1)));
  EXPECT_TRUE(revocation::is_well_formed_path(c.leaf_path, this->bt.height()));
  EXPECT_EQ(c.leaf_path.front(), this->bt.first_leaf());
  // Consistency is a public check: a credential with a foreign psk fails.
  auto forged = c;
  forged.psk = c.pid * Scalar::random(this->rng);
  EXPECT_FALSE(credential_consistent(this->pp, forged));
}

TYPED_TEST(IbcTest, DuplicateVehicleRejected) {
  using S = TypeParam;
  (void)issue_vehicle<S>(this->ms, vid_of(2), this->bt);
  try {
    (void)issue_vehicle<S>(this->ms, vid_of(2), this->bt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DuplicateIdentity);
  }
}

TYPED_TEST(IbcTest, TreeFillsAtHeightFour) {
  using S = TypeParam;
  revocation::RevocationTree small(4);
  for (int i = 0; i < 16; ++i) (void)issue_vehicle<S>(this->ms, vid_of(i), small);
  try {
    (void)issue_vehicle<S>(this->ms, vid_of(16), small);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::TreeFull);
  }
}

TYPED_TEST(IbcTest, RsuCredential) {
  using S = TypeParam;
  const auto a = issue_rsu<S>(this->ms, to_bytes("region-A"));
  const auto b = issue_rsu<S>(this->ms, to_bytes("region-B"));
  EXPECT_TRUE(credential_consistent(this->pp, a));
  EXPECT_TRUE(credential_consistent(this->pp, b));
  EXPECT_FALSE(a.rid == b.rid);
  const auto again = issue_rsu<S>(this->ms, to_bytes("region-A"));
  EXPECT_EQ(again.rid, a.rid);
  EXPECT_EQ(again.rsk, a.rsk);
}

TYPED_TEST(IbcTest, KeyAgreement) {
  using S = TypeParam;
  std::vector<VehicleCredential<S>> vs;
  std::vector<RsuCredential<S>> rs;
  for (int i = 0; i < 10; ++i) vs.push_back(issue_vehicle<S>(this->ms, vid_of(100 + i), this->bt));
  for (int j = 0; j < 3; ++j) rs.push_back(issue_rsu<S>(this->ms, to_bytes("r" + std::to_string(j))));
  for (const auto& v : vs)
    for (const auto& r : rs) ASSERT_EQ(shared_key_vehicle<S>(v.psk, r.rid), shared_key_rsu<S>(v.pid, r.rsk));
  EXPECT_NE(shared_key_vehicle<S>(vs[0].psk, rs[0].rid), shared_key_vehicle<S>(vs[0].psk, rs[1].rid));
  EXPECT_NE(shared_key_vehicle<S>(vs[0].psk, rs[0].rid), shared_key_vehicle<S>(vs[1].psk, rs[0].rid));
}

TYPED_TEST(IbcTest, IbeRoundTrip) {
  using S = TypeParam;
  const auto v = issue_vehicle<S>(this->ms, vid_of(3), this->bt);
  const auto r = issue_rsu<S>(this->ms, to_bytes("region-A"));
  const auto ct = ibe_encrypt(this->pp, r.rid, v.pid, this->rng);
  EXPECT_EQ(ct.v.size(), S::G1::kSize);
  EXPECT_EQ(ibe_decrypt<S>(r.rsk, ct), v.pid);
  const auto ct2 = ibe_encrypt(this->pp, r.rid, v.pid, this->rng);
  EXPECT_FALSE(ct == ct2);
  EXPECT_EQ(decode_ibe_ciphertext<S>(encode_ibe_ciphertext(ct)), ct);
}

TYPED_TEST(IbcTest, IbeWrongRegionDoesNotYieldPid) {
  using S = TypeParam;
  const auto v = issue_vehicle<S>(this->ms, vid_of(4), this->bt);
  const auto a = issue_rsu<S>(this->ms, to_bytes("region-A"));
  const auto b = issue_rsu<S>(this->ms, to_bytes("region-B"));
  for (int i = 0; i < 20; ++i) {
    const auto ct = ibe_encrypt(this->pp, a.rid, v.pid, this->rng);
    try {
      EXPECT_FALSE(ibe_decrypt<S>(b.rsk, ct) == v.pid);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::InvalidPid);
    }
  }
}

TYPED_TEST(IbcTest, IbeRandomMaskMostlyInvalid) {
  using S = TypeParam;
  const auto r = issue_rsu<S>(this->ms, to_bytes("region-A"));
  int invalid = 0;
  for (int i = 0; i < 100; ++i) {
    IbeCiphertext<S> ct{S::G1::random(this->rng), Bytes(S::G1::kSize)};
    fill_random(this->rng, ct.v.data(), ct.v.size());
    try {
      (void)ibe_decrypt<S>(r.rsk, ct);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::InvalidPid);
      ++invalid;
    }
  }
  EXPECT_GE(invalid, 95);
}

TYPED_TEST(IbcTest, IbeMalformedCiphertext) {
  using S = TypeParam;
  const auto v = issue_vehicle<S>(this->ms, vid_of(5), this->bt);
  const auto r = issue_rsu<S>(this->ms, to_bytes("region-A"));
  Bytes enc = encode_ibe_ciphertext(ibe_encrypt(this->pp, r.rid, v.pid, this->rng));
  enc[S::G1::kSize - 1] ^= 0x01;
  try {
    (void)decode_ibe_ciphertext<S>(enc);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MalformedCiphertext);
  }
  EXPECT_THROW((void)decode_ibe_ciphertext<S>(ByteView(enc).first(enc.size() - 1)), Error);
  IbeCiphertext<S> short_v{S::G1::generator(), Bytes(3)};
  EXPECT_THROW((void)ibe_decrypt<S>(r.rsk, short_v), Error);
}

TEST(MasterSecret, ZeroRejected) { EXPECT_THROW(MasterSecret(Scalar::zero()), Error); }
