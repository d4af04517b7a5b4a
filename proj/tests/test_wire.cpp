#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <functional>

#include "golden.hpp"
#include "ringveil/wire.hpp"

using namespace ringveil;
using namespace ringveil::wire;

namespace {

template <class S>
class WireTest : public ::testing::Test {
 protected:
  using G1 = typename S::G1;
  using G2 = typename S::G2;

  SimRng rng{300};
  MasterSecret ms = MasterSecret::generate(rng);
  SystemParams<S> pp = make_params<S>(ms, G2::random(rng));
  std::vector<G1> pids;
  std::vector<G1> psks;

  void SetUp() override {
    for (int i = 0; i < 12; ++i) {
      pids.push_back(G1::random(rng));
      psks.push_back(pids.back() * ms.value());
    }
  }

  Bytes random_bytes(std::size_t n) {
    Bytes b(n);
    fill_random(rng, b.data(), b.size());
    return b;
  }

  BroadcastMsg<S> random_broadcast() {
    const std::size_t n = 1 + uniform_index(rng, 6);
    const std::size_t off = uniform_index(rng, pids.size() - n + 1);
    SubRing<S> ring(std::vector(pids.begin() + off, pids.begin() + off + n));
    const std::size_t k = uniform_index(rng, n);
    SignedPayload p{random_bytes(uniform_index(rng, 200)), Gt::random(rng), rng()};
    auto sig = ring_sign(pp, psks[off + k], k, p, ring, rng);
    return {p.m, std::move(sig), std::move(ring), p.t, p.tag};
  }

  RingRequest<S> random_request() {
    return {{G1::random(rng), random_bytes(G1::kSize)}, random_bytes(uniform_index(rng, 600))};
  }

  RingGrant random_grant() {
    RingGrant g;
    g.c_prime = random_bytes(uniform_index(rng, 4000));
    fill_random(rng, g.sigma.data(), g.sigma.size());
    g.expiry = rng();
    return g;
  }

  revocation::KeyUpdate random_key_update() {
    revocation::KeyUpdate ku{rng(), {}};
    std::set<revocation::NodeId> ids;
    const auto n = uniform_index(rng, 40);
    while (ids.size() < n) ids.insert(1 + uniform_index(rng, 1u << 16));
    ku.cover.assign(ids.begin(), ids.end());
    return ku;
  }

  revocation::RevocationList random_revocation_list() {
    revocation::RevocationList rl;
    std::uint64_t t = uniform_index(rng, 1000);
    const auto n = uniform_index(rng, 30);
    for (std::size_t i = 0; i < n; ++i) {
      t += uniform_index(rng, 3);
      rl.add(1024 + uniform_index(rng, 1024), t);
    }
    return rl;
  }

  VehiclePublicRecord<S> random_record() {
    const unsigned h = 1 + static_cast<unsigned>(uniform_index(rng, 20));
    const revocation::NodeId leaf = (revocation::NodeId{1} << h) + uniform_index(rng, std::size_t{1} << h);
    return {G1::random(rng), revocation::path(h, leaf)};
  }

  // Decodes `in` with the decoder for its declared type and re-encodes it.
  Bytes reencode(ByteView in) {
    switch (peek_type(in)) {
      case MsgType::SystemParams: return encode(decode_system_params<S>(in));
      case MsgType::BroadcastMsg: return encode(decode_broadcast<S>(in));
      case MsgType::RingRequest: return encode(decode_ring_request<S>(in));
      case MsgType::RingGrant: return encode(decode_ring_grant(in));
      case MsgType::KeyUpdate: return encode(decode_key_update(in));
      case MsgType::RevocationList: return encode(decode_revocation_list(in));
      case MsgType::VehiclePublicRecord: return encode(decode_vehicle_record<S>(in));
    }
    return {};
  }
};

using Suites = ::testing::Types<Bls12381, Bls12381Swapped>;
TYPED_TEST_SUITE(WireTest, Suites);

constexpr int kRoundTrips = 500;

}  // namespace

TYPED_TEST(WireTest, SystemParamsRoundTrip) {
  using S = TypeParam;
  for (int i = 0; i < kRoundTrips; ++i) {
    const auto pp = make_params<S>(MasterSecret::generate(this->rng), S::G2::random(this->rng));
    const Bytes enc = encode(pp);
    ASSERT_EQ(decode_system_params<S>(enc), pp);
  }
}

TYPED_TEST(WireTest, BroadcastRoundTrip) {
  using S = TypeParam;
  for (int i = 0; i < kRoundTrips; ++i) {
    const auto msg = this->random_broadcast();
    const Bytes enc = encode(msg);
    const auto back = decode_broadcast<S>(enc);
    ASSERT_EQ(back, msg);
    ASSERT_EQ(encode(back), enc);
    ASSERT_TRUE(ring_verify(this->pp, back.payload(), back.ring, back.sig));
  }
}

TYPED_TEST(WireTest, RingRequestRoundTrip) {
  using S = TypeParam;
  for (int i = 0; i < kRoundTrips; ++i) {
    const auto req = this->random_request();
    ASSERT_EQ(decode_ring_request<S>(encode(req)), req);
  }
}

TYPED_TEST(WireTest, RingGrantRoundTrip) {
  for (int i = 0; i < kRoundTrips; ++i) {
    const auto g = this->random_grant();
    ASSERT_EQ(decode_ring_grant(encode(g)), g);
  }
}

TYPED_TEST(WireTest, KeyUpdateRoundTrip) {
  for (int i = 0; i < kRoundTrips; ++i) {
    const auto ku = this->random_key_update();
    ASSERT_EQ(decode_key_update(encode(ku)), ku);
  }
}

TYPED_TEST(WireTest, RevocationListRoundTrip) {
  for (int i = 0; i < kRoundTrips; ++i) {
    const auto rl = this->random_revocation_list();
    ASSERT_EQ(decode_revocation_list(encode(rl)), rl);
  }
}

TYPED_TEST(WireTest, VehicleRecordRoundTrip) {
  using S = TypeParam;
  for (int i = 0; i < kRoundTrips; ++i) {
    const auto rec = this->random_record();
    ASSERT_EQ(decode_vehicle_record<S>(encode(rec)), rec);
  }
}

TYPED_TEST(WireTest, SignatureSizeIsAffineInRingSize) {
  using S = TypeParam;
  for (std::size_t n = 1; n <= 12; ++n) {
    SubRing<S> ring(std::vector(this->pids.begin(), this->pids.begin() + n));
    SignedPayload p{to_bytes("m"), Gt::random(this->rng), 1};
    const auto sig = ring_sign(this->pp, this->psks[0], 0, p, ring, this->rng);
    EXPECT_EQ(encode_signature(sig).size(), S::G1::kSize * (n + 1) + 2);
  }
}

TYPED_TEST(WireTest, FrameErrors) {
  using S = TypeParam;
  const Bytes enc = encode(this->random_broadcast());

  auto expect_code = [](const std::function<void()>& f, Errc code) {
    try {
      f();
      ADD_FAILURE() << "expected " << to_string(code);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), code) << e.what();
    }
  };

  Bytes trailing = enc;
  trailing.push_back(0);
  expect_code([&] { (void)decode_broadcast<S>(trailing); }, Errc::TrailingBytes);

  // Body length consistent with the header but extra bytes inside the body.
  Bytes padded = enc;
  padded.push_back(0);
  const auto len = static_cast<std::uint32_t>(padded.size() - kHeaderSize);
  padded[2] = static_cast<std::uint8_t>(len >> 24);
  padded[3] = static_cast<std::uint8_t>(len >> 16);
  padded[4] = static_cast<std::uint8_t>(len >> 8);
  padded[5] = static_cast<std::uint8_t>(len);
  expect_code([&] { (void)decode_broadcast<S>(padded); }, Errc::TrailingBytes);

  expect_code([&] { (void)decode_broadcast<S>(ByteView(enc).first(enc.size() - 1)); }, Errc::TruncatedFrame);
  expect_code([&] { (void)decode_broadcast<S>(ByteView(enc).first(3)); }, Errc::TruncatedFrame);

  Bytes version = enc;
  version[0] = 0x02;
  expect_code([&] { (void)decode_broadcast<S>(version); }, Errc::BadVersion);
  Bytes type = enc;
  type[1] = 0x09;
  expect_code([&] { (void)decode_broadcast<S>(type); }, Errc::BadType);
  expect_code([&] { (void)decode_ring_grant(enc); }, Errc::BadType);
}

TYPED_TEST(WireTest, SuiteMismatchDetected) {
  using S = TypeParam;
  using Other = std::conditional_t<std::is_same_v<S, Bls12381>, Bls12381Swapped, Bls12381>;
  try {
    (void)decode_system_params<Other>(encode(this->pp));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SuiteMismatch);
  }
}

TYPED_TEST(WireTest, NonSubgroupPointRejected) {
  using S = TypeParam;
  Bytes enc = encode(VehiclePublicRecord<S>{S::G1::random(this->rng), revocation::path(3, 9)});
  // Walk x upward until it decodes to a curve point outside the subgroup or fails.
  bool saw_subgroup_failure = false;
  for (int i = 0; i < 200 && !saw_subgroup_failure; ++i) {
    enc[kHeaderSize + S::G1::kSize - 1] ^= static_cast<std::uint8_t>(i + 1);
    try {
      (void)decode_vehicle_record<S>(enc);
    } catch (const Error& e) {
      saw_subgroup_failure = e.code() == Errc::SubgroupCheckFailed;
    }
  }
  EXPECT_TRUE(saw_subgroup_failure);
}

TYPED_TEST(WireTest, KeyUpdateRejectsUnsortedCover) {
  Bytes enc = encode(revocation::KeyUpdate{1, {3, 4, 11}});
  std::swap(enc[kHeaderSize + 12 + 7], enc[kHeaderSize + 20 + 7]);
  EXPECT_THROW((void)decode_key_update(enc), Error);
}

TYPED_TEST(WireTest, MutatedFramesAreRejectedOrCanonical) {
  for (const auto& [name, enc] : golden::messages<TypeParam>()) {
    for (int i = 0; i < 400; ++i) {
      Bytes bad = enc;
      const auto flips = 1 + uniform_index(this->rng, 3);
      for (std::size_t f = 0; f < flips; ++f)
        bad[uniform_index(this->rng, bad.size())] ^= static_cast<std::uint8_t>(1 + uniform_index(this->rng, 255));
      try {
        ASSERT_EQ(this->reencode(bad), bad) << name;
      } catch (const Error&) {
      }
    }
  }
}

TYPED_TEST(WireTest, FuzzNeverCrashes) {
  constexpr int kInputs = 100000;
  int accepted = 0;
  for (int i = 0; i < kInputs; ++i) {
    Bytes in = this->random_bytes(uniform_index(this->rng, 400));
    // Most inputs get a plausible header so the body decoders are exercised.
    if (in.size() >= kHeaderSize && uniform_index(this->rng, 10) < 9) {
      in[0] = kVersion;
      in[1] = static_cast<std::uint8_t>(1 + uniform_index(this->rng, 7));
      const auto len = static_cast<std::uint32_t>(in.size() - kHeaderSize);
      in[2] = static_cast<std::uint8_t>(len >> 24);
      in[3] = static_cast<std::uint8_t>(len >> 16);
      in[4] = static_cast<std::uint8_t>(len >> 8);
      in[5] = static_cast<std::uint8_t>(len);
    }
    try {
      const Bytes again = this->reencode(in);
      ASSERT_EQ(again, in);
      ++accepted;
    } catch (const Error&) {
    } catch (const std::exception& e) {
      FAIL() << "untyped exception: " << e.what();
    }
  }
  EXPECT_LT(accepted, kInputs);
}

TYPED_TEST(WireTest, GoldenFiles) {
  using S = TypeParam;
  const bool write = std::getenv("RINGVEIL_WRITE_GOLDEN") != nullptr;
  for (const auto& [name, enc] : golden::messages<S>()) {
    const auto path = golden::path_for(RINGVEIL_TEST_DATA, S::name, name);
    if (write) {
      std::filesystem::create_directories(std::filesystem::path(path).parent_path());
      std::ofstream(path) << to_hex(enc) << "\n";
      continue;
    }
    const auto expected = golden::read_hex(path);
    ASSERT_FALSE(expected.empty()) << "missing golden file " << path;
    EXPECT_EQ(to_hex(enc), expected) << name;
    EXPECT_EQ(this->reencode(from_hex(expected)), enc) << name;
  }
}
