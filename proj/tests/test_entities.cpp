#include <gtest/gtest.h>

#include <algorithm>
#include <functional>

#include "ringveil/entities.hpp"
#include "ringveil/sim.hpp"

using namespace ringveil;

namespace {

constexpr std::uint64_t kT0 = 1'700'000'000;

template <class S>
class EntitiesTest : public ::testing::Test {
 protected:
  SimRng rng{500};
  sim::Deployment<S> d = sim::Deployment<S>::create(6, 30, 2, rng);

  void SetUp() override { d.refresh_all(kT0); }

  void expect_code(const std::function<void()>& f, Errc code) {
    try {
      f();
      ADD_FAILURE() << "expected " << to_string(code);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), code) << e.what();
    }
  }

  const RingListGrant<S>& grant_for(std::size_t v, std::size_t j = 0, std::uint64_t now = kT0) {
    auto& obu = d.obus[v];
    const auto req = obu.ring_request(d.rsus[j].rid(), rng);
    return obu.accept_grant(d.rsus[j].ring_gen(req, now, rng), now);
  }
};

using Suites = ::testing::Types<Bls12381, Bls12381Swapped>;
TYPED_TEST_SUITE(EntitiesTest, Suites);

}  // namespace

TYPED_TEST(EntitiesTest, SetupProducesConsistentParams) {
  using S = TypeParam;
  EXPECT_TRUE(this->d.trc.params().consistent());
  const auto lea = Lea<S>::keygen(this->rng);
  EXPECT_EQ(lea.public_key(), S::G2::generator() * lea.tracing_secret());
  const auto other = Trc<S>::setup(4, lea.public_key(), this->rng);
  EXPECT_FALSE(other.params().pk1 == this->d.trc.params().pk1);
  EXPECT_FALSE(Lea<S>::keygen(this->rng).public_key() == lea.public_key());
  this->expect_code([&] { (void)Trc<S>::setup(0, lea.public_key(), this->rng); }, Errc::InvalidArgument);
}

TYPED_TEST(EntitiesTest, RegistrationRecordsPseudonymMapping) {
  using S = TypeParam;
  auto& trc = this->d.trc;
  for (std::size_t i = 0; i < this->d.vids.size(); ++i) {
    const auto pid = this->d.obus[i].pid();
    EXPECT_EQ(trc.resolve(pid), this->d.vids[i]);
    EXPECT_EQ(pid, pseudonym_of<S>(this->d.vids[i]));
  }
  EXPECT_EQ(trc.public_records().size(), this->d.vids.size());
  this->expect_code([&] { (void)trc.register_vehicle(this->d.vids[0]); }, Errc::DuplicateIdentity);
  EXPECT_FALSE(trc.resolve(S::G1::random(this->rng)).has_value());
}

TYPED_TEST(EntitiesTest, RingRequestRoundTrip) {
  const auto& g = this->grant_for(3);
  EXPECT_EQ(g.list.size(), 30u);
  EXPECT_EQ(g.expiry, kT0 + kGrantLifetime);
  EXPECT_NE(std::find(g.list.begin(), g.list.end(), this->d.obus[3].pid()), g.list.end());
  EXPECT_TRUE(this->d.rsus[0].has_cached_key(this->d.obus[3].pid()));
}

TYPED_TEST(EntitiesTest, RingListSizeIsCapped) {
  using S = TypeParam;
  Rsu<S> small(this->d.trc.params(), this->d.trc.register_rsu(to_bytes("small")), 8);
  small.refresh(this->d.trc, kT0);
  auto& obu = this->d.obus[5];
  const auto g = obu.accept_grant(small.ring_gen(obu.ring_request(small.rid(), this->rng), kT0, this->rng), kT0);
  EXPECT_EQ(g.list.size(), 8u);
  EXPECT_NE(std::find(g.list.begin(), g.list.end(), obu.pid()), g.list.end());
}

TYPED_TEST(EntitiesTest, WrongRegionRejected) {
  auto& obu = this->d.obus[1];
  const auto req = obu.ring_request(this->d.rsus[0].rid(), this->rng);
  this->expect_code([&] { (void)this->d.rsus[1].ring_gen(req, kT0, this->rng); }, Errc::UnknownPid);
}

TYPED_TEST(EntitiesTest, UnprovisionedHsm) {
  using S = TypeParam;
  HsmBoundary<S> hsm;
  EXPECT_FALSE(hsm.provisioned());
  this->expect_code([&] { (void)hsm.ring_request(this->d.rsus[0].rid(), this->rng); }, Errc::NotProvisioned);
  this->expect_code([&] { (void)hsm.pid(); }, Errc::NotProvisioned);
  this->expect_code([&] { (void)hsm.shared_key(this->d.rsus[0].rid()); }, Errc::NotProvisioned);
}

TYPED_TEST(EntitiesTest, TamperedPathRejected) {
  using S = TypeParam;
  // A fresh registration gives the test the credential the HSM would seal.
  const auto cred = this->d.trc.register_vehicle(to_bytes("VIN-TAMPER"));
  this->d.refresh_all(kT0);
  auto& rsu = this->d.rsus[0];
  const Gt k = shared_key_vehicle<S>(cred.psk, rsu.rid());
  const auto keys = sym::derive_channel_keys(k);
  auto other_path = revocation::path(6, cred.leaf_path.front() ^ 1);
  RingRequest<S> req{ibe_encrypt(this->d.trc.params(), rsu.rid(), cred.pid, this->rng),
                     sym::sym_encrypt(keys.enc, wire::encode_path(other_path), sym::derive_nonce(k, kVehicleNonceBit))};
  this->expect_code([&] { (void)rsu.ring_gen(req, kT0, this->rng); }, Errc::MalformedRequest);

  req.c2 = sym::sym_encrypt(keys.enc, wire::encode_path(cred.leaf_path), sym::derive_nonce(k, kVehicleNonceBit));
  req.c2.back() ^= 1;
  this->expect_code([&] { (void)rsu.ring_gen(req, kT0, this->rng); }, Errc::MalformedRequest);

  req.c2 = sym::sym_encrypt(keys.enc, wire::encode_path(cred.leaf_path), sym::derive_nonce(k, kVehicleNonceBit));
  EXPECT_NO_THROW((void)rsu.ring_gen(req, kT0, this->rng));
}

TYPED_TEST(EntitiesTest, RevocationLifecycle) {
  auto& d = this->d;
  const std::size_t v = 4;
  (void)this->grant_for(v);
  d.trc.revoke_vid(d.vids[v], epoch_of(kT0));

  // Until the RSU refreshes, its cover still authorizes the vehicle.
  EXPECT_NO_THROW((void)this->grant_for(v, 0, kT0 + 10));
  d.refresh_all(kT0 + 20);
  EXPECT_FALSE(d.rsus[0].has_cached_key(d.obus[v].pid()));
  this->expect_code([&] { (void)this->grant_for(v, 0, kT0 + 30); }, Errc::RevokedVehicle);
  this->expect_code([&] { (void)this->grant_for(v, 1, kT0 + 30); }, Errc::RevokedVehicle);
  EXPECT_NO_THROW((void)this->grant_for(v + 1, 0, kT0 + 30));

  // Grants from other vehicles no longer list the revoked pseudonym.
  const auto& g = this->grant_for(9, 0, kT0 + 40);
  EXPECT_EQ(std::find(g.list.begin(), g.list.end(), d.obus[v].pid()), g.list.end());
}

TYPED_TEST(EntitiesTest, StaleKeyUpdateRejected) {
  const std::uint64_t next_epoch = (epoch_of(kT0) + 1) * kEpochLength;
  this->expect_code([&] { (void)this->grant_for(2, 0, next_epoch); }, Errc::StaleKeyUpdate);
  this->d.refresh_all(next_epoch);
  EXPECT_NO_THROW((void)this->grant_for(2, 0, next_epoch));
}

TYPED_TEST(EntitiesTest, RefreshIsIdempotent) {
  const auto before = *this->d.rsus[0].key_update();
  this->d.refresh_all(kT0 + 5);
  EXPECT_EQ(*this->d.rsus[0].key_update(), before);
}

TYPED_TEST(EntitiesTest, RevokeUnknownVid) {
  this->expect_code([&] { this->d.trc.revoke_vid(to_bytes("nobody"), 1); }, Errc::UnknownVid);
}

TYPED_TEST(EntitiesTest, SignBroadcastAndReceive) {
  (void)this->grant_for(0);
  auto& obu = this->d.obus[0];
  const auto msg = obu.sign_broadcast(to_bytes("hello"), kT0 + 1, 10, this->rng);
  EXPECT_EQ(msg.ring.size(), 10u);
  EXPECT_NE(std::find(msg.ring.members().begin(), msg.ring.members().end(), obu.pid()), msg.ring.members().end());
  EXPECT_EQ(this->d.obus[1].receive(msg, kT0 + 2), Verdict::Accept);
  EXPECT_EQ(obu.hsm().signing_counter(), 1u);

  const auto solo = obu.sign_broadcast(to_bytes("solo"), kT0 + 1, 1, this->rng);
  EXPECT_EQ(solo.ring.size(), 1u);
  EXPECT_EQ(solo.ring[0], obu.pid());
  EXPECT_EQ(this->d.obus[1].receive(solo, kT0 + 2), Verdict::Accept);
}

TYPED_TEST(EntitiesTest, SignBroadcastErrors) {
  using S = TypeParam;
  (void)this->grant_for(0);
  auto& obu = this->d.obus[0];
  this->expect_code([&] { (void)obu.sign_broadcast(to_bytes("m"), kT0 + kGrantLifetime, 5, this->rng); },
                    Errc::GrantExpired);
  this->expect_code([&] { (void)obu.sign_broadcast(to_bytes("m"), kT0, 31, this->rng); }, Errc::RingTooSmall);
  this->expect_code([&] { (void)obu.sign_broadcast(to_bytes("m"), kT0, 0, this->rng); }, Errc::RingTooSmall);

  RingListGrant<S> foreign{{this->d.obus[1].pid(), this->d.obus[2].pid()}, kT0 + 100};
  HsmBoundary<S> hsm(this->d.trc.params(), this->d.trc.register_vehicle(to_bytes("VIN-FOREIGN")));
  this->expect_code([&] { (void)hsm.sign_broadcast(foreign, to_bytes("m"), kT0, 1, this->rng); },
                    Errc::SelfNotInList);

  Obu<S> fresh(this->d.trc.params(), HsmBoundary<S>());
  this->expect_code([&] { (void)fresh.sign_broadcast(to_bytes("m"), kT0, 1, this->rng); }, Errc::GrantExpired);
}

TYPED_TEST(EntitiesTest, SignerPositionIsSpread) {
  (void)this->grant_for(0);
  auto& obu = this->d.obus[0];
  std::vector<int> counts(4, 0);
  for (int i = 0; i < 80; ++i) {
    const auto msg = obu.sign_broadcast(to_bytes("p"), kT0, 4, this->rng);
    for (std::size_t k = 0; k < 4; ++k)
      if (msg.ring[k] == obu.pid()) ++counts[k];
  }
  for (int c : counts) EXPECT_GT(c, 5);
}

TYPED_TEST(EntitiesTest, ReplayHandling) {
  (void)this->grant_for(0);
  auto& rx = this->d.obus[1];
  const auto msg = this->d.obus[0].sign_broadcast(to_bytes("replay"), kT0, 5, this->rng);
  EXPECT_EQ(rx.receive(msg, kT0 + 1), Verdict::Accept);
  EXPECT_EQ(rx.receive(msg, kT0 + 2), Verdict::Duplicate);
  {
    PairingCounter c;
    EXPECT_EQ(rx.receive(msg, kT0 + kFreshnessWindow + 1), Verdict::Stale);
    EXPECT_EQ(c.count(), 0u);
  }
  EXPECT_EQ(rx.receive(msg, kT0 + kFreshnessWindow), Verdict::Duplicate);

  // Re-stamping an old signature with a fresh time breaks it.
  auto forged = msg;
  forged.t = kT0 + 1000;
  EXPECT_EQ(this->d.obus[2].receive(forged, kT0 + 1000), Verdict::BadSignature);
  EXPECT_EQ(this->d.obus[2].receive(msg, kT0 + 1000), Verdict::Stale);
}

TYPED_TEST(EntitiesTest, ReplayCacheEvictsOldest) {
  ReplayCache cache(3);
  std::array<ReplayCache::Digest, 4> d{};
  for (std::size_t i = 0; i < d.size(); ++i) d[i][0] = static_cast<std::uint8_t>(i + 1);
  for (const auto& x : d) cache.insert(x);
  EXPECT_EQ(cache.size(), 3u);
  EXPECT_FALSE(cache.contains(d[0]));
  EXPECT_TRUE(cache.contains(d[3]));
}

TYPED_TEST(EntitiesTest, BatchAllValidUsesTwoPairings) {
  using S = TypeParam;
  for (std::size_t v = 0; v < 5; ++v) (void)this->grant_for(v);
  std::vector<BroadcastMsg<S>> queue;
  for (int i = 0; i < 20; ++i)
    queue.push_back(this->d.obus[i % 5].sign_broadcast(to_bytes("b" + std::to_string(i)), kT0, 6, this->rng));
  PairingCounter c;
  const auto verdicts = this->d.obus[10].batch_process(std::span<const BroadcastMsg<S>>(queue), kT0, this->rng);
  EXPECT_EQ(c.count(), 2u);
  for (auto v : verdicts) EXPECT_EQ(v, Verdict::Accept);
  EXPECT_TRUE(this->d.obus[10].batch_process(std::span<const BroadcastMsg<S>>(), kT0, this->rng).empty());
}

// Random queues with forgeries, stale entries, in-batch repeats and already
// seen messages must produce exactly the verdicts of sequential receive.
TYPED_TEST(EntitiesTest, BatchMatchesSequentialReceive) {
  using S = TypeParam;
  for (std::size_t v = 0; v < 6; ++v) (void)this->grant_for(v);
  auto& d = this->d;
  for (int trial = 0; trial < 8; ++trial) {
    Obu<S> batch_rx(d.trc.params(), HsmBoundary<S>());
    Obu<S> seq_rx(d.trc.params(), HsmBoundary<S>());
    const std::uint64_t now = kT0 + 100 + trial;
    std::vector<BroadcastMsg<S>> pool;
    for (int i = 0; i < 6; ++i)
      pool.push_back(d.obus[i].sign_broadcast(to_bytes("seed" + std::to_string(i)), now, 3, this->rng));
    // Both receivers see the first message before the batch.
    EXPECT_EQ(batch_rx.receive(pool[0], now), Verdict::Accept);
    EXPECT_EQ(seq_rx.receive(pool[0], now), Verdict::Accept);

    std::vector<BroadcastMsg<S>> queue;
    const auto len = 6 + uniform_index(this->rng, 10);
    for (std::size_t i = 0; i < len; ++i) {
      auto m = pool[uniform_index(this->rng, pool.size())];
      switch (uniform_index(this->rng, 5)) {
        case 0: m.sig.v = m.sig.v + S::G1::generator(); break;
        case 1: m.t = now - kFreshnessWindow - 1; break;
        case 2: m.m.push_back('!'); break;
        default: break;
      }
      queue.push_back(std::move(m));
    }
    const auto got = batch_rx.batch_process(std::span<const BroadcastMsg<S>>(queue), now, this->rng);
    for (std::size_t i = 0; i < queue.size(); ++i)
      ASSERT_EQ(got[i], seq_rx.receive(queue[i], now)) << "trial " << trial << " index " << i;
  }
}

TYPED_TEST(EntitiesTest, TraceRecoversSignerAtEveryPosition) {
  using S = TypeParam;
  (void)this->grant_for(7);
  auto& obu = this->d.obus[7];
  for (std::size_t n = 1; n <= 8; ++n) {
    std::vector<bool> seen(n, false);
    for (int tries = 0; tries < 200 && std::count(seen.begin(), seen.end(), false) > 0; ++tries) {
      const auto msg = obu.sign_broadcast(to_bytes("trace"), kT0, n, this->rng);
      std::size_t pos = 0;
      while (!(msg.ring[pos] == obu.pid())) ++pos;
      seen[pos] = true;
      ASSERT_EQ(this->d.lea.trace(msg, this->d.trc), obu.pid());
    }
    EXPECT_EQ(std::count(seen.begin(), seen.end(), false), 0) << "n=" << n;
  }
  const auto big = obu.sign_broadcast(to_bytes("trace"), kT0, 20, this->rng);
  const auto pid = this->d.lea.trace(big, this->d.trc);
  EXPECT_EQ(this->d.trc.resolve(pid), this->d.vids[7]);
  (void)S::name;
}

TYPED_TEST(EntitiesTest, TraceForgedTagAndUnregisteredMember) {
  using S = TypeParam;
  (void)this->grant_for(7);
  auto msg = this->d.obus[7].sign_broadcast(to_bytes("x"), kT0, 5, this->rng);
  auto forged = msg;
  forged.tag = Gt::random(this->rng);
  this->expect_code([&] { (void)this->d.lea.trace(forged, this->d.trc); }, Errc::NoMatch);

  auto members = msg.ring.members();
  members[0] = S::G1::random(this->rng);
  auto outsider = msg;
  outsider.ring = SubRing<S>(members);
  this->expect_code([&] { (void)this->d.lea.trace(outsider, this->d.trc); }, Errc::UnknownPid);
}

TYPED_TEST(EntitiesTest, TraceStillResolvesAfterRevocation) {
  (void)this->grant_for(8);
  const auto msg = this->d.obus[8].sign_broadcast(to_bytes("before"), kT0, 6, this->rng);
  this->d.trc.revoke_vid(this->d.vids[8], epoch_of(kT0));
  EXPECT_EQ(this->d.trc.resolve(this->d.lea.trace(msg, this->d.trc)), this->d.vids[8]);
}

// tag' matches the true signer's candidate and no other registered vehicle's.
TYPED_TEST(EntitiesTest, TracingConsistencyAcrossRegistry) {
  using S = TypeParam;
  (void)this->grant_for(11);
  const auto msg = this->d.obus[11].sign_broadcast(to_bytes("c"), kT0, 4, this->rng);
  const Gt unblinded = gt_exp(msg.tag, scalar_inverse(this->d.lea.tracing_secret()));
  std::vector<typename S::G1> everyone;
  for (const auto& o : this->d.obus) everyone.push_back(o.pid());
  const auto cands = this->d.trc.trace_candidates(SubRing<S>(everyone), msg.t);
  for (std::size_t i = 0; i < cands.size(); ++i) EXPECT_EQ(cands[i] == unblinded, i == 11) << i;
}

// Every value that crosses the HSM boundary is free of psk and vid bytes.
TYPED_TEST(EntitiesTest, HsmBoundaryAudit) {
  using S = TypeParam;
  const Bytes vid = to_bytes("VIN-AUDIT-000001");
  const auto cred = this->d.trc.register_vehicle(vid);
  this->d.refresh_all(kT0);
  const auto psk = cred.psk.to_bytes();
  HsmBoundary<S> hsm(this->d.trc.params(), cred);
  auto& rsu = this->d.rsus[0];

  std::vector<Bytes> outputs;
  const auto pid = hsm.pid().to_bytes();
  outputs.emplace_back(pid.begin(), pid.end());
  const auto k = hsm.shared_key(rsu.rid()).to_bytes();
  outputs.emplace_back(k.begin(), k.end());
  const auto req = hsm.ring_request(rsu.rid(), this->rng);
  outputs.push_back(wire::encode(req));
  Obu<S> obu(this->d.trc.params(), hsm);
  const auto g = obu.accept_grant(rsu.ring_gen(obu.ring_request(rsu.rid(), this->rng), kT0, this->rng), kT0);
  outputs.push_back(wire::encode(hsm.sign_broadcast(g, to_bytes("audit"), kT0, 5, this->rng)));
  outputs.push_back(wire::encode(obu.sign_broadcast(to_bytes("audit2"), kT0, 1, this->rng)));

  auto contains = [](const Bytes& hay, ByteView needle) {
    return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
  };
  for (const auto& out : outputs) {
    EXPECT_FALSE(contains(out, psk));
    EXPECT_FALSE(contains(out, vid));
  }
}
