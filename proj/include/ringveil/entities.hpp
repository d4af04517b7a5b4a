#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "ringveil/bytes.hpp"
#include "ringveil/error.hpp"
#include "ringveil/ibc.hpp"
#include "ringveil/pairing.hpp"
#include "ringveil/random.hpp"
#include "ringveil/revocation.hpp"
#include "ringveil/ring_sig.hpp"
#include "ringveil/sym.hpp"
#include "ringveil/wire.hpp"

// Protocol roles as message-driven state machines. Time is simulated: `now`
// arguments are integer seconds and key-update epochs are whole hours.
namespace ringveil {

using revocation::Epoch;
using revocation::KeyUpdate;
using revocation::NodeId;
using wire::BroadcastMsg;
using wire::RingGrant;
using wire::RingRequest;
using wire::VehiclePublicRecord;

inline constexpr std::uint64_t kFreshnessWindow = 300;
inline constexpr std::uint64_t kGrantLifetime = 3600;
inline constexpr std::uint64_t kEpochLength = 3600;
inline constexpr std::size_t kDefaultRingListSize = 100;
inline constexpr std::size_t kReplayCacheSize = std::size_t{1} << 16;

inline Epoch epoch_of(std::uint64_t now) { return now / kEpochLength; }

// Nonce counters for the two directions of a shared key never overlap.
inline constexpr std::uint64_t kVehicleNonceBit = std::uint64_t{1} << 63;

/// H1(VID || t) under the tag domain.
template <PairingSuite S>
typename S::G1 tag_base(ByteView vid, std::uint64_t t) {
  Bytes in;
  append_u32(in, static_cast<std::uint32_t>(vid.size()));
  append(in, vid);
  append_u64(in, t);
  return hash_to_g1<S>(Dst::Tag, in);
}

/// tag = e(H1(VID || t), pk_trac)
template <PairingSuite S>
Gt make_tag(const SystemParams<S>& pp, ByteView vid, std::uint64_t t) {
  return S::pair(tag_base<S>(vid, t), pp.pk_trac);
}

// ---------------------------------------------------------------------------
// TRC

template <PairingSuite S>
class Trc {
 public:
  using G1 = typename S::G1;
  using G2 = typename S::G2;

  /// Chooses the master secret; `pk_trac` comes from the LEA.
  template <Rng64 G>
  static Trc setup(unsigned height, const G2& pk_trac, G& rng) {
    return Trc(MasterSecret::generate(rng), height, pk_trac);
  }

  const SystemParams<S>& params() const noexcept { return pp_; }
  const revocation::RevocationTree& tree() const noexcept { return bt_; }
  const revocation::RevocationList& revocations() const noexcept { return rl_; }

  VehicleCredential<S> register_vehicle(ByteView vid) {
    Bytes key(vid.begin(), vid.end());
    if (by_vid_.contains(key)) throw Error(Errc::DuplicateIdentity, "vehicle already registered");
    auto cred = issue_vehicle<S>(master_, vid, bt_);
    const auto enc = cred.pid.to_bytes();
    Bytes pid_key(enc.begin(), enc.end());
    registry_.emplace(pid_key, Entry{key, cred.pid, cred.leaf_path});
    by_vid_.emplace(std::move(key), std::move(pid_key));
    return cred;
  }

  RsuCredential<S> register_rsu(ByteView region_id) const { return issue_rsu<S>(master_, region_id); }

  KeyUpdate key_update(Epoch t) const { return revocation::kunodes(bt_, rl_, t); }

  void revoke_vid(ByteView vid, Epoch t) {
    auto it = by_vid_.find(Bytes(vid.begin(), vid.end()));
    if (it == by_vid_.end()) throw Error(Errc::UnknownVid);
    revocation::revoke(rl_, bt_, it->second, t);
  }

  void revoke_pid(const G1& pid, Epoch t) {
    const auto enc = pid.to_bytes();
    revocation::revoke(rl_, bt_, Bytes(enc.begin(), enc.end()), t);
  }

  bool is_registered(const G1& pid) const { return find(pid) != nullptr; }

  /// PID -> VID; only the TRC holds this mapping.
  std::optional<Bytes> resolve(const G1& pid) const {
    if (const Entry* e = find(pid)) return e->vid;
    return std::nullopt;
  }

  /// H_i' = e(H1(VID_i || t), Q) for every ring member.
  std::vector<Gt> trace_candidates(const SubRing<S>& ring, std::uint64_t t) const {
    std::vector<Gt> out;
    out.reserve(ring.size());
    for (const auto& pid : ring.members()) {
      const Entry* e = find(pid);
      if (!e) throw Error(Errc::UnknownPid, "ring member not registered");
      out.push_back(S::pair(tag_base<S>(e->vid, t), SystemParams<S>::q()));
    }
    return out;
  }

  /// Pseudonym/leaf-path records handed to RSUs over the secure channel.
  std::vector<VehiclePublicRecord<S>> public_records() const {
    std::vector<VehiclePublicRecord<S>> out;
    out.reserve(registry_.size());
    for (const auto& [k, e] : registry_) out.push_back({e.pid, e.path});
    return out;
  }

 private:
  struct Entry {
    Bytes vid;
    G1 pid;
    std::vector<NodeId> path;
  };

  Trc(MasterSecret ms, unsigned height, const G2& pk_trac)
      : master_(ms), pp_(make_params<S>(master_, pk_trac)), bt_(height) {}

  const Entry* find(const G1& pid) const {
    const auto enc = pid.to_bytes();
    auto it = registry_.find(Bytes(enc.begin(), enc.end()));
    return it == registry_.end() ? nullptr : &it->second;
  }

  MasterSecret master_;
  SystemParams<S> pp_;
  revocation::RevocationTree bt_;
  revocation::RevocationList rl_;
  std::map<Bytes, Entry> registry_;  // encoded PID -> entry
  std::map<Bytes, Bytes> by_vid_;    // VID -> encoded PID
};

// ---------------------------------------------------------------------------
// LEA

template <PairingSuite S>
class Lea {
 public:
  using G1 = typename S::G1;
  using G2 = typename S::G2;

  template <Rng64 G>
  static Lea keygen(G& rng) {
    return Lea(Scalar::random(rng));
  }

  explicit Lea(const Scalar& s_trac) : s_trac_(s_trac), pk_trac_(SystemParams<S>::q() * s_trac) {
    if (s_trac.is_zero()) throw Error(Errc::ZeroScalar, "tracing key");
  }

  const G2& public_key() const noexcept { return pk_trac_; }
  const Scalar& tracing_secret() const noexcept { return s_trac_; }

  /// tag' = tag^(1/s_trac), matched against the TRC's per-member candidates.
  G1 trace(const BroadcastMsg<S>& msg, const Trc<S>& trc) const {
    const Gt unblinded = gt_exp(msg.tag, scalar_inverse(s_trac_));
    const auto candidates = trc.trace_candidates(msg.ring, msg.t);
    std::optional<std::size_t> hit;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (candidates[i] != unblinded) continue;
      if (hit) throw Error(Errc::AmbiguousMatch);
      hit = i;
    }
    if (!hit) throw Error(Errc::NoMatch, "tag does not match any ring member");
    return msg.ring[*hit];
  }

 private:
  Scalar s_trac_;
  G2 pk_trac_;
};

// ---------------------------------------------------------------------------
// OBU

/// Ring list L granted by an RSU, valid until `expiry`.
template <PairingSuite S>
struct RingListGrant {
  std::vector<typename S::G1> list;
  std::uint64_t expiry = 0;
};

/// Sealed credential store. psk and vid never leave: callers only get
/// requests, signatures, shared keys and the public pseudonym.
template <PairingSuite S>
class HsmBoundary {
 public:
  using G1 = typename S::G1;
  using G2 = typename S::G2;

  HsmBoundary() = default;
  HsmBoundary(const SystemParams<S>& pp, VehicleCredential<S> cred) { provision(pp, std::move(cred)); }

  void provision(const SystemParams<S>& pp, VehicleCredential<S> cred) {
    pp_ = pp;
    cred_ = std::move(cred);
  }

  bool provisioned() const noexcept { return cred_.has_value(); }

  const G1& pid() const { return sealed().pid; }

  std::uint64_t signing_counter() const noexcept { return signatures_; }

  /// K = e(PSK, RID)
  Gt shared_key(const G2& rid) const { return shared_key_vehicle<S>(sealed().psk, rid); }

  /// C1 = IBE(RID, PID); C2 = E_K(Path(PID)).
  template <Rng64 G>
  RingRequest<S> ring_request(const G2& rid, G& rng) {
    const auto& c = sealed();
    RingRequest<S> req{ibe_encrypt(*pp_, rid, c.pid, rng), {}};
    const Gt k = shared_key(rid);
    const auto keys = sym::derive_channel_keys(k);
    req.c2 = sym::sym_encrypt(keys.enc, wire::encode_path(c.leaf_path),
                              sym::derive_nonce(k, kVehicleNonceBit | requests_++));
    return req;
  }

  /// Samples L_s of size n from the grant with this vehicle at a uniformly
  /// random position, attaches the tracing tag and signs m || tag || now.
  template <Rng64 G>
  BroadcastMsg<S> sign_broadcast(const RingListGrant<S>& grant, ByteView m, std::uint64_t now, std::size_t n,
                                 G& rng) {
    const auto& c = sealed();
    if (now >= grant.expiry) throw Error(Errc::GrantExpired);
    if (n == 0 || n > grant.list.size()) throw Error(Errc::RingTooSmall, "ring size exceeds ring list");
    std::vector<G1> others;
    others.reserve(grant.list.size());
    bool self_found = false;
    for (const auto& p : grant.list) {
      if (p == c.pid) {
        self_found = true;
      } else {
        others.push_back(p);
      }
    }
    if (!self_found) throw Error(Errc::SelfNotInList);

    for (std::size_t i = 0; i + 1 < n; ++i) {
      const std::size_t j = i + uniform_index(rng, others.size() - i);
      std::swap(others[i], others[j]);
    }
    others.resize(n - 1);
    const std::size_t k = uniform_index(rng, n);
    others.insert(others.begin() + static_cast<std::ptrdiff_t>(k), c.pid);
    SubRing<S> ring(std::move(others));

    SignedPayload payload{Bytes(m.begin(), m.end()), make_tag(*pp_, c.vid, now), now};
    auto sig = ring_sign(*pp_, c.psk, k, payload, ring, rng);
    ++signatures_;
    return {std::move(payload.m), std::move(sig), std::move(ring), now, payload.tag};
  }

 private:
  const VehicleCredential<S>& sealed() const {
    if (!cred_) throw Error(Errc::NotProvisioned);
    return *cred_;
  }

  std::optional<SystemParams<S>> pp_;
  std::optional<VehicleCredential<S>> cred_;
  std::uint64_t requests_ = 0;
  std::uint64_t signatures_ = 0;
};

enum class Verdict { Accept, Stale, Duplicate, BadSignature };

constexpr std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Accept: return "accept";
    case Verdict::Stale: return "stale";
    case Verdict::Duplicate: return "duplicate";
    case Verdict::BadSignature: return "bad-signature";
  }
  return "";
}

/// Fixed-capacity set of recently accepted signature digests; oldest evicted first.
class ReplayCache {
 public:
  using Digest = std::array<std::uint8_t, 32>;

  explicit ReplayCache(std::size_t capacity = kReplayCacheSize) : capacity_(capacity) {}

  bool contains(const Digest& d) const { return index_.contains(d); }

  void insert(const Digest& d) {
    if (!index_.insert(d).second) return;
    order_.push_back(d);
    if (order_.size() > capacity_) {
      index_.erase(order_.front());
      order_.pop_front();
    }
  }

  std::size_t size() const noexcept { return order_.size(); }

 private:
  struct DigestHash {
    std::size_t operator()(const Digest& d) const noexcept {
      std::size_t h = 0;
      for (int i = 0; i < 8; ++i) h = h << 8 | d[i];
      return h;
    }
  };
  std::size_t capacity_;
  std::deque<Digest> order_;
  std::unordered_set<Digest, DigestHash> index_;
};

template <PairingSuite S>
ReplayCache::Digest signature_digest(const RingSignature<S>& sig) {
  return detail::sha256(wire::encode_signature(sig));
}

template <PairingSuite S>
class Obu {
 public:
  using G1 = typename S::G1;
  using G2 = typename S::G2;

  Obu(const SystemParams<S>& pp, HsmBoundary<S> hsm, std::uint64_t freshness = kFreshnessWindow)
      : pp_(pp), hsm_(std::move(hsm)), freshness_(freshness) {}

  const HsmBoundary<S>& hsm() const noexcept { return hsm_; }
  const G1& pid() const { return hsm_.pid(); }
  const std::optional<RingListGrant<S>>& grant() const noexcept { return grant_; }

  template <Rng64 G>
  RingRequest<S> ring_request(const G2& rid, G& rng) {
    auto req = hsm_.ring_request(rid, rng);
    pending_rid_ = rid;
    return req;
  }

  /// Checks Sigma over C' || t_d, then decrypts L.
  const RingListGrant<S>& accept_grant(const RingGrant& g, std::uint64_t now) {
    if (!pending_rid_) throw Error(Errc::InvalidArgument, "no outstanding ring request");
    const auto keys = sym::derive_channel_keys(hsm_.shared_key(*pending_rid_));
    Bytes authed = g.c_prime;
    append_u64(authed, g.expiry);
    if (!sym::mac_verify(keys.mac, authed, g.sigma)) throw Error(Errc::AuthFailure, "grant MAC");
    if (now >= g.expiry) throw Error(Errc::GrantExpired);
    auto list = wire::decode_pid_list<S>(sym::sym_decrypt(keys.enc, g.c_prime));
    grant_ = RingListGrant<S>{std::move(list), g.expiry};
    pending_rid_.reset();
    return *grant_;
  }

  template <Rng64 G>
  BroadcastMsg<S> sign_broadcast(ByteView m, std::uint64_t now, std::size_t ring_size, G& rng) {
    if (!grant_) throw Error(Errc::GrantExpired, "no ring list held");
    return hsm_.sign_broadcast(*grant_, m, now, ring_size, rng);
  }

  /// Freshness first (no pairing work for stale messages), then replay,
  /// then single verification.
  Verdict receive(const BroadcastMsg<S>& msg, std::uint64_t now) {
    if (!fresh(msg, now)) return Verdict::Stale;
    const auto d = signature_digest(msg.sig);
    if (seen_.contains(d)) return Verdict::Duplicate;
    if (!ring_verify(pp_, msg.payload(), msg.ring, msg.sig)) return Verdict::BadSignature;
    seen_.insert(d);
    return Verdict::Accept;
  }

  /// Same decisions as calling `receive` on each message in order. Fresh,
  /// unseen messages go through one hardened batch check, with divide-and-
  /// conquer isolation when it fails. Copies sharing a signature wait for
  /// the verdict on the earlier copy, as they would under sequential receive.
  template <Rng64 G>
  std::vector<Verdict> batch_process(std::span<const BroadcastMsg<S>> queue, std::uint64_t now, G& rng) {
    std::vector<Verdict> out(queue.size(), Verdict::Accept);
    std::vector<ReplayCache::Digest> digests(queue.size());
    std::map<ReplayCache::Digest, std::deque<std::size_t>> groups;
    std::vector<ReplayCache::Digest> order;

    for (std::size_t i = 0; i < queue.size(); ++i) {
      if (!fresh(queue[i], now)) {
        out[i] = Verdict::Stale;
        continue;
      }
      digests[i] = signature_digest(queue[i].sig);
      if (seen_.contains(digests[i])) {
        out[i] = Verdict::Duplicate;
        continue;
      }
      auto& g = groups[digests[i]];
      if (g.empty()) order.push_back(digests[i]);
      g.push_back(i);
    }

    for (;;) {
      std::vector<std::size_t> candidates;
      for (const auto& d : order)
        if (auto& g = groups[d]; !g.empty()) candidates.push_back(g.front());
      if (candidates.empty()) break;

      std::vector<SignedPayload> payloads;
      std::vector<SubRing<S>> rings;
      std::vector<RingSignature<S>> sigs;
      payloads.reserve(candidates.size());
      rings.reserve(candidates.size());
      sigs.reserve(candidates.size());
      for (auto i : candidates) {
        payloads.push_back(queue[i].payload());
        rings.push_back(queue[i].ring);
        sigs.push_back(queue[i].sig);
      }
      const auto bad = find_invalid<S>(pp_, payloads, rings, sigs, rng);
      std::size_t next_bad = 0;
      for (std::size_t c = 0; c < candidates.size(); ++c) {
        const std::size_t i = candidates[c];
        auto& g = groups[digests[i]];
        if (next_bad < bad.size() && bad[next_bad] == c) {
          ++next_bad;
          out[i] = Verdict::BadSignature;
          g.pop_front();
          continue;
        }
        seen_.insert(digests[i]);
        g.pop_front();
        for (auto rest : g) out[rest] = Verdict::Duplicate;
        g.clear();
      }
    }
    return out;
  }

 private:
  bool fresh(const BroadcastMsg<S>& msg, std::uint64_t now) const {
    const std::uint64_t skew = now > msg.t ? now - msg.t : msg.t - now;
    return skew <= freshness_;
  }

  SystemParams<S> pp_;
  HsmBoundary<S> hsm_;
  std::uint64_t freshness_;
  std::optional<G2> pending_rid_;
  std::optional<RingListGrant<S>> grant_;
  ReplayCache seen_;
};

// ---------------------------------------------------------------------------
// RSU

template <PairingSuite S>
class Rsu {
 public:
  using G1 = typename S::G1;
  using G2 = typename S::G2;

  Rsu(const SystemParams<S>& pp, RsuCredential<S> cred, std::size_t ring_list_size = kDefaultRingListSize)
      : pp_(pp), cred_(std::move(cred)), ring_list_size_(ring_list_size) {
    if (ring_list_size_ == 0 || ring_list_size_ > kMaxRingSize)
      throw Error(Errc::InvalidArgument, "ring list size");
  }

  const G2& rid() const noexcept { return cred_.rid; }
  const Bytes& region_id() const noexcept { return cred_.region_id; }
  const std::optional<KeyUpdate>& key_update() const noexcept { return ku_; }
  std::size_t cached_keys() const noexcept { return key_cache_.size(); }

  bool has_cached_key(const G1& pid) const {
    const auto enc = pid.to_bytes();
    return key_cache_.contains(Bytes(enc.begin(), enc.end()));
  }

  /// Pulls the current epoch's cover and pseudonym records from the TRC
  /// (secure channel) and drops cached keys of vehicles no longer authorized.
  void refresh(const Trc<S>& trc, std::uint64_t now) {
    ku_ = trc.key_update(epoch_of(now));
    records_.clear();
    authorized_.clear();
    for (auto& rec : trc.public_records()) {
      const auto enc = rec.pid.to_bytes();
      Bytes key(enc.begin(), enc.end());
      if (revocation::is_authorized(rec.leaf_path, *ku_)) authorized_.push_back(rec.pid);
      records_.emplace(std::move(key), std::move(rec));
    }
    for (auto it = key_cache_.begin(); it != key_cache_.end();) {
      auto rec = records_.find(it->first);
      if (rec == records_.end() || !revocation::is_authorized(rec->second.leaf_path, *ku_)) {
        it = key_cache_.erase(it);
      } else {
        ++it;
      }
    }
  }

  /// Decrypts C1, checks the pseudonym against the current cover, and
  /// returns the encrypted, MACed ring list. Throws with a reason code.
  template <Rng64 G>
  RingGrant ring_gen(const RingRequest<S>& req, std::uint64_t now, G& rng) {
    if (!ku_ || ku_->epoch != epoch_of(now)) throw Error(Errc::StaleKeyUpdate);

    G1 pid;
    try {
      pid = ibe_decrypt<S>(cred_.rsk, req.c1);
    } catch (const Error& e) {
      if (e.code() == Errc::InvalidPid) throw Error(Errc::UnknownPid, "unmasked pseudonym invalid");
      throw Error(Errc::MalformedRequest, e.what());
    }
    const auto enc = pid.to_bytes();
    const Bytes key(enc.begin(), enc.end());
    auto rec = records_.find(key);
    if (rec == records_.end()) throw Error(Errc::UnknownPid);

    const auto cached = key_cache_.find(key);
    const Gt k = cached != key_cache_.end() ? cached->second : shared_key_rsu<S>(pid, cred_.rsk);
    const auto keys = sym::derive_channel_keys(k);

    std::vector<NodeId> claimed;
    try {
      claimed = wire::decode_path(sym::sym_decrypt(keys.enc, req.c2));
    } catch (const Error& e) {
      throw Error(Errc::MalformedRequest, e.what());
    }
    if (claimed != rec->second.leaf_path) throw Error(Errc::MalformedRequest, "path does not match pseudonym");
    if (!revocation::is_authorized(claimed, *ku_)) throw Error(Errc::RevokedVehicle);
    if (cached == key_cache_.end()) key_cache_.emplace(key, k);

    RingGrant g;
    g.expiry = now + kGrantLifetime;
    g.c_prime = sym::sym_encrypt(keys.enc, wire::encode_pid_list<S>(choose_ring_list(pid, rng)),
                                 sym::derive_nonce(k, grants_++));
    Bytes authed = g.c_prime;
    append_u64(authed, g.expiry);
    g.sigma = sym::mac(keys.mac, authed);
    return g;
  }

 private:
  template <Rng64 G>
  std::vector<G1> choose_ring_list(const G1& requester, G& rng) const {
    std::vector<G1> pool;
    pool.reserve(authorized_.size());
    for (const auto& p : authorized_)
      if (!(p == requester)) pool.push_back(p);
    const std::size_t take = std::min(ring_list_size_ - 1, pool.size());
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j = i + uniform_index(rng, pool.size() - i);
      std::swap(pool[i], pool[j]);
    }
    pool.resize(take);
    pool.insert(pool.begin() + static_cast<std::ptrdiff_t>(uniform_index(rng, take + 1)), requester);
    return pool;
  }

  SystemParams<S> pp_;
  RsuCredential<S> cred_;
  std::size_t ring_list_size_;
  std::optional<KeyUpdate> ku_;
  std::map<Bytes, VehiclePublicRecord<S>> records_;
  std::vector<G1> authorized_;
  std::map<Bytes, Gt> key_cache_;
  std::uint64_t grants_ = 0;
};

}  // namespace ringveil
