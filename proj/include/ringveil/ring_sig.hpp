#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <set>
#include <span>
#include <vector>

#include "ringveil/bytes.hpp"
#include "ringveil/error.hpp"
#include "ringveil/ibc.hpp"
#include "ringveil/pairing.hpp"
#include "ringveil/random.hpp"

// Identity-based ring signature (Chow-Yiu-Hui) with aggregate batch checks.
namespace ringveil {

inline constexpr std::size_t kMaxRingSize = 0xffff;

/// Ordered, duplicate-free list of pseudonyms. Order is signed.
template <PairingSuite S>
class SubRing {
 public:
  using G1 = typename S::G1;

  explicit SubRing(std::vector<G1> members) : members_(std::move(members)) {
    if (members_.empty()) throw Error(Errc::EmptyRing);
    if (members_.size() > kMaxRingSize) throw Error(Errc::InvalidArgument, "ring too large");
    std::set<typename G1::Encoded> seen;
    encoded_.reserve(members_.size());
    for (const auto& m : members_) {
      auto e = m.to_bytes();
      if (!seen.insert(e).second) throw Error(Errc::DuplicateMember);
      encoded_.push_back(e);
    }
  }

  std::size_t size() const noexcept { return members_.size(); }
  const G1& operator[](std::size_t i) const { return members_[i]; }
  const std::vector<G1>& members() const noexcept { return members_; }
  const std::vector<typename G1::Encoded>& encoded() const noexcept { return encoded_; }

  friend bool operator==(const SubRing& a, const SubRing& b) { return a.encoded_ == b.encoded_; }

 private:
  std::vector<G1> members_;
  std::vector<typename G1::Encoded> encoded_;
};

/// m || tag || t
struct SignedPayload {
  Bytes m;
  Gt tag;
  std::uint64_t t = 0;
  friend bool operator==(const SignedPayload&, const SignedPayload&) = default;
};

template <PairingSuite S>
struct RingSignature {
  std::vector<typename S::G1> u_list;
  typename S::G1 v;
  friend bool operator==(const RingSignature&, const RingSignature&) = default;
};

namespace detail {

/// Hash input prefix for h_i: len(m) || m || tag || t || n' || L_s. The
/// per-member U_i is appended by `ring_member_hash`.
template <PairingSuite S>
Bytes ring_hash_prefix(const SignedPayload& p, const SubRing<S>& ring) {
  Bytes out;
  out.reserve(4 + p.m.size() + Gt::kSize + 8 + 2 + ring.size() * S::G1::kSize + S::G1::kSize);
  append_u32(out, static_cast<std::uint32_t>(p.m.size()));
  append(out, p.m);
  append(out, p.tag.to_bytes());
  append_u64(out, p.t);
  append_u16(out, static_cast<std::uint16_t>(ring.size()));
  for (const auto& e : ring.encoded()) append(out, e);
  return out;
}

template <PairingSuite S>
Scalar ring_member_hash(Bytes& prefix, const typename S::G1& u) {
  const auto base = prefix.size();
  append(prefix, u.to_bytes());
  const Scalar h = hash_to_scalar(Dst::RingSig, prefix);
  prefix.resize(base);
  return h;
}

/// sum_i (U_i + h_i PID_i)
template <PairingSuite S>
typename S::G1 ring_aggregate(const SignedPayload& p, const SubRing<S>& ring, const RingSignature<S>& sig) {
  if (sig.u_list.size() != ring.size()) throw Error(Errc::LengthMismatch, "signature/ring length");
  Bytes prefix = ring_hash_prefix(p, ring);
  typename S::G1 acc;
  std::vector<Scalar> h(ring.size());
  for (std::size_t i = 0; i < ring.size(); ++i) {
    h[i] = ring_member_hash<S>(prefix, sig.u_list[i]);
    acc += sig.u_list[i];
  }
  return acc + S::G1::msm(ring.members(), h);
}

/// Appends w U_i and w h_i PID_i for every member, so that a whole batch can
/// be aggregated with one multi-scalar multiplication.
template <PairingSuite S>
void append_ring_terms(const SignedPayload& p, const SubRing<S>& ring, const RingSignature<S>& sig, const Scalar& w,
                       std::vector<typename S::G1>& pts, std::vector<Scalar>& scalars) {
  Bytes prefix = ring_hash_prefix(p, ring);
  for (std::size_t i = 0; i < ring.size(); ++i) {
    const Scalar h = ring_member_hash<S>(prefix, sig.u_list[i]);
    pts.push_back(sig.u_list[i]);
    scalars.push_back(w);
    pts.push_back(ring[i]);
    scalars.push_back(h * w);
  }
}

template <PairingSuite S>
void check_batch_shape(std::span<const SignedPayload> payloads, std::span<const SubRing<S>> rings,
                       std::span<const RingSignature<S>> sigs) {
  if (payloads.empty()) throw Error(Errc::EmptyBatch);
  if (payloads.size() != rings.size() || payloads.size() != sigs.size())
    throw Error(Errc::LengthMismatch, "batch list lengths");
  for (std::size_t i = 0; i < sigs.size(); ++i)
    if (sigs[i].u_list.size() != rings[i].size()) throw Error(Errc::LengthMismatch, "signature/ring length");
}

}  // namespace detail

/// Signs `payload` as ring member k holding `psk`.
template <PairingSuite S, Rng64 G>
RingSignature<S> ring_sign(const SystemParams<S>& pp, const typename S::G1& psk, std::size_t k,
                           const SignedPayload& payload, const SubRing<S>& ring, G& rng) {
  using G1 = typename S::G1;
  if (k >= ring.size()) throw Error(Errc::IndexOutOfRange, "signer index");
  if (S::pair(psk, SystemParams<S>::q()) != S::pair(ring[k], pp.pk2))
    throw Error(Errc::SignerMismatch, "private key does not match ring member");

  Bytes prefix = detail::ring_hash_prefix(payload, ring);
  RingSignature<S> sig;
  sig.u_list.resize(ring.size());
  G1 others;
  for (std::size_t i = 0; i < ring.size(); ++i) {
    if (i == k) continue;
    sig.u_list[i] = G1::random(rng);
    const Scalar h = detail::ring_member_hash<S>(prefix, sig.u_list[i]);
    others += sig.u_list[i] + ring[i] * h;
  }
  const Scalar r = Scalar::random(rng);
  sig.u_list[k] = ring[k] * r - others;
  const Scalar hk = detail::ring_member_hash<S>(prefix, sig.u_list[k]);
  sig.v = psk * (hk + r);
  return sig;
}

/// e(sum(U_i + h_i PID_i), pk2) == e(V, Q). Two pairings regardless of ring size.
template <PairingSuite S>
bool ring_verify(const SystemParams<S>& pp, const SignedPayload& payload, const SubRing<S>& ring,
                 const RingSignature<S>& sig) {
  const auto lhs = detail::ring_aggregate(payload, ring, sig);
  return S::pair(lhs, pp.pk2) == S::pair(sig.v, SystemParams<S>::q());
}

/// Aggregated check over eta signatures with two pairings in total. Accepts
/// every all-valid batch, but a crafted batch whose errors cancel in the
/// sum also passes; prefer `random_scaling_batch_verify` for untrusted input.
template <PairingSuite S>
bool batch_verify(const SystemParams<S>& pp, std::span<const SignedPayload> payloads,
                  std::span<const SubRing<S>> rings, std::span<const RingSignature<S>> sigs) {
  detail::check_batch_shape(payloads, rings, sigs);
  std::vector<typename S::G1> pts;
  std::vector<Scalar> scalars;
  typename S::G1 v_sum;
  for (std::size_t i = 0; i < payloads.size(); ++i) {
    detail::append_ring_terms(payloads[i], rings[i], sigs[i], Scalar::one(), pts, scalars);
    v_sum += sigs[i].v;
  }
  return S::pair(S::G1::msm(pts, scalars), pp.pk2) == S::pair(v_sum, SystemParams<S>::q());
}

inline constexpr std::size_t kBatchScalarBits = 80;

/// Small-exponent batch test: each signature's equation is weighted by an
/// independent nonzero 80-bit scalar before aggregation.
template <PairingSuite S, Rng64 G>
bool random_scaling_batch_verify(const SystemParams<S>& pp, std::span<const SignedPayload> payloads,
                                 std::span<const SubRing<S>> rings, std::span<const RingSignature<S>> sigs, G& rng) {
  detail::check_batch_shape(payloads, rings, sigs);
  std::vector<typename S::G1> pts, vs;
  std::vector<Scalar> scalars, deltas;
  for (std::size_t i = 0; i < payloads.size(); ++i) {
    std::array<std::uint8_t, (kBatchScalarBits + 7) / 8> delta{};
    do {
      fill_random(rng, delta.data(), delta.size());
    } while (std::all_of(delta.begin(), delta.end(), [](std::uint8_t b) { return b == 0; }));
    deltas.push_back(Scalar::from_wide_bytes(delta));
    detail::append_ring_terms(payloads[i], rings[i], sigs[i], deltas.back(), pts, scalars);
    vs.push_back(sigs[i].v);
  }
  return S::pair(S::G1::msm(pts, scalars), pp.pk2) == S::pair(S::G1::msm(vs, deltas), SystemParams<S>::q());
}

namespace detail {

template <PairingSuite S, Rng64 G>
void find_invalid_range(const SystemParams<S>& pp, std::span<const SignedPayload> payloads,
                        std::span<const SubRing<S>> rings, std::span<const RingSignature<S>> sigs,
                        std::size_t offset, G& rng, std::vector<std::size_t>& out) {
  if (payloads.size() == 1) {
    if (!ring_verify(pp, payloads[0], rings[0], sigs[0])) out.push_back(offset);
    return;
  }
  if (random_scaling_batch_verify(pp, payloads, rings, sigs, rng)) return;
  const std::size_t half = payloads.size() / 2;
  find_invalid_range(pp, payloads.first(half), rings.first(half), sigs.first(half), offset, rng, out);
  find_invalid_range(pp, payloads.subspan(half), rings.subspan(half), sigs.subspan(half), offset + half, rng, out);
}

}  // namespace detail

/// Indices of signatures that fail single verification, found by recursive
/// halving; sub-batches that pass the hardened batch check are not split.
template <PairingSuite S, Rng64 G>
std::vector<std::size_t> find_invalid(const SystemParams<S>& pp, std::span<const SignedPayload> payloads,
                                      std::span<const SubRing<S>> rings, std::span<const RingSignature<S>> sigs,
                                      G& rng) {
  detail::check_batch_shape(payloads, rings, sigs);
  std::vector<std::size_t> out;
  detail::find_invalid_range(pp, payloads, rings, sigs, 0, rng, out);
  return out;
}

}  // namespace ringveil
