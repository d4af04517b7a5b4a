#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "ringveil/bytes.hpp"
#include "ringveil/error.hpp"
#include "ringveil/pairing.hpp"
#include "ringveil/random.hpp"
#include "ringveil/revocation.hpp"
#include "ringveil/sym.hpp"

namespace ringveil {

/// Public parameters: pk1 = sP, pk2 = sQ, pk_trac = s_trac Q. The suite type
/// fixes the groups, generators and hash-to-group constructions.
template <PairingSuite S>
struct SystemParams {
  using G1 = typename S::G1;
  using G2 = typename S::G2;

  G1 pk1;
  G2 pk2;
  G2 pk_trac;

  static G1 p() { return G1::generator(); }
  static G2 q() { return G2::generator(); }

  /// e(pk1, Q) == e(P, pk2)
  bool consistent() const { return S::pair(pk1, q()) == S::pair(p(), pk2); }

  friend bool operator==(const SystemParams&, const SystemParams&) = default;
};

/// TRC master secret s. Deliberately has no encoding.
class MasterSecret {
 public:
  explicit MasterSecret(const Scalar& s) : s_(s) {
    if (s.is_zero()) throw Error(Errc::ZeroScalar, "master secret");
  }
  template <Rng64 G>
  static MasterSecret generate(G& rng) {
    return MasterSecret(Scalar::random(rng));
  }
  const Scalar& value() const noexcept { return s_; }

 private:
  Scalar s_;
};

template <PairingSuite S>
SystemParams<S> make_params(const MasterSecret& ms, const typename S::G2& pk_trac) {
  return {SystemParams<S>::p() * ms.value(), SystemParams<S>::q() * ms.value(), pk_trac};
}

template <PairingSuite S>
struct VehicleCredential {
  Bytes vid;
  typename S::G1 pid;
  typename S::G1 psk;
  std::vector<revocation::NodeId> leaf_path;
};

template <PairingSuite S>
struct RsuCredential {
  Bytes region_id;
  typename S::G2 rid;
  typename S::G2 rsk;
};

template <PairingSuite S>
struct IbeCiphertext {
  typename S::G1 u;
  Bytes v;
  friend bool operator==(const IbeCiphertext&, const IbeCiphertext&) = default;
};

template <PairingSuite S>
typename S::G1 pseudonym_of(ByteView vid) {
  return hash_to_g1<S>(Dst::Pid, vid);
}

template <PairingSuite S>
typename S::G2 region_key_of(ByteView region_id) {
  return hash_to_g2<S>(Dst::Rid, region_id);
}

/// Registers `vid`: PID = H1(VID), PSK = s PID, PID placed on an empty leaf.
template <PairingSuite S>
VehicleCredential<S> issue_vehicle(const MasterSecret& ms, ByteView vid, revocation::RevocationTree& bt) {
  auto pid = pseudonym_of<S>(vid);
  const auto enc = pid.to_bytes();
  const auto leaf = bt.assign(Bytes(enc.begin(), enc.end()));
  return {Bytes(vid.begin(), vid.end()), pid, pid * ms.value(), revocation::path(bt, leaf)};
}

/// RID = H2(ID), RSK = s RID.
template <PairingSuite S>
RsuCredential<S> issue_rsu(const MasterSecret& ms, ByteView region_id) {
  auto rid = region_key_of<S>(region_id);
  return {Bytes(region_id.begin(), region_id.end()), rid, rid * ms.value()};
}

/// e(psk, Q) == e(pid, pk2); uses public values only.
template <PairingSuite S>
bool credential_consistent(const SystemParams<S>& pp, const VehicleCredential<S>& c) {
  return S::pair(c.psk, SystemParams<S>::q()) == S::pair(c.pid, pp.pk2) &&
         c.pid == pseudonym_of<S>(c.vid);
}

/// e(P, rsk) == e(pk1, rid)
template <PairingSuite S>
bool credential_consistent(const SystemParams<S>& pp, const RsuCredential<S>& c) {
  return S::pair(SystemParams<S>::p(), c.rsk) == S::pair(pp.pk1, c.rid) &&
         c.rid == region_key_of<S>(c.region_id);
}

namespace detail {

inline Bytes ibe_mask(const Gt& key, std::size_t len) {
  return sym::kdf(key, "ibe-mask", len);
}

}  // namespace detail

/// C1 = (rP, PID xor mask(g^r)) with g = e(pk1, RID).
template <PairingSuite S, Rng64 G>
IbeCiphertext<S> ibe_encrypt(const SystemParams<S>& pp, const typename S::G2& rid, const typename S::G1& pid,
                             G& rng) {
  const Scalar r = Scalar::random(rng);
  const Gt g = S::pair(pp.pk1, rid);
  const auto plain = pid.to_bytes();
  Bytes v = detail::ibe_mask(g.pow(r), plain.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] ^= plain[i];
  return {SystemParams<S>::p() * r, std::move(v)};
}

/// PID = V xor mask(e(U, RSK)). Throws InvalidPid when the unmasked bytes
/// are not a subgroup element; callers still must check registration.
template <PairingSuite S>
typename S::G1 ibe_decrypt(const typename S::G2& rsk, const IbeCiphertext<S>& ct) {
  using G1 = typename S::G1;
  if (ct.v.size() != G1::kSize) throw Error(Errc::MalformedCiphertext, "masked pseudonym length");
  Bytes plain = detail::ibe_mask(S::pair(ct.u, rsk), ct.v.size());
  for (std::size_t i = 0; i < plain.size(); ++i) plain[i] ^= ct.v[i];
  try {
    return G1::from_bytes(plain);
  } catch (const Error&) {
    throw Error(Errc::InvalidPid, "unmasked pseudonym is not a group element");
  }
}

/// Fixed-length encoding: compressed u || v.
template <PairingSuite S>
Bytes encode_ibe_ciphertext(const IbeCiphertext<S>& ct) {
  Bytes out;
  const auto u = ct.u.to_bytes();
  append(out, u);
  append(out, ct.v);
  return out;
}

template <PairingSuite S>
IbeCiphertext<S> decode_ibe_ciphertext(ByteView in) {
  using G1 = typename S::G1;
  if (in.size() != 2 * G1::kSize) throw Error(Errc::MalformedCiphertext, "ciphertext length");
  try {
    return {G1::from_bytes(in.first(G1::kSize)), Bytes(in.begin() + G1::kSize, in.end())};
  } catch (const Error&) {
    throw Error(Errc::MalformedCiphertext, "u is not a subgroup element");
  }
}

/// K = e(PSK_i, RID_j)
template <PairingSuite S>
Gt shared_key_vehicle(const typename S::G1& psk, const typename S::G2& rid) {
  return S::pair(psk, rid);
}

/// K = e(PID_i, RSK_j)
template <PairingSuite S>
Gt shared_key_rsu(const typename S::G1& pid, const typename S::G2& rsk) {
  return S::pair(pid, rsk);
}

}  // namespace ringveil
