#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ringveil/bytes.hpp"
#include "ringveil/error.hpp"
#include "ringveil/ibc.hpp"
#include "ringveil/pairing.hpp"
#include "ringveil/revocation.hpp"
#include "ringveil/ring_sig.hpp"
#include "ringveil/sym.hpp"

// Frame: version (0x01) || msg_type || u32 body length || body.
// Integers are big-endian; points are compressed.
namespace ringveil::wire {

inline constexpr std::uint8_t kVersion = 0x01;
inline constexpr std::size_t kHeaderSize = 6;

enum class MsgType : std::uint8_t {
  SystemParams = 1,
  BroadcastMsg = 2,
  RingRequest = 3,
  RingGrant = 4,
  KeyUpdate = 5,
  RevocationList = 6,
  VehiclePublicRecord = 7,
};

inline bool is_known_type(std::uint8_t t) { return t >= 1 && t <= 7; }

// ---------------------------------------------------------------------------
// Protocol messages

/// (m, sigma, L_s, t, tag) as broadcast by a vehicle.
template <PairingSuite S>
struct BroadcastMsg {
  Bytes m;
  RingSignature<S> sig;
  SubRing<S> ring;
  std::uint64_t t = 0;
  Gt tag;

  SignedPayload payload() const { return {m, tag, t}; }
  friend bool operator==(const BroadcastMsg&, const BroadcastMsg&) = default;
};

/// (C1, C2) sent from OBU to RSU.
template <PairingSuite S>
struct RingRequest {
  IbeCiphertext<S> c1;
  Bytes c2;
  friend bool operator==(const RingRequest&, const RingRequest&) = default;
};

/// (C', Sigma, t_d) returned by an RSU.
struct RingGrant {
  Bytes c_prime;
  sym::MacTag sigma{};
  std::uint64_t expiry = 0;
  friend bool operator==(const RingGrant&, const RingGrant&) = default;
};

/// Pseudonym with its registered leaf path, as the TRC shares it with RSUs.
template <PairingSuite S>
struct VehiclePublicRecord {
  typename S::G1 pid;
  std::vector<revocation::NodeId> leaf_path;
  friend bool operator==(const VehiclePublicRecord&, const VehiclePublicRecord&) = default;
};

// ---------------------------------------------------------------------------
// Reader

class Reader {
 public:
  explicit Reader(ByteView in) : in_(in) {}

  ByteView take(std::size_t n) {
    if (in_.size() - pos_ < n) throw Error(Errc::TruncatedFrame, "need " + std::to_string(n) + " bytes");
    auto out = in_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint8_t u8() { return take(1)[0]; }
  std::uint16_t u16() {
    auto b = take(2);
    return static_cast<std::uint16_t>(b[0] << 8 | b[1]);
  }
  std::uint32_t u32() {
    auto b = take(4);
    return std::uint32_t{b[0]} << 24 | std::uint32_t{b[1]} << 16 | std::uint32_t{b[2]} << 8 | b[3];
  }
  std::uint64_t u64() { return load_u64(take(8)); }

  template <class P>
  P point() {
    return P::from_bytes(take(P::kSize));
  }
  Gt gt() { return Gt::from_bytes(take(Gt::kSize)); }

  std::size_t remaining() const noexcept { return in_.size() - pos_; }
  void finish() const {
    if (remaining() != 0) throw Error(Errc::TrailingBytes, std::to_string(remaining()) + " bytes");
  }

 private:
  ByteView in_;
  std::size_t pos_ = 0;
};

inline Bytes frame(MsgType type, ByteView body) {
  Bytes out;
  out.reserve(kHeaderSize + body.size());
  out.push_back(kVersion);
  out.push_back(static_cast<std::uint8_t>(type));
  append_u32(out, static_cast<std::uint32_t>(body.size()));
  append(out, body);
  return out;
}

inline MsgType peek_type(ByteView in) {
  if (in.size() < kHeaderSize) throw Error(Errc::TruncatedFrame, "frame header");
  if (in[0] != kVersion) throw Error(Errc::BadVersion, std::to_string(in[0]));
  if (!is_known_type(in[1])) throw Error(Errc::BadType, std::to_string(in[1]));
  return static_cast<MsgType>(in[1]);
}

/// Validates the header and returns the body.
inline ByteView unframe(ByteView in, MsgType expected) {
  if (peek_type(in) != expected) throw Error(Errc::BadType, "unexpected message type");
  Reader r(in);
  r.take(2);
  const std::uint32_t len = r.u32();
  ByteView body = r.take(len);
  r.finish();
  return body;
}

// ---------------------------------------------------------------------------
// Component encodings

template <PairingSuite S>
void put_signature(Bytes& out, const RingSignature<S>& sig) {
  append_u16(out, static_cast<std::uint16_t>(sig.u_list.size()));
  for (const auto& u : sig.u_list) append(out, u.to_bytes());
  append(out, sig.v.to_bytes());
}

/// u16 count || count compressed points || V
template <PairingSuite S>
Bytes encode_signature(const RingSignature<S>& sig) {
  Bytes out;
  put_signature(out, sig);
  return out;
}

template <PairingSuite S>
RingSignature<S> get_signature(Reader& r) {
  RingSignature<S> sig;
  const std::uint16_t n = r.u16();
  sig.u_list.reserve(n);
  for (std::uint16_t i = 0; i < n; ++i) sig.u_list.push_back(r.point<typename S::G1>());
  sig.v = r.point<typename S::G1>();
  return sig;
}

template <PairingSuite S>
RingSignature<S> decode_signature(ByteView in) {
  Reader r(in);
  auto sig = get_signature<S>(r);
  r.finish();
  return sig;
}

template <PairingSuite S>
void put_pid_list(Bytes& out, const std::vector<typename S::G1>& pids) {
  if (pids.size() > kMaxRingSize) throw Error(Errc::InvalidArgument, "pseudonym list too long");
  append_u16(out, static_cast<std::uint16_t>(pids.size()));
  for (const auto& p : pids) append(out, p.to_bytes());
}

template <PairingSuite S>
std::vector<typename S::G1> get_pid_list(Reader& r) {
  const std::uint16_t n = r.u16();
  std::vector<typename S::G1> out;
  out.reserve(n);
  for (std::uint16_t i = 0; i < n; ++i) out.push_back(r.point<typename S::G1>());
  return out;
}

/// Ring list L as carried inside C'.
template <PairingSuite S>
Bytes encode_pid_list(const std::vector<typename S::G1>& pids) {
  Bytes out;
  put_pid_list<S>(out, pids);
  return out;
}

template <PairingSuite S>
std::vector<typename S::G1> decode_pid_list(ByteView in) {
  Reader r(in);
  auto out = get_pid_list<S>(r);
  r.finish();
  return out;
}

inline void put_path(Bytes& out, const std::vector<revocation::NodeId>& p) {
  append_u16(out, static_cast<std::uint16_t>(p.size()));
  for (auto id : p) append_u64(out, id);
}

inline std::vector<revocation::NodeId> get_path(Reader& r) {
  const std::uint16_t n = r.u16();
  std::vector<revocation::NodeId> out(n);
  for (auto& id : out) id = r.u64();
  return out;
}

/// Path(PID) as carried inside C2.
inline Bytes encode_path(const std::vector<revocation::NodeId>& p) {
  Bytes out;
  put_path(out, p);
  return out;
}

inline std::vector<revocation::NodeId> decode_path(ByteView in) {
  Reader r(in);
  auto out = get_path(r);
  r.finish();
  return out;
}

// ---------------------------------------------------------------------------
// Framed messages

template <PairingSuite S>
Bytes encode(const SystemParams<S>& pp) {
  Bytes body;
  body.push_back(static_cast<std::uint8_t>(S::id));
  append_u16(body, static_cast<std::uint16_t>(kProtocolTag.size()));
  append(body, to_bytes(kProtocolTag));
  append(body, pp.pk1.to_bytes());
  append(body, pp.pk2.to_bytes());
  append(body, pp.pk_trac.to_bytes());
  return frame(MsgType::SystemParams, body);
}

template <PairingSuite S>
SystemParams<S> decode_system_params(ByteView in) {
  Reader r(unframe(in, MsgType::SystemParams));
  if (r.u8() != static_cast<std::uint8_t>(S::id)) throw Error(Errc::SuiteMismatch);
  const std::uint16_t tag_len = r.u16();
  const ByteView tag = r.take(tag_len);
  if (std::string_view(reinterpret_cast<const char*>(tag.data()), tag.size()) != kProtocolTag)
    throw Error(Errc::InvalidEncoding, "hash configuration tag");
  SystemParams<S> pp;
  pp.pk1 = r.point<typename S::G1>();
  pp.pk2 = r.point<typename S::G2>();
  pp.pk_trac = r.point<typename S::G2>();
  r.finish();
  return pp;
}

template <PairingSuite S>
Bytes encode(const BroadcastMsg<S>& msg) {
  if (msg.sig.u_list.size() != msg.ring.size()) throw Error(Errc::LengthMismatch, "signature/ring length");
  Bytes body;
  append_u32(body, static_cast<std::uint32_t>(msg.m.size()));
  append(body, msg.m);
  put_pid_list<S>(body, msg.ring.members());
  put_signature(body, msg.sig);
  append_u64(body, msg.t);
  append(body, msg.tag.to_bytes());
  return frame(MsgType::BroadcastMsg, body);
}

template <PairingSuite S>
BroadcastMsg<S> decode_broadcast(ByteView in) {
  Reader r(unframe(in, MsgType::BroadcastMsg));
  const std::uint32_t mlen = r.u32();
  const ByteView m = r.take(mlen);
  SubRing<S> ring(get_pid_list<S>(r));
  auto sig = get_signature<S>(r);
  if (sig.u_list.size() != ring.size()) throw Error(Errc::InvalidEncoding, "signature/ring length");
  const std::uint64_t t = r.u64();
  const Gt tag = r.gt();
  r.finish();
  return {Bytes(m.begin(), m.end()), std::move(sig), std::move(ring), t, tag};
}

template <PairingSuite S>
Bytes encode(const RingRequest<S>& req) {
  Bytes body = encode_ibe_ciphertext(req.c1);
  append_u32(body, static_cast<std::uint32_t>(req.c2.size()));
  append(body, req.c2);
  return frame(MsgType::RingRequest, body);
}

template <PairingSuite S>
RingRequest<S> decode_ring_request(ByteView in) {
  Reader r(unframe(in, MsgType::RingRequest));
  RingRequest<S> req{decode_ibe_ciphertext<S>(r.take(2 * S::G1::kSize)), {}};
  const std::uint32_t len = r.u32();
  const ByteView c2 = r.take(len);
  req.c2.assign(c2.begin(), c2.end());
  r.finish();
  return req;
}

inline Bytes encode(const RingGrant& g) {
  Bytes body;
  append_u32(body, static_cast<std::uint32_t>(g.c_prime.size()));
  append(body, g.c_prime);
  append(body, g.sigma);
  append_u64(body, g.expiry);
  return frame(MsgType::RingGrant, body);
}

inline RingGrant decode_ring_grant(ByteView in) {
  Reader r(unframe(in, MsgType::RingGrant));
  RingGrant g;
  const std::uint32_t len = r.u32();
  const ByteView c = r.take(len);
  g.c_prime.assign(c.begin(), c.end());
  const ByteView sigma = r.take(sym::kMacSize);
  std::copy(sigma.begin(), sigma.end(), g.sigma.begin());
  g.expiry = r.u64();
  r.finish();
  return g;
}

/// epoch (u64) || u32 count || sorted node ids
inline Bytes encode(const revocation::KeyUpdate& ku) {
  Bytes body;
  append_u64(body, ku.epoch);
  append_u32(body, static_cast<std::uint32_t>(ku.cover.size()));
  for (auto id : ku.cover) append_u64(body, id);
  return frame(MsgType::KeyUpdate, body);
}

inline revocation::KeyUpdate decode_key_update(ByteView in) {
  Reader r(unframe(in, MsgType::KeyUpdate));
  revocation::KeyUpdate ku;
  ku.epoch = r.u64();
  const std::uint32_t n = r.u32();
  if (n > r.remaining() / 8) throw Error(Errc::TruncatedFrame, "cover count");
  ku.cover.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    ku.cover[i] = r.u64();
    if (ku.cover[i] == 0 || (i > 0 && ku.cover[i] <= ku.cover[i - 1]))
      throw Error(Errc::InvalidEncoding, "cover ids must be positive and strictly ascending");
  }
  r.finish();
  return ku;
}

inline Bytes encode(const revocation::RevocationList& rl) {
  Bytes body;
  append_u32(body, static_cast<std::uint32_t>(rl.size()));
  for (const auto& e : rl.entries()) {
    append_u64(body, e.leaf);
    append_u64(body, e.time);
  }
  return frame(MsgType::RevocationList, body);
}

inline revocation::RevocationList decode_revocation_list(ByteView in) {
  Reader r(unframe(in, MsgType::RevocationList));
  const std::uint32_t n = r.u32();
  if (n > r.remaining() / 16) throw Error(Errc::TruncatedFrame, "entry count");
  std::vector<revocation::RevocationEntry> entries(n);
  for (auto& e : entries) {
    e.leaf = r.u64();
    e.time = r.u64();
  }
  r.finish();
  return revocation::RevocationList(std::move(entries));
}

template <PairingSuite S>
Bytes encode(const VehiclePublicRecord<S>& rec) {
  Bytes body;
  append(body, rec.pid.to_bytes());
  put_path(body, rec.leaf_path);
  return frame(MsgType::VehiclePublicRecord, body);
}

template <PairingSuite S>
VehiclePublicRecord<S> decode_vehicle_record(ByteView in) {
  Reader r(unframe(in, MsgType::VehiclePublicRecord));
  VehiclePublicRecord<S> rec{r.point<typename S::G1>(), get_path(r)};
  r.finish();
  return rec;
}

}  // namespace ringveil::wire
