#pragma once

// Pinned wire messages shared by the unit and acceptance suites. Every value
// is derived from a fixed seed, so the byte strings are stable across runs.

#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ringveil/wire.hpp"

namespace ringveil::golden {

inline constexpr std::uint64_t kSeed = 0x52564c31;

template <PairingSuite S>
std::vector<std::pair<std::string, Bytes>> messages() {
  using G1 = typename S::G1;
  SimRng rng(kSeed);
  const MasterSecret ms(Scalar::from_u64(0x1234567));
  const auto pk_trac = S::G2::generator() * Scalar::from_u64(0x89abcdef);
  const auto pp = make_params<S>(ms, pk_trac);

  revocation::RevocationTree bt(4);
  std::vector<VehicleCredential<S>> vs;
  for (int i = 0; i < 4; ++i) vs.push_back(issue_vehicle<S>(ms, to_bytes("golden-vid-" + std::to_string(i)), bt));
  const auto rsu = issue_rsu<S>(ms, to_bytes("golden-region"));

  std::vector<G1> members;
  for (const auto& v : vs) members.push_back(v.pid);
  SubRing<S> ring(members);
  const std::uint64_t t = 1700000000;
  SignedPayload payload{to_bytes("emergency brake ahead"), S::pair(hash_to_g1<S>(Dst::Tag, to_bytes("t")), pk_trac), t};
  auto sig = ring_sign(pp, vs[2].psk, 2, payload, ring, rng);
  wire::BroadcastMsg<S> msg{payload.m, sig, ring, t, payload.tag};

  const Gt k = shared_key_vehicle<S>(vs[1].psk, rsu.rid);
  const auto keys = sym::derive_channel_keys(k);
  wire::RingRequest<S> req{ibe_encrypt(pp, rsu.rid, vs[1].pid, rng),
                           sym::sym_encrypt(keys.enc, wire::encode_path(vs[1].leaf_path), sym::derive_nonce(k, 0))};

  wire::RingGrant grant;
  grant.expiry = t + 3600;
  grant.c_prime = sym::sym_encrypt(keys.enc, wire::encode_pid_list<S>(members), sym::derive_nonce(k, 1));
  Bytes authed = grant.c_prime;
  append_u64(authed, grant.expiry);
  grant.sigma = sym::mac(keys.mac, authed);

  revocation::RevocationList rl;
  rl.add(vs[3].leaf_path.front(), 472222);

  return {
      {"system_params", wire::encode(pp)},
      {"broadcast", wire::encode(msg)},
      {"ring_request", wire::encode(req)},
      {"ring_grant", wire::encode(grant)},
      {"key_update", wire::encode(revocation::kunodes(bt, rl, 472222))},
      {"revocation_list", wire::encode(rl)},
      {"vehicle_record", wire::encode(wire::VehiclePublicRecord<S>{vs[0].pid, vs[0].leaf_path})},
  };
}

inline std::string path_for(std::string_view dir, std::string_view suite, std::string_view name) {
  return std::string(dir) + "/" + std::string(suite) + "/" + std::string(name) + ".hex";
}

inline std::string read_hex(const std::string& path) {
  std::ifstream in(path);
  if (!in) return {};
  std::stringstream ss;
  ss << in.rdbuf();
  std::string s = ss.str();
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

}  // namespace ringveil::golden
