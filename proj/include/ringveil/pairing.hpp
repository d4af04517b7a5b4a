#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <concepts>
#include <cstdint>
#include <cstring>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <blst.h>
#include <blst_aux.h>
#include <openssl/bn.h>
#include <openssl/evp.h>

#include "ringveil/bytes.hpp"
#include "ringveil/error.hpp"
#include "ringveil/random.hpp"

namespace ringveil {

// ---------------------------------------------------------------------------
// Instrumentation

namespace detail {
inline thread_local std::uint64_t pairing_evaluations = 0;
}  // namespace detail

/// Number of full pairing evaluations performed on the calling thread.
inline std::uint64_t pairing_count() noexcept { return detail::pairing_evaluations; }

/// Counts pairings evaluated on this thread while the object is alive.
class PairingCounter {
 public:
  PairingCounter() : start_(pairing_count()) {}
  std::uint64_t count() const noexcept { return pairing_count() - start_; }
  void reset() noexcept { start_ = pairing_count(); }

 private:
  std::uint64_t start_;
};

// ---------------------------------------------------------------------------
// Scalars mod the group order r of BLS12-381.

class Scalar {
 public:
  static constexpr std::size_t kSize = 32;
  using Encoded = std::array<std::uint8_t, kSize>;

  Scalar() { std::memset(&fr_, 0, sizeof fr_); }

  static Scalar zero() { return Scalar(); }
  static Scalar one() { return from_u64(1); }

  static Scalar from_u64(std::uint64_t v) {
    const std::uint64_t limbs[4] = {v, 0, 0, 0};
    Scalar s;
    blst_fr_from_uint64(&s.fr_, limbs);
    return s;
  }

  /// Canonical fixed-width big-endian decoding; rejects values >= r.
  static Scalar from_bytes(ByteView in) {
    if (in.size() != kSize) throw Error(Errc::InvalidEncoding, "scalar length");
    blst_scalar raw;
    blst_scalar_from_bendian(&raw, in.data());
    if (!blst_scalar_fr_check(&raw)) throw Error(Errc::InvalidEncoding, "scalar out of range");
    Scalar s;
    blst_fr_from_scalar(&s.fr_, &raw);
    return s;
  }

  /// Reduces an arbitrary-length big-endian integer mod r.
  static Scalar from_wide_bytes(ByteView in) {
    blst_scalar raw;
    blst_scalar_from_be_bytes(&raw, in.data(), in.size());
    Scalar s;
    blst_fr_from_scalar(&s.fr_, &raw);
    return s;
  }

  /// Uniform draw from Z_r^*.
  template <Rng64 G>
  static Scalar random(G& rng) {
    for (;;) {
      std::array<std::uint8_t, 64> wide;
      fill_random(rng, wide.data(), wide.size());
      Scalar s = from_wide_bytes(wide);
      if (!s.is_zero()) return s;
    }
  }

  /// The group order r, big-endian.
  static const Encoded& modulus() {
    static const Encoded r = [] {
      Encoded out{};
      const Bytes b = from_hex("73eda753299d7d483339d80809a1d80553bda402fffe5bfeffffffff00000001");
      std::copy(b.begin(), b.end(), out.begin());
      return out;
    }();
    return r;
  }

  Encoded to_bytes() const {
    blst_scalar raw = to_blst();
    Encoded out;
    blst_bendian_from_scalar(out.data(), &raw);
    return out;
  }

  /// Little-endian form consumed by blst scalar multiplication.
  blst_scalar to_blst() const {
    blst_scalar raw;
    blst_scalar_from_fr(&raw, &fr_);
    return raw;
  }

  bool is_zero() const {
    const auto b = to_bytes();
    return std::all_of(b.begin(), b.end(), [](std::uint8_t x) { return x == 0; });
  }

  Scalar inverse() const {
    if (is_zero()) throw Error(Errc::ZeroScalar, "inverse of zero");
    Scalar s;
    blst_fr_eucl_inverse(&s.fr_, &fr_);
    return s;
  }

  friend Scalar operator+(const Scalar& a, const Scalar& b) {
    Scalar s;
    blst_fr_add(&s.fr_, &a.fr_, &b.fr_);
    return s;
  }
  friend Scalar operator-(const Scalar& a, const Scalar& b) {
    Scalar s;
    blst_fr_sub(&s.fr_, &a.fr_, &b.fr_);
    return s;
  }
  friend Scalar operator*(const Scalar& a, const Scalar& b) {
    Scalar s;
    blst_fr_mul(&s.fr_, &a.fr_, &b.fr_);
    return s;
  }
  Scalar operator-() const {
    Scalar s;
    blst_fr_cneg(&s.fr_, &fr_, true);
    return s;
  }
  friend bool operator==(const Scalar& a, const Scalar& b) { return a.to_bytes() == b.to_bytes(); }

 private:
  blst_fr fr_;
};

inline Scalar scalar_inverse(const Scalar& s) { return s.inverse(); }

// ---------------------------------------------------------------------------
// Group elements

namespace detail {

struct BlstG1 {
  using point = blst_p1;
  using affine = blst_p1_affine;
  static constexpr std::size_t compressed_size = 48;
  static constexpr std::string_view curve_tag = "BLS12381G1_XMD:SHA-256_SSWU_RO_";

  static const point* generator() { return blst_p1_generator(); }
  static void add(point* o, const point* a, const point* b) { blst_p1_add_or_double(o, a, b); }
  static void negate(point* p) { blst_p1_cneg(p, true); }
  static void mult(point* o, const point* p, const byte* s, std::size_t bits) { blst_p1_mult(o, p, s, bits); }
  static bool is_inf(const point* p) { return blst_p1_is_inf(p); }
  static bool equal(const point* a, const point* b) { return blst_p1_is_equal(a, b); }
  static bool in_group(const point* p) { return blst_p1_in_g1(p); }
  static void compress(byte* out, const point* p) { blst_p1_compress(out, p); }
  static BLST_ERROR uncompress(affine* out, const byte* in) { return blst_p1_uncompress(out, in); }
  static bool affine_in_group(const affine* a) { return blst_p1_affine_in_g1(a); }
  static void from_affine(point* o, const affine* a) { blst_p1_from_affine(o, a); }
  static void to_affine(affine* o, const point* p) { blst_p1_to_affine(o, p); }
  static void to_affines(affine* o, const point* const* in, std::size_t n) { blst_p1s_to_affine(o, in, n); }
  static std::size_t msm_scratch(std::size_t n) { return blst_p1s_mult_pippenger_scratch_sizeof(n); }
  static void msm(point* o, const affine* const* pts, std::size_t n, const byte* const* s, std::size_t bits,
                  limb_t* scratch) {
    blst_p1s_mult_pippenger(o, pts, n, s, bits, scratch);
  }
  static void hash(point* o, const byte* msg, std::size_t len, const byte* dst, std::size_t dst_len) {
    blst_hash_to_g1(o, msg, len, dst, dst_len, nullptr, 0);
  }
};

struct BlstG2 {
  using point = blst_p2;
  using affine = blst_p2_affine;
  static constexpr std::size_t compressed_size = 96;
  static constexpr std::string_view curve_tag = "BLS12381G2_XMD:SHA-256_SSWU_RO_";

  static const point* generator() { return blst_p2_generator(); }
  static void add(point* o, const point* a, const point* b) { blst_p2_add_or_double(o, a, b); }
  static void negate(point* p) { blst_p2_cneg(p, true); }
  static void mult(point* o, const point* p, const byte* s, std::size_t bits) { blst_p2_mult(o, p, s, bits); }
  static bool is_inf(const point* p) { return blst_p2_is_inf(p); }
  static bool equal(const point* a, const point* b) { return blst_p2_is_equal(a, b); }
  static bool in_group(const point* p) { return blst_p2_in_g2(p); }
  static void compress(byte* out, const point* p) { blst_p2_compress(out, p); }
  static BLST_ERROR uncompress(affine* out, const byte* in) { return blst_p2_uncompress(out, in); }
  static bool affine_in_group(const affine* a) { return blst_p2_affine_in_g2(a); }
  static void from_affine(point* o, const affine* a) { blst_p2_from_affine(o, a); }
  static void to_affine(affine* o, const point* p) { blst_p2_to_affine(o, p); }
  static void to_affines(affine* o, const point* const* in, std::size_t n) { blst_p2s_to_affine(o, in, n); }
  static std::size_t msm_scratch(std::size_t n) { return blst_p2s_mult_pippenger_scratch_sizeof(n); }
  static void msm(point* o, const affine* const* pts, std::size_t n, const byte* const* s, std::size_t bits,
                  limb_t* scratch) {
    blst_p2s_mult_pippenger(o, pts, n, s, bits, scratch);
  }
  static void hash(point* o, const byte* msg, std::size_t len, const byte* dst, std::size_t dst_len) {
    blst_hash_to_g2(o, msg, len, dst, dst_len, nullptr, 0);
  }
};

}  // namespace detail

/// Element of a prime-order source group. Always in the order-r subgroup:
/// every constructor path either computes from group elements or checks.
template <class Ops>
class Point {
 public:
  static constexpr std::size_t kSize = Ops::compressed_size;
  static constexpr std::string_view curve_tag = Ops::curve_tag;
  using Encoded = std::array<std::uint8_t, kSize>;
  using Raw = typename Ops::point;
  using Affine = typename Ops::affine;

  Point() { std::memset(&p_, 0, sizeof p_); }

  static Point identity() { return Point(); }
  static Point generator() { return Point(*Ops::generator()); }

  template <Rng64 G>
  static Point random(G& rng) {
    return generator() * Scalar::random(rng);
  }

  /// Hash-to-curve with the given domain separation tag. An identity output
  /// (never observed in practice) is re-derived with a counter suffix.
  static Point hash_to(std::string_view dst, ByteView msg) {
    Bytes buf(msg.begin(), msg.end());
    for (std::uint8_t ctr = 0;; ++ctr) {
      Raw out;
      Ops::hash(&out, buf.data(), buf.size(), reinterpret_cast<const byte*>(dst.data()), dst.size());
      if (!Ops::is_inf(&out)) return Point(out);
      if (ctr == 0) buf.push_back(0);
      buf.back() = static_cast<std::uint8_t>(ctr + 1);
    }
  }

  static Point from_bytes(ByteView in) {
    if (in.size() != kSize) throw Error(Errc::InvalidEncoding, "point length");
    Affine a;
    if (Ops::uncompress(&a, in.data()) != BLST_SUCCESS) throw Error(Errc::InvalidEncoding, "point decode");
    if (!Ops::affine_in_group(&a)) throw Error(Errc::SubgroupCheckFailed, "point not in subgroup");
    Raw p;
    Ops::from_affine(&p, &a);
    return Point(p);
  }

  Encoded to_bytes() const {
    Encoded out;
    Ops::compress(out.data(), &p_);
    return out;
  }

  bool is_identity() const { return Ops::is_inf(&p_); }
  bool in_subgroup() const { return Ops::in_group(&p_); }

  Affine to_affine() const {
    Affine a;
    Ops::to_affine(&a, &p_);
    return a;
  }

  /// Multiplies by a little-endian integer of the given bit length.
  Point mul_bits(const std::uint8_t* le, std::size_t bits) const {
    Raw out;
    Ops::mult(&out, &p_, le, bits);
    return Point(out);
  }

  /// sum s_i P_i by Pippenger. Variable time, so only for public scalars.
  static Point msm(std::span<const Point> pts, std::span<const Scalar> scalars) {
    if (pts.size() != scalars.size()) throw Error(Errc::LengthMismatch, "msm lengths");
    if (pts.empty()) return Point();
    if (pts.size() == 1) return pts[0] * scalars[0];
    const std::size_t n = pts.size();
    std::vector<const Raw*> raw(n);
    for (std::size_t i = 0; i < n; ++i) raw[i] = &pts[i].p_;
    std::vector<Affine> aff(n);
    Ops::to_affines(aff.data(), raw.data(), n);
    std::vector<blst_scalar> sc(n);
    std::vector<const Affine*> ap(n);
    std::vector<const byte*> sp(n);
    for (std::size_t i = 0; i < n; ++i) {
      sc[i] = scalars[i].to_blst();
      ap[i] = &aff[i];
      sp[i] = sc[i].b;
    }
    std::vector<limb_t> scratch(Ops::msm_scratch(n) / sizeof(limb_t) + 1);
    Raw out;
    Ops::msm(&out, ap.data(), n, sp.data(), 255, scratch.data());
    return Point(out);
  }

  friend Point operator*(const Point& p, const Scalar& s) {
    const blst_scalar raw = s.to_blst();
    return p.mul_bits(raw.b, 255);
  }
  friend Point operator*(const Scalar& s, const Point& p) { return p * s; }

  friend Point operator+(const Point& a, const Point& b) {
    Raw out;
    Ops::add(&out, &a.p_, &b.p_);
    return Point(out);
  }
  Point operator-() const {
    Point n = *this;
    Ops::negate(&n.p_);
    return n;
  }
  friend Point operator-(const Point& a, const Point& b) { return a + (-b); }
  Point& operator+=(const Point& b) { return *this = *this + b; }

  friend bool operator==(const Point& a, const Point& b) { return Ops::equal(&a.p_, &b.p_); }

  const Raw& raw() const { return p_; }

 private:
  explicit Point(const Raw& p) : p_(p) {}
  Raw p_;
};

using G1Point = Point<detail::BlstG1>;
using G2Point = Point<detail::BlstG2>;

/// Target group element (order-r subgroup of Fp12^*).
class Gt {
 public:
  static constexpr std::size_t kSize = 48 * 12;
  using Encoded = std::array<std::uint8_t, kSize>;

  Gt() : f_(*blst_fp12_one()) {}
  static Gt one() { return Gt(); }

  template <Rng64 G>
  static Gt random(G& rng);

  static Gt from_bytes(ByteView in) {
    if (in.size() != kSize) throw Error(Errc::InvalidEncoding, "gt length");
    Gt g;
    const std::uint8_t* p = in.data();
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 2; ++j) {
        for (int k = 0; k < 2; ++k) {
          blst_fp& fp = g.f_.fp6[j].fp2[i].fp[k];
          blst_fp_from_bendian(&fp, p);
          std::uint8_t back[48];
          blst_bendian_from_fp(back, &fp);
          if (std::memcmp(back, p, 48) != 0) throw Error(Errc::InvalidEncoding, "gt coefficient out of range");
          p += 48;
        }
      }
    }
    if (!blst_fp12_in_group(&g.f_)) throw Error(Errc::SubgroupCheckFailed, "gt not in subgroup");
    return g;
  }

  Encoded to_bytes() const {
    Encoded out;
    blst_bendian_from_fp12(out.data(), &f_);
    return out;
  }

  bool is_one() const { return blst_fp12_is_one(&f_); }

  Gt pow(const Scalar& e) const {
    const auto bits = e.to_bytes();
    Gt acc;
    bool started = false;
    for (std::uint8_t byte : bits) {
      for (int b = 7; b >= 0; --b) {
        if (started) blst_fp12_cyclotomic_sqr(&acc.f_, &acc.f_);
        if ((byte >> b) & 1) {
          if (started) {
            blst_fp12_mul(&acc.f_, &acc.f_, &f_);
          } else {
            acc.f_ = f_;
            started = true;
          }
        }
      }
    }
    return acc;
  }

  Gt inverse() const {
    Gt g = *this;
    blst_fp12_conjugate(&g.f_);
    return g;
  }

  friend Gt operator*(const Gt& a, const Gt& b) {
    Gt g;
    blst_fp12_mul(&g.f_, &a.f_, &b.f_);
    return g;
  }
  friend bool operator==(const Gt& a, const Gt& b) { return blst_fp12_is_equal(&a.f_, &b.f_); }

 private:
  friend Gt pairing(const G1Point&, const G2Point&);
  blst_fp12 f_;
};

/// Optimal ate pairing e: G1 x G2 -> GT.
inline Gt pairing(const G1Point& a, const G2Point& b) {
  ++detail::pairing_evaluations;
  Gt out;
  if (a.is_identity() || b.is_identity()) return out;
  const auto pa = a.to_affine();
  const auto pb = b.to_affine();
  blst_fp12 ml;
  blst_miller_loop(&ml, &pb, &pa);
  blst_final_exp(&out.f_, &ml);
  return out;
}

inline Gt gt_exp(const Gt& base, const Scalar& e) { return base.pow(e); }

// ---------------------------------------------------------------------------
// Pairing suites

enum class SuiteId : std::uint8_t {
  Bls12381 = 1,         // pseudonyms and signatures in the 48-byte group
  Bls12381Swapped = 2,  // roles swapped: pseudonyms in the 96-byte group
};

/// BLS12-381 with the scheme's G1 mapped to the curve's G1.
struct Bls12381 {
  using G1 = G1Point;
  using G2 = G2Point;
  static constexpr SuiteId id = SuiteId::Bls12381;
  static constexpr std::string_view name = "bls12-381";
  static constexpr bool symmetric = false;
  static Gt pair(const G1& a, const G2& b) { return pairing(a, b); }
};

/// BLS12-381 with the source groups exchanged, e'(a, b) = e(b, a).
struct Bls12381Swapped {
  using G1 = G2Point;
  using G2 = G1Point;
  static constexpr SuiteId id = SuiteId::Bls12381Swapped;
  static constexpr std::string_view name = "bls12-381-swap";
  static constexpr bool symmetric = false;
  static Gt pair(const G1& a, const G2& b) { return pairing(b, a); }
};

template <class S>
concept PairingSuite = requires(const typename S::G1& a, const typename S::G2& b) {
  { S::pair(a, b) } -> std::same_as<Gt>;
  { S::id } -> std::convertible_to<SuiteId>;
  { S::name } -> std::convertible_to<std::string_view>;
};

template <Rng64 G>
Gt Gt::random(G& rng) {
  return pairing(G1Point::generator(), G2Point::generator()).pow(Scalar::random(rng));
}

// ---------------------------------------------------------------------------
// Hashing

/// Hash usages; each gets its own domain separation tag.
enum class Dst { Pid, Rid, Tag, RingSig, Ibe };

constexpr std::string_view dst_label(Dst d) {
  switch (d) {
    case Dst::Pid: return "PID";
    case Dst::Rid: return "RID";
    case Dst::Tag: return "TAG";
    case Dst::RingSig: return "RINGSIG";
    case Dst::Ibe: return "IBE";
  }
  return "";
}

inline constexpr std::string_view kProtocolTag = "RINGVEIL-V01";

inline std::string dst_string(Dst d, std::string_view suffix) {
  std::string s(kProtocolTag);
  s += '-';
  s += dst_label(d);
  s += '-';
  s += suffix;
  return s;
}

template <PairingSuite S>
typename S::G1 hash_to_g1(Dst d, ByteView data) {
  using P = typename S::G1;
  return P::hash_to(dst_string(d, P::curve_tag), data);
}

template <PairingSuite S>
typename S::G2 hash_to_g2(Dst d, ByteView data) {
  using P = typename S::G2;
  return P::hash_to(dst_string(d, P::curve_tag), data);
}

namespace detail {

inline std::array<std::uint8_t, 32> sha256(ByteView a, ByteView b = {}, ByteView c = {}) {
  std::array<std::uint8_t, 32> out{};
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), a.data(), a.size()) != 1 ||
      EVP_DigestUpdate(ctx.get(), b.data(), b.size()) != 1 ||
      EVP_DigestUpdate(ctx.get(), c.data(), c.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), out.data(), &len) != 1)
    throw Error(Errc::InvalidArgument, "sha256 failed");
  return out;
}

}  // namespace detail

/// Maps to [1, r-1]: 512 hashed bits reduced mod r-1, plus one.
inline Scalar hash_to_scalar(Dst d, ByteView data) {
  const std::string dst = dst_string(d, "SCALAR_SHA-256");
  Bytes prefix;
  prefix.push_back(static_cast<std::uint8_t>(dst.size()));
  append(prefix, to_bytes(dst));
  std::array<std::uint8_t, 64> wide;
  for (std::uint8_t ctr = 0; ctr < 2; ++ctr) {
    const std::uint8_t c[1] = {ctr};
    const auto h = detail::sha256(prefix, c, data);
    std::copy(h.begin(), h.end(), wide.begin() + 32 * ctr);
  }

  using BnPtr = std::unique_ptr<BIGNUM, decltype(&BN_free)>;
  std::unique_ptr<BN_CTX, decltype(&BN_CTX_free)> ctx(BN_CTX_new(), BN_CTX_free);
  BnPtr x(BN_bin2bn(wide.data(), static_cast<int>(wide.size()), nullptr), BN_free);
  const auto& r = Scalar::modulus();
  BnPtr m(BN_bin2bn(r.data(), static_cast<int>(r.size()), nullptr), BN_free);
  BnPtr rem(BN_new(), BN_free);
  if (!ctx || !x || !m || !rem || !BN_sub_word(m.get(), 1) || !BN_nnmod(rem.get(), x.get(), m.get(), ctx.get()) ||
      !BN_add_word(rem.get(), 1))
    throw Error(Errc::InvalidArgument, "bignum reduction failed");
  Scalar::Encoded out{};
  if (BN_bn2binpad(rem.get(), out.data(), static_cast<int>(out.size())) != static_cast<int>(out.size()))
    throw Error(Errc::InvalidArgument, "bignum encode failed");
  return Scalar::from_bytes(out);
}

}  // namespace ringveil
