#pragma once

#include <array>
#include <cstdint>
#include <memory>

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/kdf.h>

#include "ringveil/bytes.hpp"
#include "ringveil/error.hpp"
#include "ringveil/pairing.hpp"

// Symmetric channel between an RSU and a vehicle, keyed from a GT secret.
namespace ringveil::sym {

inline constexpr std::size_t kKeySize = 32;
inline constexpr std::size_t kNonceSize = 12;
inline constexpr std::size_t kAuthSize = 16;
inline constexpr std::size_t kMacSize = 32;
inline constexpr std::size_t kMaxKdfOutput = 8192;

using SymKey = std::array<std::uint8_t, kKeySize>;
using Nonce = std::array<std::uint8_t, kNonceSize>;
using MacTag = std::array<std::uint8_t, kMacSize>;

/// HKDF-SHA512 over raw secret bytes.
inline Bytes kdf_bytes(ByteView secret, ByteView context, std::size_t out_len) {
  if (out_len > kMaxKdfOutput) throw Error(Errc::LengthTooLarge, "kdf output");
  Bytes out(out_len);
  if (out_len == 0) return out;
  std::unique_ptr<EVP_PKEY_CTX, decltype(&EVP_PKEY_CTX_free)> ctx(EVP_PKEY_CTX_new_id(EVP_PKEY_HKDF, nullptr),
                                                                  EVP_PKEY_CTX_free);
  static constexpr std::uint8_t kSalt[] = "ringveil-kdf-v1";
  std::size_t len = out_len;
  if (!ctx || EVP_PKEY_derive_init(ctx.get()) <= 0 || EVP_PKEY_CTX_set_hkdf_md(ctx.get(), EVP_sha512()) <= 0 ||
      EVP_PKEY_CTX_set1_hkdf_salt(ctx.get(), kSalt, sizeof kSalt - 1) <= 0 ||
      EVP_PKEY_CTX_set1_hkdf_key(ctx.get(), secret.data(), static_cast<int>(secret.size())) <= 0 ||
      EVP_PKEY_CTX_add1_hkdf_info(ctx.get(), context.data(), static_cast<int>(context.size())) <= 0 ||
      EVP_PKEY_derive(ctx.get(), out.data(), &len) <= 0 || len != out_len)
    throw Error(Errc::InvalidArgument, "hkdf failed");
  return out;
}

inline Bytes kdf(const Gt& secret, ByteView context, std::size_t out_len) {
  return kdf_bytes(secret.to_bytes(), context, out_len);
}

inline Bytes kdf(const Gt& secret, std::string_view context, std::size_t out_len) {
  return kdf(secret, to_bytes(context), out_len);
}

/// AES-256-GCM. Output layout: nonce || body || 16-byte auth block.
inline Bytes sym_encrypt(const SymKey& k, ByteView plaintext, const Nonce& nonce) {
  std::unique_ptr<EVP_CIPHER_CTX, decltype(&EVP_CIPHER_CTX_free)> ctx(EVP_CIPHER_CTX_new(), EVP_CIPHER_CTX_free);
  Bytes out(kNonceSize + plaintext.size() + kAuthSize);
  std::copy(nonce.begin(), nonce.end(), out.begin());
  int len = 0;
  int total = 0;
  if (!ctx || EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, k.data(), nonce.data()) != 1)
    throw Error(Errc::InvalidArgument, "gcm init");
  if (!plaintext.empty()) {
    if (EVP_EncryptUpdate(ctx.get(), out.data() + kNonceSize, &len, plaintext.data(),
                          static_cast<int>(plaintext.size())) != 1)
      throw Error(Errc::InvalidArgument, "gcm update");
    total = len;
  }
  if (EVP_EncryptFinal_ex(ctx.get(), out.data() + kNonceSize + total, &len) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kAuthSize,
                          out.data() + kNonceSize + plaintext.size()) != 1)
    throw Error(Errc::InvalidArgument, "gcm final");
  return out;
}

/// Inverse of sym_encrypt. The embedded nonce must equal `nonce`.
inline Bytes sym_decrypt(const SymKey& k, ByteView ciphertext, const Nonce& nonce) {
  if (ciphertext.size() < kNonceSize + kAuthSize) throw Error(Errc::AuthFailure, "ciphertext too short");
  if (CRYPTO_memcmp(ciphertext.data(), nonce.data(), kNonceSize) != 0) throw Error(Errc::AuthFailure, "nonce mismatch");
  const std::size_t body = ciphertext.size() - kNonceSize - kAuthSize;
  std::unique_ptr<EVP_CIPHER_CTX, decltype(&EVP_CIPHER_CTX_free)> ctx(EVP_CIPHER_CTX_new(), EVP_CIPHER_CTX_free);
  Bytes out(body);
  std::array<std::uint8_t, kAuthSize> tag;
  std::copy_n(ciphertext.data() + kNonceSize + body, kAuthSize, tag.begin());
  int len = 0;
  if (!ctx || EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, k.data(), nonce.data()) != 1)
    throw Error(Errc::InvalidArgument, "gcm init");
  if (body > 0 &&
      EVP_DecryptUpdate(ctx.get(), out.data(), &len, ciphertext.data() + kNonceSize, static_cast<int>(body)) != 1)
    throw Error(Errc::AuthFailure, "gcm update");
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kAuthSize, tag.data()) != 1 ||
      EVP_DecryptFinal_ex(ctx.get(), out.data() + len, &len) != 1)
    throw Error(Errc::AuthFailure, "authentication failed");
  return out;
}

/// Decrypts using the nonce carried in the ciphertext prefix.
inline Bytes sym_decrypt(const SymKey& k, ByteView ciphertext) {
  if (ciphertext.size() < kNonceSize + kAuthSize) throw Error(Errc::AuthFailure, "ciphertext too short");
  Nonce n;
  std::copy_n(ciphertext.begin(), kNonceSize, n.begin());
  return sym_decrypt(k, ciphertext, n);
}

/// HMAC-SHA256.
inline MacTag mac(const SymKey& k, ByteView message) {
  MacTag out;
  unsigned int len = 0;
  if (!HMAC(EVP_sha256(), k.data(), static_cast<int>(k.size()), message.data(), message.size(), out.data(), &len) ||
      len != kMacSize)
    throw Error(Errc::InvalidArgument, "hmac failed");
  return out;
}

inline bool mac_verify(const SymKey& k, ByteView message, const MacTag& tag) {
  const MacTag expect = mac(k, message);
  return CRYPTO_memcmp(expect.data(), tag.data(), kMacSize) == 0;
}

/// Independent encryption and MAC keys derived from one GT shared secret.
struct ChannelKeys {
  SymKey enc;
  SymKey mac;
};

inline ChannelKeys derive_channel_keys(const Gt& shared) {
  ChannelKeys keys;
  const Bytes e = kdf(shared, "ringlist-enc", kKeySize);
  const Bytes m = kdf(shared, "ringlist-mac", kKeySize);
  std::copy(e.begin(), e.end(), keys.enc.begin());
  std::copy(m.begin(), m.end(), keys.mac.begin());
  return keys;
}

/// nonce = kdf(secret, "nonce" || counter)
inline Nonce derive_nonce(const Gt& shared, std::uint64_t counter) {
  Bytes ctx = to_bytes("nonce");
  append_u64(ctx, counter);
  const Bytes raw = kdf(shared, ctx, kNonceSize);
  Nonce n;
  std::copy(raw.begin(), raw.end(), n.begin());
  return n;
}

inline SymKey key_from_bytes(ByteView b) {
  if (b.size() != kKeySize) throw Error(Errc::InvalidArgument, "key must be 32 bytes");
  SymKey k;
  std::copy(b.begin(), b.end(), k.begin());
  return k;
}

}  // namespace ringveil::sym
