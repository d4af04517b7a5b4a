#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ringveil {

enum class Errc {
  InvalidArgument,
  ZeroScalar,
  InvalidEncoding,
  SubgroupCheckFailed,
  LengthTooLarge,
  AuthFailure,
  DuplicateIdentity,
  TreeFull,
  MalformedCiphertext,
  InvalidPid,
  IndexOutOfRange,
  SignerMismatch,
  LengthMismatch,
  EmptyBatch,
  EmptyRing,
  DuplicateMember,
  NotALeaf,
  UnknownPid,
  NotProvisioned,
  RevokedVehicle,
  StaleKeyUpdate,
  MalformedRequest,
  GrantExpired,
  RingTooSmall,
  SelfNotInList,
  NoMatch,
  AmbiguousMatch,
  UnknownVid,
  TruncatedFrame,
  BadVersion,
  BadType,
  TrailingBytes,
  SuiteMismatch,
  InvalidConfig,
};

constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::ZeroScalar: return "ZeroScalar";
    case Errc::InvalidEncoding: return "InvalidEncoding";
    case Errc::SubgroupCheckFailed: return "SubgroupCheckFailed";
    case Errc::LengthTooLarge: return "LengthTooLarge";
    case Errc::AuthFailure: return "AuthFailure";
    case Errc::DuplicateIdentity: return "DuplicateIdentity";
    case Errc::TreeFull: return "TreeFull";
    case Errc::MalformedCiphertext: return "MalformedCiphertext";
    case Errc::InvalidPid: return "InvalidPid";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::SignerMismatch: return "SignerMismatch";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::EmptyBatch: return "EmptyBatch";
    case Errc::EmptyRing: return "EmptyRing";
    case Errc::DuplicateMember: return "DuplicateMember";
    case Errc::NotALeaf: return "NotALeaf";
    case Errc::UnknownPid: return "UnknownPid";
    case Errc::NotProvisioned: return "NotProvisioned";
    case Errc::RevokedVehicle: return "RevokedVehicle";
    case Errc::StaleKeyUpdate: return "StaleKeyUpdate";
    case Errc::MalformedRequest: return "MalformedRequest";
    case Errc::GrantExpired: return "GrantExpired";
    case Errc::RingTooSmall: return "RingTooSmall";
    case Errc::SelfNotInList: return "SelfNotInList";
    case Errc::NoMatch: return "NoMatch";
    case Errc::AmbiguousMatch: return "AmbiguousMatch";
    case Errc::UnknownVid: return "UnknownVid";
    case Errc::TruncatedFrame: return "TruncatedFrame";
    case Errc::BadVersion: return "BadVersion";
    case Errc::BadType: return "BadType";
    case Errc::TrailingBytes: return "TrailingBytes";
    case Errc::SuiteMismatch: return "SuiteMismatch";
    case Errc::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  explicit Error(Errc code) : std::runtime_error(std::string(to_string(code))), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace ringveil
