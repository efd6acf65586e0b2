#pragma once

// Hash commitments binding a participant to a bit before the reveal phase.
//
// Canonical preimage (33 bytes):
//   bit (1 byte, 0x00/0x01) | nonce (16 bytes) | participant (u64 BE) | request id (u64 BE)
// digest = SHA-256(preimage).

#include "rbg/types.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace rbg::commitment {

inline constexpr std::size_t kNonceSize = 16;
inline constexpr std::size_t kDigestSize = 32;
inline constexpr std::size_t kPreimageSize = 1 + kNonceSize + 8 + 8;

using Nonce = std::array<std::uint8_t, kNonceSize>;
using Digest = std::array<std::uint8_t, kDigestSize>;
using Preimage = std::array<std::uint8_t, kPreimageSize>;

/// Throws std::invalid_argument unless exactly kNonceSize bytes are given.
Nonce make_nonce(std::span<const std::uint8_t> bytes);

struct CommitmentInput
{
  int bit = 0;
  Nonce nonce{};
  ParticipantNumber participant = 0;
  RequestId request_id = 0;
};

struct Commitment
{
  Digest digest{};

  std::string hex() const;
  static Commitment from_hex(std::string_view hex);

  friend bool operator==(const Commitment&, const Commitment&) = default;
};

/// Throws std::invalid_argument if the bit is not 0 or 1.
Preimage serialize(const CommitmentInput& input);

Commitment commit(const CommitmentInput& input);

/// True iff commit(input) == c; malformed input is simply false.
bool verify_reveal(const CommitmentInput& input, const Commitment& c);

std::string to_hex(std::span<const std::uint8_t> bytes);

} // namespace rbg::commitment
