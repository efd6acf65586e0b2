#include "rbg/commitment.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace rbg::commitment {

namespace {

void put_be64(std::uint8_t* out, std::uint64_t v)
{
  for (int i = 7; i >= 0; --i) {
    out[i] = static_cast<std::uint8_t>(v & 0xff);
    v >>= 8;
  }
}

int hex_value(char c)
{
  if (c >= '0' && c <= '9')
    return c - '0';
  if (c >= 'a' && c <= 'f')
    return c - 'a' + 10;
  if (c >= 'A' && c <= 'F')
    return c - 'A' + 10;
  return -1;
}

} // namespace

Nonce make_nonce(std::span<const std::uint8_t> bytes)
{
  if (bytes.size() != kNonceSize)
    throw std::invalid_argument("nonce must be exactly 16 bytes, got " + std::to_string(bytes.size()));
  Nonce n{};
  std::copy(bytes.begin(), bytes.end(), n.begin());
  return n;
}

std::string to_hex(std::span<const std::uint8_t> bytes)
{
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xf]);
  }
  return out;
}

std::string Commitment::hex() const { return to_hex(digest); }

Commitment Commitment::from_hex(std::string_view hex)
{
  if (hex.size() != 2 * kDigestSize)
    throw std::invalid_argument("commitment hex must be 64 characters");
  Commitment c;
  for (std::size_t i = 0; i < kDigestSize; ++i) {
    const int hi = hex_value(hex[2 * i]);
    const int lo = hex_value(hex[2 * i + 1]);
    if (hi < 0 || lo < 0)
      throw std::invalid_argument("commitment hex has a non-hex character");
    c.digest[i] = static_cast<std::uint8_t>(hi << 4 | lo);
  }
  return c;
}

Preimage serialize(const CommitmentInput& input)
{
  if (input.bit != 0 && input.bit != 1)
    throw std::invalid_argument("committed bit must be 0 or 1");
  Preimage p{};
  p[0] = static_cast<std::uint8_t>(input.bit);
  std::copy(input.nonce.begin(), input.nonce.end(), p.begin() + 1);
  put_be64(p.data() + 1 + kNonceSize, input.participant);
  put_be64(p.data() + 1 + kNonceSize + 8, input.request_id);
  return p;
}

Commitment commit(const CommitmentInput& input)
{
  const Preimage pre = serialize(input);
  Commitment c;
  unsigned int len = 0;
  if (EVP_Digest(pre.data(), pre.size(), c.digest.data(), &len, EVP_sha256(), nullptr) != 1 || len != kDigestSize)
    throw std::runtime_error("SHA-256 digest failed");
  return c;
}

bool verify_reveal(const CommitmentInput& input, const Commitment& c)
{
  if (input.bit != 0 && input.bit != 1)
    return false;
  return commit(input) == c;
}

} // namespace rbg::commitment
