// The Δdata container shipped next to a crash dump.
//
//   "DBPD" | version u8 | flags u8 | payload length u32 LE | payload | [tag]
//
// The payload is raw DEFLATE of
//   version u8 | pad, nop, shuffle seeds (u64 LE each) | nop num, den
//   (varint) | scheme flags u8 | serialized patch
// and flags bit 0 marks a trailing 32-byte HMAC-SHA-256 tag computed over
// the 10 header bytes and the payload.

#ifndef DELTAPAD_DELTADATA_H_
#define DELTAPAD_DELTADATA_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "deltapad/diversify.h"
#include "deltapad/opplog.h"
#include "deltapad/patch.h"

namespace deltapad {

inline constexpr uint8_t kDeltaDataVersion = 1;
inline constexpr size_t kDeltaHeaderBytes = 10;
inline constexpr size_t kAuthTagBytes = 32;

using Bytes = std::vector<uint8_t>;

struct DeltaData {
  uint8_t version = kDeltaDataVersion;
  SeedTuple seeds;
  NopProbability nop_probability;
  Schemes schemes;
  Patch patch;

  bool operator==(const DeltaData&) const = default;
};

// Hex string to bytes; throws Error(kInput) on odd length or bad digits.
Bytes ParseKey(std::string_view hex);

Bytes Pack(const DeltaData& dd, const std::optional<Bytes>& key = std::nullopt);
// Throws Error(kLength), Error(kBadMagic), Error(kBadVersion), Error(kAuth),
// Error(kParse) for an undecodable payload or Error(kPatchCorrupt) when the
// embedded patch does not decode.
DeltaData Unpack(const Bytes& bytes, const std::optional<Bytes>& key = std::nullopt);

// Raw DEFLATE (no zlib or gzip wrapper) at maximum compression.
Bytes Deflate(const uint8_t* data, size_t size);
inline Bytes Deflate(std::string_view s) {
  return Deflate(reinterpret_cast<const uint8_t*>(s.data()), s.size());
}
// Throws Error(kParse) on malformed input.
Bytes Inflate(const uint8_t* data, size_t size);

Bytes HmacSha256(const Bytes& key, const uint8_t* data, size_t size);

}  // namespace deltapad

#endif  // DELTAPAD_DELTADATA_H_
