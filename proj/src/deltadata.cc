#include "deltapad/deltadata.h"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <zlib.h>

#include <cstring>

#include "deltapad/error.h"

namespace deltapad {

namespace {

constexpr uint8_t kMagic[4] = {'D', 'B', 'P', 'D'};
constexpr uint8_t kFlagAuthenticated = 0x01;

void PutU64(Bytes& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

uint64_t GetU64(const uint8_t* p) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= uint64_t{p[i]} << (8 * i);
  return v;
}

uint8_t SchemeBits(const Schemes& s) {
  return static_cast<uint8_t>((s.padding ? 1 : 0) | (s.nops ? 2 : 0) |
                              (s.shuffle ? 4 : 0));
}

int HexDigit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

Bytes ParseKey(std::string_view hex) {
  if (hex.empty() || hex.size() % 2 != 0) {
    throw Error(ErrorKind::kInput, "key must be a non-empty even-length hex string");
  }
  Bytes key;
  for (size_t i = 0; i < hex.size(); i += 2) {
    int hi = HexDigit(hex[i]), lo = HexDigit(hex[i + 1]);
    if (hi < 0 || lo < 0) throw Error(ErrorKind::kInput, "key has a non-hex digit");
    key.push_back(static_cast<uint8_t>(hi << 4 | lo));
  }
  return key;
}

Bytes Deflate(const uint8_t* data, size_t size) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_BEST_COMPRESSION, Z_DEFLATED, -15, 9,
                   Z_DEFAULT_STRATEGY) != Z_OK) {
    throw Error(ErrorKind::kSerialize, "deflateInit2 failed");
  }
  Bytes out(deflateBound(&zs, static_cast<uLong>(size)));
  zs.next_in = const_cast<Bytef*>(data);
  zs.avail_in = static_cast<uInt>(size);
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw Error(ErrorKind::kSerialize, "deflate failed");
  out.resize(zs.total_out);
  return out;
}

Bytes Inflate(const uint8_t* data, size_t size) {
  z_stream zs{};
  if (inflateInit2(&zs, -15) != Z_OK) {
    throw Error(ErrorKind::kParse, "inflateInit2 failed");
  }
  Bytes out;
  uint8_t buf[16384];
  zs.next_in = const_cast<Bytef*>(data);
  zs.avail_in = static_cast<uInt>(size);
  int rc;
  do {
    zs.next_out = buf;
    zs.avail_out = sizeof buf;
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw Error(ErrorKind::kParse, "payload is not valid DEFLATE data");
    }
    out.insert(out.end(), buf, buf + (sizeof buf - zs.avail_out));
    if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
      inflateEnd(&zs);
      throw Error(ErrorKind::kParse, "payload DEFLATE stream is truncated");
    }
  } while (rc != Z_STREAM_END);
  const bool trailing = zs.avail_in != 0;
  inflateEnd(&zs);
  if (trailing) throw Error(ErrorKind::kParse, "bytes after the DEFLATE stream");
  return out;
}

Bytes HmacSha256(const Bytes& key, const uint8_t* data, size_t size) {
  Bytes tag(EVP_MAX_MD_SIZE);
  unsigned int len = 0;
  if (!HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), data, size,
            tag.data(), &len)) {
    throw Error(ErrorKind::kAuth, "HMAC computation failed");
  }
  tag.resize(len);
  return tag;
}

Bytes Pack(const DeltaData& dd, const std::optional<Bytes>& key) {
  Bytes plain;
  plain.push_back(dd.version);
  PutU64(plain, dd.seeds.pad_seed);
  PutU64(plain, dd.seeds.nop_seed);
  PutU64(plain, dd.seeds.shuffle_seed);
  internal::PutVarint(plain, dd.nop_probability.num);
  internal::PutVarint(plain, dd.nop_probability.den);
  plain.push_back(SchemeBits(dd.schemes));
  Bytes patch = SerializePatch(dd.patch);
  plain.insert(plain.end(), patch.begin(), patch.end());

  const Bytes payload = Deflate(plain.data(), plain.size());
  Bytes out(kMagic, kMagic + 4);
  out.push_back(dd.version);
  out.push_back(key ? kFlagAuthenticated : 0);
  const uint32_t len = static_cast<uint32_t>(payload.size());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(len >> (8 * i)));
  out.insert(out.end(), payload.begin(), payload.end());
  if (key) {
    Bytes tag = HmacSha256(*key, out.data(), out.size());
    out.insert(out.end(), tag.begin(), tag.end());
  }
  return out;
}

DeltaData Unpack(const Bytes& bytes, const std::optional<Bytes>& key) {
  if (bytes.size() < kDeltaHeaderBytes) {
    throw Error(ErrorKind::kLength, "delta data shorter than its header");
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorKind::kBadMagic, "not a delta data container");
  }
  if (bytes[4] != kDeltaDataVersion) {
    throw Error(ErrorKind::kBadVersion,
                "unsupported delta data version " + std::to_string(bytes[4]));
  }
  const uint8_t flags = bytes[5];
  if (flags & ~kFlagAuthenticated) {
    throw Error(ErrorKind::kBadVersion, "unknown delta data flags");
  }
  uint32_t len = 0;
  for (int i = 0; i < 4; ++i) len |= uint32_t{bytes[6 + i]} << (8 * i);
  const bool authed = flags & kFlagAuthenticated;
  const size_t expected =
      kDeltaHeaderBytes + size_t{len} + (authed ? kAuthTagBytes : 0);
  if (bytes.size() != expected) {
    throw Error(ErrorKind::kLength, "delta data is " + std::to_string(bytes.size()) +
                                        " bytes, header announces " +
                                        std::to_string(expected));
  }
  if (authed != key.has_value()) {
    throw Error(ErrorKind::kAuth, authed ? "delta data is authenticated but no key given"
                                         : "key given but delta data carries no tag");
  }
  if (authed) {
    const size_t body = kDeltaHeaderBytes + len;
    Bytes tag = HmacSha256(*key, bytes.data(), body);
    if (tag.size() != kAuthTagBytes ||
        CRYPTO_memcmp(tag.data(), bytes.data() + body, kAuthTagBytes) != 0) {
      throw Error(ErrorKind::kAuth, "delta data authentication tag mismatch");
    }
  }

  const Bytes plain = Inflate(bytes.data() + kDeltaHeaderBytes, len);
  const uint8_t* p = plain.data();
  const uint8_t* end = p + plain.size();
  auto need = [&](size_t n) {
    if (static_cast<size_t>(end - p) < n) {
      throw Error(ErrorKind::kParse, "delta data payload is truncated");
    }
  };
  DeltaData dd;
  need(1 + 24);
  dd.version = *p++;
  if (dd.version != bytes[4]) {
    throw Error(ErrorKind::kBadVersion, "payload version differs from header");
  }
  dd.seeds.pad_seed = GetU64(p);
  dd.seeds.nop_seed = GetU64(p + 8);
  dd.seeds.shuffle_seed = GetU64(p + 16);
  p += 24;
  uint64_t num = 0, den = 0;
  if (!internal::GetVarint(p, end, &num) || !internal::GetVarint(p, end, &den) ||
      den == 0 || num > den || den > 0xffffffffu) {
    throw Error(ErrorKind::kParse, "bad NOP probability in delta data");
  }
  dd.nop_probability = {static_cast<uint32_t>(num), static_cast<uint32_t>(den)};
  need(1);
  const uint8_t bits = *p++;
  if (bits & ~7u) throw Error(ErrorKind::kParse, "unknown scheme flags in delta data");
  dd.schemes = Schemes{(bits & 1) != 0, (bits & 2) != 0, (bits & 4) != 0};
  dd.patch = DeserializePatch(p, static_cast<size_t>(end - p));
  return dd;
}

}  // namespace deltapad
