// Line-oriented edit scripts over canonical symbol files.
//
// A patch walks the approximation's canonical lines front to back. SHIFT
// adds a constant to the leading address of each record it covers (FUNC,
// line, STACK CFI INIT, STACK CFI and PUBLIC records), so a block of records
// displaced by an earlier size change costs one op instead of one line each.

#ifndef DELTAPAD_PATCH_H_
#define DELTAPAD_PATCH_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "deltapad/symfile.h"

namespace deltapad {

enum class PatchOpKind : uint8_t {
  kKeep = 0,
  kReplace = 1,
  kInsert = 2,
  kDelete = 3,
  kShift = 4,
};

struct PatchOp {
  PatchOpKind kind = PatchOpKind::kKeep;
  uint64_t count = 0;               // approximation lines consumed
  int64_t delta = 0;                // kShift
  std::vector<std::string> lines;   // kReplace, kInsert

  bool operator==(const PatchOp&) const = default;
};

struct Patch {
  std::vector<PatchOp> ops;

  // Bytes of new line text carried by REPLACE and INSERT ops, newlines
  // included.
  size_t payload_bytes() const;
  // Approximation lines the patch consumes.
  uint64_t consumed_lines() const;
  bool operator==(const Patch&) const = default;
};

Patch Diff(const SymbolFile& approx, const SymbolFile& truth);
Patch DiffText(std::string_view approx_text, std::string_view truth_text);

// Throws Error(kPatchCorrupt) if the patch does not consume the
// approximation exactly or its result is not a valid symbol file.
SymbolFile Apply(const SymbolFile& approx, const Patch& patch);
std::string ApplyText(std::string_view approx_text, const Patch& patch);

// Leading address of a shiftable record and the text around it.
struct AddressedLine {
  std::string_view prefix;  // "FUNC ", "STACK CFI INIT ", ... or ""
  uint64_t address = 0;
  std::string_view rest;    // everything after the address
};
std::optional<AddressedLine> SplitAddress(std::string_view line);
// `line` with `delta` added to its leading address; nullopt if the line has
// no address or the result would be negative.
std::optional<std::string> ShiftLine(std::string_view line, int64_t delta);

std::vector<uint8_t> SerializePatch(const Patch& patch);
// Throws Error(kPatchCorrupt).
Patch DeserializePatch(const uint8_t* data, size_t size);

namespace internal {

void PutVarint(std::vector<uint8_t>& out, uint64_t v);
bool GetVarint(const uint8_t*& p, const uint8_t* end, uint64_t* v);

}  // namespace internal

}  // namespace deltapad

#endif  // DELTAPAD_PATCH_H_
