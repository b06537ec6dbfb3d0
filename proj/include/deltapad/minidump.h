// MinidumpLite: the crash snapshot a client sends to the collector.
//
// Text format (one record per line):
//   MINIDUMP-LITE 1
//   MODULE <module id, rest of line>
//   BASE <hex load address of the module>
//   REASON <rest of line>
//   ADDRESS <hex crash address>
//   REG <name> <hex value>          (one per register, sorted by name)
//   STACK <hex base address> <decimal byte count>
//   <hex bytes, 32 per line>

#ifndef DELTAPAD_MINIDUMP_H_
#define DELTAPAD_MINIDUMP_H_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace deltapad {

using RegisterState = std::map<std::string, uint32_t, std::less<>>;

// Raw stack bytes; the stack grows downward, so the lowest captured address
// is `base_address` and the caller frames sit at higher addresses.
struct StackSnapshot {
  uint32_t base_address = 0;
  std::vector<uint8_t> bytes;

  uint64_t end() const { return uint64_t{base_address} + bytes.size(); }
  // Little-endian 32-bit read; nullopt if any byte is outside the snapshot.
  std::optional<uint32_t> ReadWord(uint32_t address) const;
  bool operator==(const StackSnapshot&) const = default;
};

struct MinidumpLite {
  std::string module_id;
  uint32_t module_base = 0;
  std::string crash_reason;
  uint32_t crash_address = 0;
  RegisterState registers;
  StackSnapshot stack;

  bool operator==(const MinidumpLite&) const = default;
};

std::string EmitMinidump(const MinidumpLite& dump);
// Throws Error(kParse).
MinidumpLite ParseMinidump(std::string_view text);

}  // namespace deltapad

#endif  // DELTAPAD_MINIDUMP_H_
