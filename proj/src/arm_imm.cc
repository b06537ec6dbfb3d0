#include "deltapad/arm_imm.h"

#include <algorithm>
#include <array>

namespace deltapad {

namespace {

// Every distinct encodable value, ascending. 0 is included (b = 0).
const std::vector<uint32_t>& EncodableTable() {
  static const std::vector<uint32_t> table = [] {
    std::vector<uint32_t> t;
    t.reserve(256 * 16);
    for (uint32_t b = 0; b < 256; ++b) {
      for (unsigned r = 0; r < 32; r += 2) t.push_back(RotateRight32(b, r));
    }
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    return t;
  }();
  return table;
}

}  // namespace

uint32_t RotateRight32(uint32_t v, unsigned r) {
  r &= 31;
  return r == 0 ? v : (v >> r) | (v << (32 - r));
}

bool ArmImmEncodable(uint32_t v) {
  // Rotating v left by r undoes a right rotation by r.
  for (unsigned r = 0; r < 32; r += 2) {
    if (RotateRight32(v, (32 - r) & 31) <= 0xff) return true;
  }
  return false;
}

std::vector<uint32_t> StackAllocChunks(uint32_t total) {
  const std::vector<uint32_t>& table = EncodableTable();
  std::vector<uint32_t> chunks;
  while (total > 0) {
    auto it = std::upper_bound(table.begin(), table.end(), total);
    uint32_t chunk = *std::prev(it);
    chunks.push_back(chunk);
    total -= chunk;
  }
  return chunks;
}

AccessChoice ChooseAccess(const FrameModel& frame, bool has_fp,
                          const StackAccess& access, bool sp_fp_opt) {
  auto cost = [](uint32_t off) { return off <= kLdStMaxOffset ? 1u : 2u; };
  AccessChoice sp{FrameBase::kSp,
                  frame.local_size + frame.padding -
                      access.offset_from_frame_base,
                  0};
  sp.instrs = cost(sp.offset);
  if (!has_fp) return sp;
  AccessChoice fp{FrameBase::kFp, access.offset_from_frame_base + kFpBias, 0};
  fp.instrs = cost(fp.offset);
  if (sp_fp_opt && sp.instrs < fp.instrs) return sp;
  return fp;
}

uint32_t AccessInstrs(const FrameModel& frame, bool has_fp, bool sp_fp_opt) {
  uint32_t total = 0;
  for (const StackAccess& a : frame.accesses) {
    total += AccessCost(frame, has_fp, a, sp_fp_opt) * a.count;
  }
  return total;
}

}  // namespace deltapad
