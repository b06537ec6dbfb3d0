// ARM data-processing immediates and the instruction counts that follow
// from them: stack adjustments and stack-slot loads/stores.

#ifndef DELTAPAD_ARM_IMM_H_
#define DELTAPAD_ARM_IMM_H_

#include <cstdint>
#include <vector>

#include "deltapad/progmodel.h"

namespace deltapad {

// Largest immediate offset of a word LD/ST.
inline constexpr uint32_t kLdStMaxOffset = 4095;
// FP points 4 bytes into the saved-register area ("add fp, sp, #4").
inline constexpr uint32_t kFpBias = 4;

uint32_t RotateRight32(uint32_t v, unsigned r);

// True iff v is some 8-bit value rotated right by an even amount.
bool ArmImmEncodable(uint32_t v);

// Greedy split of `total` into encodable chunks, largest first.
std::vector<uint32_t> StackAllocChunks(uint32_t total);
inline uint32_t StackAllocInstrs(uint32_t total) {
  return static_cast<uint32_t>(StackAllocChunks(total).size());
}

enum class FrameBase { kSp, kFp };

struct AccessChoice {
  FrameBase base = FrameBase::kSp;
  uint32_t offset = 0;
  uint32_t instrs = 1;
};

AccessChoice ChooseAccess(const FrameModel& frame, bool has_fp,
                          const StackAccess& access, bool sp_fp_opt);

// Instructions for one occurrence of `access`.
inline uint32_t AccessCost(const FrameModel& frame, bool has_fp,
                           const StackAccess& access, bool sp_fp_opt) {
  return ChooseAccess(frame, has_fp, access, sp_fp_opt).instrs;
}

// Sum over every access of cost x count.
uint32_t AccessInstrs(const FrameModel& frame, bool has_fp, bool sp_fp_opt);

}  // namespace deltapad

#endif  // DELTAPAD_ARM_IMM_H_
