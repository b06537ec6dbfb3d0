// Deterministic layout of a ProgramModel into an image and its symbol file.
//
// Each function is laid out independently of its address, which is what
// makes function shuffling perfectly replayable. Inside a function, every
// code block expands to
//
//   [prologue extras]  block 0 only: push, add fp, stack allocation
//   body               the model's instructions, NOPs included
//   access instrs      loads/stores of stack slots owned by the block
//   [epilogue]         epilogue blocks only: deallocation, then the pop
//                      when registers were pushed (a push-less function
//                      returns through one of its own body instructions)
//
// and literal pools are placed between blocks so that every constant stays
// within kPoolReach bytes of its first reference.

#ifndef DELTAPAD_LAYOUT_H_
#define DELTAPAD_LAYOUT_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "deltapad/progmodel.h"
#include "deltapad/symfile.h"

namespace deltapad {

inline constexpr uint64_t kPoolReach = 4096;
inline constexpr uint64_t kInstrBytes = 4;
inline constexpr uint32_t kNopWord = 0xe320f000;

struct LayoutOptions {
  uint64_t base_address = 0x1000;
  bool sp_fp_opt = false;

  bool operator==(const LayoutOptions&) const = default;
};

enum class RegionKind { kCode, kData, kPool };

struct PlacedRegion {
  uint64_t address = 0;
  uint64_t size = 0;
  RegionKind kind = RegionKind::kCode;
  uint32_t block_index = 0;  // pools: the block they follow

  bool operator==(const PlacedRegion&) const = default;
};

struct PoolPlacement {
  uint32_t after_block_index = 0;
  uint32_t byte_size = 0;
  std::vector<uint32_t> constants;  // distinct, in first-reference order

  bool operator==(const PoolPlacement&) const = default;
};

// Instruction counts of one code block; all zero for data blocks.
struct BlockShape {
  uint32_t prologue = 0;
  uint32_t body = 0;
  uint32_t access = 0;
  uint32_t epilogue = 0;

  uint32_t total() const { return prologue + body + access + epilogue; }
  bool operator==(const BlockShape&) const = default;
};

struct PlacedFunction {
  size_t model_index = 0;
  uint64_t address = 0;
  uint64_t size = 0;
  bool has_push = false;
  uint32_t alloc_instrs = 0;
  std::vector<uint64_t> block_address;  // indexed by block index
  std::vector<BlockShape> block_shape;
  std::vector<PlacedRegion> regions;    // address order, covers the FUNC
  std::vector<PoolPlacement> pools;

  uint64_t end() const { return address + size; }
  bool operator==(const PlacedFunction&) const = default;
};

struct LayoutResult {
  std::vector<size_t> order;               // model indices in image order
  std::vector<PlacedFunction> functions;   // image order
  SymbolFile symfile;
  LayoutOptions options;

  const PlacedFunction& ForModelIndex(size_t model_index) const;
  bool operator==(const LayoutResult&) const = default;
};

// Throws Error(kInput) if `order` is not a permutation of the model's
// function indices and Error(kLayout) if a constant cannot reach its pool.
LayoutResult Layout(const ProgramModel& model, const std::vector<size_t>& order,
                    const LayoutOptions& options);

std::vector<size_t> IdentityOrder(size_t n);

// Byte size of `fn` as laid out on its own; equal to its FUNC size in any
// image because layout does not depend on the function's address.
uint64_t FunctionByteSize(const FunctionModel& fn, const LayoutOptions& options);

// Address of the instruction at body position `pos` of code block `block`.
uint64_t BodyAddress(const PlacedFunction& pf, uint32_t block, uint32_t pos);

// Synthetic machine words for the whole image, from the first function's
// address to the end of the last one; alignment gaps are zero.
std::vector<uint8_t> RenderText(const ProgramModel& model,
                                const LayoutResult& layout);

}  // namespace deltapad

#endif  // DELTAPAD_LAYOUT_H_
