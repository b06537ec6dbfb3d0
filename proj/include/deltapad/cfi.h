// CFI postfix evaluation and CFI-driven stack unwinding.

#ifndef DELTAPAD_CFI_H_
#define DELTAPAD_CFI_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "deltapad/minidump.h"
#include "deltapad/symfile.h"

namespace deltapad {

// Evaluates `expr` on a 32-bit stack machine. `^` pops an address and pushes
// the little-endian word stored there; arithmetic wraps modulo 2^32.
// Throws Error(kMalformedExpr), Error(kUnknownRegister) or
// Error(kMemoryOutOfRange).
uint32_t EvalPostfix(const PostfixExpr& expr, const RegisterState& regs,
                     std::optional<uint32_t> cfa, const StackSnapshot& mem);

// Rules in effect at code offset `pc`: the INIT rules of the enclosing
// region overlaid, in address order, with every delta at or before `pc`.
// Throws Error(kNoUnwindInfo) when no region covers `pc`.
RuleMap RulesAt(const SymbolFile& sf, uint64_t pc);

enum class UnwindStop {
  kEndOfStack,         // return address was the 0 sentinel
  kLeftKnownCode,      // pc outside every FUNC of the module
  kNoUnwindInfo,       // pc inside code but no STACK CFI region
  kCfaNotIncreasing,
  kMaxFrames,
  kMemoryOutOfRange,   // a rule read outside the captured stack
  kMalformedRule,      // missing .cfa/.ra or an unevaluable expression
};

const char* UnwindStopName(UnwindStop stop);

struct Frame {
  uint64_t pc = 0;             // module-relative; return address for callers
  std::optional<uint32_t> cfa;
  RegisterState recovered;     // all registers for frame 0
  bool is_caller = false;

  // Caller frames are looked up at the call instruction, one word before
  // the return address.
  uint64_t lookup_pc() const { return is_caller ? pc - 4 : pc; }
};

struct UnwindResult {
  std::vector<Frame> frames;
  UnwindStop stop = UnwindStop::kEndOfStack;
};

inline constexpr size_t kDefaultMaxFrames = 256;

// Walks the stack of `dump` using the CFI in `sf`. Registers without a rule
// in a region keep the callee's value. Throws Error(kModuleMismatch) when the
// dump's module does not match `sf`; every other failure terminates the walk
// and is reported through UnwindResult::stop.
UnwindResult Unwind(const MinidumpLite& dump, const SymbolFile& sf,
                    size_t max_frames = kDefaultMaxFrames);

// FUNC containing `pc`, or nullptr.
const FuncRecord* FindFunction(const SymbolFile& sf, uint64_t pc);
// Line record containing `pc` inside `fn`, or nullptr.
const LineRecord* FindLine(const FuncRecord& fn, uint64_t pc);

}  // namespace deltapad

#endif  // DELTAPAD_CFI_H_
