// Synthetic ARM-like program model: functions, blocks, frames, constants.
//
// Text format, one declaration per line, owned by the preceding FUNCTION:
//   MODEL <module name>
//   FILE <num> <path>
//   FUNCTION <name> <object> <section> align=<4|8|16> fp=<0|1>
//            local=<bytes> pad=<bytes> saved=<r4,...,lr|->
//   BLOCK <index> code n=<instrs> epilogue=<0|1>
//            lines=<count>:<line>:<file>,... nops=<pos,...|-> [phantom=1]
//   BLOCK <index> data bytes=<n>
//   CONST <block> <hex value>
//   ACCESS <block> <offset> <count> <line>
//   CALL <block> <source instruction index> <callee name>
// (FUNCTION and BLOCK are single lines; wrapped here for width.)

#ifndef DELTAPAD_PROGMODEL_H_
#define DELTAPAD_PROGMODEL_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "deltapad/symfile.h"

namespace deltapad {

// A run of `count` consecutive body instructions mapped to one source line.
struct LineSpan {
  uint32_t count = 0;
  int64_t line = 0;
  int64_t filenum = 0;

  bool operator==(const LineSpan&) const = default;
};

struct CallSite {
  uint32_t source_index = 0;  // index among non-NOP body instructions
  std::string callee;

  bool operator==(const CallSite&) const = default;
};

struct StackAccess {
  uint32_t block_index = 0;
  uint32_t offset_from_frame_base = 0;
  uint32_t count = 1;
  int64_t source_line = 0;

  bool operator==(const StackAccess&) const = default;
};

enum class BlockKind { kCode, kData };

struct BlockModel {
  BlockKind kind = BlockKind::kCode;
  uint32_t index = 0;
  // Code: body instructions, NOPs and phantoms included. Layout adds the
  // prologue, access and epilogue instructions on top of these.
  uint32_t instr_count = 0;
  uint32_t byte_size = 0;  // data blocks only
  bool epilogue = false;
  std::vector<uint32_t> consts;
  std::vector<LineSpan> lines;          // covers instr_count exactly
  std::vector<uint32_t> nop_positions;  // body positions holding NOPs
  std::vector<CallSite> calls;
  bool phantom = false;  // one injected instruction at the end of the body

  bool is_code() const { return kind == BlockKind::kCode; }
  // Body instructions that came from the source model.
  uint32_t source_count() const;
  // Body position of the `source_index`-th non-NOP instruction.
  uint32_t BodyPosition(uint32_t source_index) const;
  // (line, filenum) of the instruction at body position `pos`.
  const LineSpan& SpanAt(uint32_t pos) const;

  bool operator==(const BlockModel&) const = default;
};

struct FrameModel {
  uint32_t local_size = 0;
  std::vector<std::string> callee_saved;  // ascending r4..r11, then lr
  std::vector<StackAccess> accesses;
  uint32_t padding = 0;

  uint32_t saved_bytes() const {
    return 4 * static_cast<uint32_t>(callee_saved.size());
  }
  uint32_t total_alloc() const { return local_size + padding; }

  bool operator==(const FrameModel&) const = default;
};

struct FunctionModel {
  std::string name;
  std::string object_name;
  std::string section_name;
  uint32_t alignment = 4;
  bool has_fp = false;
  FrameModel frame;
  std::vector<BlockModel> blocks;

  // name ‖ object ‖ section; unique within a program.
  std::string Identifier() const {
    return name + object_name + section_name;
  }
  bool SavesLr() const;

  bool operator==(const FunctionModel&) const = default;
};

struct ProgramModel {
  std::string module_name;
  std::vector<FileRecord> files;
  std::vector<FunctionModel> functions;

  // Breakpad-style "os arch id name", stable across diversified builds.
  std::string ModuleId() const;
  // Index of the function called `name`, or -1.
  long FindFunction(std::string_view name) const;

  bool operator==(const ProgramModel&) const = default;
};

// Throws Error(kInput) naming the first violated invariant.
void ValidateModel(const ProgramModel& model);

std::string EmitModel(const ProgramModel& model);
// Throws Error(kParse).
ProgramModel ParseModel(std::string_view text);

// Register number for r0..r15 with the aliases fp=r11, sp=r13, lr=r14,
// pc=r15; -1 for anything else.
int RegisterNumber(std::string_view reg);

}  // namespace deltapad

#endif  // DELTAPAD_PROGMODEL_H_
