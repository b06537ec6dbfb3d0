// Hand-built program models for unit tests.

#ifndef DELTAPAD_TESTS_SUPPORT_MODELS_H_
#define DELTAPAD_TESTS_SUPPORT_MODELS_H_

#include <string>
#include <vector>

#include "deltapad/progmodel.h"

namespace models {

// A code block of `n` instructions, one source line per instruction
// starting at `first_line`.
inline deltapad::BlockModel Code(uint32_t index, uint32_t n, int64_t first_line = 10,
                                 bool epilogue = false) {
  deltapad::BlockModel b;
  b.index = index;
  b.instr_count = n;
  b.epilogue = epilogue;
  for (uint32_t i = 0; i < n; ++i) b.lines.push_back({1, first_line + i, 1});
  return b;
}

inline deltapad::BlockModel Data(uint32_t index, uint32_t bytes) {
  deltapad::BlockModel b;
  b.kind = deltapad::BlockKind::kData;
  b.index = index;
  b.byte_size = bytes;
  return b;
}

// A function whose last block is the only epilogue block.
inline deltapad::FunctionModel Function(const std::string& name,
                                        std::vector<deltapad::BlockModel> blocks,
                                        std::vector<std::string> saved = {},
                                        uint32_t local = 0, bool fp = false) {
  deltapad::FunctionModel f;
  f.name = name;
  f.object_name = name + ".o";
  f.section_name = ".text." + name;
  f.alignment = 4;
  f.has_fp = fp;
  f.frame.callee_saved = std::move(saved);
  f.frame.local_size = local;
  f.blocks = std::move(blocks);
  for (auto it = f.blocks.rbegin(); it != f.blocks.rend(); ++it) {
    if (it->is_code()) {
      it->epilogue = true;
      break;
    }
  }
  return f;
}

inline deltapad::ProgramModel Program(std::vector<deltapad::FunctionModel> fns,
                                      const std::string& name = "test_module") {
  deltapad::ProgramModel m;
  m.module_name = name;
  m.files = {{1, "src/a.c"}, {2, "src/b.c"}};
  m.functions = std::move(fns);
  return m;
}

}  // namespace models

#endif  // DELTAPAD_TESTS_SUPPORT_MODELS_H_
