#include "deltapad/corpus.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "deltapad/error.h"
#include "deltapad/prng.h"

namespace deltapad {

namespace {

class Draw {
 public:
  explicit Draw(uint64_t seed) : rng_(seed) {}

  // Uniform in [lo, hi].
  uint32_t Range(uint32_t lo, uint32_t hi) {
    return lo + static_cast<uint32_t>(rng_.Below(uint64_t{hi} - lo + 1));
  }
  double Unit() { return static_cast<double>(rng_.Next() >> 11) * 0x1.0p-53; }
  bool Chance(double p) { return Unit() < p; }
  // In [lo, hi], concentrated near lo.
  uint32_t Skewed(uint32_t lo, uint32_t hi, double power) {
    double u = std::pow(Unit(), power);
    uint32_t v = lo + static_cast<uint32_t>(u * (hi - lo + 1));
    return std::min(v, hi);
  }
  uint32_t Word() { return static_cast<uint32_t>(rng_.Next()); }

 private:
  Prng rng_;
};

std::vector<LineSpan> MakeSpans(Draw& d, uint32_t instrs, int64_t* next_line,
                                int64_t filenum, int64_t n_files) {
  std::vector<LineSpan> spans;
  uint32_t left = instrs;
  while (left > 0) {
    uint32_t count = std::min(left, d.Skewed(1, 12, 1.5));
    int64_t file = filenum;
    if (n_files > 1 && d.Chance(0.05)) {
      file = static_cast<int64_t>(d.Range(0, static_cast<uint32_t>(n_files - 1)));
    }
    *next_line += d.Range(1, 3);
    spans.push_back(LineSpan{count, *next_line, file});
    left -= count;
  }
  return spans;
}

}  // namespace

SizeClass ParseSizeClass(std::string_view text) {
  if (text == "small") return SizeClass::kSmall;
  if (text == "medium") return SizeClass::kMedium;
  throw Error(ErrorKind::kInput, "size class must be small or medium");
}

ProgramModel GenerateProgram(uint64_t seed, std::string_view module_name,
                             SizeClass size_class) {
  Draw d(seed);
  ProgramModel model;
  model.module_name = std::string(module_name);

  const int64_t n_files = d.Range(2, 6);
  for (int64_t f = 0; f < n_files; ++f) {
    model.files.push_back(FileRecord{
        f, "src/" + model.module_name + "/unit_" + std::to_string(f) + ".c"});
  }

  const uint32_t n_funcs =
      size_class == SizeClass::kSmall ? d.Range(8, 64) : d.Range(64, 512);
  model.functions.resize(n_funcs);

  // Call graph first: it decides which functions must save lr.
  std::vector<std::vector<uint32_t>> callees(n_funcs);
  for (uint32_t i = 0; i + 1 < n_funcs; ++i) {
    if (!d.Chance(0.6)) continue;
    uint32_t k = d.Range(1, 3);
    for (uint32_t c = 0; c < k; ++c) callees[i].push_back(d.Range(i + 1, n_funcs - 1));
  }

  for (uint32_t i = 0; i < n_funcs; ++i) {
    char name[64];
    std::snprintf(name, sizeof name, "%s_fn%03u", model.module_name.c_str(), i);
    model.functions[i].name = name;
  }

  for (uint32_t i = 0; i < n_funcs; ++i) {
    FunctionModel& fn = model.functions[i];
    fn.object_name = "unit_" + std::to_string(i % n_files) + ".o";
    fn.section_name = ".text." + fn.name;
    static constexpr uint32_t kAligns[] = {4, 8, 16};
    fn.alignment = kAligns[d.Range(0, 2)];
    fn.has_fp = d.Chance(0.4);

    FrameModel& fr = fn.frame;
    double u = d.Unit();
    bool big = false;
    if (u < 0.4) {
      fr.local_size = 0;
    } else if (u < 0.9) {
      fr.local_size = 4 * d.Range(1, 64);
    } else {
      fr.local_size = 1024u << d.Range(0, 4);
      big = true;
    }
    uint32_t n_regs = d.Skewed(0, 5, 1.5);
    std::vector<int> regs;
    for (int r = 4; r <= 10; ++r) regs.push_back(r);
    for (size_t k = regs.size(); k > 1; --k) std::swap(regs[k - 1], regs[d.Range(0, k - 1)]);
    regs.resize(n_regs);
    if (fn.has_fp) regs.push_back(11);
    std::sort(regs.begin(), regs.end());
    const bool leaf = callees[i].empty();
    if (!regs.empty() || !leaf) {
      for (int r : regs) fr.callee_saved.push_back("r" + std::to_string(r));
      fr.callee_saved.push_back("lr");
    }

    // Blocks.
    const uint32_t n_blocks = d.Skewed(1, 40, 2.5);
    const int64_t filenum = static_cast<int64_t>(i % n_files);
    int64_t next_line = 10 + 20 * static_cast<int64_t>(d.Range(0, 200));
    std::vector<uint32_t> code_blocks;
    for (uint32_t b = 0; b < n_blocks; ++b) {
      BlockModel blk;
      blk.index = b;
      if (b > 0 && b + 1 < n_blocks && d.Chance(0.05)) {
        blk.kind = BlockKind::kData;
        blk.byte_size = 4 * d.Range(1, 16);
      } else {
        blk.instr_count = d.Skewed(1, 200, 3.0);
        blk.lines = MakeSpans(d, blk.instr_count, &next_line, filenum, n_files);
        code_blocks.push_back(b);
      }
      fn.blocks.push_back(std::move(blk));
    }
    fn.blocks[code_blocks.back()].epilogue = true;
    if (code_blocks.size() > 2 && d.Chance(0.2)) {
      fn.blocks[code_blocks[d.Range(1, code_blocks.size() - 2)]].epilogue = true;
    }
    auto random_code_block = [&]() -> BlockModel& {
      return fn.blocks[code_blocks[d.Range(0, code_blocks.size() - 1)]];
    };

    if (d.Chance(0.3)) {
      uint32_t n_consts = d.Range(1, 6);
      for (uint32_t c = 0; c < n_consts; ++c) random_code_block().consts.push_back(d.Word());
    }

    if (fr.local_size > 0) {
      uint32_t n_acc = big ? d.Range(8, 24) : d.Range(1, 8);
      for (uint32_t a = 0; a < n_acc; ++a) {
        BlockModel& owner = random_code_block();
        StackAccess acc;
        acc.block_index = owner.index;
        acc.offset_from_frame_base = 4 * d.Range(0, fr.local_size / 4 - 1);
        acc.count = d.Range(1, 3);
        acc.source_line = owner.lines[d.Range(0, owner.lines.size() - 1)].line;
        fr.accesses.push_back(acc);
      }
    }

    for (uint32_t callee : callees[i]) {
      BlockModel& site = random_code_block();
      site.calls.push_back(
          CallSite{d.Range(0, site.instr_count - 1), model.functions[callee].name});
    }
  }
  return model;
}

std::vector<ProgramModel> GenerateCorpus(uint64_t seed, size_t n_programs,
                                         SizeClass size_class) {
  Prng rng(seed);
  std::vector<ProgramModel> corpus;
  corpus.reserve(n_programs);
  for (size_t p = 0; p < n_programs; ++p) {
    char name[32];
    std::snprintf(name, sizeof name, "prog_%03zu", p);
    corpus.push_back(GenerateProgram(rng.Next(), name, size_class));
  }
  return corpus;
}

}  // namespace deltapad
