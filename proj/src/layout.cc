#include "deltapad/layout.h"

#include <algorithm>
#include <string>

#include "deltapad/arm_imm.h"
#include "deltapad/error.h"
#include "deltapad/prng.h"

namespace deltapad {

namespace {

uint64_t AlignUp(uint64_t v, uint64_t a) { return (v + a - 1) / a * a; }

struct LineRun {
  uint32_t count;
  int64_t line;
  int64_t filenum;
};

// Per-instruction (line, file) runs of one code block in emission order.
std::vector<LineRun> BlockLineRuns(const FunctionModel& fn,
                                   const BlockModel& b, const BlockShape& shape,
                                   bool sp_fp_opt) {
  std::vector<LineRun> runs;
  auto add = [&runs](uint32_t count, int64_t line, int64_t file) {
    if (count == 0) return;
    if (!runs.empty() && runs.back().line == line &&
        runs.back().filenum == file) {
      runs.back().count += count;
    } else {
      runs.push_back(LineRun{count, line, file});
    }
  };
  const LineSpan& first = b.lines.front();
  const LineSpan& last = b.lines.back();
  add(shape.prologue, first.line, first.filenum);
  for (const LineSpan& s : b.lines) add(s.count, s.line, s.filenum);
  for (const StackAccess& a : fn.frame.accesses) {
    if (a.block_index != b.index) continue;
    add(AccessCost(fn.frame, fn.has_fp, a, sp_fp_opt) * a.count,
        a.source_line, last.filenum);
  }
  add(shape.epilogue, last.line, last.filenum);
  return runs;
}

RuleMap Rules(const std::string& text) { return RuleMap::Parse(text); }

std::string SpRule(uint64_t n) { return ".cfa: sp " + std::to_string(n) + " +"; }

struct FunctionLayout {
  PlacedFunction placed;
  FuncRecord func;
  CfiInitRecord cfi;
};

FunctionLayout LayOutFunction(const FunctionModel& fn, size_t model_index,
                              uint64_t address, const LayoutOptions& options) {
  FunctionLayout out;
  PlacedFunction& pf = out.placed;
  pf.model_index = model_index;
  pf.address = address;
  pf.has_push = !fn.frame.callee_saved.empty();

  const uint32_t saved = fn.frame.saved_bytes();
  const uint32_t alloc = fn.frame.total_alloc();
  pf.alloc_instrs = StackAllocInstrs(alloc);

  const size_t nblocks = fn.blocks.size();
  pf.block_shape.resize(nblocks);
  std::vector<uint64_t> block_size(nblocks);
  for (const BlockModel& b : fn.blocks) {
    if (!b.is_code()) {
      block_size[b.index] = b.byte_size;
      continue;
    }
    BlockShape& sh = pf.block_shape[b.index];
    if (b.index == 0) {
      sh.prologue = (pf.has_push ? 1 : 0) + (fn.has_fp ? 1 : 0) + pf.alloc_instrs;
    }
    sh.body = b.instr_count;
    for (const StackAccess& a : fn.frame.accesses) {
      if (a.block_index == b.index) {
        sh.access += AccessCost(fn.frame, fn.has_fp, a, options.sp_fp_opt) * a.count;
      }
    }
    if (b.epilogue) sh.epilogue = pf.alloc_instrs + (pf.has_push ? 1 : 0);
    block_size[b.index] = uint64_t{sh.total()} * kInstrBytes;
  }

  // Blocks in index order with greedy literal-pool placement.
  pf.block_address.resize(nblocks);
  struct PendingRef {
    uint64_t ref;
    uint32_t value;
  };
  std::vector<PendingRef> pending;
  auto distinct_with = [&pending](const std::vector<uint32_t>& extra) {
    std::vector<uint32_t> vals;
    for (const PendingRef& p : pending) {
      if (std::find(vals.begin(), vals.end(), p.value) == vals.end()) {
        vals.push_back(p.value);
      }
    }
    for (uint32_t v : extra) {
      if (std::find(vals.begin(), vals.end(), v) == vals.end()) vals.push_back(v);
    }
    return vals;
  };
  uint64_t cursor = address;
  auto place_pool = [&](uint32_t after) {
    PoolPlacement pool;
    pool.after_block_index = after;
    pool.constants = distinct_with({});
    pool.byte_size = static_cast<uint32_t>(pool.constants.size() * 4);
    for (const PendingRef& p : pending) {
      auto pos = std::find(pool.constants.begin(), pool.constants.end(), p.value);
      uint64_t entry = cursor + 4 * static_cast<uint64_t>(pos - pool.constants.begin());
      if (entry - p.ref > kPoolReach) {
        throw Error(ErrorKind::kLayout,
                    fn.name + ": constant at " + Hex(p.ref) +
                        " cannot reach its literal pool");
      }
    }
    pf.regions.push_back(PlacedRegion{cursor, pool.byte_size, RegionKind::kPool, after});
    cursor += pool.byte_size;
    pf.pools.push_back(std::move(pool));
    pending.clear();
  };

  for (size_t i = 0; i < nblocks; ++i) {
    const BlockModel& b = fn.blocks[i];
    pf.block_address[i] = cursor;
    pf.regions.push_back(PlacedRegion{
        cursor, block_size[i], b.is_code() ? RegionKind::kCode : RegionKind::kData,
        static_cast<uint32_t>(i)});
    const uint64_t body_start =
        cursor + uint64_t{pf.block_shape[i].prologue} * kInstrBytes;
    for (uint32_t c : b.consts) pending.push_back(PendingRef{body_start, c});
    cursor += block_size[i];
    if (pending.empty()) continue;
    if (i + 1 == nblocks) {
      place_pool(static_cast<uint32_t>(i));
      break;
    }
    const uint64_t earliest = pending.front().ref;
    const uint64_t deferred_pool = 4 * distinct_with(fn.blocks[i + 1].consts).size();
    if (cursor + block_size[i + 1] + deferred_pool - earliest > kPoolReach - 8) {
      place_pool(static_cast<uint32_t>(i));
    }
  }
  pf.size = cursor - address;

  // Line records.
  out.func.address = address;
  out.func.size = pf.size;
  out.func.name = fn.name;
  for (const BlockModel& b : fn.blocks) {
    if (!b.is_code()) continue;
    uint64_t at = pf.block_address[b.index];
    for (const LineRun& r : BlockLineRuns(fn, b, pf.block_shape[b.index],
                                          options.sp_fp_opt)) {
      uint64_t bytes = uint64_t{r.count} * kInstrBytes;
      out.func.lines.push_back(LineRecord{at, bytes, r.line, r.filenum});
      at += bytes;
    }
  }

  // Unwind rules.
  CfiInitRecord& cfi = out.cfi;
  cfi.address = address;
  cfi.size = pf.size;
  cfi.init_rules = Rules(".cfa: sp 0 + .ra: lr");
  uint64_t pc = address;
  if (pf.has_push) {
    pc += kInstrBytes;
    std::string text = SpRule(saved) + " .ra: .cfa -4 + ^";
    const size_t n = fn.frame.callee_saved.size();
    for (size_t k = 0; k < n; ++k) {
      const std::string& reg = fn.frame.callee_saved[k];
      if (reg == "lr") continue;
      text += " " + reg + ": .cfa -" + std::to_string(saved - 4 * k) + " + ^";
    }
    cfi.deltas.push_back(CfiDelta{pc, Rules(text)});
  }
  if (fn.has_fp) {
    pc += kInstrBytes;
    cfi.deltas.push_back(CfiDelta{pc, Rules(".cfa: r11 4 +")});
  } else if (pf.alloc_instrs > 0) {
    pc += uint64_t{pf.alloc_instrs} * kInstrBytes;
    const uint64_t full = uint64_t{saved} + alloc;
    cfi.deltas.push_back(CfiDelta{pc, Rules(SpRule(full))});
    std::vector<uint32_t> code_blocks;
    for (const BlockModel& b : fn.blocks) {
      if (b.is_code()) code_blocks.push_back(b.index);
    }
    // Without a push there is no instruction after the deallocation group,
    // so the restored rules would start at the block end.
    for (size_t k = 0; pf.has_push && k < code_blocks.size(); ++k) {
      const uint32_t bi = code_blocks[k];
      if (!fn.blocks[bi].epilogue) continue;
      const uint64_t ret = pf.block_address[bi] +
                           uint64_t{pf.block_shape[bi].total() - 1} * kInstrBytes;
      cfi.deltas.push_back(CfiDelta{ret, Rules(SpRule(saved))});
      if (k + 1 < code_blocks.size()) {
        cfi.deltas.push_back(
            CfiDelta{pf.block_address[code_blocks[k + 1]], Rules(SpRule(full))});
      }
    }
  }
  return out;
}

void CheckOrder(const std::vector<size_t>& order, size_t n) {
  if (order.size() != n) {
    throw Error(ErrorKind::kInput, "order has " + std::to_string(order.size()) +
                                       " entries for " + std::to_string(n) +
                                       " functions");
  }
  std::vector<bool> seen(n, false);
  for (size_t i : order) {
    if (i >= n || seen[i]) throw Error(ErrorKind::kInput, "order is not a permutation");
    seen[i] = true;
  }
}

}  // namespace

const PlacedFunction& LayoutResult::ForModelIndex(size_t model_index) const {
  for (const PlacedFunction& pf : functions) {
    if (pf.model_index == model_index) return pf;
  }
  throw Error(ErrorKind::kInput,
              "function " + std::to_string(model_index) + " not in layout");
}

std::vector<size_t> IdentityOrder(size_t n) {
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  return order;
}

LayoutResult Layout(const ProgramModel& model, const std::vector<size_t>& order,
                    const LayoutOptions& options) {
  CheckOrder(order, model.functions.size());
  LayoutResult result;
  result.order = order;
  result.options = options;
  result.symfile.module_id = model.ModuleId();
  result.symfile.files = model.files;
  uint64_t cursor = options.base_address;
  for (size_t idx : order) {
    const FunctionModel& fn = model.functions[idx];
    cursor = AlignUp(cursor, fn.alignment);
    FunctionLayout fl = LayOutFunction(fn, idx, cursor, options);
    cursor = fl.placed.end();
    result.functions.push_back(std::move(fl.placed));
    result.symfile.funcs.push_back(std::move(fl.func));
    result.symfile.cfi_regions.push_back(std::move(fl.cfi));
  }
  // Order records by address, matching the parser's canonical form.
  auto by_addr = [](const auto& a, const auto& b) { return a.address < b.address; };
  std::sort(result.symfile.funcs.begin(), result.symfile.funcs.end(), by_addr);
  std::sort(result.symfile.cfi_regions.begin(), result.symfile.cfi_regions.end(),
            by_addr);
  return result;
}

uint64_t FunctionByteSize(const FunctionModel& fn, const LayoutOptions& options) {
  return LayOutFunction(fn, 0, 0, options).placed.size;
}

uint64_t BodyAddress(const PlacedFunction& pf, uint32_t block, uint32_t pos) {
  if (block >= pf.block_shape.size() || pos >= pf.block_shape[block].body) {
    throw Error(ErrorKind::kInput, "no body instruction " + std::to_string(pos) +
                                       " in block " + std::to_string(block));
  }
  return pf.block_address[block] +
         (uint64_t{pf.block_shape[block].prologue} + pos) * kInstrBytes;
}

namespace {

uint32_t RegisterMask(const FunctionModel& fn, bool lr_as_pc) {
  uint32_t mask = 0;
  for (const std::string& r : fn.frame.callee_saved) {
    int n = RegisterNumber(r);
    if (n == 14 && lr_as_pc) n = 15;
    mask |= 1u << n;
  }
  return mask;
}

// imm12 field (rotate:4, imm8:8) of an encodable value.
uint32_t EncodeImm12(uint32_t v) {
  for (uint32_t rot = 0; rot < 16; ++rot) {
    uint32_t b = RotateRight32(v, (32 - 2 * rot) & 31);
    if (b <= 0xff) return (rot << 8) | b;
  }
  return 0;
}

void PutWord(std::vector<uint8_t>& out, uint64_t offset, uint32_t w) {
  for (int i = 0; i < 4; ++i) out[offset + i] = static_cast<uint8_t>(w >> (8 * i));
}

}  // namespace

std::vector<uint8_t> RenderText(const ProgramModel& model,
                                const LayoutResult& layout) {
  if (layout.functions.empty()) return {};
  const uint64_t start = layout.functions.front().address;
  const uint64_t end = layout.functions.back().end();
  std::vector<uint8_t> out(end - start, 0);
  std::vector<uint64_t> entry(model.functions.size(), 0);
  for (const PlacedFunction& pf : layout.functions) entry[pf.model_index] = pf.address;

  for (const PlacedFunction& pf : layout.functions) {
    const FunctionModel& fn = model.functions[pf.model_index];
    const std::vector<uint32_t> chunks = StackAllocChunks(fn.frame.total_alloc());
    for (const PlacedRegion& r : pf.regions) {
      uint64_t at = r.address - start;
      if (r.kind == RegionKind::kPool) {
        for (const PoolPlacement& p : pf.pools) {
          if (p.after_block_index != r.block_index) continue;
          for (uint32_t c : p.constants) {
            PutWord(out, at, c);
            at += 4;
          }
        }
        continue;
      }
      const BlockModel& b = fn.blocks[r.block_index];
      if (r.kind == RegionKind::kData) {
        uint64_t h = Fnv1a64(fn.name) ^ b.index;
        for (uint64_t k = 0; k < r.size; k += 4) {
          h = SplitMixFinalize(h + kSplitMixGamma);
          PutWord(out, at + k, static_cast<uint32_t>(h));
        }
        continue;
      }
      const BlockShape& sh = pf.block_shape[b.index];
      auto emit = [&](uint32_t w) {
        PutWord(out, at, w);
        at += 4;
      };
      if (b.index == 0) {
        if (pf.has_push) emit(0xe92d0000 | RegisterMask(fn, false));
        if (fn.has_fp) emit(0xe28db000 | EncodeImm12(fn.frame.saved_bytes() - 4));
        for (uint32_t c : chunks) emit(0xe24dd000 | EncodeImm12(c));
      }
      size_t nop_k = 0;
      uint32_t src = 0;
      for (uint32_t pos = 0; pos < sh.body; ++pos) {
        if (nop_k < b.nop_positions.size() && b.nop_positions[nop_k] == pos) {
          emit(kNopWord);
          ++nop_k;
          continue;
        }
        uint32_t word = 0xe0800000 | (static_cast<uint32_t>(b.SpanAt(pos).line) & 0xfff);
        for (const CallSite& c : b.calls) {
          if (c.source_index != src) continue;
          const uint64_t target = entry[model.FindFunction(c.callee)];
          const int64_t off = (static_cast<int64_t>(target) -
                               static_cast<int64_t>(start + at) - 8) / 4;
          word = 0xeb000000 | (static_cast<uint32_t>(off) & 0x00ffffff);
        }
        emit(word);
        ++src;
      }
      for (const StackAccess& a : fn.frame.accesses) {
        if (a.block_index != b.index) continue;
        const AccessChoice ch = ChooseAccess(fn.frame, fn.has_fp, a, layout.options.sp_fp_opt);
        const uint32_t base = ch.base == FrameBase::kFp ? 11 : 13;
        for (uint32_t k = 0; k < a.count; ++k) {
          if (ch.instrs == 1) {
            emit(0xe5900000 | (base << 16) | (ch.offset & 0xfff));
          } else {
            emit(0xe3000000 | ((ch.offset & 0xf000) << 4) | (ch.offset & 0xfff));
            emit(0xe7900000 | (base << 16));
          }
        }
      }
      if (b.epilogue) {
        for (uint32_t c : chunks) emit(0xe28dd000 | EncodeImm12(c));
        if (pf.has_push) emit(0xe8bd0000 | RegisterMask(fn, true));
      }
    }
  }
  return out;
}

}  // namespace deltapad
