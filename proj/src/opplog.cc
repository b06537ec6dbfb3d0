#include "deltapad/opplog.h"

#include <cinttypes>
#include <cstdio>

#include "deltapad/error.h"
#include "text_util.h"

namespace deltapad {

using internal::ParseKeyValue;
using internal::ParseUint;
using internal::SplitLines;
using internal::SplitWords;
using internal::SplitWordsLimited;

namespace {

bool ParseSeed(std::string_view tok, uint64_t* out) {
  if (tok.size() > 2 && tok[0] == '0' && (tok[1] == 'x' || tok[1] == 'X')) {
    return ParseHex(tok.substr(2), out);
  }
  return ParseUint(tok, out);
}

}  // namespace

SeedTuple ParseSeedTuple(std::string_view text) {
  std::vector<std::string_view> parts = internal::Split(text, ',');
  SeedTuple s;
  if (parts.size() != 3 || !ParseSeed(parts[0], &s.pad_seed) ||
      !ParseSeed(parts[1], &s.nop_seed) || !ParseSeed(parts[2], &s.shuffle_seed)) {
    throw Error(ErrorKind::kInput,
                "seeds must be three comma-separated integers: '" +
                    std::string(text) + "'");
  }
  return s;
}

std::string SeedTupleToString(const SeedTuple& seeds) {
  char buf[80];
  std::snprintf(buf, sizeof buf, "0x%016" PRIx64 ",0x%016" PRIx64 ",0x%016" PRIx64,
                seeds.pad_seed, seeds.nop_seed, seeds.shuffle_seed);
  return buf;
}

uint64_t LogBlock::byte_size() const {
  return kind == LogBlockKind::kCode ? uint64_t{total_instrs} * kInstrBytes
                                     : bytes;
}

uint64_t LogFunction::byte_size() const {
  uint64_t total = 0;
  for (const LogBlock& b : blocks) total += b.byte_size();
  return total;
}

OpportunityLog MakeOpportunityLog(const ProgramModel& model,
                                  const LayoutResult& layout,
                                  bool default_padding) {
  OpportunityLog log;
  log.module_id = model.ModuleId();
  log.base_address = layout.options.base_address;
  log.default_padding = default_padding;
  log.sp_fp_opt = layout.options.sp_fp_opt;
  for (const PlacedFunction& pf : layout.functions) {
    const FunctionModel& fn = model.functions[pf.model_index];
    LogFunction lf;
    lf.identifier = fn.Identifier();
    lf.name = fn.name;
    lf.alignment = fn.alignment;
    lf.local_size = fn.frame.local_size;
    lf.saved_count = static_cast<uint32_t>(fn.frame.callee_saved.size());
    lf.has_fp = fn.has_fp;
    for (const PlacedRegion& r : pf.regions) {
      LogBlock lb;
      lb.index = r.block_index;
      switch (r.kind) {
        case RegionKind::kCode: {
          const BlockShape& sh = pf.block_shape[r.block_index];
          lb.kind = LogBlockKind::kCode;
          lb.total_instrs = sh.total();
          lb.body_instrs = sh.body;
          lb.epilogue = fn.blocks[r.block_index].epilogue;
          break;
        }
        case RegionKind::kData:
          lb.kind = LogBlockKind::kData;
          lb.bytes = static_cast<uint32_t>(r.size);
          break;
        case RegionKind::kPool:
          lb.kind = LogBlockKind::kPool;
          lb.index = 0;
          lb.bytes = static_cast<uint32_t>(r.size);
          break;
      }
      lf.blocks.push_back(lb);
    }
    log.functions.push_back(std::move(lf));
  }
  return log;
}

namespace {

void EmitBody(const OpportunityLog& log, std::string& out) {
  out += "MODULE " + log.module_id + "\n";
  out += "BASE " + Hex(log.base_address) + "\n";
  out += std::string("OPTIONS default_padding=") + (log.default_padding ? "1" : "0") +
         " sp_fp_opt=" + (log.sp_fp_opt ? "1" : "0") + "\n";
  for (const LogFunction& f : log.functions) {
    out += "FUNC " + f.identifier + " " + f.name +
           " align=" + std::to_string(f.alignment) +
           " local=" + std::to_string(f.local_size) +
           " saved=" + std::to_string(f.saved_count) +
           " fp=" + (f.has_fp ? "1" : "0") + "\n";
    for (const LogBlock& b : f.blocks) {
      switch (b.kind) {
        case LogBlockKind::kCode:
          out += "C " + std::to_string(b.index) + " " +
                 std::to_string(b.total_instrs) + " " +
                 std::to_string(b.body_instrs) + " " + (b.epilogue ? "1" : "0") +
                 "\n";
          break;
        case LogBlockKind::kData:
          out += "D " + std::to_string(b.index) + " " + std::to_string(b.bytes) + "\n";
          break;
        case LogBlockKind::kPool:
          out += "P " + std::to_string(b.bytes) + "\n";
          break;
      }
    }
  }
}

[[noreturn]] void Fail(size_t line_no, const std::string& msg) {
  throw Error(ErrorKind::kParse,
              "opportunity log line " + std::to_string(line_no) + ": " + msg);
}

uint32_t Num(std::string_view tok, size_t line_no) {
  uint64_t v;
  if (!ParseUint(tok, &v) || v > 0xffffffffu) {
    Fail(line_no, "bad number '" + std::string(tok) + "'");
  }
  return static_cast<uint32_t>(v);
}

bool Flag(std::string_view tok, std::string_view key, size_t line_no) {
  std::string_view v;
  if (!ParseKeyValue(tok, key, &v) || (v != "0" && v != "1")) {
    Fail(line_no, "expected " + std::string(key) + "=0|1");
  }
  return v == "1";
}

uint32_t KeyNum(std::string_view tok, std::string_view key, size_t line_no) {
  std::string_view v;
  if (!ParseKeyValue(tok, key, &v)) Fail(line_no, "expected " + std::string(key) + "=N");
  return Num(v, line_no);
}

}  // namespace

std::string EmitOpportunityLog(const OpportunityLog& log) {
  std::string out = "OPPORTUNITY-LOG 1\n";
  EmitBody(log, out);
  return out;
}

OpportunityLog ParseOpportunityLog(std::string_view text) {
  OpportunityLog log;
  std::vector<std::string_view> lines = SplitLines(text);
  if (lines.empty() || lines[0] != "OPPORTUNITY-LOG 1") {
    Fail(1, "missing OPPORTUNITY-LOG 1 header");
  }
  bool have_module = false, have_base = false, have_options = false;
  for (size_t i = 1; i < lines.size(); ++i) {
    const size_t line_no = i + 1;
    std::vector<std::string_view> w = SplitWords(lines[i]);
    if (w.empty()) continue;
    if (w[0] == "MODULE") {
      auto f = SplitWordsLimited(lines[i], 2);
      if (f.size() != 2) Fail(line_no, "MODULE needs an id");
      log.module_id = std::string(f[1]);
      have_module = true;
    } else if (w[0] == "BASE") {
      if (w.size() != 2 || !ParseHex(w[1], &log.base_address)) Fail(line_no, "bad BASE");
      have_base = true;
    } else if (w[0] == "OPTIONS") {
      if (w.size() != 3) Fail(line_no, "OPTIONS takes two flags");
      log.default_padding = Flag(w[1], "default_padding", line_no);
      log.sp_fp_opt = Flag(w[2], "sp_fp_opt", line_no);
      have_options = true;
    } else if (w[0] == "FUNC") {
      if (w.size() != 7) Fail(line_no, "FUNC takes 6 fields");
      LogFunction f;
      f.identifier = std::string(w[1]);
      f.name = std::string(w[2]);
      f.alignment = KeyNum(w[3], "align", line_no);
      f.local_size = KeyNum(w[4], "local", line_no);
      f.saved_count = KeyNum(w[5], "saved", line_no);
      f.has_fp = Flag(w[6], "fp", line_no);
      if (f.alignment != 4 && f.alignment != 8 && f.alignment != 16) {
        Fail(line_no, "alignment must be 4, 8 or 16");
      }
      log.functions.push_back(std::move(f));
    } else if (w[0] == "C" || w[0] == "D" || w[0] == "P") {
      if (log.functions.empty()) Fail(line_no, "block before any FUNC");
      LogBlock b;
      if (w[0] == "C") {
        if (w.size() != 5 || (w[4] != "0" && w[4] != "1")) Fail(line_no, "bad C record");
        b.kind = LogBlockKind::kCode;
        b.index = Num(w[1], line_no);
        b.total_instrs = Num(w[2], line_no);
        b.body_instrs = Num(w[3], line_no);
        b.epilogue = w[4] == "1";
        if (b.body_instrs == 0 || b.body_instrs > b.total_instrs) {
          Fail(line_no, "body count must be in [1, total]");
        }
      } else if (w[0] == "D") {
        if (w.size() != 3) Fail(line_no, "bad D record");
        b.kind = LogBlockKind::kData;
        b.index = Num(w[1], line_no);
        b.bytes = Num(w[2], line_no);
      } else {
        if (w.size() != 2) Fail(line_no, "bad P record");
        b.kind = LogBlockKind::kPool;
        b.bytes = Num(w[1], line_no);
      }
      log.functions.back().blocks.push_back(b);
    } else {
      Fail(line_no, "unknown record '" + std::string(w[0]) + "'");
    }
  }
  if (!have_module || !have_base || !have_options) {
    Fail(lines.size(), "MODULE, BASE and OPTIONS are required");
  }
  for (const LogFunction& f : log.functions) {
    if (f.blocks.empty() || f.blocks[0].kind != LogBlockKind::kCode) {
      throw Error(ErrorKind::kParse, "opportunity log: function " + f.name +
                                         " must start with a code block");
    }
  }
  return log;
}

std::string EmitDecisionLog(const DecisionLog& log, const ProgramModel& model) {
  std::string out = "DECISION-LOG 1\nSEEDS " + SeedTupleToString(log.seeds) + "\n";
  EmitBody(log.layout_log, out);
  out += "ORDER";
  for (size_t i : log.order) out += " " + std::to_string(i);
  out += "\n";
  for (size_t i = 0; i < log.padding.size(); ++i) {
    out += "PAD " + model.functions[i].Identifier() + " " +
           std::to_string(log.padding[i]) + "\n";
  }
  for (const NopDecision& d : log.nops) {
    std::vector<std::string> pos;
    for (uint32_t p : d.positions) pos.push_back(std::to_string(p));
    out += "NOPS " + model.functions[d.function].Identifier() + " " +
           std::to_string(d.block) + " " + internal::Join(pos, ",") + "\n";
  }
  for (const auto& [fn, block] : log.phantoms) {
    out += "PHANTOM " + model.functions[fn].Identifier() + " " +
           std::to_string(block) + "\n";
  }
  return out;
}

}  // namespace deltapad
