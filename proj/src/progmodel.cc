#include "deltapad/progmodel.h"

#include <algorithm>
#include <cstdio>
#include <set>

#include "deltapad/error.h"
#include "deltapad/prng.h"
#include "text_util.h"

namespace deltapad {

using internal::ParseInt;
using internal::ParseKeyValue;
using internal::ParseUint;
using internal::Split;
using internal::SplitLines;
using internal::SplitWords;
using internal::SplitWordsLimited;

uint32_t BlockModel::source_count() const {
  return instr_count - static_cast<uint32_t>(nop_positions.size());
}

uint32_t BlockModel::BodyPosition(uint32_t source_index) const {
  uint32_t pos = source_index;
  for (uint32_t nop : nop_positions) {
    if (nop <= pos) {
      ++pos;
    } else {
      break;
    }
  }
  return pos;
}

const LineSpan& BlockModel::SpanAt(uint32_t pos) const {
  uint32_t cursor = 0;
  for (const LineSpan& s : lines) {
    if (pos < cursor + s.count) return s;
    cursor += s.count;
  }
  throw Error(ErrorKind::kInput, "body position " + std::to_string(pos) +
                                     " beyond block " + std::to_string(index));
}

bool FunctionModel::SavesLr() const {
  return std::find(frame.callee_saved.begin(), frame.callee_saved.end(),
                   "lr") != frame.callee_saved.end();
}

std::string ProgramModel::ModuleId() const {
  char id[40];
  std::snprintf(id, sizeof id, "%016llX%016llX0",
                static_cast<unsigned long long>(Fnv1a64(module_name)),
                static_cast<unsigned long long>(
                    SplitMixFinalize(Fnv1a64(module_name))));
  return "Linux arm " + std::string(id) + " " + module_name;
}

long ProgramModel::FindFunction(std::string_view name) const {
  for (size_t i = 0; i < functions.size(); ++i) {
    if (functions[i].name == name) return static_cast<long>(i);
  }
  return -1;
}

int RegisterNumber(std::string_view reg) {
  if (reg == "fp") return 11;
  if (reg == "sp") return 13;
  if (reg == "lr") return 14;
  if (reg == "pc") return 15;
  if (reg.size() < 2 || reg[0] != 'r') return -1;
  uint64_t n;
  if (!ParseUint(reg.substr(1), &n) || n > 15) return -1;
  return static_cast<int>(n);
}

namespace {

[[noreturn]] void Bad(const std::string& where, const std::string& msg) {
  throw Error(ErrorKind::kInput, where + ": " + msg);
}

}  // namespace

void ValidateModel(const ProgramModel& model) {
  std::set<std::string> ids;
  std::set<std::string> names;
  for (const FunctionModel& fn : model.functions) {
    const std::string where = "function " + fn.name;
    if (fn.name.empty()) Bad(where, "empty name");
    if (!ids.insert(fn.Identifier()).second) Bad(where, "duplicate identifier");
    if (!names.insert(fn.name).second) Bad(where, "duplicate name");
    if (fn.alignment != 4 && fn.alignment != 8 && fn.alignment != 16) {
      Bad(where, "alignment must be 4, 8 or 16");
    }
    const FrameModel& fr = fn.frame;
    if (fr.local_size % 4 != 0) Bad(where, "local_size not 4-aligned");
    if (fr.padding % 8 != 0) Bad(where, "padding not a multiple of 8");
    int prev = -1;
    for (const std::string& r : fr.callee_saved) {
      int num = RegisterNumber(r);
      bool ok = (num >= 4 && num <= 11 && r == "r" + std::to_string(num)) ||
                r == "lr";
      if (!ok || num <= prev) Bad(where, "bad callee-saved list");
      prev = num;
    }
    if (!fr.callee_saved.empty() && !fn.SavesLr()) {
      Bad(where, "callee-saved registers without lr");
    }
    if (fn.has_fp &&
        (!fn.SavesLr() ||
         std::find(fr.callee_saved.begin(), fr.callee_saved.end(), "r11") ==
             fr.callee_saved.end())) {
      Bad(where, "frame pointer requires saving r11 and lr");
    }
    if (fn.blocks.empty() || !fn.blocks[0].is_code()) {
      Bad(where, "first block must be the code prologue block");
    }
    bool has_epilogue = false;
    bool has_calls = false;
    for (size_t i = 0; i < fn.blocks.size(); ++i) {
      const BlockModel& b = fn.blocks[i];
      const std::string bw = where + " block " + std::to_string(i);
      if (b.index != i) Bad(bw, "index does not match position");
      if (!b.is_code()) {
        if (b.byte_size == 0 || b.byte_size % 4 != 0) {
          Bad(bw, "data size must be a positive multiple of 4");
        }
        if (!b.consts.empty() || !b.lines.empty() || !b.calls.empty() ||
            b.epilogue || b.instr_count != 0) {
          Bad(bw, "data block carries code attributes");
        }
        continue;
      }
      if (b.instr_count == 0) Bad(bw, "empty code block");
      uint64_t covered = 0;
      for (const LineSpan& s : b.lines) {
        if (s.count == 0) Bad(bw, "empty line span");
        covered += s.count;
      }
      if (covered != b.instr_count) Bad(bw, "line spans do not cover block");
      uint32_t last = 0;
      for (size_t k = 0; k < b.nop_positions.size(); ++k) {
        uint32_t p = b.nop_positions[k];
        if (p == 0 || p >= b.instr_count || (k > 0 && p <= last)) {
          Bad(bw, "bad NOP positions");
        }
        last = p;
      }
      for (const CallSite& c : b.calls) {
        if (c.source_index >= b.source_count()) Bad(bw, "call index too large");
        if (model.FindFunction(c.callee) < 0) {
          Bad(bw, "unknown callee " + c.callee);
        }
        has_calls = true;
      }
      has_epilogue = has_epilogue || b.epilogue;
    }
    if (!has_epilogue) Bad(where, "no epilogue block");
    if (has_calls && !fn.SavesLr()) Bad(where, "non-leaf must save lr");
    for (const StackAccess& a : fr.accesses) {
      if (a.offset_from_frame_base + 4 > fr.local_size) {
        Bad(where, "access outside local area");
      }
      if (a.block_index >= fn.blocks.size() ||
          !fn.blocks[a.block_index].is_code()) {
        Bad(where, "access owned by non-code block");
      }
      if (a.count == 0) Bad(where, "zero-count access");
    }
  }
}

std::string EmitModel(const ProgramModel& model) {
  std::string out = "MODEL " + model.module_name + "\n";
  for (const FileRecord& f : model.files) {
    out += "FILE " + std::to_string(f.num) + " " + f.path + "\n";
  }
  for (const FunctionModel& fn : model.functions) {
    out += "FUNCTION " + fn.name + " " + fn.object_name + " " +
           fn.section_name + " align=" + std::to_string(fn.alignment) +
           " fp=" + (fn.has_fp ? "1" : "0") +
           " local=" + std::to_string(fn.frame.local_size) +
           " pad=" + std::to_string(fn.frame.padding) + " saved=";
    out += fn.frame.callee_saved.empty()
               ? std::string("-")
               : internal::Join(fn.frame.callee_saved, ",");
    out += "\n";
    for (const BlockModel& b : fn.blocks) {
      if (!b.is_code()) {
        out += "BLOCK " + std::to_string(b.index) +
               " data bytes=" + std::to_string(b.byte_size) + "\n";
        continue;
      }
      out += "BLOCK " + std::to_string(b.index) +
             " code n=" + std::to_string(b.instr_count) +
             " epilogue=" + (b.epilogue ? "1" : "0") + " lines=";
      std::vector<std::string> spans;
      for (const LineSpan& s : b.lines) {
        spans.push_back(std::to_string(s.count) + ":" + std::to_string(s.line) +
                        ":" + std::to_string(s.filenum));
      }
      out += internal::Join(spans, ",");
      out += " nops=";
      if (b.nop_positions.empty()) {
        out += "-";
      } else {
        std::vector<std::string> nops;
        for (uint32_t p : b.nop_positions) nops.push_back(std::to_string(p));
        out += internal::Join(nops, ",");
      }
      if (b.phantom) out += " phantom=1";
      out += "\n";
      for (uint32_t c : b.consts) {
        out += "CONST " + std::to_string(b.index) + " " + Hex(c) + "\n";
      }
      for (const CallSite& c : b.calls) {
        out += "CALL " + std::to_string(b.index) + " " +
               std::to_string(c.source_index) + " " + c.callee + "\n";
      }
    }
    for (const StackAccess& a : fn.frame.accesses) {
      out += "ACCESS " + std::to_string(a.block_index) + " " +
             std::to_string(a.offset_from_frame_base) + " " +
             std::to_string(a.count) + " " + std::to_string(a.source_line) +
             "\n";
    }
  }
  return out;
}

namespace {

[[noreturn]] void Fail(size_t line_no, const std::string& msg) {
  throw Error(ErrorKind::kParse,
              "model line " + std::to_string(line_no) + ": " + msg);
}

uint32_t U32(std::string_view tok, size_t line_no, const char* what) {
  uint64_t v;
  if (!ParseUint(tok, &v) || v > 0xffffffffu) {
    Fail(line_no, std::string("bad ") + what + " '" + std::string(tok) + "'");
  }
  return static_cast<uint32_t>(v);
}

int64_t I64(std::string_view tok, size_t line_no, const char* what) {
  int64_t v;
  if (!ParseInt(tok, &v)) {
    Fail(line_no, std::string("bad ") + what + " '" + std::string(tok) + "'");
  }
  return v;
}

std::string_view Field(std::string_view tok, std::string_view key,
                       size_t line_no) {
  std::string_view v;
  if (!ParseKeyValue(tok, key, &v)) {
    Fail(line_no, "expected " + std::string(key) + "=...");
  }
  return v;
}

}  // namespace

ProgramModel ParseModel(std::string_view text) {
  ProgramModel model;
  bool have_header = false;
  FunctionModel* fn = nullptr;
  std::vector<std::string_view> lines = SplitLines(text);
  auto block_at = [&](std::string_view tok, size_t line_no) -> BlockModel& {
    if (!fn) Fail(line_no, "record outside FUNCTION");
    uint32_t idx = U32(tok, line_no, "block index");
    if (idx >= fn->blocks.size()) Fail(line_no, "unknown block");
    return fn->blocks[idx];
  };
  for (size_t i = 0; i < lines.size(); ++i) {
    size_t line_no = i + 1;
    std::vector<std::string_view> w = SplitWords(lines[i]);
    if (w.empty()) continue;
    if (w[0] == "MODEL") {
      auto f = SplitWordsLimited(lines[i], 2);
      if (f.size() != 2) Fail(line_no, "MODEL needs a name");
      model.module_name = std::string(f[1]);
      have_header = true;
    } else if (!have_header) {
      Fail(line_no, "missing MODEL header");
    } else if (w[0] == "FILE") {
      auto f = SplitWordsLimited(lines[i], 3);
      if (f.size() != 3) Fail(line_no, "FILE needs number and path");
      model.files.push_back(
          FileRecord{I64(f[1], line_no, "file number"), std::string(f[2])});
    } else if (w[0] == "FUNCTION") {
      if (w.size() != 9) Fail(line_no, "FUNCTION needs 8 fields");
      FunctionModel f;
      f.name = std::string(w[1]);
      f.object_name = std::string(w[2]);
      f.section_name = std::string(w[3]);
      f.alignment = U32(Field(w[4], "align", line_no), line_no, "alignment");
      std::string_view fp = Field(w[5], "fp", line_no);
      if (fp != "0" && fp != "1") Fail(line_no, "fp must be 0 or 1");
      f.has_fp = fp == "1";
      f.frame.local_size = U32(Field(w[6], "local", line_no), line_no, "local");
      f.frame.padding = U32(Field(w[7], "pad", line_no), line_no, "pad");
      std::string_view saved = Field(w[8], "saved", line_no);
      if (saved != "-") {
        for (std::string_view r : Split(saved, ',')) {
          f.frame.callee_saved.emplace_back(r);
        }
      }
      model.functions.push_back(std::move(f));
      fn = &model.functions.back();
    } else if (w[0] == "BLOCK") {
      if (!fn) Fail(line_no, "BLOCK outside FUNCTION");
      if (w.size() < 4) Fail(line_no, "BLOCK needs kind and size");
      BlockModel b;
      b.index = U32(w[1], line_no, "block index");
      if (b.index != fn->blocks.size()) Fail(line_no, "blocks out of order");
      if (w[2] == "data") {
        if (w.size() != 4) Fail(line_no, "data BLOCK takes bytes=N");
        b.kind = BlockKind::kData;
        b.byte_size = U32(Field(w[3], "bytes", line_no), line_no, "bytes");
      } else if (w[2] == "code") {
        if (w.size() != 7 && w.size() != 8) {
          Fail(line_no, "code BLOCK takes n, epilogue, lines, nops");
        }
        b.instr_count = U32(Field(w[3], "n", line_no), line_no, "n");
        std::string_view epi = Field(w[4], "epilogue", line_no);
        if (epi != "0" && epi != "1") Fail(line_no, "epilogue must be 0 or 1");
        b.epilogue = epi == "1";
        for (std::string_view span : Split(Field(w[5], "lines", line_no), ',')) {
          auto parts = Split(span, ':');
          if (parts.size() != 3) Fail(line_no, "span needs count:line:file");
          b.lines.push_back(LineSpan{U32(parts[0], line_no, "span count"),
                                     I64(parts[1], line_no, "line"),
                                     I64(parts[2], line_no, "file")});
        }
        std::string_view nops = Field(w[6], "nops", line_no);
        if (nops != "-") {
          for (std::string_view p : Split(nops, ',')) {
            b.nop_positions.push_back(U32(p, line_no, "nop position"));
          }
        }
        if (w.size() == 8) {
          if (Field(w[7], "phantom", line_no) != "1") {
            Fail(line_no, "phantom must be 1");
          }
          b.phantom = true;
        }
      } else {
        Fail(line_no, "unknown block kind");
      }
      fn->blocks.push_back(std::move(b));
    } else if (w[0] == "CONST") {
      if (w.size() != 3) Fail(line_no, "CONST needs block and value");
      BlockModel& b = block_at(w[1], line_no);
      uint64_t v;
      if (!ParseHex(w[2], &v) || v > 0xffffffffu) Fail(line_no, "bad constant");
      b.consts.push_back(static_cast<uint32_t>(v));
    } else if (w[0] == "CALL") {
      if (w.size() != 4) Fail(line_no, "CALL needs block, index, callee");
      BlockModel& b = block_at(w[1], line_no);
      b.calls.push_back(
          CallSite{U32(w[2], line_no, "call index"), std::string(w[3])});
    } else if (w[0] == "ACCESS") {
      if (!fn) Fail(line_no, "ACCESS outside FUNCTION");
      if (w.size() != 5) Fail(line_no, "ACCESS needs 4 fields");
      fn->frame.accesses.push_back(
          StackAccess{U32(w[1], line_no, "block"), U32(w[2], line_no, "offset"),
                      U32(w[3], line_no, "count"), I64(w[4], line_no, "line")});
    } else {
      Fail(line_no, "unknown record '" + std::string(w[0]) + "'");
    }
  }
  if (!have_header) Fail(1, "missing MODEL header");
  try {
    ValidateModel(model);
  } catch (const Error& e) {
    throw Error(ErrorKind::kParse, std::string("model: ") + e.what());
  }
  return model;
}

}  // namespace deltapad
