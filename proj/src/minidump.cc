#include "deltapad/minidump.h"

#include <cstdio>

#include "deltapad/error.h"
#include "deltapad/symfile.h"
#include "text_util.h"

namespace deltapad {

using internal::ParseUint;
using internal::SplitLines;
using internal::SplitWords;
using internal::SplitWordsLimited;

std::optional<uint32_t> StackSnapshot::ReadWord(uint32_t address) const {
  if (address < base_address || uint64_t{address} + 4 > end()) {
    return std::nullopt;
  }
  size_t off = address - base_address;
  return uint32_t{bytes[off]} | (uint32_t{bytes[off + 1]} << 8) |
         (uint32_t{bytes[off + 2]} << 16) | (uint32_t{bytes[off + 3]} << 24);
}

std::string EmitMinidump(const MinidumpLite& dump) {
  std::string out = "MINIDUMP-LITE 1\n";
  out += "MODULE " + dump.module_id + "\n";
  out += "BASE " + Hex(dump.module_base) + "\n";
  out += "REASON " + dump.crash_reason + "\n";
  out += "ADDRESS " + Hex(dump.crash_address) + "\n";
  for (const auto& [name, value] : dump.registers) {
    out += "REG " + name + " " + Hex(value) + "\n";
  }
  out += "STACK " + Hex(dump.stack.base_address) + " " +
         std::to_string(dump.stack.bytes.size()) + "\n";
  char buf[3];
  for (size_t i = 0; i < dump.stack.bytes.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%02x", dump.stack.bytes[i]);
    out += buf;
    if (i % 32 == 31 || i + 1 == dump.stack.bytes.size()) out += '\n';
  }
  return out;
}

namespace {

[[noreturn]] void Fail(size_t line_no, const std::string& msg) {
  throw Error(ErrorKind::kParse,
              "minidump line " + std::to_string(line_no) + ": " + msg);
}

uint32_t Hex32(std::string_view tok, size_t line_no) {
  uint64_t v;
  if (!ParseHex(tok, &v) || v > 0xffffffffu) {
    Fail(line_no, "bad 32-bit hex value '" + std::string(tok) + "'");
  }
  return static_cast<uint32_t>(v);
}

int HexNibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

MinidumpLite ParseMinidump(std::string_view text) {
  std::vector<std::string_view> lines = SplitLines(text);
  if (lines.empty() || lines[0] != "MINIDUMP-LITE 1") {
    Fail(1, "missing MINIDUMP-LITE 1 header");
  }
  MinidumpLite dump;
  bool have_stack = false;
  size_t expected = 0;
  for (size_t i = 1; i < lines.size(); ++i) {
    size_t line_no = i + 1;
    std::string_view line = lines[i];
    if (have_stack) {
      if (line.size() % 2 != 0) Fail(line_no, "odd hex digit count");
      for (size_t k = 0; k < line.size(); k += 2) {
        int hi = HexNibble(line[k]);
        int lo = HexNibble(line[k + 1]);
        if (hi < 0 || lo < 0) Fail(line_no, "bad stack byte");
        dump.stack.bytes.push_back(static_cast<uint8_t>(hi * 16 + lo));
      }
      continue;
    }
    auto f = SplitWordsLimited(line, 2);
    if (f.empty()) continue;
    std::string_view rest = f.size() > 1 ? f[1] : std::string_view();
    if (f[0] == "MODULE") {
      dump.module_id = std::string(rest);
    } else if (f[0] == "BASE") {
      dump.module_base = Hex32(rest, line_no);
    } else if (f[0] == "REASON") {
      dump.crash_reason = std::string(rest);
    } else if (f[0] == "ADDRESS") {
      dump.crash_address = Hex32(rest, line_no);
    } else if (f[0] == "REG") {
      auto w = SplitWords(rest);
      if (w.size() != 2) Fail(line_no, "REG needs name and value");
      dump.registers[std::string(w[0])] = Hex32(w[1], line_no);
    } else if (f[0] == "STACK") {
      auto w = SplitWords(rest);
      uint64_t count;
      if (w.size() != 2 || !ParseUint(w[1], &count)) {
        Fail(line_no, "STACK needs base and byte count");
      }
      dump.stack.base_address = Hex32(w[0], line_no);
      expected = count;
      have_stack = true;
    } else {
      Fail(line_no, "unknown record '" + std::string(f[0]) + "'");
    }
  }
  if (!have_stack) Fail(lines.size(), "missing STACK record");
  if (dump.stack.bytes.size() != expected) {
    Fail(lines.size(), "stack byte count mismatch");
  }
  return dump;
}

}  // namespace deltapad
