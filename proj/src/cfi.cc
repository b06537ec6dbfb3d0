#include "deltapad/cfi.h"

#include <algorithm>

#include "deltapad/error.h"

namespace deltapad {

uint32_t EvalPostfix(const PostfixExpr& expr, const RegisterState& regs,
                     std::optional<uint32_t> cfa, const StackSnapshot& mem) {
  std::vector<uint32_t> stack;
  auto pop = [&]() {
    if (stack.empty()) {
      throw Error(ErrorKind::kMalformedExpr, "stack underflow in " +
                                                 expr.ToString());
    }
    uint32_t v = stack.back();
    stack.pop_back();
    return v;
  };
  for (const ExprToken& t : expr.tokens()) {
    switch (t.kind) {
      case ExprToken::Kind::kLiteral:
        stack.push_back(static_cast<uint32_t>(t.value));
        break;
      case ExprToken::Kind::kRegister:
        if (t.reg == ".cfa") {
          if (!cfa) {
            throw Error(ErrorKind::kUnknownRegister,
                        ".cfa used before it is known");
          }
          stack.push_back(*cfa);
        } else {
          auto it = regs.find(t.reg);
          if (it == regs.end()) {
            throw Error(ErrorKind::kUnknownRegister,
                        "no value for register " + t.reg);
          }
          stack.push_back(it->second);
        }
        break;
      case ExprToken::Kind::kAdd: {
        uint32_t b = pop();
        uint32_t a = pop();
        stack.push_back(a + b);
        break;
      }
      case ExprToken::Kind::kSub: {
        uint32_t b = pop();
        uint32_t a = pop();
        stack.push_back(a - b);
        break;
      }
      case ExprToken::Kind::kDeref: {
        uint32_t addr = pop();
        std::optional<uint32_t> word = mem.ReadWord(addr);
        if (!word) {
          throw Error(ErrorKind::kMemoryOutOfRange,
                      "read at " + Hex(addr) + " outside stack snapshot");
        }
        stack.push_back(*word);
        break;
      }
    }
  }
  if (stack.size() != 1) {
    throw Error(ErrorKind::kMalformedExpr,
                "expression leaves " + std::to_string(stack.size()) +
                    " values: " + expr.ToString());
  }
  return stack.back();
}

RuleMap RulesAt(const SymbolFile& sf, uint64_t pc) {
  const auto& regions = sf.cfi_regions;
  auto it = std::upper_bound(
      regions.begin(), regions.end(), pc,
      [](uint64_t v, const CfiInitRecord& c) { return v < c.address; });
  if (it == regions.begin() || pc >= std::prev(it)->end()) {
    throw Error(ErrorKind::kNoUnwindInfo, "no STACK CFI covers " + Hex(pc));
  }
  const CfiInitRecord& region = *std::prev(it);
  RuleMap rules = region.init_rules;
  for (const CfiDelta& d : region.deltas) {
    if (d.address > pc) break;
    for (const Rule& r : d.rules.rules()) rules.Set(r.reg, r.expr);
  }
  return rules;
}

const char* UnwindStopName(UnwindStop stop) {
  switch (stop) {
    case UnwindStop::kEndOfStack: return "end-of-stack";
    case UnwindStop::kLeftKnownCode: return "left-known-code";
    case UnwindStop::kNoUnwindInfo: return "no-unwind-info";
    case UnwindStop::kCfaNotIncreasing: return "cfa-not-increasing";
    case UnwindStop::kMaxFrames: return "max-frames";
    case UnwindStop::kMemoryOutOfRange: return "memory-out-of-range";
    case UnwindStop::kMalformedRule: return "malformed-rule";
  }
  return "unknown";
}

const FuncRecord* FindFunction(const SymbolFile& sf, uint64_t pc) {
  auto it = std::upper_bound(
      sf.funcs.begin(), sf.funcs.end(), pc,
      [](uint64_t v, const FuncRecord& f) { return v < f.address; });
  if (it == sf.funcs.begin()) return nullptr;
  const FuncRecord& f = *std::prev(it);
  return pc < f.end() ? &f : nullptr;
}

const LineRecord* FindLine(const FuncRecord& fn, uint64_t pc) {
  auto it = std::upper_bound(
      fn.lines.begin(), fn.lines.end(), pc,
      [](uint64_t v, const LineRecord& l) { return v < l.address; });
  if (it == fn.lines.begin()) return nullptr;
  const LineRecord& l = *std::prev(it);
  return pc < l.address + l.size ? &l : nullptr;
}

namespace {

UnwindStop StopFor(const Error& e) {
  return e.kind() == ErrorKind::kMemoryOutOfRange
             ? UnwindStop::kMemoryOutOfRange
             : UnwindStop::kMalformedRule;
}

}  // namespace

UnwindResult Unwind(const MinidumpLite& dump, const SymbolFile& sf,
                    size_t max_frames) {
  if (dump.module_id != sf.module_id) {
    throw Error(ErrorKind::kModuleMismatch,
                "dump module '" + dump.module_id +
                    "' does not match symbol file '" + sf.module_id + "'");
  }
  UnwindResult result;
  RegisterState regs = dump.registers;
  RegisterState recovered = regs;
  bool caller = false;

  auto sp_it = regs.find("sp");
  if (sp_it == regs.end() || sp_it->second < dump.stack.base_address ||
      sp_it->second > dump.stack.end()) {
    Frame f;
    f.pc = uint64_t{dump.crash_address} - dump.module_base;
    f.recovered = regs;
    result.frames.push_back(std::move(f));
    result.stop = UnwindStop::kMemoryOutOfRange;
    return result;
  }

  while (true) {
    Frame frame;
    uint32_t abs_pc = regs.count("pc") ? regs.at("pc") : 0;
    frame.pc = uint64_t{abs_pc} - dump.module_base;
    frame.is_caller = caller;
    frame.recovered = recovered;

    if (abs_pc < dump.module_base + (caller ? 4u : 0u) ||
        !FindFunction(sf, frame.lookup_pc())) {
      result.frames.push_back(std::move(frame));
      result.stop = UnwindStop::kLeftKnownCode;
      return result;
    }

    RuleMap rules;
    try {
      rules = RulesAt(sf, frame.lookup_pc());
    } catch (const Error&) {
      result.frames.push_back(std::move(frame));
      result.stop = UnwindStop::kNoUnwindInfo;
      return result;
    }
    const PostfixExpr* cfa_rule = rules.Find(".cfa");
    const PostfixExpr* ra_rule = rules.Find(".ra");
    if (!cfa_rule || !ra_rule) {
      result.frames.push_back(std::move(frame));
      result.stop = UnwindStop::kMalformedRule;
      return result;
    }

    uint32_t cfa;
    try {
      cfa = EvalPostfix(*cfa_rule, regs, std::nullopt, dump.stack);
    } catch (const Error& e) {
      result.frames.push_back(std::move(frame));
      result.stop = StopFor(e);
      return result;
    }
    if (!result.frames.empty() && cfa <= *result.frames.back().cfa) {
      // The frame's pc is known; only its CFA is implausible.
      result.frames.push_back(std::move(frame));
      result.stop = UnwindStop::kCfaNotIncreasing;
      return result;
    }
    frame.cfa = cfa;
    result.frames.push_back(std::move(frame));
    if (result.frames.size() >= max_frames) {
      result.stop = UnwindStop::kMaxFrames;
      return result;
    }

    RegisterState caller_regs = regs;
    RegisterState caller_recovered;
    uint32_t ra;
    try {
      ra = EvalPostfix(*ra_rule, regs, cfa, dump.stack);
      if (ra == 0) {
        result.stop = UnwindStop::kEndOfStack;
        return result;
      }
      for (const Rule& r : rules.rules()) {
        if (r.reg == ".cfa" || r.reg == ".ra") continue;
        uint32_t v = EvalPostfix(r.expr, regs, cfa, dump.stack);
        caller_regs[r.reg] = v;
        caller_recovered[r.reg] = v;
      }
    } catch (const Error& e) {
      result.stop = StopFor(e);
      return result;
    }
    caller_regs["sp"] = cfa;
    caller_regs["pc"] = ra;
    caller_recovered["sp"] = cfa;
    caller_recovered["pc"] = ra;
    regs = std::move(caller_regs);
    recovered = std::move(caller_recovered);
    caller = true;
  }
}

}  // namespace deltapad
