#include "deltapad/collector.h"

#include "deltapad/error.h"
#include "deltapad/patch.h"
#include "deltapad/prng.h"
#include "text_util.h"

namespace deltapad {

std::vector<CrashSite> ParseChain(std::string_view text) {
  std::vector<CrashSite> chain;
  for (std::string_view item : internal::Split(text, ',')) {
    std::vector<std::string_view> f = internal::Split(item, ':');
    uint64_t block = 0, index = 0;
    if (f.size() != 3 || f[0].empty() || !internal::ParseUint(f[1], &block) ||
        !internal::ParseUint(f[2], &index) || block > 0xffffffffu ||
        index > 0xffffffffu) {
      throw Error(ErrorKind::kInput,
                  "chain entries are fn:block:index, got '" + std::string(item) + "'");
    }
    chain.push_back(CrashSite{std::string(f[0]), static_cast<uint32_t>(block),
                              static_cast<uint32_t>(index)});
  }
  return chain;
}

std::string FormatChain(const std::vector<CrashSite>& chain) {
  std::vector<std::string> parts;
  for (const CrashSite& s : chain) {
    parts.push_back(s.function + ":" + std::to_string(s.block) + ":" +
                    std::to_string(s.source_index));
  }
  return internal::Join(parts, ",");
}

std::vector<CrashSite> RandomChain(const ProgramModel& model, uint64_t seed,
                                   size_t max_depth) {
  if (model.functions.empty()) throw Error(ErrorKind::kInput, "empty model");
  Prng rng(seed);
  std::vector<CrashSite> chain;
  size_t fn = rng.Below(model.functions.size());
  while (true) {
    const FunctionModel& f = model.functions[fn];
    std::vector<std::pair<uint32_t, const CallSite*>> calls;
    std::vector<uint32_t> code;
    for (const BlockModel& b : f.blocks) {
      if (!b.is_code()) continue;
      code.push_back(b.index);
      for (const CallSite& c : b.calls) calls.emplace_back(b.index, &c);
    }
    if (!calls.empty() && chain.size() + 1 < max_depth && rng.Below(10) < 7) {
      const auto& [block, call] = calls[rng.Below(calls.size())];
      chain.push_back(CrashSite{f.name, block, call->source_index});
      fn = static_cast<size_t>(model.FindFunction(call->callee));
      continue;
    }
    const BlockModel& b = f.blocks[code[rng.Below(code.size())]];
    chain.push_back(CrashSite{f.name, b.index,
                              static_cast<uint32_t>(rng.Below(b.source_count()))});
    return chain;
  }
}

namespace {

[[noreturn]] void Harness(const std::string& msg) {
  throw Error(ErrorKind::kHarness, msg);
}

// Distinct, recognizable register contents per frame.
uint32_t Scribble(size_t frame, int reg) {
  return 0x5a000000u | static_cast<uint32_t>(frame) << 8 | static_cast<uint32_t>(reg);
}

}  // namespace

MinidumpLite SimulateCrash(const LayoutResult& layout, const ProgramModel& model,
                           const std::vector<CrashSite>& chain) {
  if (chain.empty()) Harness("empty call chain");
  RegisterState regs;
  for (int r = 4; r <= 11; ++r) regs["r" + std::to_string(r)] = Scribble(0, r);
  regs["lr"] = 0;
  uint32_t sp = kStackTop;
  std::vector<std::pair<uint32_t, uint32_t>> planted;  // (address, word)

  MinidumpLite dump;
  dump.module_id = model.ModuleId();
  dump.module_base = kModuleLoadBase;
  dump.crash_reason = "SIGSEGV";

  for (size_t k = 0; k < chain.size(); ++k) {
    const CrashSite& site = chain[k];
    const long idx = model.FindFunction(site.function);
    if (idx < 0) Harness("unknown function " + site.function);
    const FunctionModel& fn = model.functions[idx];
    const PlacedFunction& pf = layout.ForModelIndex(static_cast<size_t>(idx));

    // Prologue: push, frame pointer, allocation.
    const uint32_t cfa = sp;
    const uint32_t saved = fn.frame.saved_bytes();
    for (size_t j = 0; j < fn.frame.callee_saved.size(); ++j) {
      const std::string& reg = fn.frame.callee_saved[j];
      planted.emplace_back(cfa - saved + 4 * static_cast<uint32_t>(j), regs.at(reg));
    }
    sp = cfa - saved;
    if (fn.has_fp) regs["r11"] = cfa - 4;
    sp -= fn.frame.total_alloc();
    for (const std::string& reg : fn.frame.callee_saved) {
      if (reg == "lr" || (fn.has_fp && reg == "r11")) continue;
      regs[reg] = Scribble(k + 1, RegisterNumber(reg));
    }

    if (site.block >= fn.blocks.size() || !fn.blocks[site.block].is_code()) {
      Harness(site.function + " has no code block " + std::to_string(site.block));
    }
    const BlockModel& b = fn.blocks[site.block];
    if (site.source_index >= b.source_count()) {
      Harness(site.function + " block " + std::to_string(site.block) +
              " has no instruction " + std::to_string(site.source_index));
    }
    const uint64_t at = BodyAddress(pf, site.block, b.BodyPosition(site.source_index));
    const uint32_t abs = kModuleLoadBase + static_cast<uint32_t>(at);
    if (k + 1 < chain.size()) {
      bool calls_next = false;
      for (const CallSite& c : b.calls) {
        calls_next |= c.source_index == site.source_index &&
                      c.callee == chain[k + 1].function;
      }
      if (!calls_next) {
        Harness(FormatChain({site}) + " is not a call to " + chain[k + 1].function);
      }
      regs["lr"] = abs + 4;
    } else {
      regs["pc"] = abs;
      dump.crash_address = abs;
    }
  }
  regs["sp"] = sp;
  dump.registers = regs;
  dump.stack.base_address = sp;
  dump.stack.bytes.assign(kStackTop - sp, 0);
  for (const auto& [address, word] : planted) {
    for (int i = 0; i < 4; ++i) {
      dump.stack.bytes[address - sp + i] = static_cast<uint8_t>(word >> (8 * i));
    }
  }
  return dump;
}

std::string StackTrace::ToString() const {
  std::string out;
  for (size_t i = 0; i < frames.size(); ++i) {
    const TraceFrame& f = frames[i];
    out += "#" + std::to_string(i) + " " + f.function + " " + f.file + ":" +
           std::to_string(f.line) + "\n";
  }
  out += std::string("stop: ") + UnwindStopName(stop) + "\n";
  return out;
}

StackTrace Symbolize(const UnwindResult& unwound, const SymbolFile& sf) {
  StackTrace trace;
  trace.stop = unwound.stop;
  for (const Frame& frame : unwound.frames) {
    TraceFrame tf;
    tf.pc = frame.pc;
    tf.function = "??";
    tf.file = "??";
    if (const FuncRecord* fn = FindFunction(sf, frame.lookup_pc())) {
      tf.function = fn->name;
      if (const LineRecord* line = FindLine(*fn, frame.lookup_pc())) {
        tf.line = line->line;
        for (const FileRecord& file : sf.files) {
          if (file.num == line->filenum) tf.file = file.path;
        }
      }
    }
    trace.frames.push_back(std::move(tf));
  }
  return trace;
}

DeltaData MakeDeltaData(const SymbolFile& default_sf, const OpportunityLog& log,
                        const SymbolFile& truth, const ReplicationOptions& options) {
  DeltaData dd;
  dd.seeds = options.seeds;
  dd.nop_probability = options.nop_probability;
  dd.schemes = options.schemes;
  dd.patch = Diff(Replicate(default_sf, log, options), truth);
  return dd;
}

SymbolFile Reconstruct(const Bytes& dd_bytes, const SymbolFile& default_sf,
                       const OpportunityLog& log, const std::optional<Bytes>& key) {
  const DeltaData dd = Unpack(dd_bytes, key);
  const ReplicationOptions options{dd.seeds, dd.nop_probability, dd.schemes};
  return Apply(Replicate(default_sf, log, options), dd.patch);
}

StackTrace Report(const MinidumpLite& dump, const Bytes& dd_bytes,
                  const SymbolFile& default_sf, const OpportunityLog& log,
                  const std::optional<Bytes>& key) {
  if (dump.module_id != default_sf.module_id) {
    throw Error(ErrorKind::kModuleMismatch,
                "dump module '" + dump.module_id + "' is not '" +
                    default_sf.module_id + "'");
  }
  const SymbolFile sf = Reconstruct(dd_bytes, default_sf, log, key);
  return Symbolize(Unwind(dump, sf), sf);
}

}  // namespace deltapad
