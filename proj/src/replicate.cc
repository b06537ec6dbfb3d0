#include "deltapad/replicate.h"

#include <algorithm>

#include "deltapad/arm_imm.h"
#include "deltapad/error.h"
#include "deltapad/layout.h"

namespace deltapad {

namespace {

[[noreturn]] void Mismatch(const std::string& msg) {
  throw Error(ErrorKind::kReplicationInput, msg);
}

uint64_t AlignUp(uint64_t v, uint64_t a) { return (v + a - 1) / a * a; }

// Insertion points in default addresses: every address >= at moves by d.
struct Point {
  uint64_t at;
  int64_t d;
};

class AddressMap {
 public:
  explicit AddressMap(std::vector<Point> points) : points_(std::move(points)) {
    std::sort(points_.begin(), points_.end(),
              [](const Point& a, const Point& b) { return a.at < b.at; });
  }
  uint64_t operator()(uint64_t x) const {
    int64_t shift = 0;
    for (const Point& p : points_) {
      if (p.at > x) break;
      shift += p.d;
    }
    return static_cast<uint64_t>(static_cast<int64_t>(x) + shift);
  }

 private:
  std::vector<Point> points_;
};

// Rewrites ".cfa: sp <from> +" into ".cfa: sp <to> +" in place.
void RewriteCfa(RuleMap& rules, int64_t from, int64_t to) {
  PostfixExpr* cfa = rules.FindMutable(".cfa");
  if (!cfa) return;
  const std::vector<ExprToken>& t = cfa->tokens();
  if (t.size() == 3 && t[0].kind == ExprToken::Kind::kRegister && t[0].reg == "sp" &&
      t[1].kind == ExprToken::Kind::kLiteral && t[1].value == from &&
      t[2].kind == ExprToken::Kind::kAdd) {
    *cfa = PostfixExpr({ExprToken::Register("sp"), ExprToken::Literal(to),
                        ExprToken::Op(ExprToken::Kind::kAdd)});
  }
}

struct Replayed {
  FuncRecord func;
  CfiInitRecord cfi;
};

Replayed ReplayFunction(const FuncRecord& func, const CfiInitRecord& cfi,
                        const LogFunction& lf, const OpportunityLog& log,
                        const ReplicationOptions& options) {
  Replayed out{func, cfi};
  const uint64_t f = func.address;
  const uint32_t saved = 4 * lf.saved_count;
  const uint32_t pad_default = log.default_padding ? kDefaultPadding : 0;
  const uint32_t alloc_default = lf.local_size + pad_default;
  const uint32_t instrs_default = StackAllocInstrs(alloc_default);
  const uint32_t prologue =
      (lf.saved_count > 0 ? 1 : 0) + (lf.has_fp ? 1 : 0) + instrs_default;

  std::vector<Point> points;
  if (options.schemes.padding) {
    const uint32_t pad = PadAmount(lf.identifier, options.seeds.pad_seed, false);
    const uint32_t alloc = lf.local_size + pad;
    if (alloc_default > 0 && alloc != alloc_default) {
      const int64_t from = int64_t{saved} + alloc_default;
      const int64_t to = int64_t{saved} + alloc;
      RewriteCfa(out.cfi.init_rules, from, to);
      for (CfiDelta& d : out.cfi.deltas) RewriteCfa(d.rules, from, to);
    }
    const uint32_t instrs = StackAllocInstrs(alloc);
    if (instrs_default > 0 && instrs != instrs_default) {
      const int64_t d = (int64_t{instrs} - int64_t{instrs_default}) * kInstrBytes;
      points.push_back(Point{f + uint64_t{prologue} * kInstrBytes, d});
      uint64_t at = f;
      for (const LogBlock& b : lf.blocks) {
        if (b.kind == LogBlockKind::kCode && b.epilogue) {
          const uint32_t pop = lf.saved_count > 0 ? 1 : 0;
          points.push_back(Point{at + uint64_t{b.total_instrs - pop} * kInstrBytes, d});
        }
        at += b.byte_size();
      }
    }
  }
  if (options.schemes.nops) {
    uint64_t at = f;
    for (const LogBlock& b : lf.blocks) {
      if (b.kind == LogBlockKind::kCode) {
        const uint64_t body = at + (b.index == 0 ? uint64_t{prologue} * kInstrBytes : 0);
        for (uint32_t k : NopGaps(lf.identifier, b.index, b.body_instrs,
                                  options.seeds.nop_seed, options.nop_probability)) {
          points.push_back(Point{body + uint64_t{k} * kInstrBytes,
                                 static_cast<int64_t>(kInstrBytes)});
        }
      }
      at += b.byte_size();
    }
  }
  if (points.empty()) return out;

  const AddressMap map(std::move(points));
  auto remap = [&map](uint64_t& address, uint64_t& size) {
    const uint64_t end = map(address + size);
    address = map(address);
    size = end - address;
  };
  remap(out.func.address, out.func.size);
  for (LineRecord& l : out.func.lines) remap(l.address, l.size);
  remap(out.cfi.address, out.cfi.size);
  for (CfiDelta& d : out.cfi.deltas) d.address = map(d.address);
  return out;
}

void Relocate(Replayed& r, uint64_t to) {
  const uint64_t from = r.func.address;
  auto move = [&](uint64_t& a) { a = a - from + to; };
  move(r.func.address);
  for (LineRecord& l : r.func.lines) move(l.address);
  move(r.cfi.address);
  for (CfiDelta& d : r.cfi.deltas) move(d.address);
}

}  // namespace

SymbolFile Replicate(const SymbolFile& default_sf, const OpportunityLog& log,
                     const ReplicationOptions& options) {
  if (default_sf.module_id != log.module_id) {
    Mismatch("log module '" + log.module_id + "' does not match symbol file '" +
             default_sf.module_id + "'");
  }
  const size_t n = log.functions.size();
  if (default_sf.funcs.size() != n || default_sf.cfi_regions.size() != n) {
    Mismatch("log lists " + std::to_string(n) + " functions, symbol file has " +
             std::to_string(default_sf.funcs.size()) + " FUNC and " +
             std::to_string(default_sf.cfi_regions.size()) + " CFI records");
  }

  std::vector<Replayed> replayed;
  replayed.reserve(n);
  uint64_t cursor = log.base_address;
  for (size_t i = 0; i < n; ++i) {
    const LogFunction& lf = log.functions[i];
    const FuncRecord& func = default_sf.funcs[i];
    const CfiInitRecord& cfi = default_sf.cfi_regions[i];
    cursor = AlignUp(cursor, lf.alignment);
    if (func.name != lf.name || func.address != cursor ||
        func.size != lf.byte_size()) {
      Mismatch("function " + std::to_string(i) + " (" + lf.name +
               ") does not match FUNC " + func.name + " at " + Hex(func.address));
    }
    if (cfi.address != func.address || cfi.size != func.size) {
      Mismatch("no CFI region matching " + func.name);
    }
    cursor += func.size;
    replayed.push_back(ReplayFunction(func, cfi, lf, log, options));
  }

  const std::vector<size_t> order =
      options.schemes.shuffle ? ShuffleOrder(n, options.seeds.shuffle_seed)
                              : IdentityOrder(n);
  SymbolFile out;
  out.module_id = default_sf.module_id;
  out.files = default_sf.files;
  out.publics = default_sf.publics;
  cursor = log.base_address;
  for (size_t idx : order) {
    Replayed& r = replayed[idx];
    cursor = AlignUp(cursor, log.functions[idx].alignment);
    Relocate(r, cursor);
    cursor += r.func.size;
  }
  for (size_t idx : order) {
    out.funcs.push_back(std::move(replayed[idx].func));
    out.cfi_regions.push_back(std::move(replayed[idx].cfi));
  }
  return out;
}

}  // namespace deltapad
