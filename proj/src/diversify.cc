#include "deltapad/diversify.h"

#include <algorithm>
#include <cmath>

#include "deltapad/error.h"
#include "deltapad/prng.h"
#include "text_util.h"

namespace deltapad {

NopProbability ParseNopProbability(std::string_view text) {
  std::vector<std::string_view> parts = internal::Split(text, '/');
  uint64_t num = 0, den = 0;
  if (parts.size() != 2 || !internal::ParseUint(parts[0], &num) ||
      !internal::ParseUint(parts[1], &den) || den == 0 || num > den ||
      den > 0xffffffffu) {
    throw Error(ErrorKind::kInput,
                "NOP probability must be NUM/DEN with 0 <= NUM <= DEN: '" +
                    std::string(text) + "'");
  }
  return NopProbability{static_cast<uint32_t>(num), static_cast<uint32_t>(den)};
}

uint32_t PadAmount(std::string_view identifier, uint64_t pad_seed,
                   bool default_mode) {
  if (default_mode) return kDefaultPadding;
  return 8 * (1 + static_cast<uint32_t>(FunctionReseed(identifier, pad_seed) %
                                        kPaddingChoices));
}

bool NopDecisionFromDraw(uint64_t draw, NopProbability p) {
  const uint64_t threshold = (uint64_t{p.num} << 32) / p.den;
  return (draw & 0xffffffffu) < threshold;
}

std::vector<uint32_t> NopGaps(std::string_view identifier, uint32_t block,
                              uint32_t body_instrs, uint64_t nop_seed,
                              NopProbability p) {
  std::vector<uint32_t> gaps;
  const std::string key = std::string(identifier) + "#" + std::to_string(block);
  Prng rng(FunctionReseed(key, nop_seed));
  for (uint32_t k = 1; k < body_instrs; ++k) {
    if (NopDecisionFromDraw(rng.Next(), p)) gaps.push_back(k);
  }
  return gaps;
}

ProgramModel InsertNops(const ProgramModel& model, uint64_t nop_seed,
                        NopProbability p) {
  ProgramModel out = model;
  for (FunctionModel& fn : out.functions) {
    const std::string id = fn.Identifier();
    for (BlockModel& b : fn.blocks) {
      if (!b.is_code()) continue;
      if (!b.nop_positions.empty()) {
        throw Error(ErrorKind::kInput, fn.name + ": block already has NOPs");
      }
      std::vector<uint32_t> gaps = NopGaps(id, b.index, b.instr_count, nop_seed, p);
      if (gaps.empty()) continue;
      // Each NOP joins the span of the instruction before it.
      std::vector<LineSpan> spans = b.lines;
      size_t span = 0;
      uint32_t span_end = spans[0].count;
      for (size_t k = 0; k < gaps.size(); ++k) {
        const uint32_t prev = gaps[k] - 1;
        while (prev >= span_end) span_end += spans[++span].count;
        b.lines[span].count += 1;
        b.nop_positions.push_back(gaps[k] + static_cast<uint32_t>(k));
      }
      b.instr_count += static_cast<uint32_t>(gaps.size());
    }
  }
  return out;
}

std::vector<size_t> ShuffleOrder(size_t n, uint64_t shuffle_seed) {
  std::vector<size_t> order = IdentityOrder(n);
  Prng rng(shuffle_seed);
  for (size_t i = n; i-- > 1;) {
    std::swap(order[i], order[rng.Next() % (i + 1)]);
  }
  return order;
}

std::vector<size_t> ShuffleOrder(const OpportunityLog& log, uint64_t shuffle_seed) {
  if (log.functions.empty()) {
    throw Error(ErrorKind::kInput, "cannot shuffle an empty log");
  }
  return ShuffleOrder(log.functions.size(), shuffle_seed);
}

ProgramModel ApplyDefaultPadding(const ProgramModel& model, bool default_padding) {
  ProgramModel out = model;
  for (FunctionModel& fn : out.functions) {
    fn.frame.padding = default_padding ? PadAmount(fn.Identifier(), 0, true) : 0;
  }
  return out;
}

ProgramModel ApplyPadding(const ProgramModel& model, uint64_t pad_seed) {
  ProgramModel out = model;
  for (FunctionModel& fn : out.functions) {
    fn.frame.padding = PadAmount(fn.Identifier(), pad_seed, false);
  }
  return out;
}

std::vector<std::pair<size_t, uint32_t>> InjectDesync(
    ProgramModel& model, uint64_t pad_seed, double rate,
    const std::vector<std::string>& forced) {
  std::vector<std::pair<size_t, uint32_t>> touched;
  const double clamped = std::clamp(rate, 0.0, 1.0);
  const uint64_t threshold =
      static_cast<uint64_t>(std::ldexp(clamped, 32));
  for (size_t i = 0; i < model.functions.size(); ++i) {
    FunctionModel& fn = model.functions[i];
    const std::string id = fn.Identifier();
    const uint64_t v = FunctionReseed(id + "#desync", pad_seed);
    const bool force = std::find(forced.begin(), forced.end(), id) != forced.end();
    if (!force && (v & 0xffffffffu) >= threshold) continue;
    std::vector<uint32_t> code;
    for (const BlockModel& b : fn.blocks) {
      if (b.is_code() && !b.phantom) code.push_back(b.index);
    }
    if (code.empty()) continue;
    BlockModel& b = fn.blocks[code[(v >> 32) % code.size()]];
    b.instr_count += 1;
    b.lines.back().count += 1;
    b.phantom = true;
    touched.emplace_back(i, b.index);
  }
  return touched;
}

DefaultBuild BuildDefault(const ProgramModel& model, const BuildOptions& options) {
  ValidateModel(model);
  DefaultBuild build;
  build.model = ApplyDefaultPadding(model, options.default_padding);
  build.layout = Layout(build.model, IdentityOrder(model.functions.size()),
                        options.layout);
  build.log = MakeOpportunityLog(build.model, build.layout, options.default_padding);
  return build;
}

DiversifiedBuild BuildDiversified(const ProgramModel& model, const SeedTuple& seeds,
                                  const BuildOptions& options) {
  ValidateModel(model);
  DiversifiedBuild build;
  build.model = options.schemes.padding
                    ? ApplyPadding(model, seeds.pad_seed)
                    : ApplyDefaultPadding(model, options.default_padding);
  if (options.desync_rate > 0 || !options.desync_functions.empty()) {
    build.log.phantoms = InjectDesync(build.model, seeds.pad_seed,
                                      options.desync_rate, options.desync_functions);
  }
  if (options.schemes.nops) {
    build.model = InsertNops(build.model, seeds.nop_seed, options.nop_probability);
  }
  const size_t n = model.functions.size();
  std::vector<size_t> order =
      options.schemes.shuffle ? ShuffleOrder(n, seeds.shuffle_seed) : IdentityOrder(n);
  build.layout = Layout(build.model, order, options.layout);

  DecisionLog& log = build.log;
  log.seeds = seeds;
  log.layout_log = MakeOpportunityLog(build.model, build.layout, options.default_padding);
  log.order = order;
  for (size_t i = 0; i < n; ++i) {
    const FunctionModel& fn = build.model.functions[i];
    log.padding.push_back(fn.frame.padding);
    for (const BlockModel& b : fn.blocks) {
      if (!b.nop_positions.empty()) {
        log.nops.push_back(NopDecision{i, b.index, b.nop_positions});
      }
    }
  }
  return build;
}

}  // namespace deltapad
