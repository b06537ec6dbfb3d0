// The three diversification decision processes and the two builds.
//
// Every decision is drawn from a generator reseeded per function (padding)
// or per block (NOPs) from a hash of a stable identifier, so a replay that
// goes wrong inside one function cannot disturb the decisions of any other.
// Function shuffling draws from one generator seeded directly.

#ifndef DELTAPAD_DIVERSIFY_H_
#define DELTAPAD_DIVERSIFY_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "deltapad/layout.h"
#include "deltapad/opplog.h"
#include "deltapad/progmodel.h"

namespace deltapad {

inline constexpr uint32_t kDefaultPadding = 8;
inline constexpr uint32_t kPaddingChoices = 32;

struct NopProbability {
  uint32_t num = 1;
  uint32_t den = 5;

  bool operator==(const NopProbability&) const = default;
};

// "NUM/DEN" with 0 <= NUM <= DEN and DEN > 0.
NopProbability ParseNopProbability(std::string_view text);

struct Schemes {
  bool padding = true;
  bool nops = true;
  bool shuffle = true;

  bool operator==(const Schemes&) const = default;
};

struct BuildOptions {
  LayoutOptions layout;
  bool default_padding = true;
  NopProbability nop_probability;
  Schemes schemes;
  // Fraction of functions that receive one phantom instruction.
  double desync_rate = 0.0;
  // Identifiers that always receive a phantom, whatever the rate.
  std::vector<std::string> desync_functions;
};

uint32_t PadAmount(std::string_view identifier, uint64_t pad_seed,
                   bool default_mode);

// Low 32 bits of `draw` below num * 2^32 / den.
bool NopDecisionFromDraw(uint64_t draw, NopProbability p);

// NOP body positions for a block of `body_instrs` instructions; a NOP is
// inserted in gap k (between instructions k-1 and k) for k in 1..n-1.
// Positions are returned in terms of the original instruction index k.
std::vector<uint32_t> NopGaps(std::string_view identifier, uint32_t block,
                              uint32_t body_instrs, uint64_t nop_seed,
                              NopProbability p);

ProgramModel InsertNops(const ProgramModel& model, uint64_t nop_seed,
                        NopProbability p);

// Fisher-Yates over 0..n-1 driven by Prng(shuffle_seed).
std::vector<size_t> ShuffleOrder(size_t n, uint64_t shuffle_seed);
std::vector<size_t> ShuffleOrder(const OpportunityLog& log, uint64_t shuffle_seed);

// Sets every frame's padding.
ProgramModel ApplyDefaultPadding(const ProgramModel& model, bool default_padding);
ProgramModel ApplyPadding(const ProgramModel& model, uint64_t pad_seed);

// Appends one phantom instruction to a pseudo-randomly chosen code block of
// selected functions. Returns the (function, block) pairs touched.
std::vector<std::pair<size_t, uint32_t>> InjectDesync(
    ProgramModel& model, uint64_t pad_seed, double rate,
    const std::vector<std::string>& forced);

struct DefaultBuild {
  ProgramModel model;  // as laid out (default padding applied)
  LayoutResult layout;
  OpportunityLog log;
};

struct DiversifiedBuild {
  ProgramModel model;  // as laid out (padding, phantoms, NOPs applied)
  LayoutResult layout;
  DecisionLog log;
};

DefaultBuild BuildDefault(const ProgramModel& model, const BuildOptions& options);
DiversifiedBuild BuildDiversified(const ProgramModel& model, const SeedTuple& seeds,
                                  const BuildOptions& options);

}  // namespace deltapad

#endif  // DELTAPAD_DIVERSIFY_H_
