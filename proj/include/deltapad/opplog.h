// Opportunity and decision logs.
//
// The opportunity log is written by the default build and is everything the
// server needs, besides the default symbol file and the seeds, to replay the
// diversification decisions. It describes the post-layout block structure
// of every function, pools included, because that is the structure the
// replay walks over.
//
// Text format:
//   OPPORTUNITY-LOG 1
//   MODULE <module id>
//   BASE <hex>
//   OPTIONS default_padding=<0|1> sp_fp_opt=<0|1>
//   FUNC <identifier> <name> align=<n> local=<n> saved=<n> fp=<0|1>
//   C <block> <total instrs> <body instrs> <epilogue 0|1>
//   D <block> <bytes>
//   P <bytes>
//
// The decision log starts with "DECISION-LOG 1" and a "SEEDS" line, repeats
// the opportunity log of the diversified build, and appends the decisions:
//   ORDER <function index>...
//   PAD <identifier> <bytes>
//   NOPS <identifier> <block> <body position>,...
//   PHANTOM <identifier> <block>

#ifndef DELTAPAD_OPPLOG_H_
#define DELTAPAD_OPPLOG_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "deltapad/layout.h"
#include "deltapad/progmodel.h"

namespace deltapad {

struct SeedTuple {
  uint64_t pad_seed = 0;
  uint64_t nop_seed = 0;
  uint64_t shuffle_seed = 0;

  bool operator==(const SeedTuple&) const = default;
};

// "P,N,F" with each seed in decimal or 0x-prefixed hex.
SeedTuple ParseSeedTuple(std::string_view text);
std::string SeedTupleToString(const SeedTuple& seeds);

enum class LogBlockKind { kCode, kData, kPool };

struct LogBlock {
  LogBlockKind kind = LogBlockKind::kCode;
  uint32_t index = 0;         // code and data blocks
  uint32_t total_instrs = 0;  // code: prologue + body + access + epilogue
  uint32_t body_instrs = 0;   // code
  bool epilogue = false;      // code
  uint32_t bytes = 0;         // data and pools

  uint64_t byte_size() const;
  bool operator==(const LogBlock&) const = default;
};

struct LogFunction {
  std::string identifier;
  std::string name;
  uint32_t alignment = 4;
  uint32_t local_size = 0;
  uint32_t saved_count = 0;
  bool has_fp = false;
  std::vector<LogBlock> blocks;  // in placement order

  uint64_t byte_size() const;
  bool operator==(const LogFunction&) const = default;
};

struct OpportunityLog {
  std::string module_id;
  uint64_t base_address = 0;
  bool default_padding = true;
  bool sp_fp_opt = false;
  std::vector<LogFunction> functions;  // link order of the build

  bool operator==(const OpportunityLog&) const = default;
};

// Log describing `layout` of `model` (functions in layout order).
OpportunityLog MakeOpportunityLog(const ProgramModel& model,
                                  const LayoutResult& layout,
                                  bool default_padding);

std::string EmitOpportunityLog(const OpportunityLog& log);
// Throws Error(kParse).
OpportunityLog ParseOpportunityLog(std::string_view text);

struct NopDecision {
  size_t function = 0;  // model index
  uint32_t block = 0;
  std::vector<uint32_t> positions;

  bool operator==(const NopDecision&) const = default;
};

struct DecisionLog {
  SeedTuple seeds;
  OpportunityLog layout_log;        // of the diversified build
  std::vector<size_t> order;        // model indices in image order
  std::vector<uint32_t> padding;    // per model function
  std::vector<NopDecision> nops;    // blocks that received NOPs
  std::vector<std::pair<size_t, uint32_t>> phantoms;  // (function, block)

  bool operator==(const DecisionLog&) const = default;
};

std::string EmitDecisionLog(const DecisionLog& log, const ProgramModel& model);

}  // namespace deltapad

#endif  // DELTAPAD_OPPLOG_H_
