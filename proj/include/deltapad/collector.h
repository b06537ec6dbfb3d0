// Crash pipeline: client-side crash simulation and Δdata production, and
// the server-side reconstruction that turns a dump into a source-level
// stack trace.

#ifndef DELTAPAD_COLLECTOR_H_
#define DELTAPAD_COLLECTOR_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "deltapad/cfi.h"
#include "deltapad/deltadata.h"
#include "deltapad/layout.h"
#include "deltapad/minidump.h"
#include "deltapad/opplog.h"
#include "deltapad/progmodel.h"
#include "deltapad/replicate.h"
#include "deltapad/symfile.h"

namespace deltapad {

// Load address of the module in simulated processes.
inline constexpr uint32_t kModuleLoadBase = 0x00400000;
// Highest stack address; the outermost frame's CFA.
inline constexpr uint32_t kStackTop = 0xbf000000;

// A source-level program location: the `source_index`-th instruction of
// the block as written in the model, NOPs not counted. Identical sites in
// differently diversified images denote the same logical location.
struct CrashSite {
  std::string function;
  uint32_t block = 0;
  uint32_t source_index = 0;

  bool operator==(const CrashSite&) const = default;
};

// "fn:block:index,fn:block:index,..." from outermost caller to crash site.
std::vector<CrashSite> ParseChain(std::string_view text);
std::string FormatChain(const std::vector<CrashSite>& chain);

// A random chain that follows call edges of `model` and ends at a random
// body instruction. Deterministic in `seed`.
std::vector<CrashSite> RandomChain(const ProgramModel& model, uint64_t seed,
                                   size_t max_depth);

// Plants the stack a real execution of `chain` would leave behind. The
// model must be the one `layout` was computed from. Each non-final site
// must be a call to the next site's function. Throws Error(kHarness).
MinidumpLite SimulateCrash(const LayoutResult& layout, const ProgramModel& model,
                           const std::vector<CrashSite>& chain);

struct TraceFrame {
  std::string function;  // "??" outside every FUNC
  std::string file;      // "??" without a line record
  int64_t line = 0;
  uint64_t pc = 0;       // module-relative; not part of the text form

  bool operator==(const TraceFrame&) const = default;
};

struct StackTrace {
  std::vector<TraceFrame> frames;
  UnwindStop stop = UnwindStop::kEndOfStack;

  // Source-level text: identical for the same logical crash in any
  // diversified version.
  std::string ToString() const;
  bool operator==(const StackTrace&) const = default;
};

StackTrace Symbolize(const UnwindResult& unwound, const SymbolFile& sf);

// Replicates, diffs against `truth` and bundles the result.
DeltaData MakeDeltaData(const SymbolFile& default_sf, const OpportunityLog& log,
                        const SymbolFile& truth, const ReplicationOptions& options);

// Unpack, replicate, patch. Errors: kAuth, kPatchCorrupt, container errors,
// kReplicationInput.
SymbolFile Reconstruct(const Bytes& dd_bytes, const SymbolFile& default_sf,
                       const OpportunityLog& log,
                       const std::optional<Bytes>& key = std::nullopt);

// Reconstruct, unwind and symbolize. Throws Error(kModuleMismatch) when the
// dump does not belong to `default_sf`'s module.
StackTrace Report(const MinidumpLite& dump, const Bytes& dd_bytes,
                  const SymbolFile& default_sf, const OpportunityLog& log,
                  const std::optional<Bytes>& key = std::nullopt);

}  // namespace deltapad

#endif  // DELTAPAD_COLLECTOR_H_
