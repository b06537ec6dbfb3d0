// Server-side replay of diversification over a default symbol file.
//
// Only direct effects are modeled: the padding constants in CFI rules, the
// change in stack-allocation instruction counts, inserted NOPs and the new
// function order with alignment. Access-instruction changes, pool movement
// and anything else the backend does on its own are left for the patch.

#ifndef DELTAPAD_REPLICATE_H_
#define DELTAPAD_REPLICATE_H_

#include "deltapad/diversify.h"
#include "deltapad/opplog.h"
#include "deltapad/symfile.h"

namespace deltapad {

struct ReplicationOptions {
  SeedTuple seeds;
  NopProbability nop_probability;
  Schemes schemes;
};

// Throws Error(kReplicationInput) if `log` does not describe `default_sf`.
SymbolFile Replicate(const SymbolFile& default_sf, const OpportunityLog& log,
                     const ReplicationOptions& options);

}  // namespace deltapad

#endif  // DELTAPAD_REPLICATE_H_
