// Corpus-level evaluation: artifact sizes, Δdata sizes per diversification
// scheme, reconstruction exactness and function-size-delta histograms.

#ifndef DELTAPAD_METRICS_H_
#define DELTAPAD_METRICS_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "deltapad/deltadata.h"
#include "deltapad/diversify.h"
#include "deltapad/opplog.h"
#include "deltapad/progmodel.h"

namespace deltapad {

// A: padding only, B: NOPs only, C: shuffling only, D: all three.
enum class SchemeId { kA = 0, kB = 1, kC = 2, kD = 3 };
inline constexpr size_t kSchemeCount = 4;

Schemes SchemesFor(SchemeId id);
char SchemeLetter(SchemeId id);

struct MetricsOptions {
  BuildOptions build;  // `schemes` is overridden per run
  std::vector<SchemeId> schemes = {SchemeId::kA, SchemeId::kB, SchemeId::kC,
                                   SchemeId::kD};
  std::optional<Bytes> key;
  bool include_timings = false;  // in ToString()
};

struct SchemeStats {
  size_t runs = 0;
  uint64_t packed_sum = 0;
  uint64_t packed_max = 0;
  uint64_t payload_max = 0;   // patch payload bytes
  size_t exact = 0;           // byte-exact reconstructions
  uint64_t div_sym_min = UINT64_MAX;
  uint64_t div_sym_sum = 0;
  size_t functions = 0;       // over all runs
  size_t functions_replicated_exactly = 0;

  double packed_mean() const {
    return runs ? static_cast<double>(packed_sum) / static_cast<double>(runs) : 0.0;
  }
  void Merge(const SchemeStats& other);
};

struct ProgramMetrics {
  std::string name;
  size_t functions = 0;
  uint64_t default_sym_bytes = 0;
  uint64_t opplog_bytes = 0;
  uint64_t opplog_compressed_bytes = 0;
  std::array<SchemeStats, kSchemeCount> schemes;
};

// Occurrences of each function-size delta in bytes.
struct Histogram {
  std::map<int64_t, uint64_t> counts;

  uint64_t total() const;
  double zero_mass() const;     // fraction of samples equal to 0
  double mean_abs() const;
  void Add(int64_t delta) { ++counts[delta]; }
};

struct SizeHistograms {
  Histogram default_padding_on;   // base padding 8, sp_fp_opt off
  Histogram default_padding_off;  // base padding 0, sp_fp_opt off
  Histogram sp_fp_opt_on;         // base padding 8, sp_fp_opt on
};

// Adds, for every function and every one of the 32 padding amounts, the
// function's byte size at that amount minus its size at the base padding.
void AccumulateSizeHistograms(const ProgramModel& model, SizeHistograms* h);

struct Timings {
  double delta_ms = 0;        // replicate + diff + pack, summed
  double reconstruct_ms = 0;  // unpack + replicate + apply, summed
};

struct CorpusMetrics {
  std::vector<ProgramMetrics> programs;
  std::array<SchemeStats, kSchemeCount> aggregate;
  SizeHistograms histograms;
  Timings timings;
  size_t seed_tuples = 0;
  std::vector<SchemeId> schemes_run;

  std::string ToString(bool include_timings) const;
};

CorpusMetrics ComputeMetrics(const std::vector<ProgramModel>& corpus,
                             const std::vector<SeedTuple>& seeds,
                             const MetricsOptions& options);

// `count` seed tuples drawn from Prng(master).
std::vector<SeedTuple> DeriveSeedTuples(uint64_t master, size_t count);

// One SeedTuple per non-empty, non-comment line.
std::vector<SeedTuple> ParseSeedsFile(std::string_view text);

}  // namespace deltapad

#endif  // DELTAPAD_METRICS_H_
