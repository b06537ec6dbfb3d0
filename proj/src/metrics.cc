#include "deltapad/metrics.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <unordered_map>

#include "deltapad/collector.h"
#include "deltapad/error.h"
#include "deltapad/layout.h"
#include "deltapad/prng.h"
#include "deltapad/replicate.h"
#include "text_util.h"

namespace deltapad {

Schemes SchemesFor(SchemeId id) {
  switch (id) {
    case SchemeId::kA: return Schemes{true, false, false};
    case SchemeId::kB: return Schemes{false, true, false};
    case SchemeId::kC: return Schemes{false, false, true};
    case SchemeId::kD: return Schemes{true, true, true};
  }
  return Schemes{};
}

char SchemeLetter(SchemeId id) { return static_cast<char>('A' + static_cast<int>(id)); }

void SchemeStats::Merge(const SchemeStats& o) {
  runs += o.runs;
  packed_sum += o.packed_sum;
  packed_max = std::max(packed_max, o.packed_max);
  payload_max = std::max(payload_max, o.payload_max);
  exact += o.exact;
  div_sym_min = std::min(div_sym_min, o.div_sym_min);
  div_sym_sum += o.div_sym_sum;
  functions += o.functions;
  functions_replicated_exactly += o.functions_replicated_exactly;
}

uint64_t Histogram::total() const {
  uint64_t n = 0;
  for (const auto& [d, c] : counts) n += c;
  return n;
}

double Histogram::zero_mass() const {
  const uint64_t n = total();
  auto it = counts.find(0);
  return n == 0 || it == counts.end() ? 0.0
                                      : static_cast<double>(it->second) / static_cast<double>(n);
}

double Histogram::mean_abs() const {
  const uint64_t n = total();
  if (n == 0) return 0.0;
  double sum = 0;
  for (const auto& [d, c] : counts) sum += std::fabs(static_cast<double>(d)) * static_cast<double>(c);
  return sum / static_cast<double>(n);
}

namespace {

uint64_t SizeWithPadding(FunctionModel fn, uint32_t padding, bool sp_fp_opt) {
  fn.frame.padding = padding;
  LayoutOptions options;
  options.sp_fp_opt = sp_fp_opt;
  return FunctionByteSize(fn, options);
}

// A function's FUNC and CFI records with addresses made relative to the
// function start, for comparisons that ignore where the function landed.
struct RelativeRecords {
  FuncRecord func;
  std::optional<CfiInitRecord> cfi;

  bool operator==(const RelativeRecords&) const = default;
};

std::unordered_map<std::string, RelativeRecords> ByName(const SymbolFile& sf) {
  std::unordered_map<uint64_t, const CfiInitRecord*> cfi_at;
  for (const CfiInitRecord& c : sf.cfi_regions) cfi_at[c.address] = &c;
  std::unordered_map<std::string, RelativeRecords> out;
  for (const FuncRecord& f : sf.funcs) {
    RelativeRecords r;
    r.func = f;
    r.func.address = 0;
    for (LineRecord& l : r.func.lines) l.address -= f.address;
    if (auto it = cfi_at.find(f.address); it != cfi_at.end()) {
      CfiInitRecord c = *it->second;
      c.address = 0;
      for (CfiDelta& d : c.deltas) d.address -= f.address;
      r.cfi = std::move(c);
    }
    out.emplace(f.name, std::move(r));
  }
  return out;
}

size_t FunctionsReplicatedExactly(const SymbolFile& approx, const SymbolFile& truth) {
  const auto a = ByName(approx);
  size_t exact = 0;
  for (const auto& [name, t] : ByName(truth)) {
    auto it = a.find(name);
    if (it != a.end() && it->second == t) ++exact;
  }
  return exact;
}

double MillisSince(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

std::string Fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

}  // namespace

void AccumulateSizeHistograms(const ProgramModel& model, SizeHistograms* h) {
  for (const FunctionModel& fn : model.functions) {
    const int64_t base_on = static_cast<int64_t>(SizeWithPadding(fn, kDefaultPadding, false));
    const int64_t base_off = static_cast<int64_t>(SizeWithPadding(fn, 0, false));
    const int64_t base_opt = static_cast<int64_t>(SizeWithPadding(fn, kDefaultPadding, true));
    for (uint32_t k = 0; k < kPaddingChoices; ++k) {
      const uint32_t pad = kDefaultPadding * (k + 1);
      const int64_t plain = static_cast<int64_t>(SizeWithPadding(fn, pad, false));
      h->default_padding_on.Add(plain - base_on);
      h->default_padding_off.Add(plain - base_off);
      h->sp_fp_opt_on.Add(static_cast<int64_t>(SizeWithPadding(fn, pad, true)) - base_opt);
    }
  }
}

CorpusMetrics ComputeMetrics(const std::vector<ProgramModel>& corpus,
                             const std::vector<SeedTuple>& seeds,
                             const MetricsOptions& options) {
  CorpusMetrics m;
  m.seed_tuples = seeds.size();
  m.schemes_run = options.schemes;
  for (const ProgramModel& model : corpus) {
    ProgramMetrics pm;
    pm.name = model.module_name;
    pm.functions = model.functions.size();
    const DefaultBuild base = BuildDefault(model, options.build);
    const std::string default_text = EmitSymbolFile(base.layout.symfile);
    const std::string log_text = EmitOpportunityLog(base.log);
    pm.default_sym_bytes = default_text.size();
    pm.opplog_bytes = log_text.size();
    pm.opplog_compressed_bytes = Deflate(log_text).size();
    AccumulateSizeHistograms(model, &m.histograms);

    for (const SchemeId id : options.schemes) {
      SchemeStats& st = pm.schemes[static_cast<size_t>(id)];
      BuildOptions bo = options.build;
      bo.schemes = SchemesFor(id);
      for (const SeedTuple& s : seeds) {
        const DiversifiedBuild div = BuildDiversified(model, s, bo);
        const std::string truth_text = EmitSymbolFile(div.layout.symfile);
        const ReplicationOptions ro{s, bo.nop_probability, bo.schemes};

        auto t0 = std::chrono::steady_clock::now();
        const SymbolFile approx = Replicate(base.layout.symfile, base.log, ro);
        DeltaData dd;
        dd.seeds = s;
        dd.nop_probability = bo.nop_probability;
        dd.schemes = bo.schemes;
        dd.patch = Diff(approx, div.layout.symfile);
        const Bytes packed = Pack(dd, options.key);
        m.timings.delta_ms += MillisSince(t0);

        t0 = std::chrono::steady_clock::now();
        const SymbolFile recon = Reconstruct(packed, base.layout.symfile, base.log, options.key);
        m.timings.reconstruct_ms += MillisSince(t0);

        ++st.runs;
        st.packed_sum += packed.size();
        st.packed_max = std::max<uint64_t>(st.packed_max, packed.size());
        st.payload_max = std::max<uint64_t>(st.payload_max, dd.patch.payload_bytes());
        if (EmitSymbolFile(recon) == truth_text) ++st.exact;
        st.div_sym_min = std::min<uint64_t>(st.div_sym_min, truth_text.size());
        st.div_sym_sum += truth_text.size();
        st.functions += model.functions.size();
        st.functions_replicated_exactly +=
            FunctionsReplicatedExactly(approx, div.layout.symfile);
      }
      m.aggregate[static_cast<size_t>(id)].Merge(st);
    }
    m.programs.push_back(std::move(pm));
  }
  return m;
}

std::string CorpusMetrics::ToString(bool include_timings) const {
  std::string out = "DELTAPAD METRICS\n";
  out += "programs " + std::to_string(programs.size()) + " seed_tuples " +
         std::to_string(seed_tuples) + "\n\n";
  out += "program functions default_sym opplog opplog_deflate";
  for (SchemeId id : schemes_run) {
    const char c = SchemeLetter(id);
    out += std::string(" ") + c + "_avg " + c + "_max " + c + "_payload_max";
  }
  out += "\n";
  for (const ProgramMetrics& p : programs) {
    out += p.name + " " + std::to_string(p.functions) + " " +
           std::to_string(p.default_sym_bytes) + " " + std::to_string(p.opplog_bytes) +
           " " + std::to_string(p.opplog_compressed_bytes);
    for (SchemeId id : schemes_run) {
      const SchemeStats& s = p.schemes[static_cast<size_t>(id)];
      out += " " + Fmt("%.1f", s.packed_mean()) + " " + std::to_string(s.packed_max) + " " +
             std::to_string(s.payload_max);
    }
    out += "\n";
  }
  out += "\nscheme runs exact packed_avg packed_max payload_max div_sym_avg "
         "functions_replicated_exactly\n";
  for (SchemeId id : schemes_run) {
    const SchemeStats& s = aggregate[static_cast<size_t>(id)];
    const double div_avg =
        s.runs ? static_cast<double>(s.div_sym_sum) / static_cast<double>(s.runs) : 0.0;
    const double rate = s.functions ? static_cast<double>(s.functions_replicated_exactly) /
                                          static_cast<double>(s.functions)
                                    : 0.0;
    out += std::string(1, SchemeLetter(id)) + " " + std::to_string(s.runs) + " " +
           std::to_string(s.exact) + " " + Fmt("%.1f", s.packed_mean()) + " " +
           std::to_string(s.packed_max) + " " + std::to_string(s.payload_max) + " " +
           Fmt("%.1f", div_avg) + " " + Fmt("%.4f", rate) + "\n";
  }
  auto hist = [&out](const char* name, const Histogram& h) {
    out += std::string("\nhistogram ") + name + " samples " + std::to_string(h.total()) +
           " zero_mass " + Fmt("%.4f", h.zero_mass()) + " mean_abs " +
           Fmt("%.3f", h.mean_abs()) + "\n";
    for (const auto& [delta, count] : h.counts) {
      out += "  " + std::to_string(delta) + " " + std::to_string(count) + "\n";
    }
  };
  hist("default_padding_on", histograms.default_padding_on);
  hist("default_padding_off", histograms.default_padding_off);
  hist("sp_fp_opt_on", histograms.sp_fp_opt_on);
  if (include_timings) {
    out += "\ntimings delta_ms " + Fmt("%.1f", timings.delta_ms) + " reconstruct_ms " +
           Fmt("%.1f", timings.reconstruct_ms) + "\n";
  }
  return out;
}

std::vector<SeedTuple> DeriveSeedTuples(uint64_t master, size_t count) {
  Prng rng(master);
  std::vector<SeedTuple> out(count);
  for (SeedTuple& s : out) {
    s.pad_seed = rng.Next();
    s.nop_seed = rng.Next();
    s.shuffle_seed = rng.Next();
  }
  return out;
}

std::vector<SeedTuple> ParseSeedsFile(std::string_view text) {
  std::vector<SeedTuple> out;
  for (std::string_view line : internal::SplitLines(text)) {
    const auto words = internal::SplitWords(line);
    if (words.empty() || words[0].front() == '#') continue;
    if (words.size() != 1) throw Error(ErrorKind::kInput, "one seed tuple per line");
    out.push_back(ParseSeedTuple(words[0]));
  }
  if (out.empty()) throw Error(ErrorKind::kInput, "seeds file holds no tuples");
  return out;
}

}  // namespace deltapad
