#include "deltapad/metrics.h"

#include <gtest/gtest.h>

#include <set>

#include "deltapad/corpus.h"
#include "deltapad/error.h"
#include "support/models.h"
#include "support/oracles.h"

namespace deltapad {
namespace {

class MetricsTest : public ::testing::Test {
 protected:
  std::vector<ProgramModel> corpus_ = GenerateCorpus(0x5eed, 3, SizeClass::kSmall);
  std::vector<SeedTuple> seeds_ = DeriveSeedTuples(0xacce97, 4);
};

TEST_F(MetricsTest, Deterministic) {
  const MetricsOptions o;
  EXPECT_EQ(ComputeMetrics(corpus_, seeds_, o).ToString(false),
            ComputeMetrics(corpus_, seeds_, o).ToString(false));
}

TEST_F(MetricsTest, EveryRunReconstructsExactly) {
  const CorpusMetrics m = ComputeMetrics(corpus_, seeds_, MetricsOptions{});
  for (size_t s = 0; s < kSchemeCount; ++s) {
    EXPECT_EQ(m.aggregate[s].runs, corpus_.size() * seeds_.size());
    EXPECT_EQ(m.aggregate[s].exact, m.aggregate[s].runs);
  }
  ASSERT_EQ(m.programs.size(), corpus_.size());
  for (const ProgramMetrics& p : m.programs) {
    EXPECT_GT(p.default_sym_bytes, 0u);
    EXPECT_LT(p.opplog_compressed_bytes, p.opplog_bytes);
  }
}

TEST_F(MetricsTest, ShufflingAloneNeedsNoPayload) {
  MetricsOptions o;
  o.schemes = {SchemeId::kC};
  const CorpusMetrics m = ComputeMetrics(corpus_, seeds_, o);
  const SchemeStats& c = m.aggregate[static_cast<size_t>(SchemeId::kC)];
  EXPECT_EQ(c.runs, corpus_.size() * seeds_.size());
  EXPECT_EQ(c.payload_max, 0u);
  EXPECT_EQ(c.functions_replicated_exactly, c.functions);
  EXPECT_EQ(m.aggregate[static_cast<size_t>(SchemeId::kA)].runs, 0u);
}

TEST_F(MetricsTest, KeyAddsTheTagToEveryRun) {
  MetricsOptions plain, keyed;
  plain.schemes = keyed.schemes = {SchemeId::kD};
  keyed.key = ParseKey("00112233");
  const size_t d = static_cast<size_t>(SchemeId::kD);
  const SchemeStats a = ComputeMetrics(corpus_, seeds_, plain).aggregate[d];
  const SchemeStats b = ComputeMetrics(corpus_, seeds_, keyed).aggregate[d];
  EXPECT_EQ(b.packed_sum, a.packed_sum + 32 * a.runs);
}

TEST(HistogramTest, DefaultPaddingConcentratesAtZero) {
  SizeHistograms h;
  for (const ProgramModel& m : GenerateCorpus(2, 5, SizeClass::kSmall)) {
    AccumulateSizeHistograms(m, &h);
  }
  EXPECT_EQ(h.default_padding_on.total(), h.default_padding_off.total());
  EXPECT_GT(h.default_padding_on.zero_mass(), h.default_padding_off.zero_mass());
  EXPECT_LT(h.default_padding_on.mean_abs(), h.default_padding_off.mean_abs());
}

TEST(HistogramTest, HandComputedFunction) {
  // local 4088 with padding 8 allocates 4096 in one instruction; every
  // amount whose total is not encodable needs a second one in both the
  // prologue and the epilogue.
  const ProgramModel m = models::Program(
      {models::Function("f", {models::Code(0, 4)}, {"r4", "lr"}, 4088)});
  uint64_t one_instr = 0;
  for (uint32_t pad = 8; pad <= 256; pad += 8) one_instr += oracle::BruteEncodable(4088 + pad);
  SizeHistograms h;
  AccumulateSizeHistograms(m, &h);
  EXPECT_EQ(h.default_padding_on.total(), 32u);
  EXPECT_EQ(h.default_padding_on.counts.at(0), one_instr);
  EXPECT_EQ(h.default_padding_on.counts.at(8), 32 - one_instr);
}

TEST(HistogramTest, Statistics) {
  Histogram h;
  h.Add(0);
  h.Add(0);
  h.Add(8);
  h.Add(-8);
  EXPECT_EQ(h.total(), 4u);
  EXPECT_DOUBLE_EQ(h.zero_mass(), 0.5);
  EXPECT_DOUBLE_EQ(h.mean_abs(), 4.0);
  EXPECT_DOUBLE_EQ(Histogram{}.zero_mass(), 0.0);
}

TEST(SeedsTest, DerivedTuplesAreDistinctAndStable) {
  const std::vector<SeedTuple> a = DeriveSeedTuples(9, 30);
  EXPECT_EQ(a, DeriveSeedTuples(9, 30));
  std::set<uint64_t> pads;
  for (const SeedTuple& s : a) pads.insert(s.pad_seed);
  EXPECT_EQ(pads.size(), 30u);
  EXPECT_NE(DeriveSeedTuples(10, 1), DeriveSeedTuples(9, 1));
}

TEST(SeedsTest, ParseFileSkipsCommentsAndBlanks) {
  const std::vector<SeedTuple> s = ParseSeedsFile("# header\n1,2,3\n\n0x10,0x20,0x30\n");
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0], (SeedTuple{1, 2, 3}));
  EXPECT_EQ(s[1], (SeedTuple{16, 32, 48}));
  EXPECT_THROW(ParseSeedsFile("1,2\n"), Error);
}

TEST(SchemesTest, Letters) {
  EXPECT_EQ(SchemesFor(SchemeId::kA), (Schemes{true, false, false}));
  EXPECT_EQ(SchemesFor(SchemeId::kB), (Schemes{false, true, false}));
  EXPECT_EQ(SchemesFor(SchemeId::kC), (Schemes{false, false, true}));
  EXPECT_EQ(SchemesFor(SchemeId::kD), (Schemes{true, true, true}));
  EXPECT_EQ(SchemeLetter(SchemeId::kD), 'D');
}

}  // namespace
}  // namespace deltapad
