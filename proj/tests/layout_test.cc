#include "deltapad/layout.h"

#include <gtest/gtest.h>

#include "deltapad/corpus.h"
#include "deltapad/diversify.h"
#include "deltapad/error.h"
#include "support/models.h"
#include "support/oracles.h"

namespace deltapad {
namespace {

using models::Code;
using models::Data;
using models::Function;
using models::Program;

LayoutOptions AtZero() {
  LayoutOptions o;
  o.base_address = 0;
  return o;
}

ErrorKind LayoutError(const ProgramModel& m, const std::vector<size_t>& order) {
  try {
    Layout(m, order, AtZero());
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "layout succeeded";
  return ErrorKind::kInput;
}

TEST(LayoutTest, MinimalFunction) {
  const ProgramModel m = Program({Function("f", {Code(0, 3)})});
  const LayoutResult r = Layout(m, {0}, AtZero());
  ASSERT_EQ(r.symfile.funcs.size(), 1u);
  EXPECT_EQ(r.symfile.funcs[0].address, 0u);
  EXPECT_EQ(r.symfile.funcs[0].size, 0xcu);
  ASSERT_EQ(r.symfile.cfi_regions.size(), 1u);
  EXPECT_EQ(r.symfile.cfi_regions[0].init_rules.ToString(), ".cfa: sp 0 + .ra: lr");
  EXPECT_TRUE(r.symfile.cfi_regions[0].deltas.empty());
  EXPECT_EQ(r.symfile.funcs[0].lines.size(), 3u);
  EXPECT_EQ(r.symfile.funcs[0].lines[2], (LineRecord{8, 4, 12, 1}));
}

TEST(LayoutTest, PushAndAllocationDeltas) {
  const ProgramModel m = Program(
      {Function("function2", {Code(0, 20), Code(1, 5)}, {"r4", "r5", "r6", "r7", "lr"}, 884)});
  const LayoutResult r = Layout(m, {0}, AtZero());
  const CfiInitRecord& c = r.symfile.cfi_regions[0];
  ASSERT_GE(c.deltas.size(), 3u);
  EXPECT_EQ(c.deltas[0].address, 4u);
  EXPECT_EQ(c.deltas[0].rules.ToString(),
            ".cfa: sp 20 + .ra: .cfa -4 + ^ r4: .cfa -20 + ^ r5: .cfa -16 + ^ "
            "r6: .cfa -12 + ^ r7: .cfa -8 + ^");
  EXPECT_EQ(c.deltas[1].address, 8u);
  EXPECT_EQ(c.deltas[1].rules.ToString(), ".cfa: sp 904 +");
  // Block 0: push, one sub, 20 body. Block 1: 5 body, one add, pop.
  const PlacedFunction& pf = r.functions[0];
  EXPECT_EQ(pf.block_shape[0].total(), 22u);
  EXPECT_EQ(pf.block_shape[1].total(), 7u);
  EXPECT_EQ(pf.size, 4u * 29);
  EXPECT_EQ(c.deltas[2].address, pf.size - 4);
  EXPECT_EQ(c.deltas[2].rules.ToString(), ".cfa: sp 20 +");
}

TEST(LayoutTest, FramePointerFunctionsUseR11) {
  const ProgramModel m = Program(
      {Function("f", {Code(0, 4)}, {"r4", "r11", "lr"}, 64, /*fp=*/true)});
  const CfiInitRecord c = Layout(m, {0}, AtZero()).symfile.cfi_regions[0];
  ASSERT_EQ(c.deltas.size(), 2u);
  EXPECT_EQ(c.deltas[1].address, 8u);
  EXPECT_EQ(c.deltas[1].rules.ToString(), ".cfa: r11 4 +");
}

TEST(LayoutTest, LargeAllocationTakesTwoInstructions) {
  const ProgramModel m = Program({Function("f", {Code(0, 2)}, {"lr"}, 0x3ff0)});
  const LayoutResult r = Layout(m, {0}, AtZero());
  EXPECT_EQ(r.functions[0].alloc_instrs, 2u);
  // push + 2 sub + 2 body + 2 add + pop
  EXPECT_EQ(r.functions[0].size, 4u * 8);
  EXPECT_EQ(r.symfile.cfi_regions[0].deltas[1].address, 12u);
  EXPECT_EQ(r.symfile.cfi_regions[0].deltas[1].rules.ToString(), ".cfa: sp 16372 +");
}

// Block 0 references a constant; the greedy rule defers the pool while the
// next block plus the pool still fits within reach of the reference.
FunctionModel PoolFunction(uint32_t middle_nops) {
  BlockModel b1 = Code(1, 500 + middle_nops);
  for (uint32_t k = 0; k < middle_nops; ++k) b1.nop_positions.push_back(k);
  std::vector<BlockModel> blocks = {Code(0, 1), b1, Code(2, 517), Code(3, 10)};
  blocks[0].consts = {0x12345678};
  return Function("pooled", blocks);
}

TEST(LayoutTest, PoolSitsBeforeReachLimit) {
  const ProgramModel m = Program({PoolFunction(0)});
  const LayoutResult r = Layout(m, {0}, AtZero());
  const PlacedFunction& pf = r.functions[0];
  ASSERT_EQ(pf.pools.size(), 1u);
  EXPECT_EQ(pf.pools[0].after_block_index, 2u);
  EXPECT_EQ(pf.pools[0].constants, (std::vector<uint32_t>{0x12345678}));
  EXPECT_EQ(oracle::CheckPoolReach(r, m), "");
  EXPECT_EQ(oracle::CheckLineCoverage(r, m), "");
}

TEST(LayoutTest, NopsMovePoolEarlier) {
  const ProgramModel m = Program({PoolFunction(20)});
  const LayoutResult r = Layout(m, {0}, AtZero());
  const PlacedFunction& pf = r.functions[0];
  ASSERT_EQ(pf.pools.size(), 1u);
  EXPECT_EQ(pf.pools[0].after_block_index, 1u);
  EXPECT_EQ(oracle::CheckPoolReach(r, m), "");
}

TEST(LayoutTest, PendingConstantsFlushAfterLastBlock) {
  std::vector<BlockModel> blocks = {Code(0, 2), Code(1, 2)};
  blocks[1].consts = {7, 9, 7};
  const ProgramModel m = Program({Function("f", blocks)});
  const LayoutResult r = Layout(m, {0}, AtZero());
  ASSERT_EQ(r.functions[0].pools.size(), 1u);
  EXPECT_EQ(r.functions[0].pools[0].constants, (std::vector<uint32_t>{7, 9}));
  EXPECT_EQ(r.functions[0].size, 4u * 4 + 8);
  EXPECT_EQ(r.symfile.funcs[0].size, r.functions[0].size);
}

TEST(LayoutTest, UnreachablePoolIsALayoutError) {
  std::vector<BlockModel> blocks = {Code(0, 1100)};
  blocks[0].consts = {1};
  EXPECT_EQ(LayoutError(Program({Function("f", blocks)}), {0}), ErrorKind::kLayout);
}

TEST(LayoutTest, OrderMustBeAPermutation) {
  const ProgramModel m = Program({Function("a", {Code(0, 2)}), Function("b", {Code(0, 2)})});
  EXPECT_EQ(LayoutError(m, {0, 0}), ErrorKind::kInput);
  EXPECT_EQ(LayoutError(m, {0}), ErrorKind::kInput);
  EXPECT_EQ(LayoutError(m, {0, 2}), ErrorKind::kInput);
}

TEST(LayoutTest, DataBlocksHaveNoLines) {
  const ProgramModel m =
      Program({Function("f", {Code(0, 2), Data(1, 12), Code(2, 3)}, {"r4", "lr"}, 16)});
  const LayoutResult r = Layout(m, {0}, AtZero());
  EXPECT_EQ(oracle::CheckLineCoverage(r, m), "");
  EXPECT_EQ(r.functions[0].regions[1].kind, RegionKind::kData);
}

TEST(LayoutTest, SizeDoesNotDependOnAddress) {
  for (const ProgramModel& m : GenerateCorpus(3, 3, SizeClass::kSmall)) {
    const LayoutResult fwd = Layout(m, IdentityOrder(m.functions.size()), LayoutOptions{});
    std::vector<size_t> rev = IdentityOrder(m.functions.size());
    std::reverse(rev.begin(), rev.end());
    const LayoutResult back = Layout(m, rev, LayoutOptions{});
    for (size_t i = 0; i < m.functions.size(); ++i) {
      const uint64_t want = FunctionByteSize(m.functions[i], LayoutOptions{});
      EXPECT_EQ(fwd.ForModelIndex(i).size, want);
      EXPECT_EQ(back.ForModelIndex(i).size, want);
    }
  }
}

TEST(LayoutTest, CorpusLayoutsSatisfyCoverageAndReach) {
  for (const ProgramModel& m : GenerateCorpus(21, 6, SizeClass::kSmall)) {
    const DefaultBuild d = BuildDefault(m, BuildOptions{});
    EXPECT_EQ(oracle::CheckLineCoverage(d.layout, d.model), "") << m.module_name;
    EXPECT_EQ(oracle::CheckPoolReach(d.layout, d.model), "") << m.module_name;
    const DiversifiedBuild v = BuildDiversified(m, SeedTuple{1, 2, 3}, BuildOptions{});
    EXPECT_EQ(oracle::CheckLineCoverage(v.layout, v.model), "") << m.module_name;
    EXPECT_EQ(oracle::CheckPoolReach(v.layout, v.model), "") << m.module_name;
  }
}

TEST(LayoutTest, Deterministic) {
  const ProgramModel m = GenerateProgram(99, "det", SizeClass::kSmall);
  const std::vector<size_t> order = ShuffleOrder(m.functions.size(), 5);
  EXPECT_EQ(Layout(m, order, LayoutOptions{}), Layout(m, order, LayoutOptions{}));
  EXPECT_EQ(RenderText(m, Layout(m, order, LayoutOptions{})),
            RenderText(m, Layout(m, order, LayoutOptions{})));
}

TEST(RenderTextTest, NopWordsSitAtNopPositions) {
  BlockModel b = Code(0, 4);
  b.nop_positions = {1};
  const ProgramModel m = Program({Function("f", {b})});
  const LayoutResult r = Layout(m, {0}, AtZero());
  const std::vector<uint8_t> text = RenderText(m, r);
  ASSERT_EQ(text.size(), 16u);
  const uint64_t at = BodyAddress(r.functions[0], 0, 1);
  uint32_t w = 0;
  for (int i = 0; i < 4; ++i) w |= uint32_t{text[at + i]} << (8 * i);
  EXPECT_EQ(w, kNopWord);
}

TEST(RenderTextTest, CoversWholeImage) {
  const ProgramModel m = GenerateProgram(5, "img", SizeClass::kSmall);
  const LayoutResult r = Layout(m, IdentityOrder(m.functions.size()), LayoutOptions{});
  EXPECT_EQ(RenderText(m, r).size(), r.functions.back().end() - r.functions.front().address);
}

TEST(BodyAddressTest, SkipsPrologueAndRejectsOutOfRange) {
  const ProgramModel m = Program({Function("f", {Code(0, 3)}, {"r4", "lr"}, 8)});
  const LayoutResult r = Layout(m, {0}, AtZero());
  EXPECT_EQ(BodyAddress(r.functions[0], 0, 0), 8u);
  EXPECT_THROW(BodyAddress(r.functions[0], 0, 3), Error);
  EXPECT_THROW(BodyAddress(r.functions[0], 1, 0), Error);
}

}  // namespace
}  // namespace deltapad
