#include "deltapad/arm_imm.h"

#include <gtest/gtest.h>

#include "deltapad/prng.h"
#include "support/oracles.h"

namespace deltapad {
namespace {

TEST(ArmImmTest, QuotedOffsets) {
  EXPECT_FALSE(ArmImmEncodable(0x3ff0));
  EXPECT_TRUE(ArmImmEncodable(0x4000));
  EXPECT_TRUE(ArmImmEncodable(0xff));
  EXPECT_TRUE(ArmImmEncodable(0));
  EXPECT_TRUE(ArmImmEncodable(0xf000000f));  // wraps around bit 31
  EXPECT_FALSE(ArmImmEncodable(0x101));
  EXPECT_FALSE(ArmImmEncodable(0x1fe));  // needs an odd rotation
}

TEST(ArmImmTest, AgreesWithEnumerationOnRandomValues) {
  Prng rng(0xa11ce);
  const auto& all = oracle::AllEncodable();
  size_t mismatches = 0;
  for (int i = 0; i < 100000; ++i) {
    // Mix uniform values with encodable ones and their neighbours, since
    // uniform 32-bit draws are almost never encodable.
    uint32_t v = static_cast<uint32_t>(rng.Next());
    switch (i % 4) {
      case 1: v = all[rng.Below(all.size())]; break;
      case 2: v = all[rng.Below(all.size())] + static_cast<uint32_t>(rng.Below(9)) - 4; break;
      default: break;
    }
    if (ArmImmEncodable(v) != oracle::BruteEncodable(v)) ++mismatches;
  }
  EXPECT_EQ(mismatches, 0u);
}

TEST(ArmImmTest, EnumerationSizeMatchesTable) {
  size_t count = 0;
  for (uint32_t v : oracle::AllEncodable()) count += ArmImmEncodable(v) ? 1 : 0;
  EXPECT_EQ(count, oracle::AllEncodable().size());
  EXPECT_EQ(oracle::AllEncodable().size(), 3073u);
}

TEST(StackAllocTest, Examples) {
  EXPECT_EQ(StackAllocInstrs(0), 0u);
  EXPECT_EQ(StackAllocInstrs(0x4000), 1u);
  EXPECT_EQ(StackAllocInstrs(0x3ff0), 2u);
  EXPECT_EQ(StackAllocChunks(0x3ff0), (std::vector<uint32_t>{0x3fc0, 0x30}));
  EXPECT_EQ(StackAllocInstrs(884), 1u);
}

TEST(StackAllocTest, MatchesBruteForceGreedy) {
  for (uint32_t total = 0; total <= 0x20000; total += 4) {
    ASSERT_EQ(StackAllocChunks(total), oracle::BruteGreedyChunks(total)) << total;
  }
  Prng rng(4);
  for (int i = 0; i < 2000; ++i) {
    const uint32_t total = static_cast<uint32_t>(rng.Next()) & ~3u;
    ASSERT_EQ(StackAllocChunks(total), oracle::BruteGreedyChunks(total)) << total;
  }
}

FrameModel Frame(uint32_t local, uint32_t padding, uint32_t offset) {
  FrameModel f;
  f.local_size = local;
  f.padding = padding;
  f.accesses.push_back(StackAccess{0, offset, 1, 1});
  return f;
}

TEST(AccessTest, SmallOffsetCostsOne) {
  const FrameModel f = Frame(16, 0, 0);
  EXPECT_EQ(AccessCost(f, false, f.accesses[0], false), 1u);
  EXPECT_EQ(ChooseAccess(f, false, f.accesses[0], false).offset, 16u);
}

TEST(AccessTest, OffsetJustPastImmediateRange) {
  const FrameModel f = Frame(4096, 0, 0);
  EXPECT_EQ(ChooseAccess(f, false, f.accesses[0], false).offset, 4096u);
  EXPECT_EQ(AccessCost(f, false, f.accesses[0], false), 2u);
  const FrameModel g = Frame(4092, 0, 0);
  EXPECT_EQ(AccessCost(g, false, g.accesses[0], false), 1u);
}

TEST(AccessTest, OptimizationFlipsCostUnderPadding) {
  // FP offset 4096 + 4 is out of range either way; padding pushes the SP
  // offset from 4092 to 4100.
  const FrameModel unpadded = Frame(8188, 0, 4096);
  const FrameModel padded = Frame(8188, 8, 4096);
  const StackAccess& a = unpadded.accesses[0];
  EXPECT_EQ(ChooseAccess(unpadded, true, a, true).base, FrameBase::kSp);
  EXPECT_EQ(AccessCost(unpadded, true, a, true), 1u);
  EXPECT_EQ(AccessCost(padded, true, a, true), 2u);
  EXPECT_EQ(AccessCost(unpadded, true, a, false), 2u);
  EXPECT_EQ(AccessCost(padded, true, a, false), 2u);
  EXPECT_EQ(ChooseAccess(padded, true, a, false).base, FrameBase::kFp);
}

TEST(AccessTest, ExhaustiveBranchCheck) {
  // Every (local, padding, offset) on a grid, against the rule written out.
  for (uint32_t local = 0; local <= 9000; local += 500) {
    for (uint32_t pad = 0; pad <= 256; pad += 8) {
      for (uint32_t off = 0; off + 4 <= local; off += 252) {
        const FrameModel f = Frame(local, pad, off);
        const uint32_t sp_cost = local + pad - off <= 4095 ? 1 : 2;
        const uint32_t fp_cost = off + 4 <= 4095 ? 1 : 2;
        for (bool has_fp : {false, true}) {
          for (bool opt : {false, true}) {
            uint32_t want = has_fp ? fp_cost : sp_cost;
            if (has_fp && opt) want = std::min(sp_cost, fp_cost);
            ASSERT_EQ(AccessCost(f, has_fp, f.accesses[0], opt), want);
          }
        }
      }
    }
  }
}

TEST(AccessTest, TotalWeighsByCount) {
  FrameModel f = Frame(5000, 0, 0);
  f.accesses[0].count = 3;
  f.accesses.push_back(StackAccess{0, 4000, 2, 1});
  EXPECT_EQ(AccessInstrs(f, false, false), 3u * 2 + 2u * 1);
}

}  // namespace
}  // namespace deltapad
