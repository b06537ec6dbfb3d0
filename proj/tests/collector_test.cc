#include "deltapad/collector.h"

#include <gtest/gtest.h>

#include "deltapad/corpus.h"
#include "deltapad/error.h"
#include "deltapad/replicate.h"
#include "support/models.h"
#include "support/oracles.h"

namespace deltapad {
namespace {

using models::Code;
using models::Function;

BlockModel Calling(BlockModel b, uint32_t source_index, const std::string& callee) {
  b.calls.push_back(CallSite{source_index, callee});
  return b;
}

// main -> mid -> leaf with distinct line ranges per function.
ProgramModel ThreeDeep(bool fp) {
  auto saved = [fp](std::vector<std::string> regs) {
    if (fp) regs.insert(regs.end() - 1, "r11");
    return regs;
  };
  return models::Program({
      Function("main", {Calling(Code(0, 5, 100), 2, "mid"), Code(1, 3, 110)},
               saved({"r4", "lr"}), 16, fp),
      Function("mid", {Code(0, 4, 200), Calling(Code(1, 6, 210), 3, "leaf")},
               saved({"r5", "r6", "lr"}), 40, fp),
      Function("leaf", {Code(0, 7, 300)}, fp ? std::vector<std::string>{"r11", "lr"}
                                              : std::vector<std::string>{},
               0, fp),
  });
}

const std::vector<CrashSite> kChain = {{"main", 0, 2}, {"mid", 1, 3}, {"leaf", 0, 5}};

ReplicationOptions Options(const SeedTuple& s) {
  BuildOptions b;
  return ReplicationOptions{s, b.nop_probability, b.schemes};
}

TEST(ChainTest, ParseAndFormat) {
  const std::vector<CrashSite> c = ParseChain("main:0:2,mid:1:3,leaf:0:5");
  EXPECT_EQ(c, kChain);
  EXPECT_EQ(FormatChain(c), "main:0:2,mid:1:3,leaf:0:5");
  EXPECT_THROW(ParseChain(""), Error);
  EXPECT_THROW(ParseChain("main:0"), Error);
  EXPECT_THROW(ParseChain("main:x:1"), Error);
}

TEST(ChainTest, RandomChainsFollowCalls) {
  const ProgramModel m = GenerateProgram(77, "rc", SizeClass::kSmall);
  const DefaultBuild d = BuildDefault(m, BuildOptions{});
  for (uint64_t s = 0; s < 50; ++s) {
    const std::vector<CrashSite> chain = RandomChain(m, s, 6);
    ASSERT_FALSE(chain.empty());
    EXPECT_LE(chain.size(), 6u);
    EXPECT_NO_THROW(SimulateCrash(d.layout, d.model, chain)) << FormatChain(chain);
    EXPECT_EQ(RandomChain(m, s, 6), chain);
  }
}

TEST(SimulateCrashTest, SingleFrame) {
  const ProgramModel m = ThreeDeep(false);
  const DefaultBuild d = BuildDefault(m, BuildOptions{});
  const MinidumpLite dump = SimulateCrash(d.layout, d.model, {{"leaf", 0, 0}});
  EXPECT_EQ(dump.module_base, kModuleLoadBase);
  EXPECT_EQ(dump.registers.at("lr"), 0u);
  const UnwindResult u = Unwind(dump, d.layout.symfile);
  ASSERT_EQ(u.frames.size(), 1u);
  EXPECT_EQ(u.stop, UnwindStop::kEndOfStack);
  EXPECT_EQ(Symbolize(u, d.layout.symfile).ToString(),
            "#0 leaf src/a.c:300\nstop: end-of-stack\n");
}

class ThreeDeepTest : public ::testing::TestWithParam<bool> {};

TEST_P(ThreeDeepTest, ReturnAddressesMatchPlacement) {
  const ProgramModel m = ThreeDeep(GetParam());
  for (uint64_t s = 0; s < 10; ++s) {
    const DiversifiedBuild v = BuildDiversified(m, {s, s + 100, s + 200}, BuildOptions{});
    const MinidumpLite dump = SimulateCrash(v.layout, v.model, kChain);
    const UnwindResult u = Unwind(dump, v.layout.symfile);
    ASSERT_EQ(u.frames.size(), 3u);
    EXPECT_EQ(u.stop, UnwindStop::kEndOfStack);
    const std::vector<uint64_t> want = oracle::ExpectedReturnAddresses(v.layout, v.model, kChain);
    ASSERT_EQ(want.size(), 2u);
    EXPECT_EQ(u.frames[1].pc, want[0]);
    EXPECT_EQ(u.frames[2].pc, want[1]);
    EXPECT_EQ(Symbolize(u, v.layout.symfile).ToString(),
              "#0 leaf src/a.c:305\n#1 mid src/a.c:213\n#2 main src/a.c:102\n"
              "stop: end-of-stack\n");
  }
}

TEST_P(ThreeDeepTest, StackHoldsEveryFrame) {
  const ProgramModel m = ThreeDeep(GetParam());
  const DefaultBuild d = BuildDefault(m, BuildOptions{});
  const MinidumpLite dump = SimulateCrash(d.layout, d.model, kChain);
  uint64_t want = 0;
  for (const FunctionModel& f : d.model.functions) {
    want += f.frame.saved_bytes() + f.frame.total_alloc();
  }
  EXPECT_EQ(dump.stack.bytes.size(), want);
  EXPECT_EQ(dump.stack.base_address + want, kStackTop);
  EXPECT_EQ(dump.registers.at("sp"), dump.stack.base_address);
}

TEST_P(ThreeDeepTest, CalleeSavedRegistersAreRecovered) {
  const ProgramModel m = ThreeDeep(GetParam());
  const DefaultBuild d = BuildDefault(m, BuildOptions{});
  const UnwindResult u = Unwind(SimulateCrash(d.layout, d.model, kChain), d.layout.symfile);
  ASSERT_EQ(u.frames.size(), 3u);
  // Registers come back from the callee's push: mid saved main's r5 and r6
  // before scribbling them.
  EXPECT_EQ(u.frames[2].recovered.at("r5"), 0x5a000005u);
  EXPECT_EQ(u.frames[2].recovered.at("r6"), 0x5a000006u);
  EXPECT_EQ(u.frames[2].recovered.count("r4"), 0u);
}

INSTANTIATE_TEST_SUITE_P(FramePointer, ThreeDeepTest, ::testing::Bool());

TEST(SimulateCrashTest, HarnessErrors) {
  const ProgramModel m = ThreeDeep(false);
  const DefaultBuild d = BuildDefault(m, BuildOptions{});
  auto kind = [&](const std::vector<CrashSite>& c) {
    try {
      SimulateCrash(d.layout, d.model, c);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::kInput;
  };
  EXPECT_EQ(kind({}), ErrorKind::kHarness);
  EXPECT_EQ(kind({{"nope", 0, 0}}), ErrorKind::kHarness);
  EXPECT_EQ(kind({{"leaf", 1, 0}}), ErrorKind::kHarness);
  EXPECT_EQ(kind({{"leaf", 0, 7}}), ErrorKind::kHarness);
  EXPECT_EQ(kind({{"main", 0, 1}, {"mid", 0, 0}}), ErrorKind::kHarness);
}

TEST(ReportTest, TraceIsTheSameInEveryVersion) {
  for (const ProgramModel& m : GenerateCorpus(0xc0, 3, SizeClass::kSmall)) {
    const DefaultBuild d = BuildDefault(m, BuildOptions{});
    for (uint64_t c = 0; c < 5; ++c) {
      const std::vector<CrashSite> chain = RandomChain(m, c, 6);
      const std::string want =
          Symbolize(Unwind(SimulateCrash(d.layout, d.model, chain), d.layout.symfile),
                    d.layout.symfile)
              .ToString();
      for (uint64_t s = 1; s <= 6; ++s) {
        const SeedTuple seeds{s * 11, s * 13, s * 17};
        const DiversifiedBuild v = BuildDiversified(m, seeds, BuildOptions{});
        const Bytes dd =
            Pack(MakeDeltaData(d.layout.symfile, d.log, v.layout.symfile, Options(seeds)));
        const MinidumpLite dump = SimulateCrash(v.layout, v.model, chain);
        EXPECT_EQ(Report(dump, dd, d.layout.symfile, d.log).ToString(), want)
            << m.module_name << " " << FormatChain(chain);
        EXPECT_EQ(Reconstruct(dd, d.layout.symfile, d.log), v.layout.symfile);
      }
    }
  }
}

class ReportErrorTest : public ::testing::Test {
 protected:
  void SetUp() override {
    d_ = BuildDefault(model_, BuildOptions{});
    v_ = BuildDiversified(model_, seeds_, BuildOptions{});
    dd_ = MakeDeltaData(d_.layout.symfile, d_.log, v_.layout.symfile, Options(seeds_));
    dump_ = SimulateCrash(v_.layout, v_.model, kChain);
  }
  ErrorKind ReportError(const MinidumpLite& dump, const Bytes& bytes,
                        const std::optional<Bytes>& key) {
    try {
      Report(dump, bytes, d_.layout.symfile, d_.log, key);
    } catch (const Error& e) {
      return e.kind();
    }
    ADD_FAILURE() << "reported";
    return ErrorKind::kInput;
  }

  ProgramModel model_ = ThreeDeep(true);
  SeedTuple seeds_{3, 4, 5};
  DefaultBuild d_;
  DiversifiedBuild v_;
  DeltaData dd_;
  MinidumpLite dump_;
  Bytes key_ = ParseKey("6b6579");
};

TEST_F(ReportErrorTest, TamperedDeltaDataFailsAuthentication) {
  Bytes b = Pack(dd_, key_);
  EXPECT_NO_THROW(Report(dump_, b, d_.layout.symfile, d_.log, key_));
  b[kDeltaHeaderBytes + 1] ^= 0x40;
  EXPECT_EQ(ReportError(dump_, b, key_), ErrorKind::kAuth);
}

TEST_F(ReportErrorTest, ForeignDumpIsAModuleMismatch) {
  MinidumpLite other = dump_;
  other.module_id = "Linux arm 0 someone_else";
  EXPECT_EQ(ReportError(other, Pack(dd_), std::nullopt), ErrorKind::kModuleMismatch);
}

TEST_F(ReportErrorTest, PatchThatDoesNotFitIsCorrupt) {
  DeltaData bad = dd_;
  bad.patch.ops = {PatchOp{PatchOpKind::kKeep, 1, 0, {}}};
  EXPECT_EQ(ReportError(dump_, Pack(bad), std::nullopt), ErrorKind::kPatchCorrupt);
}

}  // namespace
}  // namespace deltapad
