#include "deltapad/cfi.h"

#include <gtest/gtest.h>

#include "deltapad/error.h"

namespace deltapad {
namespace {

RegisterState Regs(std::initializer_list<std::pair<const char*, uint32_t>> init) {
  RegisterState r;
  for (const auto& [k, v] : init) r[k] = v;
  return r;
}

void PutWord(StackSnapshot& s, uint32_t address, uint32_t word) {
  for (int i = 0; i < 4; ++i) {
    s.bytes[address - s.base_address + i] = static_cast<uint8_t>(word >> (8 * i));
  }
}

ErrorKind EvalError(const std::string& expr, const RegisterState& regs,
                    std::optional<uint32_t> cfa, const StackSnapshot& mem) {
  try {
    EvalPostfix(PostfixExpr::Parse(expr), regs, cfa, mem);
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << expr << " evaluated";
  return ErrorKind::kInput;
}

TEST(EvalPostfixTest, Addition) {
  EXPECT_EQ(EvalPostfix(PostfixExpr::Parse("sp 8 +"), Regs({{"sp", 0xbeff0000}}),
                        std::nullopt, {}),
            0xbeff0008u);
}

TEST(EvalPostfixTest, DereferencesPlantedWord) {
  StackSnapshot mem{0xbeff0000, std::vector<uint8_t>(32)};
  PutWord(mem, 0xbeff000c, 0x000015d0);
  EXPECT_EQ(EvalPostfix(PostfixExpr::Parse(".cfa -4 + ^"), {}, 0xbeff0010u, mem), 0x15d0u);
}

TEST(EvalPostfixTest, FramePointerRule) {
  EXPECT_EQ(EvalPostfix(PostfixExpr::Parse("r11 4 +"), Regs({{"r11", 0xbefffe00}}),
                        std::nullopt, {}),
            0xbefffe04u);
}

TEST(EvalPostfixTest, WrapsModulo32Bits) {
  EXPECT_EQ(EvalPostfix(PostfixExpr::Parse("sp 8 -"), Regs({{"sp", 4}}), std::nullopt, {}),
            0xfffffffcu);
  EXPECT_EQ(EvalPostfix(PostfixExpr::Parse("sp 16 +"), Regs({{"sp", 0xfffffff8}}),
                        std::nullopt, {}),
            8u);
}

TEST(EvalPostfixTest, Errors) {
  StackSnapshot mem{0x1000, std::vector<uint8_t>(16)};
  EXPECT_EQ(EvalError("r4 ^", Regs({{"r4", 0x0ffc}}), std::nullopt, mem),
            ErrorKind::kMemoryOutOfRange);
  EXPECT_EQ(EvalError("r4 ^", Regs({{"r4", 0x100e}}), std::nullopt, mem),
            ErrorKind::kMemoryOutOfRange);
  EXPECT_EQ(EvalError("r9 4 +", Regs({{"r4", 1}}), std::nullopt, mem),
            ErrorKind::kUnknownRegister);
  EXPECT_EQ(EvalError(".cfa 4 +", {}, std::nullopt, mem), ErrorKind::kUnknownRegister);
  try {
    PostfixExpr::Parse("sp 4");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kMalformedExpr);
  }
  try {
    PostfixExpr::Parse("+");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kMalformedExpr);
  }
}

SymbolFile FunctionOneExcerpt() {
  return ParseSymbolFile(
      "MODULE Linux arm 0 m\n"
      "FUNC 1bdc f0 0 function1\n"
      "1bdc f0 10 1\n"
      "STACK CFI INIT 1bdc f0 .cfa: sp 0 + .ra: lr\n"
      "STACK CFI 1be0 .cfa: sp 8 + .ra: .cfa -4 + ^ r11: .cfa -8 + ^\n"
      "STACK CFI 1be4 .cfa: r11 4 +\n");
}

TEST(RulesAtTest, InitRulesAtRegionStart) {
  EXPECT_EQ(RulesAt(FunctionOneExcerpt(), 0x1bdc).ToString(), ".cfa: sp 0 + .ra: lr");
}

TEST(RulesAtTest, LaterDeltasOverlayEarlierOnes) {
  const RuleMap r = RulesAt(FunctionOneExcerpt(), 0x1be4);
  EXPECT_EQ(r.Find(".cfa")->ToString(), "r11 4 +");
  EXPECT_EQ(r.Find(".ra")->ToString(), ".cfa -4 + ^");
  EXPECT_EQ(r.Find("r11")->ToString(), ".cfa -8 + ^");
  EXPECT_EQ(RulesAt(FunctionOneExcerpt(), 0x1be3).Find(".cfa")->ToString(), "sp 8 +");
}

TEST(RulesAtTest, RegionEndIsExclusive) {
  const SymbolFile sf = FunctionOneExcerpt();
  EXPECT_NO_THROW(RulesAt(sf, 0x1bdc + 0xef));
  try {
    RulesAt(sf, 0x1bdc + 0xf0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNoUnwindInfo);
  }
}

MinidumpLite LeafDump(uint32_t lr) {
  MinidumpLite d;
  d.module_id = "Linux arm 0 m";
  d.module_base = 0;
  d.crash_address = 0x1be8;
  d.registers = Regs({{"pc", 0x1be8}, {"sp", 0x8000}, {"lr", lr}, {"r11", 0x8004}});
  d.stack = StackSnapshot{0x8000, std::vector<uint8_t>(64)};
  return d;
}

SymbolFile LeafFile() {
  return ParseSymbolFile(
      "MODULE Linux arm 0 m\n"
      "FUNC 1000 10 0 caller\n"
      "1000 10 5 1\n"
      "FUNC 1be0 20 0 leaf\n"
      "1be0 20 9 1\n"
      "STACK CFI INIT 1000 10 .cfa: sp 0 + .ra: lr\n"
      "STACK CFI 1004 .cfa: sp 8 + .ra: .cfa -4 + ^\n"
      "STACK CFI INIT 1be0 20 .cfa: sp 0 + .ra: lr\n");
}

TEST(UnwindTest, LeafFrameReturnsToLr) {
  MinidumpLite d = LeafDump(0x1008);
  PutWord(d.stack, 0x8004, 0);
  const UnwindResult r = Unwind(d, LeafFile());
  ASSERT_GE(r.frames.size(), 2u);
  EXPECT_EQ(r.frames[0].pc, 0x1be8u);
  EXPECT_EQ(r.frames[1].pc, 0x1008u);
  EXPECT_TRUE(r.frames[1].is_caller);
  EXPECT_EQ(r.frames[1].lookup_pc(), 0x1004u);
}

TEST(UnwindTest, ZeroReturnAddressEndsTheStack) {
  const UnwindResult r = Unwind(LeafDump(0), LeafFile());
  EXPECT_EQ(r.frames.size(), 1u);
  EXPECT_EQ(r.stop, UnwindStop::kEndOfStack);
}

TEST(UnwindTest, ReturnOutsideKnownCodeStops) {
  const UnwindResult r = Unwind(LeafDump(0x9000), LeafFile());
  EXPECT_EQ(r.frames.size(), 2u);
  EXPECT_EQ(r.stop, UnwindStop::kLeftKnownCode);
}

TEST(UnwindTest, SpBelowSnapshotGivesFrameZeroOnly) {
  MinidumpLite d = LeafDump(0x1008);
  d.registers["sp"] = 0x7ff0;
  const UnwindResult r = Unwind(d, LeafFile());
  EXPECT_EQ(r.frames.size(), 1u);
  EXPECT_EQ(r.stop, UnwindStop::kMemoryOutOfRange);
}

TEST(UnwindTest, NonIncreasingCfaStops) {
  // The caller's rules claim a CFA equal to the callee's.
  const SymbolFile sf = ParseSymbolFile(
      "MODULE Linux arm 0 m\n"
      "FUNC 1000 10 0 caller\n"
      "FUNC 1be0 20 0 leaf\n"
      "STACK CFI INIT 1000 10 .cfa: sp 0 + .ra: lr\n"
      "STACK CFI INIT 1be0 20 .cfa: sp 0 + .ra: lr\n");
  const UnwindResult r = Unwind(LeafDump(0x1008), sf);
  EXPECT_EQ(r.stop, UnwindStop::kCfaNotIncreasing);
  ASSERT_EQ(r.frames.size(), 2u);
  EXPECT_EQ(r.frames[1].pc, 0x1008u);
  EXPECT_FALSE(r.frames[1].cfa.has_value());
}

TEST(UnwindTest, MaxFramesBoundsTheWalk) {
  const UnwindResult r = Unwind(LeafDump(0x1008), LeafFile(), 1);
  EXPECT_EQ(r.frames.size(), 1u);
  EXPECT_EQ(r.stop, UnwindStop::kMaxFrames);
}

TEST(UnwindTest, MissingUnwindInfoIsReported) {
  const SymbolFile sf = ParseSymbolFile("MODULE Linux arm 0 m\nFUNC 1be0 20 0 leaf\n");
  const UnwindResult r = Unwind(LeafDump(0), sf);
  EXPECT_EQ(r.frames.size(), 1u);
  EXPECT_EQ(r.stop, UnwindStop::kNoUnwindInfo);
}

TEST(UnwindTest, ModuleMismatchThrows) {
  MinidumpLite d = LeafDump(0);
  d.module_id = "Linux arm 1 other";
  try {
    Unwind(d, LeafFile());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kModuleMismatch);
  }
}

TEST(UnwindTest, RegistersWithoutRulesPropagate) {
  // Leaf pushed {r4, lr}; caller keeps r5 from the callee.
  const SymbolFile sf = ParseSymbolFile(
      "MODULE Linux arm 0 m\n"
      "FUNC 1000 10 0 caller\n"
      "FUNC 1be0 20 0 leaf\n"
      "STACK CFI INIT 1000 10 .cfa: sp 0 + .ra: lr\n"
      "STACK CFI 1004 .cfa: sp 8 + .ra: .cfa -4 + ^\n"
      "STACK CFI INIT 1be0 20 .cfa: sp 0 + .ra: lr\n"
      "STACK CFI 1be4 .cfa: sp 8 + .ra: .cfa -4 + ^ r4: .cfa -8 + ^\n");
  MinidumpLite d = LeafDump(0);
  d.registers["r4"] = 0x44;
  d.registers["r5"] = 0x55;
  PutWord(d.stack, 0x8000, 0x1234);  // saved r4
  PutWord(d.stack, 0x8004, 0x1008);  // saved lr
  PutWord(d.stack, 0x800c, 0);       // caller's saved lr
  const UnwindResult r = Unwind(d, sf);
  ASSERT_EQ(r.frames.size(), 2u);
  EXPECT_EQ(r.frames[1].pc, 0x1008u);
  EXPECT_EQ(*r.frames[1].cfa, 0x8010u);
  EXPECT_EQ(r.frames[1].recovered.at("r4"), 0x1234u);
  EXPECT_EQ(r.frames[1].recovered.count("r5"), 0u);
  EXPECT_EQ(r.stop, UnwindStop::kEndOfStack);
}

TEST(MinidumpTest, TextRoundTrip) {
  MinidumpLite d = LeafDump(0x1008);
  d.crash_reason = "SIGSEGV at bad address";
  PutWord(d.stack, 0x8010, 0xdeadbeef);
  const std::string text = EmitMinidump(d);
  EXPECT_EQ(ParseMinidump(text), d);
  EXPECT_EQ(EmitMinidump(ParseMinidump(text)), text);
}

}  // namespace
}  // namespace deltapad
