// Breakpad text symbol files: record types, parser and canonical emitter.
//
// The canonical text form is the byte-exact comparison target for the whole
// reconstruction pipeline, so emission is fully deterministic: one record
// per line, single spaces, lowercase hex without leading zeros, FUNC blocks
// followed by their line records, then PUBLIC records, then STACK CFI INIT
// records each followed by their deltas.

#ifndef DELTAPAD_SYMFILE_H_
#define DELTAPAD_SYMFILE_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace deltapad {

struct ExprToken {
  enum class Kind { kRegister, kLiteral, kAdd, kSub, kDeref };

  Kind kind = Kind::kLiteral;
  std::string reg;    // kRegister only
  int64_t value = 0;  // kLiteral only

  static ExprToken Register(std::string name);
  static ExprToken Literal(int64_t v);
  static ExprToken Op(Kind k);

  bool operator==(const ExprToken&) const = default;
};

// A postfix expression over registers, signed literals and the operators
// `+`, `-` and `^` (dereference). Always well formed: evaluating it on a
// stack machine leaves exactly one value.
class PostfixExpr {
 public:
  PostfixExpr() = default;
  explicit PostfixExpr(std::vector<ExprToken> tokens);

  // Parses whitespace-separated tokens. Throws Error(kMalformedExpr).
  static PostfixExpr Parse(std::string_view text);

  const std::vector<ExprToken>& tokens() const { return tokens_; }
  bool References(std::string_view reg) const;
  std::string ToString() const;

  bool operator==(const PostfixExpr&) const = default;

 private:
  std::vector<ExprToken> tokens_;
};

struct Rule {
  std::string reg;
  PostfixExpr expr;

  bool operator==(const Rule&) const = default;
};

// Register -> expression mapping. Insertion order is preserved so that
// emission reproduces the input order exactly.
class RuleMap {
 public:
  RuleMap() = default;

  // Replaces an existing rule for `reg` in place, else appends.
  void Set(const std::string& reg, PostfixExpr expr);
  const PostfixExpr* Find(std::string_view reg) const;
  PostfixExpr* FindMutable(std::string_view reg);

  const std::vector<Rule>& rules() const { return rules_; }
  bool empty() const { return rules_.empty(); }

  // "reg1: expr1 reg2: expr2 ..."
  std::string ToString() const;
  static RuleMap Parse(std::string_view text);

  bool operator==(const RuleMap&) const = default;

 private:
  std::vector<Rule> rules_;
};

struct LineRecord {
  uint64_t address = 0;
  uint64_t size = 0;
  int64_t line = 0;
  int64_t filenum = 0;

  bool operator==(const LineRecord&) const = default;
};

struct FuncRecord {
  uint64_t address = 0;
  uint64_t size = 0;
  uint64_t param_size = 0;
  std::string name;
  std::vector<LineRecord> lines;

  uint64_t end() const { return address + size; }
  bool operator==(const FuncRecord&) const = default;
};

struct CfiDelta {
  uint64_t address = 0;
  RuleMap rules;

  bool operator==(const CfiDelta&) const = default;
};

struct CfiInitRecord {
  uint64_t address = 0;
  uint64_t size = 0;
  RuleMap init_rules;
  std::vector<CfiDelta> deltas;

  uint64_t end() const { return address + size; }
  bool operator==(const CfiInitRecord&) const = default;
};

struct FileRecord {
  int64_t num = 0;
  std::string path;

  bool operator==(const FileRecord&) const = default;
};

struct PublicRecord {
  uint64_t address = 0;
  uint64_t param_size = 0;
  std::string name;

  bool operator==(const PublicRecord&) const = default;
};

struct SymbolFile {
  // Everything after "MODULE " (os, arch, id, name). Empty means no record.
  std::string module_id;
  std::vector<FileRecord> files;
  std::vector<FuncRecord> funcs;
  std::vector<CfiInitRecord> cfi_regions;
  std::vector<PublicRecord> publics;

  bool operator==(const SymbolFile&) const = default;
};

// Parses newline-separated records. Records may arrive in any section order;
// FUNC, PUBLIC and CFI lists are sorted by address before validation. Line
// records attach to the most recent FUNC. Throws Error(kParse) with the
// offending line number.
SymbolFile ParseSymbolFile(std::string_view text);

// Canonical emission. Throws Error(kSerialize) on invariant violations.
std::string EmitSymbolFile(const SymbolFile& sf);

// Throws Error(kSerialize) describing the first violated invariant. Filenum
// references are checked only when the file carries FILE records, so that
// excerpts without a FILE table remain representable.
void ValidateSymbolFile(const SymbolFile& sf);

// Lowercase hex without leading zeros.
std::string Hex(uint64_t v);

// Strict hex parse of a whole token. Returns false on empty input, non-hex
// characters or overflow.
bool ParseHex(std::string_view token, uint64_t* out);

// Counts for the "line records outnumber CFI records" property.
struct RecordCounts {
  size_t line_records = 0;
  size_t cfi_records = 0;  // INIT plus delta records
};
RecordCounts CountRecords(const SymbolFile& sf);

}  // namespace deltapad

#endif  // DELTAPAD_SYMFILE_H_
