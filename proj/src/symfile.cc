#include "deltapad/symfile.h"

#include <algorithm>
#include <cctype>

#include "deltapad/error.h"
#include "text_util.h"

namespace deltapad {

using internal::ParseInt;
using internal::SplitLines;
using internal::SplitWords;
using internal::SplitWordsLimited;

ExprToken ExprToken::Register(std::string name) {
  ExprToken t;
  t.kind = Kind::kRegister;
  t.reg = std::move(name);
  return t;
}

ExprToken ExprToken::Literal(int64_t v) {
  ExprToken t;
  t.kind = Kind::kLiteral;
  t.value = v;
  return t;
}

ExprToken ExprToken::Op(Kind k) {
  ExprToken t;
  t.kind = k;
  return t;
}

namespace {

void CheckArity(const std::vector<ExprToken>& tokens) {
  int depth = 0;
  for (const ExprToken& t : tokens) {
    switch (t.kind) {
      case ExprToken::Kind::kRegister:
      case ExprToken::Kind::kLiteral:
        ++depth;
        break;
      case ExprToken::Kind::kAdd:
      case ExprToken::Kind::kSub:
        if (depth < 2) {
          throw Error(ErrorKind::kMalformedExpr, "binary operator underflow");
        }
        --depth;
        break;
      case ExprToken::Kind::kDeref:
        if (depth < 1) {
          throw Error(ErrorKind::kMalformedExpr, "dereference underflow");
        }
        break;
    }
  }
  if (depth != 1) {
    throw Error(ErrorKind::kMalformedExpr,
                "expression leaves " + std::to_string(depth) + " values");
  }
}

bool IsLiteralToken(std::string_view tok) {
  size_t i = (!tok.empty() && tok[0] == '-') ? 1 : 0;
  if (i == tok.size()) return false;
  for (; i < tok.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(tok[i]))) return false;
  }
  return true;
}

}  // namespace

PostfixExpr::PostfixExpr(std::vector<ExprToken> tokens)
    : tokens_(std::move(tokens)) {
  CheckArity(tokens_);
}

PostfixExpr PostfixExpr::Parse(std::string_view text) {
  std::vector<ExprToken> tokens;
  for (std::string_view tok : SplitWords(text)) {
    if (tok == "+") {
      tokens.push_back(ExprToken::Op(ExprToken::Kind::kAdd));
    } else if (tok == "-") {
      tokens.push_back(ExprToken::Op(ExprToken::Kind::kSub));
    } else if (tok == "^") {
      tokens.push_back(ExprToken::Op(ExprToken::Kind::kDeref));
    } else if (IsLiteralToken(tok)) {
      int64_t v;
      if (!ParseInt(tok, &v)) {
        throw Error(ErrorKind::kMalformedExpr,
                    "literal out of range: " + std::string(tok));
      }
      tokens.push_back(ExprToken::Literal(v));
    } else if (tok == "*" || tok == "/" || tok == "%" || tok == "@" ||
               tok == "=" || tok.back() == ':') {
      throw Error(ErrorKind::kMalformedExpr,
                  "unsupported token: " + std::string(tok));
    } else {
      tokens.push_back(ExprToken::Register(std::string(tok)));
    }
  }
  return PostfixExpr(std::move(tokens));
}

bool PostfixExpr::References(std::string_view reg) const {
  return std::any_of(tokens_.begin(), tokens_.end(), [&](const ExprToken& t) {
    return t.kind == ExprToken::Kind::kRegister && t.reg == reg;
  });
}

std::string PostfixExpr::ToString() const {
  std::string out;
  for (const ExprToken& t : tokens_) {
    if (!out.empty()) out += ' ';
    switch (t.kind) {
      case ExprToken::Kind::kRegister: out += t.reg; break;
      case ExprToken::Kind::kLiteral: out += std::to_string(t.value); break;
      case ExprToken::Kind::kAdd: out += '+'; break;
      case ExprToken::Kind::kSub: out += '-'; break;
      case ExprToken::Kind::kDeref: out += '^'; break;
    }
  }
  return out;
}

void RuleMap::Set(const std::string& reg, PostfixExpr expr) {
  if (PostfixExpr* existing = FindMutable(reg)) {
    *existing = std::move(expr);
    return;
  }
  rules_.push_back(Rule{reg, std::move(expr)});
}

const PostfixExpr* RuleMap::Find(std::string_view reg) const {
  for (const Rule& r : rules_) {
    if (r.reg == reg) return &r.expr;
  }
  return nullptr;
}

PostfixExpr* RuleMap::FindMutable(std::string_view reg) {
  for (Rule& r : rules_) {
    if (r.reg == reg) return &r.expr;
  }
  return nullptr;
}

std::string RuleMap::ToString() const {
  std::string out;
  for (const Rule& r : rules_) {
    if (!out.empty()) out += ' ';
    out += r.reg;
    out += ": ";
    out += r.expr.ToString();
  }
  return out;
}

RuleMap RuleMap::Parse(std::string_view text) {
  RuleMap map;
  std::string reg;
  std::string expr;
  auto flush = [&]() {
    if (reg.empty()) return;
    if (expr.empty()) {
      throw Error(ErrorKind::kMalformedExpr, "empty rule for " + reg);
    }
    if (map.Find(reg)) {
      throw Error(ErrorKind::kMalformedExpr, "duplicate rule for " + reg);
    }
    map.rules_.push_back(Rule{reg, PostfixExpr::Parse(expr)});
    reg.clear();
    expr.clear();
  };
  for (std::string_view tok : SplitWords(text)) {
    if (tok.size() > 1 && tok.back() == ':') {
      flush();
      reg = std::string(tok.substr(0, tok.size() - 1));
    } else {
      if (reg.empty()) {
        throw Error(ErrorKind::kMalformedExpr,
                    "expression token before register name");
      }
      if (!expr.empty()) expr += ' ';
      expr += tok;
    }
  }
  flush();
  return map;
}

std::string Hex(uint64_t v) {
  static const char kDigits[] = "0123456789abcdef";
  if (v == 0) return "0";
  char buf[16];
  int n = 0;
  while (v) {
    buf[n++] = kDigits[v & 0xf];
    v >>= 4;
  }
  std::string out(n, '0');
  for (int i = 0; i < n; ++i) out[i] = buf[n - 1 - i];
  return out;
}

bool ParseHex(std::string_view token, uint64_t* out) {
  if (token.empty() || token.size() > 16) return false;
  uint64_t v = 0;
  for (char c : token) {
    int d;
    if (c >= '0' && c <= '9') {
      d = c - '0';
    } else if (c >= 'a' && c <= 'f') {
      d = c - 'a' + 10;
    } else if (c >= 'A' && c <= 'F') {
      d = c - 'A' + 10;
    } else {
      return false;
    }
    v = (v << 4) | static_cast<uint64_t>(d);
  }
  *out = v;
  return true;
}

namespace {

[[noreturn]] void ParseFail(size_t line_no, const std::string& msg) {
  throw Error(ErrorKind::kParse,
              "symbol file line " + std::to_string(line_no) + ": " + msg);
}

uint64_t HexField(std::string_view tok, size_t line_no, const char* what) {
  uint64_t v;
  if (!ParseHex(tok, &v)) {
    ParseFail(line_no, std::string("malformed hex ") + what + " '" +
                           std::string(tok) + "'");
  }
  return v;
}

int64_t DecField(std::string_view tok, size_t line_no, const char* what) {
  int64_t v;
  if (!ParseInt(tok, &v)) {
    ParseFail(line_no, std::string("malformed ") + what + " '" +
                           std::string(tok) + "'");
  }
  return v;
}

RuleMap RulesField(std::string_view text, size_t line_no) {
  try {
    return RuleMap::Parse(text);
  } catch (const Error& e) {
    ParseFail(line_no, e.what());
  }
}

[[noreturn]] void Invalid(const std::string& msg) {
  throw Error(ErrorKind::kSerialize, msg);
}

void ValidateRules(const RuleMap& rules, const std::string& where) {
  if (const PostfixExpr* cfa = rules.Find(".cfa")) {
    if (cfa->References(".cfa")) {
      Invalid(where + ": .cfa rule references .cfa");
    }
  }
}

}  // namespace

void ValidateSymbolFile(const SymbolFile& sf) {
  for (size_t i = 1; i < sf.files.size(); ++i) {
    if (sf.files[i - 1].num >= sf.files[i].num) {
      Invalid("FILE records not strictly ordered by number");
    }
  }
  auto file_known = [&](int64_t num) {
    if (sf.files.empty()) return true;
    return std::binary_search(
        sf.files.begin(), sf.files.end(), FileRecord{num, {}},
        [](const FileRecord& a, const FileRecord& b) { return a.num < b.num; });
  };
  for (size_t i = 0; i < sf.funcs.size(); ++i) {
    const FuncRecord& f = sf.funcs[i];
    std::string where = "FUNC " + f.name;
    if (f.size == 0) Invalid(where + ": zero size");
    if (f.name.empty()) Invalid("FUNC at " + Hex(f.address) + ": empty name");
    if (i > 0 && sf.funcs[i - 1].end() > f.address) {
      Invalid(where + ": overlaps previous FUNC");
    }
    uint64_t cursor = f.address;
    for (const LineRecord& l : f.lines) {
      if (l.size == 0) Invalid(where + ": zero-size line record");
      if (l.address < cursor) Invalid(where + ": line records unsorted");
      if (l.address + l.size > f.end()) {
        Invalid(where + ": line record outside function");
      }
      if (!file_known(l.filenum)) {
        Invalid(where + ": unknown filenum " + std::to_string(l.filenum));
      }
      cursor = l.address + l.size;
    }
  }
  for (size_t i = 0; i < sf.cfi_regions.size(); ++i) {
    const CfiInitRecord& c = sf.cfi_regions[i];
    std::string where = "STACK CFI INIT " + Hex(c.address);
    if (c.size == 0) Invalid(where + ": zero size");
    if (i > 0 && sf.cfi_regions[i - 1].end() > c.address) {
      Invalid(where + ": overlaps previous region");
    }
    if (!c.init_rules.Find(".cfa") || !c.init_rules.Find(".ra")) {
      Invalid(where + ": missing .cfa or .ra");
    }
    ValidateRules(c.init_rules, where);
    uint64_t prev = c.address;
    for (size_t d = 0; d < c.deltas.size(); ++d) {
      const CfiDelta& delta = c.deltas[d];
      if (delta.address < c.address || delta.address >= c.end() ||
          (d > 0 && delta.address <= prev)) {
        Invalid(where + ": delta at " + Hex(delta.address) +
                " out of order or range");
      }
      if (delta.rules.empty()) Invalid(where + ": empty delta");
      ValidateRules(delta.rules, where);
      prev = delta.address;
    }
  }
  for (size_t i = 1; i < sf.publics.size(); ++i) {
    if (sf.publics[i - 1].address > sf.publics[i].address) {
      Invalid("PUBLIC records unsorted");
    }
  }
}

SymbolFile ParseSymbolFile(std::string_view text) {
  SymbolFile sf;
  bool have_func = false;
  std::vector<std::string_view> lines = SplitLines(text);
  for (size_t idx = 0; idx < lines.size(); ++idx) {
    size_t line_no = idx + 1;
    std::string_view line = lines[idx];
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string_view> w = SplitWords(line);
    if (w.empty()) continue;
    std::string_view kw = w[0];
    if (kw == "MODULE") {
      auto f = SplitWordsLimited(line, 2);
      if (f.size() < 2) ParseFail(line_no, "MODULE without id");
      sf.module_id = std::string(f[1]);
      have_func = false;
    } else if (kw == "FILE") {
      auto f = SplitWordsLimited(line, 3);
      if (f.size() < 3) ParseFail(line_no, "FILE needs number and path");
      sf.files.push_back(
          FileRecord{DecField(f[1], line_no, "file number"), std::string(f[2])});
      have_func = false;
    } else if (kw == "FUNC") {
      auto f = SplitWordsLimited(line, 5);
      if (f.size() < 5) ParseFail(line_no, "FUNC needs 4 fields");
      FuncRecord fr;
      fr.address = HexField(f[1], line_no, "address");
      fr.size = HexField(f[2], line_no, "size");
      fr.param_size = HexField(f[3], line_no, "parameter size");
      fr.name = std::string(f[4]);
      sf.funcs.push_back(std::move(fr));
      have_func = true;
    } else if (kw == "PUBLIC") {
      auto f = SplitWordsLimited(line, 4);
      if (f.size() < 4) ParseFail(line_no, "PUBLIC needs 3 fields");
      sf.publics.push_back(PublicRecord{HexField(f[1], line_no, "address"),
                                        HexField(f[2], line_no, "param size"),
                                        std::string(f[3])});
      have_func = false;
    } else if (kw == "STACK") {
      have_func = false;
      if (w.size() < 2 || w[1] != "CFI") {
        ParseFail(line_no, "unknown STACK record");
      }
      if (w.size() >= 3 && w[2] == "INIT") {
        auto f = SplitWordsLimited(line, 6);
        if (f.size() < 6) ParseFail(line_no, "STACK CFI INIT needs rules");
        CfiInitRecord c;
        c.address = HexField(f[3], line_no, "address");
        c.size = HexField(f[4], line_no, "size");
        c.init_rules = RulesField(f[5], line_no);
        sf.cfi_regions.push_back(std::move(c));
      } else {
        auto f = SplitWordsLimited(line, 4);
        if (f.size() < 4) ParseFail(line_no, "STACK CFI needs rules");
        if (sf.cfi_regions.empty()) {
          ParseFail(line_no, "STACK CFI delta before any INIT");
        }
        CfiDelta d;
        d.address = HexField(f[2], line_no, "address");
        d.rules = RulesField(f[3], line_no);
        sf.cfi_regions.back().deltas.push_back(std::move(d));
      }
    } else {
      uint64_t probe;
      if (!ParseHex(kw, &probe)) {
        ParseFail(line_no, "unknown record keyword '" + std::string(kw) + "'");
      }
      if (!have_func) ParseFail(line_no, "line record outside any FUNC");
      if (w.size() != 4) ParseFail(line_no, "line record needs 4 fields");
      LineRecord lr;
      lr.address = HexField(w[0], line_no, "address");
      lr.size = HexField(w[1], line_no, "size");
      lr.line = DecField(w[2], line_no, "line number");
      lr.filenum = DecField(w[3], line_no, "file number");
      FuncRecord& fn = sf.funcs.back();
      if (lr.address < fn.address || lr.address + lr.size > fn.end()) {
        ParseFail(line_no, "line record outside FUNC " + fn.name);
      }
      fn.lines.push_back(lr);
    }
  }

  auto by_addr = [](const auto& a, const auto& b) {
    return a.address < b.address;
  };
  std::stable_sort(sf.funcs.begin(), sf.funcs.end(), by_addr);
  std::stable_sort(sf.cfi_regions.begin(), sf.cfi_regions.end(), by_addr);
  std::stable_sort(sf.publics.begin(), sf.publics.end(), by_addr);
  std::stable_sort(
      sf.files.begin(), sf.files.end(),
      [](const FileRecord& a, const FileRecord& b) { return a.num < b.num; });
  for (FuncRecord& f : sf.funcs) {
    std::stable_sort(f.lines.begin(), f.lines.end(), by_addr);
  }
  try {
    ValidateSymbolFile(sf);
  } catch (const Error& e) {
    throw Error(ErrorKind::kParse, std::string("symbol file: ") + e.what());
  }
  return sf;
}

std::string EmitSymbolFile(const SymbolFile& sf) {
  ValidateSymbolFile(sf);
  std::string out;
  if (!sf.module_id.empty()) {
    out += "MODULE ";
    out += sf.module_id;
    out += '\n';
  }
  for (const FileRecord& f : sf.files) {
    out += "FILE " + std::to_string(f.num) + ' ' + f.path + '\n';
  }
  for (const FuncRecord& f : sf.funcs) {
    out += "FUNC " + Hex(f.address) + ' ' + Hex(f.size) + ' ' +
           Hex(f.param_size) + ' ' + f.name + '\n';
    for (const LineRecord& l : f.lines) {
      out += Hex(l.address) + ' ' + Hex(l.size) + ' ' +
             std::to_string(l.line) + ' ' + std::to_string(l.filenum) + '\n';
    }
  }
  for (const PublicRecord& p : sf.publics) {
    out += "PUBLIC " + Hex(p.address) + ' ' + Hex(p.param_size) + ' ' +
           p.name + '\n';
  }
  for (const CfiInitRecord& c : sf.cfi_regions) {
    out += "STACK CFI INIT " + Hex(c.address) + ' ' + Hex(c.size) + ' ' +
           c.init_rules.ToString() + '\n';
    for (const CfiDelta& d : c.deltas) {
      out += "STACK CFI " + Hex(d.address) + ' ' + d.rules.ToString() + '\n';
    }
  }
  return out;
}

RecordCounts CountRecords(const SymbolFile& sf) {
  RecordCounts counts;
  for (const FuncRecord& f : sf.funcs) counts.line_records += f.lines.size();
  for (const CfiInitRecord& c : sf.cfi_regions) {
    counts.cfi_records += 1 + c.deltas.size();
  }
  return counts;
}

}  // namespace deltapad
