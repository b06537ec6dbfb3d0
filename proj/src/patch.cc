#include "deltapad/patch.h"

#include <algorithm>
#include <unordered_map>

#include "deltapad/error.h"
#include "text_util.h"

namespace deltapad {

using internal::SplitLines;

size_t Patch::payload_bytes() const {
  size_t total = 0;
  for (const PatchOp& op : ops) {
    for (const std::string& l : op.lines) total += l.size() + 1;
  }
  return total;
}

uint64_t Patch::consumed_lines() const {
  uint64_t total = 0;
  for (const PatchOp& op : ops) {
    if (op.kind != PatchOpKind::kInsert) total += op.count;
  }
  return total;
}

std::optional<AddressedLine> SplitAddress(std::string_view line) {
  static constexpr std::string_view kPrefixes[] = {
      "STACK CFI INIT ", "STACK CFI ", "FUNC m ", "FUNC ", "PUBLIC m ", "PUBLIC "};
  AddressedLine out;
  std::string_view body = line;
  for (std::string_view p : kPrefixes) {
    if (line.substr(0, p.size()) == p) {
      out.prefix = line.substr(0, p.size());
      body = line.substr(p.size());
      break;
    }
  }
  if (out.prefix.empty() && (line.empty() || line.substr(0, 4) == "FILE" ||
                             line.substr(0, 6) == "MODULE")) {
    return std::nullopt;
  }
  const size_t sp = body.find(' ');
  if (sp == 0) return std::nullopt;
  std::string_view hex = body.substr(0, sp);
  if (!ParseHex(hex, &out.address)) return std::nullopt;
  out.rest = sp == std::string_view::npos ? std::string_view() : body.substr(sp);
  return out;
}

std::optional<std::string> ShiftLine(std::string_view line, int64_t delta) {
  std::optional<AddressedLine> a = SplitAddress(line);
  if (!a) return std::nullopt;
  const int64_t shifted = static_cast<int64_t>(a->address) + delta;
  if (shifted < 0) return std::nullopt;
  std::string out(a->prefix);
  out += Hex(static_cast<uint64_t>(shifted));
  out += a->rest;
  return out;
}

namespace {

struct Line {
  std::string_view text;
  std::optional<AddressedLine> addr;
};

std::vector<Line> Tokenize(std::string_view text) {
  std::vector<Line> out;
  for (std::string_view l : SplitLines(text)) out.push_back(Line{l, SplitAddress(l)});
  return out;
}

// 0 = no match, 1 = equal, 2 = shift-equivalent (delta in *delta).
int Match(const Line& a, const Line& t, int64_t* delta) {
  if (a.text == t.text) return 1;
  if (!a.addr || !t.addr || a.addr->prefix != t.addr->prefix ||
      a.addr->rest != t.addr->rest) {
    return 0;
  }
  *delta = static_cast<int64_t>(t.addr->address) -
           static_cast<int64_t>(a.addr->address);
  return 2;
}

class OpBuilder {
 public:
  void Keep(uint64_t n) {
    Flush();
    if (!ops_.empty() && ops_.back().kind == PatchOpKind::kKeep) {
      ops_.back().count += n;
    } else {
      ops_.push_back(PatchOp{PatchOpKind::kKeep, n, 0, {}});
    }
  }
  void Shift(uint64_t n, int64_t delta) {
    Flush();
    if (!ops_.empty() && ops_.back().kind == PatchOpKind::kShift &&
        ops_.back().delta == delta) {
      ops_.back().count += n;
    } else {
      ops_.push_back(PatchOp{PatchOpKind::kShift, n, delta, {}});
    }
  }
  void Delete(uint64_t n) { deleted_ += n; }
  void Insert(std::string_view line) { inserted_.emplace_back(line); }

  Patch Finish() {
    Flush();
    return Patch{std::move(ops_)};
  }

 private:
  void Flush() {
    if (deleted_ > 0 && !inserted_.empty()) {
      ops_.push_back(PatchOp{PatchOpKind::kReplace, deleted_, 0, std::move(inserted_)});
    } else if (deleted_ > 0) {
      ops_.push_back(PatchOp{PatchOpKind::kDelete, deleted_, 0, {}});
    } else if (!inserted_.empty()) {
      ops_.push_back(PatchOp{PatchOpKind::kInsert, 0, 0, std::move(inserted_)});
    }
    deleted_ = 0;
    inserted_.clear();
  }

  std::vector<PatchOp> ops_;
  uint64_t deleted_ = 0;
  std::vector<std::string> inserted_;
};

void Matched(OpBuilder& b, const Line& a, const Line& t) {
  int64_t delta = 0;
  if (Match(a, t, &delta) == 1) {
    b.Keep(1);
  } else {
    b.Shift(1, delta);
  }
}

// Aligns a[ab, ae) with t[tb, te) maximizing the bytes of matched truth lines.
void DiffRange(OpBuilder& b, const std::vector<Line>& a, size_t ab, size_t ae,
               const std::vector<Line>& t, size_t tb, size_t te) {
  int64_t unused;
  while (ab < ae && tb < te && Match(a[ab], t[tb], &unused)) {
    Matched(b, a[ab++], t[tb++]);
  }
  size_t suffix = 0;
  while (ae - suffix > ab && te - suffix > tb &&
         Match(a[ae - suffix - 1], t[te - suffix - 1], &unused)) {
    ++suffix;
  }
  const size_t n = ae - suffix - ab;
  const size_t m = te - suffix - tb;
  if (n > 0 && m > 0) {
    // best[i][j]: max matched bytes aligning a[ab+i..] with t[tb+j..].
    std::vector<uint64_t> best((n + 1) * (m + 1), 0);
    auto at = [&](size_t i, size_t j) -> uint64_t& { return best[i * (m + 1) + j]; };
    for (size_t i = n; i-- > 0;) {
      for (size_t j = m; j-- > 0;) {
        uint64_t v = std::max(at(i + 1, j), at(i, j + 1));
        if (Match(a[ab + i], t[tb + j], &unused)) {
          v = std::max(v, at(i + 1, j + 1) + t[tb + j].text.size() + 1);
        }
        at(i, j) = v;
      }
    }
    size_t i = 0, j = 0;
    while (i < n && j < m) {
      if (Match(a[ab + i], t[tb + j], &unused) &&
          at(i, j) == at(i + 1, j + 1) + t[tb + j].text.size() + 1) {
        Matched(b, a[ab + i], t[tb + j]);
        ++i;
        ++j;
      } else if (at(i, j) == at(i + 1, j)) {
        b.Delete(1);
        ++i;
      } else {
        b.Insert(t[tb + j].text);
        ++j;
      }
    }
    if (i < n) b.Delete(n - i);
    for (; j < m; ++j) b.Insert(t[tb + j].text);
  } else {
    if (n > 0) b.Delete(n);
    for (size_t j = 0; j < m; ++j) b.Insert(t[tb + j].text);
  }
  for (size_t k = suffix; k > 0; --k) Matched(b, a[ae - k], t[te - k]);
}

struct Segment {
  std::string key;
  size_t begin = 0;
  size_t end = 0;
};

bool StartsWith(std::string_view s, std::string_view p) {
  return s.substr(0, p.size()) == p;
}

// Header, one segment per FUNC block, all PUBLIC records, one segment per
// STACK CFI INIT block keyed by the name of the FUNC at the same address.
std::vector<Segment> Segments(const std::vector<Line>& lines) {
  std::unordered_map<uint64_t, std::string> names;
  for (const Line& l : lines) {
    if (StartsWith(l.text, "FUNC ") && l.addr) {
      auto f = internal::SplitWordsLimited(l.addr->rest, 3);
      names[l.addr->address] = f.size() == 3 ? std::string(f[2]) : std::string();
    }
  }
  std::vector<Segment> segs;
  auto open = [&](std::string key, size_t i) {
    if (!segs.empty()) segs.back().end = i;
    segs.push_back(Segment{std::move(key), i, i});
  };
  for (size_t i = 0; i < lines.size(); ++i) {
    const std::string_view t = lines[i].text;
    if (StartsWith(t, "FUNC ") && lines[i].addr) {
      open("F:" + names[lines[i].addr->address], i);
    } else if (StartsWith(t, "PUBLIC ")) {
      if (segs.empty() || segs.back().key != "P") open("P", i);
    } else if (StartsWith(t, "STACK CFI INIT ") && lines[i].addr) {
      auto it = names.find(lines[i].addr->address);
      open(it != names.end() ? "C:" + it->second : "C@" + Hex(lines[i].addr->address), i);
    } else if (segs.empty()) {
      open("H", i);
    }
  }
  if (!segs.empty()) segs.back().end = lines.size();
  return segs;
}

}  // namespace

Patch DiffText(std::string_view approx_text, std::string_view truth_text) {
  const std::vector<Line> a = Tokenize(approx_text);
  const std::vector<Line> t = Tokenize(truth_text);
  const std::vector<Segment> sa = Segments(a);
  const std::vector<Segment> st = Segments(t);

  // LCS over segment keys.
  const size_t n = sa.size(), m = st.size();
  std::vector<uint32_t> lcs((n + 1) * (m + 1), 0);
  auto at = [&](size_t i, size_t j) -> uint32_t& { return lcs[i * (m + 1) + j]; };
  for (size_t i = n; i-- > 0;) {
    for (size_t j = m; j-- > 0;) {
      at(i, j) = sa[i].key == st[j].key ? at(i + 1, j + 1) + 1
                                        : std::max(at(i + 1, j), at(i, j + 1));
    }
  }
  OpBuilder b;
  size_t i = 0, j = 0;
  while (i < n || j < m) {
    if (i < n && j < m && sa[i].key == st[j].key) {
      DiffRange(b, a, sa[i].begin, sa[i].end, t, st[j].begin, st[j].end);
      ++i;
      ++j;
    } else if (j == m || (i < n && at(i + 1, j) >= at(i, j + 1))) {
      b.Delete(sa[i].end - sa[i].begin);
      ++i;
    } else {
      for (size_t k = st[j].begin; k < st[j].end; ++k) b.Insert(t[k].text);
      ++j;
    }
  }
  return b.Finish();
}

Patch Diff(const SymbolFile& approx, const SymbolFile& truth) {
  return DiffText(EmitSymbolFile(approx), EmitSymbolFile(truth));
}

std::string ApplyText(std::string_view approx_text, const Patch& patch) {
  const std::vector<std::string_view> lines = SplitLines(approx_text);
  std::string out;
  size_t cur = 0;
  auto take = [&](uint64_t n) {
    if (n > lines.size() - cur) {
      throw Error(ErrorKind::kPatchCorrupt, "patch consumes past the end of the input");
    }
    size_t first = cur;
    cur += n;
    return first;
  };
  for (const PatchOp& op : patch.ops) {
    switch (op.kind) {
      case PatchOpKind::kKeep:
        for (size_t k = take(op.count); k < cur; ++k) {
          out += lines[k];
          out += '\n';
        }
        break;
      case PatchOpKind::kShift:
        for (size_t k = take(op.count); k < cur; ++k) {
          std::optional<std::string> s = ShiftLine(lines[k], op.delta);
          if (!s) {
            throw Error(ErrorKind::kPatchCorrupt,
                        "cannot shift line " + std::to_string(k + 1));
          }
          out += *s;
          out += '\n';
        }
        break;
      case PatchOpKind::kReplace:
      case PatchOpKind::kDelete:
        take(op.count);
        [[fallthrough]];
      case PatchOpKind::kInsert:
        for (const std::string& l : op.lines) {
          out += l;
          out += '\n';
        }
        break;
    }
  }
  if (cur != lines.size()) {
    throw Error(ErrorKind::kPatchCorrupt,
                "patch consumed " + std::to_string(cur) + " of " +
                    std::to_string(lines.size()) + " lines");
  }
  return out;
}

SymbolFile Apply(const SymbolFile& approx, const Patch& patch) {
  std::string text = ApplyText(EmitSymbolFile(approx), patch);
  try {
    return ParseSymbolFile(text);
  } catch (const Error& e) {
    throw Error(ErrorKind::kPatchCorrupt,
                std::string("patched symbol file is invalid: ") + e.what());
  }
}

namespace internal {

void PutVarint(std::vector<uint8_t>& out, uint64_t v) {
  while (v >= 0x80) {
    out.push_back(static_cast<uint8_t>(v | 0x80));
    v >>= 7;
  }
  out.push_back(static_cast<uint8_t>(v));
}

bool GetVarint(const uint8_t*& p, const uint8_t* end, uint64_t* v) {
  uint64_t result = 0;
  for (int shift = 0; shift < 64; shift += 7) {
    if (p == end) return false;
    const uint8_t byte = *p++;
    result |= uint64_t{byte & 0x7fu} << shift;
    if (!(byte & 0x80)) {
      *v = result;
      return true;
    }
  }
  return false;
}

}  // namespace internal

namespace {

uint64_t ZigZag(int64_t v) {
  return (static_cast<uint64_t>(v) << 1) ^ static_cast<uint64_t>(v >> 63);
}
int64_t UnZigZag(uint64_t v) {
  return static_cast<int64_t>(v >> 1) ^ -static_cast<int64_t>(v & 1);
}

void PutLines(std::vector<uint8_t>& out, const std::vector<std::string>& lines) {
  internal::PutVarint(out, lines.size());
  for (const std::string& l : lines) {
    internal::PutVarint(out, l.size());
    out.insert(out.end(), l.begin(), l.end());
  }
}

}  // namespace

std::vector<uint8_t> SerializePatch(const Patch& patch) {
  std::vector<uint8_t> out;
  internal::PutVarint(out, patch.ops.size());
  for (const PatchOp& op : patch.ops) {
    out.push_back(static_cast<uint8_t>(op.kind));
    switch (op.kind) {
      case PatchOpKind::kKeep:
      case PatchOpKind::kDelete:
        internal::PutVarint(out, op.count);
        break;
      case PatchOpKind::kShift:
        internal::PutVarint(out, op.count);
        internal::PutVarint(out, ZigZag(op.delta));
        break;
      case PatchOpKind::kReplace:
        internal::PutVarint(out, op.count);
        PutLines(out, op.lines);
        break;
      case PatchOpKind::kInsert:
        PutLines(out, op.lines);
        break;
    }
  }
  return out;
}

Patch DeserializePatch(const uint8_t* data, size_t size) {
  const uint8_t* p = data;
  const uint8_t* end = data + size;
  auto fail = [](const std::string& msg) -> void {
    throw Error(ErrorKind::kPatchCorrupt, "patch encoding: " + msg);
  };
  auto varint = [&]() {
    uint64_t v = 0;
    if (!internal::GetVarint(p, end, &v)) fail("truncated varint");
    return v;
  };
  auto lines = [&]() {
    std::vector<std::string> out;
    const uint64_t n = varint();
    if (n > static_cast<uint64_t>(end - p)) fail("line count exceeds input");
    for (uint64_t k = 0; k < n; ++k) {
      const uint64_t len = varint();
      if (len > static_cast<uint64_t>(end - p)) fail("line exceeds input");
      out.emplace_back(reinterpret_cast<const char*>(p), len);
      p += len;
    }
    return out;
  };
  Patch patch;
  const uint64_t n_ops = varint();
  if (n_ops > size) fail("op count exceeds input");
  for (uint64_t k = 0; k < n_ops; ++k) {
    if (p == end) fail("truncated op");
    const uint8_t kind = *p++;
    PatchOp op;
    switch (kind) {
      case 0:
      case 3:
        op.kind = static_cast<PatchOpKind>(kind);
        op.count = varint();
        break;
      case 4:
        op.kind = PatchOpKind::kShift;
        op.count = varint();
        op.delta = UnZigZag(varint());
        break;
      case 1:
        op.kind = PatchOpKind::kReplace;
        op.count = varint();
        op.lines = lines();
        break;
      case 2:
        op.kind = PatchOpKind::kInsert;
        op.lines = lines();
        break;
      default:
        fail("unknown op " + std::to_string(kind));
    }
    patch.ops.push_back(std::move(op));
  }
  if (p != end) fail("trailing bytes");
  return patch;
}

}  // namespace deltapad
