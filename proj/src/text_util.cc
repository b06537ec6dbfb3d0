#include "text_util.h"

#include <charconv>

namespace deltapad::internal {

namespace {
bool IsBlank(char c) { return c == ' ' || c == '\t'; }
}  // namespace

std::vector<std::string_view> SplitWords(std::string_view s) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && IsBlank(s[i])) ++i;
    size_t start = i;
    while (i < s.size() && !IsBlank(s[i])) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

std::vector<std::string_view> SplitWordsLimited(std::string_view s,
                                                size_t max_fields) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < s.size() && out.size() + 1 < max_fields) {
    while (i < s.size() && IsBlank(s[i])) ++i;
    size_t start = i;
    while (i < s.size() && !IsBlank(s[i])) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  while (i < s.size() && IsBlank(s[i])) ++i;
  if (i < s.size()) out.push_back(s.substr(i));
  return out;
}

std::vector<std::string_view> SplitLines(std::string_view text) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (start < text.size()) {
    size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      out.push_back(text.substr(start));
      break;
    }
    out.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return out;
}

std::vector<std::string_view> Split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

bool ParseInt(std::string_view token, int64_t* out) {
  if (token.empty()) return false;
  if (token.front() == '+') return false;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(),
                                   *out, 10);
  return ec == std::errc() && ptr == token.data() + token.size();
}

bool ParseUint(std::string_view token, uint64_t* out) {
  if (token.empty() || token.front() == '-' || token.front() == '+') {
    return false;
  }
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(),
                                   *out, 10);
  return ec == std::errc() && ptr == token.data() + token.size();
}

bool ParseKeyValue(std::string_view token, std::string_view key,
                   std::string_view* value) {
  if (token.size() <= key.size() || token.substr(0, key.size()) != key ||
      token[key.size()] != '=') {
    return false;
  }
  *value = token.substr(key.size() + 1);
  return true;
}

std::string Join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace deltapad::internal
