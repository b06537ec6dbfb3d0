// Small string helpers shared by the text formats. Internal header.

#ifndef DELTAPAD_SRC_TEXT_UTIL_H_
#define DELTAPAD_SRC_TEXT_UTIL_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace deltapad::internal {

// Splits on runs of spaces and tabs.
std::vector<std::string_view> SplitWords(std::string_view s);

// Splits into at most `max_fields` words; the last field keeps the rest of
// the line verbatim (minus leading blanks).
std::vector<std::string_view> SplitWordsLimited(std::string_view s,
                                                size_t max_fields);

std::vector<std::string_view> SplitLines(std::string_view text);
std::vector<std::string_view> Split(std::string_view s, char sep);

bool ParseInt(std::string_view token, int64_t* out);
bool ParseUint(std::string_view token, uint64_t* out);

// key=value lookups for the "k=v" style fields used in model and log files.
bool ParseKeyValue(std::string_view token, std::string_view key,
                   std::string_view* value);

std::string Join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace deltapad::internal

#endif  // DELTAPAD_SRC_TEXT_UTIL_H_
