// Pseudo-random program corpora standing in for real benchmark programs.

#ifndef DELTAPAD_CORPUS_H_
#define DELTAPAD_CORPUS_H_

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "deltapad/progmodel.h"

namespace deltapad {

enum class SizeClass { kSmall, kMedium };

// "small" / "medium"; throws Error(kInput) for anything else.
SizeClass ParseSizeClass(std::string_view text);

// One program. Functions call only functions with a higher index, so the
// call graph is a DAG rooted at the low indices.
ProgramModel GenerateProgram(uint64_t seed, std::string_view module_name,
                             SizeClass size_class);

// `n_programs` programs named prog_000, prog_001, ...; deterministic in
// (seed, n_programs, size_class).
std::vector<ProgramModel> GenerateCorpus(uint64_t seed, size_t n_programs,
                                         SizeClass size_class);

}  // namespace deltapad

#endif  // DELTAPAD_CORPUS_H_
