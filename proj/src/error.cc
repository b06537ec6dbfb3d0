#include "deltapad/error.h"

namespace deltapad {

const char* ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kSerialize: return "serialize";
    case ErrorKind::kMalformedExpr: return "malformed-expression";
    case ErrorKind::kUnknownRegister: return "unknown-register";
    case ErrorKind::kMemoryOutOfRange: return "memory-out-of-range";
    case ErrorKind::kNoUnwindInfo: return "no-unwind-info";
    case ErrorKind::kLayout: return "layout";
    case ErrorKind::kReplicationInput: return "replication-input";
    case ErrorKind::kPatchCorrupt: return "patch-corrupt";
    case ErrorKind::kBadMagic: return "bad-magic";
    case ErrorKind::kBadVersion: return "bad-version";
    case ErrorKind::kLength: return "length";
    case ErrorKind::kAuth: return "authentication";
    case ErrorKind::kModuleMismatch: return "module-mismatch";
    case ErrorKind::kHarness: return "harness";
    case ErrorKind::kInput: return "input";
  }
  return "unknown";
}

}  // namespace deltapad
