// Error type shared by every deltapad module.

#ifndef DELTAPAD_ERROR_H_
#define DELTAPAD_ERROR_H_

#include <stdexcept>
#include <string>

namespace deltapad {

enum class ErrorKind {
  kParse,             // malformed text input (symbol file, model, logs, dumps)
  kSerialize,         // a value violates its invariants and cannot be emitted
  kMalformedExpr,     // postfix expression arity error
  kUnknownRegister,   // expression references a register with no value
  kMemoryOutOfRange,  // dereference outside the captured stack
  kNoUnwindInfo,      // pc is in no STACK CFI region
  kLayout,            // layout engine could not satisfy its constraints
  kReplicationInput,  // opportunity log does not match the default symbol file
  kPatchCorrupt,      // patch does not fit the approximation
  kBadMagic,
  kBadVersion,
  kLength,
  kAuth,
  kModuleMismatch,
  kHarness,           // crash-simulation request inconsistent with the model
  kInput,             // generic invalid argument
};

const char* ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace deltapad

#endif  // DELTAPAD_ERROR_H_
