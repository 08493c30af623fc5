// SPDX-License-Identifier: Apache-2.0

#include "memopt/error.hpp"

namespace memopt {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
  case ErrorCode::kSyntax:
    return "SyntaxError";
  case ErrorCode::kUnmatchedRing:
    return "UnmatchedRing";
  case ErrorCode::kValence:
    return "ValenceError";
  case ErrorCode::kMultiFragment:
    return "MultiFragment";
  case ErrorCode::kUnsupportedAtom:
    return "UnsupportedAtom";
  case ErrorCode::kNoApplicableSite:
    return "NoApplicableSite";
  case ErrorCode::kWidthMismatch:
    return "WidthMismatch";
  case ErrorCode::kBudgetExhausted:
    return "BudgetExhausted";
  case ErrorCode::kMissingEntry:
    return "MissingEntry";
  case ErrorCode::kProtocol:
    return "ProtocolError";
  case ErrorCode::kTimeout:
    return "Timeout";
  case ErrorCode::kEmptyBank:
    return "EmptyBank";
  case ErrorCode::kLengthMismatch:
    return "LengthMismatch";
  case ErrorCode::kConfig:
    return "ConfigError";
  case ErrorCode::kIo:
    return "IoError";
  case ErrorCode::kNoLeads:
    return "NoLeads";
  }
  return "Error";
}

}  // namespace memopt
