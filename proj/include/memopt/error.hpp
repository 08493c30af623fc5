// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace memopt {

enum class ErrorCode {
  kSyntax,
  kUnmatchedRing,
  kValence,
  kMultiFragment,
  kUnsupportedAtom,
  kNoApplicableSite,
  kWidthMismatch,
  kBudgetExhausted,
  kMissingEntry,
  kProtocol,
  kTimeout,
  kEmptyBank,
  kLengthMismatch,
  kConfig,
  kIo,
  kNoLeads,
};

std::string_view error_code_name(ErrorCode code);

class Error: public std::runtime_error {
public:
  Error(ErrorCode code, const std::string &message)
      : std::runtime_error(message), code_(code) { }

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

}  // namespace memopt
