#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace iwatsuka {

/// Input that violates a documented precondition (maps to CLI exit code 1).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure that did not meet its accuracy contract (exit code 2).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-fatal diagnostics (e.g. a perturbation support outside the uniqueness
/// regime). The default sink writes one line to stderr.
using WarningSink = std::function<void(const std::string&)>;
void set_warning_sink(WarningSink sink);
void warn(const std::string& message);

}  // namespace iwatsuka
