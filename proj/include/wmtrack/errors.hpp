#ifndef WMTRACK_ERRORS_HPP
#define WMTRACK_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace wmtrack {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Failures of the numerics rather than of the inputs. The CLI maps these to exit code 3.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A measurement outcome with (numerically) zero probability was forced onto a state.
class ZeroProbabilityOutcome : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// tr[M^dagger M] vanished for a single Kraus operator.
class DegenerateOperator : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// The normalisation integral of a whole measurement record vanished.
class DegenerateRecord : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// The coefficient recursion lost more bits to cancellation than the working
/// precision can spare. Raise the precision.
class PrecisionExhausted : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Recursion and quadrature disagree. Never expected in a correct build.
class OracleMismatch : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Delta p = 0: the measurements never decohere the state.
class NoDecoherence : public Error {
 public:
  using Error::Error;
};

class InvalidBounds : public Error {
 public:
  using Error::Error;
};

/// An analysis window holds too few samples for a fit.
class InsufficientData : public Error {
 public:
  using Error::Error;
};

/// Invalid run configuration. `field` names the offending key, `line` is the
/// 1-based line of the config file (0 when the value did not come from a file).
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message, int line = 0)
      : Error(format(field, message, line)), field_(std::move(field)), message_(message), line_(line) {}

  const std::string& field() const noexcept { return field_; }
  /// The diagnostic without the line/field prefix.
  const std::string& message() const noexcept { return message_; }
  int line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& field, const std::string& message, int line) {
    std::string out;
    if (line > 0) out += "line " + std::to_string(line) + ": ";
    if (!field.empty()) out += field + ": ";
    return out + message;
  }

  std::string field_;
  std::string message_;
  int line_ = 0;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace wmtrack

#endif  // WMTRACK_ERRORS_HPP
