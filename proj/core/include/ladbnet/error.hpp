#pragma once

#include <stdexcept>
#include <string>

namespace ladbnet {

/// Base for every error the library raises. `kind()` is a short stable tag
/// used by the CLI to emit machine-parsable diagnostics.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define LADBNET_DEFINE_ERROR(Name, tag)                                  \
  class Name : public Error {                                            \
   public:                                                               \
    explicit Name(const std::string& message) : Error(tag, message) {}   \
  }

LADBNET_DEFINE_ERROR(DimensionError, "dimension");
LADBNET_DEFINE_ERROR(ConfigError, "config");
LADBNET_DEFINE_ERROR(ContractError, "contract");
LADBNET_DEFINE_ERROR(FormatError, "format");
LADBNET_DEFINE_ERROR(SchemaError, "schema");
LADBNET_DEFINE_ERROR(ParseError, "parse");
LADBNET_DEFINE_ERROR(StateError, "state");
LADBNET_DEFINE_ERROR(InsufficientDataError, "insufficient_data");
LADBNET_DEFINE_ERROR(NumericError, "numeric");
LADBNET_DEFINE_ERROR(StructuralError, "structural");
LADBNET_DEFINE_ERROR(CalibrationError, "calibration");
LADBNET_DEFINE_ERROR(GuardError, "guard");
LADBNET_DEFINE_ERROR(InternalError, "internal");
LADBNET_DEFINE_ERROR(IoError, "io");

#undef LADBNET_DEFINE_ERROR

}  // namespace ladbnet
