#pragma once

#include <stdexcept>
#include <string>

namespace raman {

// Base for every failure raised by the library; `kind` is a short
// machine-readable tag used by the CLI's error JSON.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what) : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

struct InvalidArgument : Error {
  explicit InvalidArgument(const std::string& what) : Error("invalid_argument", what) {}
};

struct IntegrationError : Error {
  explicit IntegrationError(const std::string& what) : Error("integration_error", what) {}
};

struct EstimationError : Error {
  explicit EstimationError(const std::string& what) : Error("estimation_error", what) {}
};

}  // namespace raman
