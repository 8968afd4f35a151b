#pragma once

#include <stdexcept>
#include <string>

namespace risbc {

// Every error carries a short machine-readable code ("config_invalid",
// "shape_mismatch", ...) next to the human-readable message.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
  explicit ConfigError(const std::string& message) : Error("config_invalid", message) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& message) : Error("shape_mismatch", message) {}
};

class ActionError : public Error {
 public:
  explicit ActionError(const std::string& message) : Error("action_out_of_range", message) {}
};

class NotReadyError : public Error {
 public:
  explicit NotReadyError(const std::string& message) : Error("buffer_not_ready", message) {}
};

class ArtifactError : public Error {
 public:
  using Error::Error;
  explicit ArtifactError(const std::string& message) : Error("artifact_mismatch", message) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& message) : Error("non_finite_value", message) {}
};

}  // namespace risbc
