#pragma once

#include <stdexcept>
#include <string>

namespace vmlab {

// Error classes double as the machine-parsable error tags printed by the CLI.
class Error : public std::runtime_error {
  public:
    Error(std::string cls, const std::string& msg)
        : std::runtime_error(msg), class_(std::move(cls)) {}
    const std::string& error_class() const { return class_; }

  private:
    std::string class_;
};

class ConfigError : public Error {
  public:
    explicit ConfigError(const std::string& msg) : Error("config-error", msg) {}
};

class ConstraintError : public Error {
  public:
    explicit ConstraintError(const std::string& msg) : Error("constraint-violation", msg) {}
};

class NumericalError : public Error {
  public:
    explicit NumericalError(const std::string& msg) : Error("numerical-error", msg) {}
};

class ToleranceError : public Error {
  public:
    explicit ToleranceError(const std::string& msg) : Error("tolerance-error", msg) {}
};

class UnsupportedError : public Error {
  public:
    explicit UnsupportedError(const std::string& msg) : Error("unsupported-configuration", msg) {}
};

class IoError : public Error {
  public:
    explicit IoError(const std::string& msg) : Error("io-error", msg) {}
};

class InternalError : public Error {
  public:
    explicit InternalError(const std::string& msg) : Error("internal-error", msg) {}
};

}  // namespace vmlab
