#pragma once

#include <stdexcept>
#include <string>

namespace va {

// Every error carries a short machine-readable code; the CLI prints it as
// `error[<code>]: <message>` and maps the category onto an exit status.
enum class ErrorCategory { Validation, Io };

class Error : public std::runtime_error {
  public:
    Error(std::string code, const std::string &message, ErrorCategory category)
        : std::runtime_error(message), code_(std::move(code)), category_(category) {}

    const std::string &code() const noexcept { return code_; }
    ErrorCategory category() const noexcept { return category_; }

  private:
    std::string code_;
    ErrorCategory category_;
};

class ValidationError : public Error {
  public:
    explicit ValidationError(const std::string &message, std::string code = "validation")
        : Error(std::move(code), message, ErrorCategory::Validation) {}
};

class FormatError : public Error {
  public:
    explicit FormatError(const std::string &message)
        : Error("format", message, ErrorCategory::Validation) {}
};

class ConfigError : public Error {
  public:
    explicit ConfigError(const std::string &message)
        : Error("config", message, ErrorCategory::Validation) {}
};

class AlignmentError : public Error {
  public:
    explicit AlignmentError(const std::string &message)
        : Error("alignment", message, ErrorCategory::Validation) {}
};

class TrainingError : public Error {
  public:
    explicit TrainingError(const std::string &message)
        : Error("training", message, ErrorCategory::Validation) {}
};

class InconsistencyError : public Error {
  public:
    explicit InconsistencyError(const std::string &message)
        : Error("inconsistency", message, ErrorCategory::Validation) {}
};

class UnsupportedError : public Error {
  public:
    explicit UnsupportedError(const std::string &message)
        : Error("unsupported", message, ErrorCategory::Validation) {}
};

class IoError : public Error {
  public:
    explicit IoError(const std::string &message) : Error("io", message, ErrorCategory::Io) {}
};

class FetchError : public Error {
  public:
    explicit FetchError(const std::string &message)
        : Error("fetch", message, ErrorCategory::Io) {}
};

class SchemaError : public Error {
  public:
    explicit SchemaError(const std::string &message)
        : Error("schema", message, ErrorCategory::Validation) {}
};

} // namespace va
