#ifndef GLOBUG_ERROR_HPP
#define GLOBUG_ERROR_HPP

#include <stdexcept>
#include <string>

namespace globug {

/// Base class for all errors raised by the toolkit. `kind()` is a short
/// machine-readable tag used by the CLI's error line.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class CorpusError : public Error {
 public:
  explicit CorpusError(const std::string& message, std::string bug_id = {})
      : Error("corpus", message), bug_id_(std::move(bug_id)) {}

  /// Offending bug report, empty when the error is not tied to one.
  const std::string& bug_id() const noexcept { return bug_id_; }

 private:
  std::string bug_id_;
};

class ModelError : public Error {
 public:
  explicit ModelError(const std::string& message) : Error("model", message) {}
};

class ArtifactError : public Error {
 public:
  explicit ArtifactError(const std::string& message) : Error("artifact", message) {}
};

}  // namespace globug

#endif  // GLOBUG_ERROR_HPP
