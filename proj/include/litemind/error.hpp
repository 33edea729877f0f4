#pragma once

#include <stdexcept>
#include <string>

namespace litemind {

// Exit codes used by the CLI. Library code throws; tools/ maps to these.
enum class ExitCode : int {
  ok = 0,
  config = 2,
  data = 3,
  verification = 4,
  remote = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(ExitCode::config, what) {}
};

// Shape mismatches, bad files, inconsistent manifests.
struct DataError : Error {
  explicit DataError(const std::string& what) : Error(ExitCode::data, what) {}
};

// Non-finite values, failed gradient checks, diverged updates.
struct NumericError : Error {
  explicit NumericError(const std::string& what) : Error(ExitCode::verification, what) {}
};

struct RemoteError : Error {
  enum class Kind { timeout, http_status, malformed, connection, validation };
  RemoteError(Kind kind, const std::string& what) : Error(ExitCode::remote, what), kind(kind) {}
  Kind kind;
};

}  // namespace litemind
