#pragma once

#include <stdexcept>
#include <string>

namespace smsdw {

// Exit codes used by the command-line front end.
enum class ExitCode : int {
  ok = 0,
  config_error = 1,
  runtime_divergence = 2,
  analysis_failure = 3,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ExitCode::config_error, what) {}
};

class DivergenceError : public Error {
 public:
  explicit DivergenceError(const std::string& what) : Error(ExitCode::runtime_divergence, what) {}
};

class AnalysisError : public Error {
 public:
  explicit AnalysisError(const std::string& what) : Error(ExitCode::analysis_failure, what) {}
};

}  // namespace smsdw
