#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace cip {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dimension mismatches and invalid configuration. Not recoverable by the caller.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what, std::string field = {})
      : Error(what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Input data that cannot support estimation (zero-variance column, too few rows).
class DegenerateInputError : public Error {
 public:
  DegenerateInputError(const std::string& what, std::string column)
      : Error(what), column_(std::move(column)) {}
  const std::string& column() const { return column_; }

 private:
  std::string column_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::int64_t line)
      : Error(what), line_(line) {}
  std::int64_t line() const { return line_; }

 private:
  std::int64_t line_;
};

struct DiagnosticEvent {
  std::string kind;
  std::string detail;
};

// Non-fatal events: rejected updates, clamped actions, skipped refits.
class Diagnostics {
 public:
  void record(std::string kind, std::string detail = {});
  std::int64_t count(const std::string& kind) const;
  const std::vector<DiagnosticEvent>& events() const { return events_; }
  const std::map<std::string, std::int64_t>& counts() const { return counts_; }

 private:
  static constexpr std::size_t kMaxStoredEvents = 256;
  std::vector<DiagnosticEvent> events_;
  std::map<std::string, std::int64_t> counts_;
};

}  // namespace cip
