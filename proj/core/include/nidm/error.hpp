#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nidm {

/// Position of a diagnostic inside some input text. Lines and columns are 1-based.
struct SourceSpan {
  std::size_t line = 1;
  std::size_t column = 1;
  std::size_t length = 0;

  friend bool operator==(const SourceSpan&, const SourceSpan&) = default;
};

/// Base for every domain failure raised by the toolkit. `code()` is a stable
/// machine-readable tag ("DuplicateId", "ParseError", ...) used by the CLI and
/// the REST error bodies.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class DuplicateId : public Error {
 public:
  explicit DuplicateId(std::string id)
      : Error("DuplicateId", "duplicate record id '" + id + "'"), id_(std::move(id)) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

class UnknownId : public Error {
 public:
  explicit UnknownId(std::string id, const std::string& why = "unknown record id")
      : Error("UnknownId", why + " '" + id + "'"), id_(std::move(id)) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

class NotACollection : public Error {
 public:
  explicit NotACollection(const std::string& id)
      : Error("NotACollection", "record '" + id + "' is not a prov:Collection entity") {}
};

/// Malformed input. `expected` and `found` are filled by the text parsers;
/// `path` by the structured ones (XML element path, JSON pointer).
class ParseError : public Error {
 public:
  ParseError(SourceSpan span, std::string expected, std::string found, std::string path = {})
      : Error("ParseError", describe(span, expected, found, path)),
        span_(span),
        expected_(std::move(expected)),
        found_(std::move(found)),
        path_(std::move(path)) {}

  const SourceSpan& span() const noexcept { return span_; }
  const std::string& expected() const noexcept { return expected_; }
  const std::string& found() const noexcept { return found_; }
  const std::string& path() const noexcept { return path_; }

 private:
  static std::string describe(const SourceSpan& span, const std::string& expected,
                              const std::string& found, const std::string& path);

  SourceSpan span_;
  std::string expected_;
  std::string found_;
  std::string path_;
};

class UndeclaredPrefix : public Error {
 public:
  UndeclaredPrefix(std::string prefix, SourceSpan span = {})
      : Error("UndeclaredPrefix", "undeclared namespace prefix '" + prefix + "' at line " +
                                      std::to_string(span.line) + ", column " +
                                      std::to_string(span.column)),
        prefix_(std::move(prefix)),
        span_(span) {}
  const std::string& prefix() const noexcept { return prefix_; }
  const SourceSpan& span() const noexcept { return span_; }

 private:
  std::string prefix_;
  SourceSpan span_;
};

class UnknownElement : public Error {
 public:
  UnknownElement(const std::string& name, const std::string& path)
      : Error("UnknownElement", "unrecognized element <" + name + "> at " + path) {}
};

class CycleDetected : public Error {
 public:
  explicit CycleDetected(const std::string& term)
      : Error("CycleDetected", "term mapping cycle through '" + term + "'") {}
};

class UnknownCanonical : public Error {
 public:
  explicit UnknownCanonical(const std::string& term)
      : Error("UnknownCanonical", "mapping target '" + term + "' has no term definition") {}
};

/// Query text or query structure rejected. The span points into the query string
/// when the failure came from the parser.
class BadQuery : public Error {
 public:
  BadQuery(const std::string& message, SourceSpan span = {}, std::string expected = {},
           std::string found = {})
      : Error("BadQuery", message),
        span_(span),
        expected_(std::move(expected)),
        found_(std::move(found)) {}
  const SourceSpan& span() const noexcept { return span_; }
  const std::string& expected() const noexcept { return expected_; }
  const std::string& found() const noexcept { return found_; }

 private:
  SourceSpan span_;
  std::string expected_;
  std::string found_;
};

class RuleError : public Error {
 public:
  RuleError(std::size_t rule_index, const std::string& message)
      : Error("RuleError", "rule " + std::to_string(rule_index) + ": " + message),
        rule_index_(rule_index) {}
  std::size_t rule_index() const noexcept { return rule_index_; }

 private:
  std::size_t rule_index_;
};

class UnbalancedStep : public Error {
 public:
  UnbalancedStep(std::size_t line, const std::string& message)
      : Error("UnbalancedStep", "line " + std::to_string(line) + ": " + message) {}
};

class LoadError : public Error {
 public:
  LoadError(const std::string& file, const std::string& why)
      : Error("LoadError", "cannot load '" + file + "': " + why) {}
};

class BindError : public Error {
 public:
  explicit BindError(const std::string& why) : Error("BindError", why) {}
};

class NoEndpoints : public Error {
 public:
  NoEndpoints() : Error("NoEndpoints", "federation has no endpoints") {}
};

}  // namespace nidm
