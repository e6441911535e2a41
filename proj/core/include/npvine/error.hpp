#pragma once

#include <stdexcept>
#include <string>

namespace npvine {

enum class ErrorKind {
  domain,             // argument outside the mathematical domain
  degenerate_sample,  // zero-variance column or sample
  insufficient_data,  // too few rows for the requested operation
  structural,         // vine structure cannot provide the requested quantity
  configuration,      // model or option not set up for the call
  schema_mismatch,    // column sets disagree
  parse,              // malformed CSV or model file
  degenerate_metric,  // metric undefined for the input (e.g. zero-variance truth)
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace npvine
