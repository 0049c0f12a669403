#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pcc {

// All numerics run in 64-bit; gradient checks rely on it.
using real = double;

// Violated precondition or shape contract on an API call.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A forward op produced NaN/Inf, or a loss went non-finite.
class NumericFault : public std::runtime_error {
 public:
  NumericFault(const std::string& what, const std::string& op, std::int64_t node_id)
      : std::runtime_error(what), op_kind(op), node_id(node_id) {}
  std::string op_kind;
  std::int64_t node_id = -1;
};

// Malformed file content (text or binary).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem-level failure (missing file, write error).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Checkpoint restore failure: version mismatch, truncation, corruption.
class RestoreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ContractViolation(msg);
}

}  // namespace pcc
