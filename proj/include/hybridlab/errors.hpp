#pragma once

#include <stdexcept>
#include <string>

namespace hybridlab {

// Malformed or inconsistent caller input (bad pmf, alphabet mismatch, ...).
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

// A configured size cap (codebook memory, grid cardinality) would be exceeded.
class ResourceLimitError : public std::runtime_error {
 public:
  explicit ResourceLimitError(const std::string& what) : std::runtime_error(what) {}
};

// An internal consistency check failed; indicates a bug, not bad input.
class InvariantError : public std::logic_error {
 public:
  explicit InvariantError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace hybridlab
