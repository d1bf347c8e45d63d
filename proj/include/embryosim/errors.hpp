#pragma once

#include <stdexcept>
#include <string>

namespace embryosim {

// Malformed input text (CSV rows, NRRD headers, JSON documents).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Well-formed input that violates a domain invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace embryosim
