#pragma once

#include <stdexcept>
#include <string>

namespace crme {

/// Invalid dimensions, ranges, or configuration values passed by a caller.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An operation was attempted in a state that does not admit it, e.g.
/// answering a query batch that is not the pending one.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// The searched midpoint collapsed to zero, so the weight ratio relative to
/// the class-1 accuracy is unbounded.
class DegenerateRatioError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace crme
