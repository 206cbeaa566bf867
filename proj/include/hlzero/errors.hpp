#pragma once

#include <stdexcept>
#include <string>

namespace hlzero {

/// Argument outside the admissible domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Evaluation hit a pole of a rational map.
class SingularityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An internal numerical invariant failed. Never expected on valid input.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A point handed to the inverse cluster map lies inside the cluster.
class InsideClusterError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Two reports could not be lined up row by row.
class AlignmentError : public DomainError {
 public:
  using DomainError::DomainError;
};

}  // namespace hlzero
