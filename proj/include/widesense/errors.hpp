#pragma once

#include <stdexcept>
#include <string>

namespace widesense {

/// Input outside an operation's domain (bad parameters, malformed data).
class DomainError : public std::invalid_argument {
 public:
  explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

/// Segmentation produced no usable subband partition.
class DegeneratePartitionError : public DomainError {
 public:
  explicit DegeneratePartitionError(const std::string& what) : DomainError(what) {}
};

/// An iterative numerical routine failed to meet its contract.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace widesense
