#pragma once

#include <stdexcept>
#include <string>

namespace miqpc {

// Size or shape of an input does not match the problem it is used with.
class DimensionError : public std::invalid_argument {
 public:
  explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

// Cost matrix has negative curvature beyond tolerance; the embedded
// relaxation engine requires convexity.
class IndefiniteError : public std::invalid_argument {
 public:
  explicit IndefiniteError(const std::string& what) : std::invalid_argument(what) {}
};

// Flow queried outside the admissible timer interval [0, dt].
class FlowDomainError : public std::domain_error {
 public:
  explicit FlowDomainError(const std::string& what) : std::domain_error(what) {}
};

// A jump/flow precondition was violated by the caller.
class ContractError : public std::logic_error {
 public:
  explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

// Scenario configuration failed validation; message names the field.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace miqpc
