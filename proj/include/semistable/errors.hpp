#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace semistable {

/// A quantity is requested outside the region where it is defined
/// (parameter out of range, ln of a non-positive number, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : std::runtime_error(what + " at position " + std::to_string(position)),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// ODE integration failed (no zero before s_max, step-size underflow, ...).
class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace semistable
