#pragma once

#include <stdexcept>
#include <string>

namespace gpra {

enum class ErrorKind {
  invalid_geometry,
  invalid_argument,
  no_real_root,
  quadrature_failure,
  out_of_domain,
  insufficient_jet_order,
  shape_mismatch,
  non_finite,
  diverged,
  no_convergence,
  evaluator_failure,
  config,
  io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace gpra
