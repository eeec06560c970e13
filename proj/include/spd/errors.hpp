#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace spd {

enum class ErrorCode {
  invalid_argument,
  infeasible,
  domain,
  singularity,
  negativity,
  solver,
  unsupported,
  io,
};

/// Base exception for everything thrown by the library. The C API maps
/// `code()` onto its status enum.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Thrown by density evaluation when the multiplier polynomial leaves [0, 1).
class PointError : public Error {
 public:
  PointError(ErrorCode code, const std::string& what, double x) : Error(code, what), x_(x) {}
  double where() const noexcept { return x_; }

 private:
  double x_;
};

/// Thrown by the optimizer when the objective or a constraint is not finite.
class NonFiniteError : public Error {
 public:
  NonFiniteError(const std::string& what, std::vector<double> point)
      : Error(ErrorCode::solver, what), point_(std::move(point)) {}
  const std::vector<double>& point() const noexcept { return point_; }

 private:
  std::vector<double> point_;
};

}  // namespace spd
