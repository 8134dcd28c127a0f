#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace surfctrl {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OutsideTubularNeighborhood : public Error {
 public:
  using Error::Error;
};

class DegenerateTriangle : public Error {
 public:
  using Error::Error;
};

class UnknownFunction : public Error {
 public:
  using Error::Error;
};

class NoBoundary : public Error {
 public:
  using Error::Error;
};

class NonSymmetricOperator : public Error {
 public:
  using Error::Error;
};

class IncompatibleRHS : public Error {
 public:
  using Error::Error;
};

class SingularSystem : public Error {
 public:
  using Error::Error;
};

class NoValidM : public Error {
 public:
  using Error::Error;
};

class NonpositiveError : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

/// CG ran out of iterations. Keeps the best iterate so callers may inspect it.
class MaxIterationsExceeded : public Error {
 public:
  MaxIterationsExceeded(const std::string& what, Eigen::VectorXd best, double residual)
      : Error(what), best_iterate(std::move(best)), relative_residual(residual) {}
  Eigen::VectorXd best_iterate;
  double relative_residual;
};

/// Outer Newton loop did not reach the requested residual.
class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& what, std::vector<double> history)
      : Error(what), residual_history(std::move(history)) {}
  std::vector<double> residual_history;
};

}  // namespace surfctrl
