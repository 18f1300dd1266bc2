#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace splitlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An orbit on a chart box left the box.
class OrbitEscapeError : public Error {
 public:
  OrbitEscapeError(long step, const std::string& what)
      : Error(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

/// The E and F bases at some orbit point are (numerically) dependent.
class SplittingDegeneracyError : public Error {
 public:
  SplittingDegeneracyError(long orbit_index, double condition, const std::string& what)
      : Error(what), orbit_index_(orbit_index), condition_(condition) {}
  long orbit_index() const { return orbit_index_; }
  double condition() const { return condition_; }

 private:
  long orbit_index_;
  double condition_;
};

/// Iterative refinement did not settle; carries the per-iteration angle history.
class ConvergenceError : public Error {
 public:
  ConvergenceError(std::vector<double> history, const std::string& what)
      : Error(what), history_(std::move(history)) {}
  const std::vector<double>& history() const { return history_; }

 private:
  std::vector<double> history_;
};

/// A hypothesis an operation depends on does not hold for the given input.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A finite-difference stencil or integration path left the chart.
class StencilEscapeError : public Error {
 public:
  using Error::Error;
};

/// The projected coordinate frame lost rank inside the requested ball.
class FrameInstabilityError : public Error {
 public:
  using Error::Error;
};

/// An independent oracle contradicted the implementation.
class OracleFailure : public Error {
 public:
  OracleFailure(Mat witness, const std::string& what) : Error(what), witness_(std::move(witness)) {}
  const Mat& witness() const { return witness_; }

 private:
  Mat witness_;
};

/// Malformed or out-of-range run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace splitlab
