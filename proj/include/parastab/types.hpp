#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace parastab {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using RowVec3 = Eigen::RowVector3d;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Error hierarchy. Everything thrown by the library derives from Error so the
// CLI can map failures onto its exit-code contract.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A structural assumption on the plant does not hold (uncontrollable reaction
// chain, singular actuator matrix, ...).
class AssumptionViolation : public Error {
 public:
  using Error::Error;
};

// A tuning or numerical parameter is outside its admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Malformed configuration input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Numerical breakdown inside a solver (root bracketing, factorizations).
class NumericalError : public Error {
 public:
  using Error::Error;
};

inline Mat3 sym(const Mat3& m) { return 0.5 * (m + m.transpose()); }

inline MatrixXd sym(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

// Induced 2-norm.
double spectral_norm(const MatrixXd& m);

// Largest eigenvalue of the symmetric part.
double max_sym_eigenvalue(const MatrixXd& m);

}  // namespace parastab
