#pragma once

// Sturm-Liouville eigenpairs of -phi'' = lambda phi with the plant's boundary
// conditions, and the modal projection machinery built on them. Mode indices
// in the public API are 1-based (n = 1 is the lowest mode).

#include <parastab/model.hpp>
#include <parastab/quadrature.hpp>
#include <parastab/types.hpp>

#include <functional>
#include <vector>

namespace parastab {

class EigenBasis {
 public:
  enum class Family { Dirichlet, Neumann, General };

  // Dirichlet and Neumann use closed forms; any other boundary condition is
  // solved by bracketed bisection on the characteristic function. Throws
  // NumericalError naming the first mode index that could not be bracketed.
  static EigenBasis compute(const BoundaryConditions& bc, double length, int n_max);

  double lambda(int n) const { return modes_.at(n - 1).lambda; }
  double phi(int n, double x) const;
  double dphi(int n, double x) const;
  double d2phi(int n, double x) const { return -lambda(n) * phi(n, x); }

  std::vector<double> lambdas() const;
  int n_max() const { return static_cast<int>(modes_.size()); }
  double length() const { return length_; }
  const BoundaryConditions& bc() const { return bc_; }
  Family family() const { return family_; }

 private:
  // phi(x) = a * C(x) + b * S(x) with (C, S) = (cos wx, sin wx) for
  // lambda > 0, (cosh wx, sinh wx) for lambda < 0 and (1, x) for lambda = 0.
  struct Mode {
    double lambda = 0.0;
    double w = 0.0;
    double a = 0.0;
    double b = 0.0;
  };

  BoundaryConditions bc_;
  double length_ = 1.0;
  Family family_ = Family::General;
  std::vector<Mode> modes_;
};

// Eigenfunction actuators b_j = phi_j, j = 1..n.
ShapeFunctionSet eigenfunction_shapes(const EigenBasis& basis, int n);

// Coefficients z_n, n = 1..modes, stored row-wise (row n-1 holds z_n).
using ModalMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3>;

struct ModalState {
  ModalMatrix z;

  ModalState() = default;
  explicit ModalState(int modes) : z(ModalMatrix::Zero(modes, 3)) {}
  explicit ModalState(ModalMatrix coeffs) : z(std::move(coeffs)) {}

  int modes() const { return static_cast<int>(z.rows()); }
  Vec3 mode(int n) const { return z.row(n - 1).transpose(); }
  void set_mode(int n, const Vec3& v) { z.row(n - 1) = v.transpose(); }
  double norm() const { return z.norm(); }
  // First N mode vectors stacked as col{z_1, ..., z_N}.
  VectorXd head_stack(int n) const;
};

using VectorField = std::function<Vec3(double)>;

// Precomputed eigenfunction samples on a grid. project() and reconstruct()
// are the dense kernels used by the simulator.
class ModalSampler {
 public:
  ModalSampler(const EigenBasis& basis, const SpatialGrid& grid, int modes);

  // rows: grid points, columns: z1, z2, z3
  using Samples = Eigen::Matrix<double, Eigen::Dynamic, 3>;

  ModalMatrix project(const Samples& values) const;
  Samples reconstruct(const ModalMatrix& coeffs) const;
  Samples sample(const VectorField& field) const;

  int modes() const { return modes_; }
  const SpatialGrid& grid() const { return grid_; }

 private:
  SpatialGrid grid_;
  int modes_ = 0;
  MatrixXd phi_;           // grid points x modes
  MatrixXd weighted_phi_;  // modes x grid points, quadrature weights applied
};

ModalState project(const VectorField& field, const EigenBasis& basis,
                   const SpatialGrid& grid, int modes);

// Field samples at the grid points (rows), components as columns.
ModalSampler::Samples reconstruct(const ModalState& state, const EigenBasis& basis,
                                  const SpatialGrid& grid);

struct ActuatorMatrix {
  MatrixXd B_NN;     // row n holds (b_{1,n}, ..., b_{N,n}), b_{j,n} = <b_j, phi_n>
  MatrixXd inverse;
  double condition = 0.0;
  double tail_mass = 0.0;  // sum_k ||b_k||^2 - (first-N Fourier energy)
  VectorXd shape_norms_sq;

  int n() const { return static_cast<int>(B_NN.rows()); }
};

inline constexpr double kMaxActuatorCondition = 1e12;

// Throws AssumptionViolation when B_NN is singular or its condition number
// exceeds kMaxActuatorCondition.
ActuatorMatrix actuator_matrix(const ShapeFunctionSet& shapes, const EigenBasis& basis,
                               const SpatialGrid& grid);

// <b_j, phi_n> for n = 1..modes, j = 1..N (modes x N). Closed forms for
// indicator actuators with Dirichlet or Neumann conditions, quadrature
// otherwise.
MatrixXd actuator_projections(const ShapeFunctionSet& shapes, const EigenBasis& basis,
                              const SpatialGrid& grid, int modes);

// Squared L2 norms of the shape functions.
VectorXd shape_norms_sq(const ShapeFunctionSet& shapes, const SpatialGrid& grid);

}  // namespace parastab
