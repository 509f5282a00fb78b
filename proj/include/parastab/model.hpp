#pragma once

// Plant description for three reaction-diffusion equations coupled in strict
// feedforward form, with a single actuated component:
//
//   z_t = D z_xx + (Q0 + Q1) z + f(z) + e1 * sum_j b_j(x) u_j(t),  x in (0, L)
//
// with separated homogeneous boundary conditions at x = 0 and x = L.

#include <parastab/types.hpp>

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace parastab {

class EigenBasis;

struct BoundaryConditions {
  // g11 z(0) + g12 z_x(0) = 0,  g21 z(L) + g22 z_x(L) = 0
  double g11 = 1.0;
  double g12 = 0.0;
  double g21 = 1.0;
  double g22 = 0.0;

  static BoundaryConditions dirichlet() { return {1.0, 0.0, 1.0, 0.0}; }
  static BoundaryConditions neumann() { return {0.0, 1.0, 0.0, 1.0}; }

  bool is_dirichlet() const { return g12 == 0.0 && g22 == 0.0; }
  bool is_neumann() const { return g11 == 0.0 && g21 == 0.0; }

  // Throws ParameterError when a side has both coefficients zero.
  void check() const;
};

using PointwiseMap = std::function<double(const Vec3&)>;

// Named nonlinear term from the registry: gain * kind(z_arg).
//   sin        gain * sin(z_arg)
//   tanh       gain * tanh(z_arg)
//   saturation gain * clamp(z_arg, -level, level)
//   zero       0
struct NamedTerm {
  std::string kind = "zero";
  double gain = 0.0;
  int arg = 3;  // 1-based component index
  double level = 1.0;
};

// Triangular Lipschitz nonlinearity f = (f1(z1,z2,z3), f2(z2,z3), f3(z3)).
// An empty evaluator means the component is identically zero.
struct Nonlinearity {
  std::array<PointwiseMap, 3> f;
  std::array<double, 3> lipschitz{0.0, 0.0, 0.0};
  std::array<std::string, 3> label{"zero", "zero", "zero"};

  Vec3 operator()(const Vec3& z) const;
  bool is_zero() const { return !f[0] && !f[1] && !f[2]; }

  static Nonlinearity zero() { return {}; }
  // Builds component `component` (1-based) from a registry entry. Throws
  // ConfigError for unknown kinds or arguments that break triangularity.
  void set(int component, const NamedTerm& term);
};

enum class ShapeKind { IndicatorPartition, Eigenfunction, Custom };

const char* to_string(ShapeKind kind);

// Actuator profiles b_1..b_N on [0, L].
struct ShapeFunctionSet {
  ShapeKind kind = ShapeKind::Custom;
  double length = 1.0;
  std::vector<std::function<double(double)>> b;
  // Discontinuities of the profiles inside (0, L); quadrature panels are
  // forced to start at these points.
  std::vector<double> breakpoints;
  // Support intervals when kind == IndicatorPartition.
  std::vector<std::pair<double, double>> supports;
  // Regenerates the family at another actuator count (empty for Custom).
  std::function<ShapeFunctionSet(int)> resized;

  int count() const { return static_cast<int>(b.size()); }
  ShapeFunctionSet with_count(int n) const;

  // b_j = indicator of [(j-1)L/N, jL/N), the last interval closed.
  static ShapeFunctionSet indicator_partition(double length, int n);
};

struct PlantSpec {
  double length = 1.0;
  Vec3 diffusion{1.0, 1.0, 1.0};
  Mat3 Q0 = Mat3::Zero();  // only (2,1) and (3,2) may be nonzero
  Mat3 Q1 = Mat3::Zero();  // upper triangular
  BoundaryConditions bc;
  Nonlinearity nonlinearity;
  ShapeFunctionSet shapes;

  Mat3 D() const { return diffusion.asDiagonal(); }
  Mat3 Q() const { return Q0 + Q1; }
  double q21() const { return Q0(1, 0); }
  double q32() const { return Q0(2, 1); }
  int actuator_count() const { return shapes.count(); }

  // Structural invariants. Throws ParameterError.
  void check() const;
};

// L = 1, Dirichlet, D = diag{2, 2.5, 3}, q21 = q32 = 1, Q1 = 0, five
// indicator actuators and f1 = l1 * sin(z3).
PlantSpec example_plant(double l1 = 15.0);

struct A3Sample {
  int n = 0;
  double lhs = 0.0;          // tail mass * |B_NN^{-1}|^2
  double lambda_next = 0.0;  // lambda_{N+1}
  double condition = 0.0;
  bool invertible = false;
};

struct AssumptionReport {
  bool a1_ok = false;
  bool a2_ok = false;
  bool a3_invertible = false;
  std::vector<A3Sample> a3_bound_samples;
  // Least-squares fit lhs ~ eta * lambda_{N+1}^beta over the sampled range.
  double eta = 0.0;
  double beta = 0.0;
  std::vector<std::string> warnings;
};

// Checks the three standing assumptions. The actuator family is regenerated
// at every count in [n_first, n_last] when it supports that; Custom families
// are only evaluated at their own count. Deterministic for a fixed seed.
AssumptionReport validate(const PlantSpec& plant, const EigenBasis& basis,
                          int n_first, int n_last,
                          std::uint64_t seed = 0x5eed);

// Random-pair spot check of |f_i(z) - f_i(w)| <= l_i |z - w|, f(0) = 0 and
// the triangular dependency pattern.
bool spot_check_lipschitz(const Nonlinearity& f, std::uint64_t seed,
                          int samples = 2000, double box = 10.0);

}  // namespace parastab
