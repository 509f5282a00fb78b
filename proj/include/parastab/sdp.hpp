#pragma once

// Dense linear matrix inequality feasibility.
//
// A system is a list of scalar unknowns x and symmetric affine blocks
// F_k(x) = A_k0 + sum_i x_i A_ki, each tagged with a cone:
//   NegativeDefinite   F_k(x) <= -eps I   (strict)
//   PositiveDefinite   F_k(x) >=  eps I   (strict)
//   NegativeSemidef    F_k(x) <= 0        (bounds that keep the set compact)
//
// The oracle either returns a strictly feasible point, certifies that no
// such point exists, or reports that it could not decide.

#include <parastab/types.hpp>

#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace parastab::sdp {

enum class Cone { NegativeDefinite, PositiveDefinite, NegativeSemidef };

const char* to_string(Cone c);

struct AffineBlock {
  std::string name;
  Cone cone = Cone::NegativeDefinite;
  MatrixXd constant;
  // One coefficient per unknown. An empty matrix stands for zero.
  std::vector<MatrixXd> coeffs;

  int dim() const { return static_cast<int>(constant.rows()); }
  MatrixXd evaluate(const VectorXd& x) const;
};

struct LmiSystem {
  std::vector<std::string> variables;
  std::vector<AffineBlock> blocks;

  int num_variables() const { return static_cast<int>(variables.size()); }
  // Throws ParameterError on inconsistent sizes or asymmetric coefficients.
  void check() const;
};

enum class Status { Feasible, Infeasible, Undecided };

const char* to_string(Status s);

struct OracleOptions {
  double epsilon = 1e-7;
  // Relative duality-gap target on the margin.
  double tolerance = 1e-7;
  int max_outer = 80;
  int max_newton = 100;
  // Start point for the unknowns (empty: zeros).
  VectorXd x0;
};

struct OracleResult {
  Status status = Status::Undecided;
  VectorXd x;
  // Largest t found with every (equilibrated, eps-shifted) block <= -t I.
  double margin = 0.0;
  // Upper bound on the best achievable margin (dual bound).
  double margin_upper = 0.0;
  int newton_steps = 0;
  std::string message;
};

class FeasibilityOracle {
 public:
  virtual ~FeasibilityOracle() = default;
  virtual OracleResult solve(const LmiSystem& system, const OracleOptions& options) const = 0;
};

// Log-det barrier path following on max t s.t. D_k G_k(x) D_k + t I <= 0,
// where G_k is the eps-shifted block in <= 0 form and D_k a diagonal
// equilibration taken at the start point. Diagonal congruence leaves the
// feasible set unchanged.
class BarrierOracle final : public FeasibilityOracle {
 public:
  OracleResult solve(const LmiSystem& system, const OracleOptions& options) const override;
};

std::unique_ptr<FeasibilityOracle> default_oracle();

// Text form: header, variable names, then each block with its cone tag and
// the lower triangle of every coefficient matrix, row by row.
void write_system(std::ostream& os, const LmiSystem& system);
LmiSystem read_system(std::istream& is);

}  // namespace parastab::sdp
