#pragma once

// Gain design and the stability certificate: K0 by pole placement on the
// reaction chain, assembly of the finite-part LMI Phi < 0 and the tail
// condition, feasibility through an abstract oracle, (gamma, rho) grid
// search and the constructive N / gamma estimates.

#include <parastab/model.hpp>
#include <parastab/sdp.hpp>
#include <parastab/spectral.hpp>
#include <parastab/transform.hpp>
#include <parastab/types.hpp>

#include <array>
#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace parastab {

enum class GridPolicy { MinGamma, MaxMargin, MaxL1 };

const char* to_string(GridPolicy p);

struct SynthesisConfig {
  double delta = 1.0;
  int N = 5;
  std::vector<double> gamma_grid{1, 2, 5, 10, 25, 50, 100};
  std::vector<double> rho_grid;  // empty: logspace(-8, -2, 13)
  std::array<std::complex<double>, 3> poles{{{-1, 0}, {-2, 0}, {-3, 0}}};
  double pole_scale = 1.0;
  std::optional<RowVec3> K0;  // explicit gain overrides the poles
  double epsilon = 1e-7;
  double tolerance = 1e-7;
  double bound = 1e6;  // P <= bound I, alpha <= bound
  GridPolicy policy = GridPolicy::MinGamma;
  int threads = 0;  // 0: PARASTAB_THREADS or hardware concurrency
  // Upper end of the l1 bisection for the MaxL1 policy.
  double l1_search_max = 1000.0;

  std::vector<double> rho_values() const;
  // Throws ParameterError on empty grids, delta <= 0 or gamma < 1.
  void check() const;
};

struct Certificate {
  Mat3 P = Mat3::Zero();
  double alpha0 = 0.0;
  double alpha1 = 0.0;
  double gamma = 1.0;
  double rho = 0.0;
  int N = 0;
  double delta = 0.0;
  double l1 = 0.0;
  RowVec3 K0 = RowVec3::Zero();

  // -lambda_max of the assembled matrices at the returned point.
  double margin_phi = 0.0;
  double margin_tail = 0.0;
  double min_eig_P = 0.0;
  // Same test after diagonal equilibration (inertia preserving), used for
  // the verdict when the raw matrices are badly scaled.
  double scaled_margin_phi = 0.0;
  double scaled_margin_tail = 0.0;

  sdp::Status status = sdp::Status::Undecided;
  double oracle_margin = 0.0;
  double oracle_upper = 0.0;
  bool feasible = false;
  std::string note;

  double margin() const { return std::min(margin_phi, margin_tail); }
};

// Phi(x) and Tail(x) as affine maps of x = (P11, P21, P22, P31, P32, P33,
// alpha0, alpha1).
struct LmiSet {
  static constexpr int kUnknowns = 8;
  int N = 0;
  double gamma = 1.0;
  double rho = 0.0;
  double l1 = 0.0;
  double delta = 0.0;
  RowVec3 K0 = RowVec3::Zero();

  MatrixXd phi0;                              // 6N x 6N, zero
  std::array<MatrixXd, kUnknowns> phi;        // coefficients
  MatrixXd tail0;                             // 9 x 9
  std::array<MatrixXd, kUnknowns> tail;

  static VectorXd pack_unknowns(const Mat3& P, double alpha0, double alpha1);
  static Mat3 unpack_P(const VectorXd& x);

  MatrixXd phi_at(const Mat3& P, double alpha0, double alpha1) const;
  MatrixXd tail_at(const Mat3& P, double alpha0, double alpha1) const;

  // Blocks: Phi (nd), Tail (nd), P (pd), alpha0 (pd), alpha1 (pd), and the
  // bounds P <= bound I, alpha_i <= bound (nsd).
  sdp::LmiSystem system(double bound) const;
};

// Ackermann placement on the chain x1' = u, x2' = q21 x1, x3' = q32 x2.
// Throws AssumptionViolation when q21 q32 = 0 and ParameterError on poles
// that are not closed under conjugation or not in the open left half plane.
RowVec3 design_K0(const Mat3& Q0, const std::array<std::complex<double>, 3>& poles);

// e1 K0 added to Q0.
Mat3 closed_loop_matrix(const Mat3& Q0, const RowVec3& K0);

bool is_hurwitz(const Mat3& A);

// Symmetric P with A^T P + P A = -Q; throws ParameterError when A is not
// Hurwitz.
Mat3 solve_lyapunov(const Mat3& A, const Mat3& Q);

RowVec3 resolve_K0(const PlantSpec& plant, const SynthesisConfig& cfg);

// l1 defaults to the plant's f1 Lipschitz constant.
LmiSet assemble_lmis(const PlantSpec& plant, const EigenBasis& basis,
                     const ActuatorMatrix& actuators, const TransformPack& pack,
                     const SynthesisConfig& cfg, double gamma, double rho,
                     std::optional<double> l1 = std::nullopt);

// Runs the oracle and re-verifies its point by eigenvalue computation.
Certificate solve_feasibility(const LmiSet& lmis, const SynthesisConfig& cfg,
                              const sdp::FeasibilityOracle& oracle);
Certificate solve_feasibility(const LmiSet& lmis, const SynthesisConfig& cfg);

// Eigenvalue checks of a candidate point against an LMI set, without the
// oracle. Fills the margin fields and the feasible flag.
void verify_certificate(const LmiSet& lmis, double epsilon, Certificate& cert);

struct SearchEntry {
  double gamma = 0.0;
  double rho = 0.0;
  double l1 = 0.0;
  sdp::Status status = sdp::Status::Undecided;
  bool verified = false;
  double oracle_margin = 0.0;
  double margin = 0.0;
  double seconds = 0.0;
  std::string note;
};

struct GridSearchResult {
  sdp::Status status = sdp::Status::Undecided;
  Certificate best;  // closest attempt when nothing is feasible
  std::vector<SearchEntry> log;
  bool feasible() const { return status == sdp::Status::Feasible; }
};

int resolve_threads(int requested);

GridSearchResult grid_search(const PlantSpec& plant, const EigenBasis& basis,
                             const ActuatorMatrix& actuators, const SynthesisConfig& cfg);

// One (gamma, rho) cell.
Certificate certify_cell(const PlantSpec& plant, const EigenBasis& basis,
                         const ActuatorMatrix& actuators, const SynthesisConfig& cfg,
                         double gamma, double rho, std::optional<double> l1 = std::nullopt);

// Largest l1 in [0, hi] certified at the cell, by bisection to relative
// accuracy rel_tol; returns the certificate at that l1 (infeasible when even
// l1 = 0 fails).
Certificate max_l1_at(const PlantSpec& plant, const EigenBasis& basis,
                      const ActuatorMatrix& actuators, const SynthesisConfig& cfg, double gamma,
                      double rho, double hi, double rel_tol = 1e-2);

struct ConstructiveEstimate {
  double beta1 = 0.5;
  double eta = 0.0;
  double beta = 0.0;
  bool found = false;
  int N_star = 0;
  // lambda_max of the tail inequality at N_star, or at the best N when not
  // found (the deficit).
  double tail_lambda_max = 0.0;
  Mat3 P = Mat3::Zero();  // Sym(P (Q0 + B K0)) = -I
  // lambda_max of S at N_star (negative is required).
  double s_margin = 0.0;
  bool gamma0_found = false;
  double gamma0 = 0.0;
  double gamma0_lambda_max = 0.0;
  std::string note;
};

// (eta, beta) come from the actuator diagnostic; the gamma scan uses
// cfg.gamma_grid.
ConstructiveEstimate constructive_estimate(const PlantSpec& plant, const EigenBasis& basis,
                                 const SynthesisConfig& cfg, double beta1, double eta,
                                 double beta);

struct ComparisonConstants {
  double c_lower = 0.0;
  double c_upper = 0.0;
  double M = 1.0;
};

ComparisonConstants comparison_constants(const Certificate& cert, const TransformPack& pack);

}  // namespace parastab
