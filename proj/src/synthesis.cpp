#include <parastab/synthesis.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <thread>

namespace parastab {

const char* to_string(GridPolicy p) {
  switch (p) {
    case GridPolicy::MinGamma: return "min-gamma";
    case GridPolicy::MaxMargin: return "max-margin";
    case GridPolicy::MaxL1: return "max-l1";
  }
  return "min-gamma";
}

std::vector<double> SynthesisConfig::rho_values() const {
  if (!rho_grid.empty()) return rho_grid;
  std::vector<double> out;
  for (int k = 0; k <= 12; ++k) out.push_back(std::pow(10.0, -8.0 + 0.5 * k));
  return out;
}

void SynthesisConfig::check() const {
  if (!(delta > 0.0)) throw ParameterError("decay rate delta must be positive");
  if (N < 1) throw ParameterError("N must be at least 1");
  if (gamma_grid.empty()) throw ParameterError("gamma grid is empty");
  for (double g : gamma_grid) {
    if (!(g >= 1.0)) throw ParameterError("gamma grid values must be >= 1");
  }
  for (double r : rho_values()) {
    if (!(r > 0.0)) throw ParameterError("rho grid values must be positive");
  }
  if (!(epsilon > 0.0)) throw ParameterError("epsilon must be positive");
  if (!(pole_scale > 0.0)) throw ParameterError("pole scale must be positive");
}

// ---------------------------------------------------------------------------
// K0

Mat3 closed_loop_matrix(const Mat3& Q0, const RowVec3& K0) {
  Mat3 A = Q0;
  A.row(0) += K0;
  return A;
}

bool is_hurwitz(const Mat3& A) {
  Eigen::EigenSolver<Mat3> es(A, false);
  return (es.eigenvalues().real().array() < 0.0).all();
}

RowVec3 design_K0(const Mat3& Q0, const std::array<std::complex<double>, 3>& poles) {
  const double q21 = Q0(1, 0);
  const double q32 = Q0(2, 1);
  if (q21 * q32 == 0.0) {
    throw AssumptionViolation("(Q0, e1) is not controllable: q21 q32 = 0");
  }
  std::array<bool, 3> matched{false, false, false};
  for (int i = 0; i < 3; ++i) {
    if (!(poles[i].real() < 0.0)) throw ParameterError("poles must have negative real parts");
    const double tol = 1e-9 * std::max(1.0, std::abs(poles[i]));
    bool ok = false;
    for (int j = 0; j < 3 && !ok; ++j) {
      if (!matched[j] && std::abs(poles[j] - std::conj(poles[i])) <= tol) {
        matched[j] = true;
        ok = true;
      }
    }
    if (!ok) throw ParameterError("poles must be closed under complex conjugation");
  }
  // (s - p1)(s - p2)(s - p3) = s^3 + a2 s^2 + a1 s + a0
  const auto p1 = poles[0], p2 = poles[1], p3 = poles[2];
  const double a2 = (-(p1 + p2 + p3)).real();
  const double a1 = (p1 * p2 + p1 * p3 + p2 * p3).real();
  const double a0 = (-(p1 * p2 * p3)).real();
  // det(sI - Q0 - e1 K0) = s^3 - k1 s^2 - k2 q21 s - k3 q21 q32
  const RowVec3 K0(-a2, -a1 / q21, -a0 / (q21 * q32));
  if (!is_hurwitz(closed_loop_matrix(Q0, K0))) {
    throw NumericalError("pole placement produced a non-Hurwitz closed loop");
  }
  return K0;
}

RowVec3 resolve_K0(const PlantSpec& plant, const SynthesisConfig& cfg) {
  if (cfg.K0) {
    if (!is_hurwitz(closed_loop_matrix(plant.Q0, *cfg.K0))) {
      throw ParameterError("the given K0 does not make Q0 + B K0 Hurwitz");
    }
    return *cfg.K0;
  }
  auto poles = cfg.poles;
  for (auto& p : poles) p *= cfg.pole_scale;
  return design_K0(plant.Q0, poles);
}

Mat3 solve_lyapunov(const Mat3& A, const Mat3& Q) {
  if (!is_hurwitz(A)) throw ParameterError("Lyapunov equation needs a Hurwitz matrix");
  // vec(A^T P + P A) = (I (x) A^T + A^T (x) I) vec(P)
  Eigen::Matrix<double, 9, 9> K = Eigen::Matrix<double, 9, 9>::Zero();
  const Mat3 At = A.transpose();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      K.block<3, 3>(3 * i, 3 * i) += (i == j ? 1.0 : 0.0) * At;
      K.block<3, 3>(3 * i, 3 * j) += At(i, j) * Mat3::Identity();
    }
  }
  Eigen::Matrix<double, 9, 1> rhs;
  for (int c = 0; c < 3; ++c) rhs.segment<3>(3 * c) = -Q.col(c);
  const Eigen::Matrix<double, 9, 1> v = K.fullPivLu().solve(rhs);
  Mat3 P;
  for (int c = 0; c < 3; ++c) P.col(c) = v.segment<3>(3 * c);
  return sym(P);
}

// ---------------------------------------------------------------------------
// LMI assembly

namespace {

constexpr std::array<std::pair<int, int>, 6> kPIndex{
    {{0, 0}, {1, 0}, {1, 1}, {2, 0}, {2, 1}, {2, 2}}};

Mat3 p_basis(int k) {
  Mat3 E = Mat3::Zero();
  const auto [a, b] = kPIndex[k];
  E(a, b) = 1.0;
  E(b, a) = 1.0;
  return E;
}

MatrixXd affine_eval(const MatrixXd& c0, const std::array<MatrixXd, LmiSet::kUnknowns>& c,
                     const VectorXd& x) {
  MatrixXd out = c0;
  for (int i = 0; i < LmiSet::kUnknowns; ++i) {
    if (c[i].size() != 0) out.noalias() += x(i) * c[i];
  }
  return out;
}

double max_eig(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

// lambda_max of D (A + eps I) D with D = |diag(A + eps I)|^{-1/2}; same
// sign as lambda_max(A + eps I).
double scaled_max_eig(const MatrixXd& a, double eps) {
  MatrixXd s = sym(a);
  s.diagonal().array() += eps;
  VectorXd d(s.rows());
  for (int i = 0; i < s.rows(); ++i) {
    const double v = std::abs(s(i, i));
    d(i) = v > 1e-300 ? 1.0 / std::sqrt(v) : 1.0;
  }
  return max_eig(d.asDiagonal() * s * d.asDiagonal());
}

}  // namespace

VectorXd LmiSet::pack_unknowns(const Mat3& P, double alpha0, double alpha1) {
  VectorXd x(kUnknowns);
  for (int k = 0; k < 6; ++k) x(k) = P(kPIndex[k].first, kPIndex[k].second);
  x(6) = alpha0;
  x(7) = alpha1;
  return x;
}

Mat3 LmiSet::unpack_P(const VectorXd& x) {
  Mat3 P = Mat3::Zero();
  for (int k = 0; k < 6; ++k) {
    const auto [a, b] = kPIndex[k];
    P(a, b) = x(k);
    P(b, a) = x(k);
  }
  return P;
}

MatrixXd LmiSet::phi_at(const Mat3& P, double alpha0, double alpha1) const {
  return affine_eval(phi0, phi, pack_unknowns(P, alpha0, alpha1));
}

MatrixXd LmiSet::tail_at(const Mat3& P, double alpha0, double alpha1) const {
  return affine_eval(tail0, tail, pack_unknowns(P, alpha0, alpha1));
}

sdp::LmiSystem LmiSet::system(double bound) const {
  sdp::LmiSystem sys;
  sys.variables = {"P11", "P21", "P22", "P31", "P32", "P33", "alpha0", "alpha1"};
  auto block = [&](std::string name, sdp::Cone cone, MatrixXd c0) {
    sdp::AffineBlock b;
    b.name = std::move(name);
    b.cone = cone;
    b.constant = std::move(c0);
    b.coeffs.assign(kUnknowns, MatrixXd());
    return b;
  };

  sdp::AffineBlock phi_b = block("phi", sdp::Cone::NegativeDefinite, phi0);
  sdp::AffineBlock tail_b = block("tail", sdp::Cone::NegativeDefinite, tail0);
  for (int i = 0; i < kUnknowns; ++i) {
    phi_b.coeffs[i] = phi[i];
    tail_b.coeffs[i] = tail[i];
  }
  sys.blocks.push_back(std::move(phi_b));
  sys.blocks.push_back(std::move(tail_b));

  sdp::AffineBlock p_b = block("P", sdp::Cone::PositiveDefinite, MatrixXd::Zero(3, 3));
  sdp::AffineBlock p_ub = block("P_bound", sdp::Cone::NegativeSemidef, -bound * MatrixXd::Identity(3, 3));
  for (int k = 0; k < 6; ++k) {
    p_b.coeffs[k] = p_basis(k);
    p_ub.coeffs[k] = p_basis(k);
  }
  sys.blocks.push_back(std::move(p_b));
  for (int i = 6; i < 8; ++i) {
    const std::string nm = i == 6 ? "alpha0" : "alpha1";
    sdp::AffineBlock lo = block(nm, sdp::Cone::PositiveDefinite, MatrixXd::Zero(1, 1));
    lo.coeffs[i] = MatrixXd::Ones(1, 1);
    sys.blocks.push_back(std::move(lo));
  }
  sys.blocks.push_back(std::move(p_ub));
  for (int i = 6; i < 8; ++i) {
    const std::string nm = i == 6 ? "alpha0_bound" : "alpha1_bound";
    sdp::AffineBlock hi = block(nm, sdp::Cone::NegativeSemidef, -bound * MatrixXd::Ones(1, 1));
    hi.coeffs[i] = MatrixXd::Ones(1, 1);
    sys.blocks.push_back(std::move(hi));
  }
  return sys;
}

LmiSet assemble_lmis(const PlantSpec& plant, const EigenBasis& basis,
                     const ActuatorMatrix& actuators, const TransformPack& pack,
                     const SynthesisConfig& cfg, double gamma, double rho,
                     std::optional<double> l1) {
  if (std::abs(pack.gamma - gamma) > 1e-12 * std::max(1.0, gamma)) {
    throw ParameterError("assemble_lmis: transform built for gamma = " + std::to_string(pack.gamma) +
                         ", asked for gamma = " + std::to_string(gamma));
  }
  const int N = pack.N;
  if (actuators.n() != N) throw ParameterError("assemble_lmis: actuator matrix does not match N");
  if (basis.n_max() < N + 1) throw ParameterError("assemble_lmis: basis must hold N + 1 modes");
  if (!(rho > 0.0)) throw ParameterError("assemble_lmis: rho must be positive");
  if (!(cfg.delta > 0.0)) throw ParameterError("assemble_lmis: delta must be positive");

  LmiSet s;
  s.N = N;
  s.gamma = gamma;
  s.rho = rho;
  s.delta = cfg.delta;
  s.K0 = pack.K0;
  s.l1 = l1 ? *l1 : plant.nonlinearity.lipschitz[0];
  if (!(s.l1 >= 0.0)) throw ParameterError("assemble_lmis: l1 must be nonnegative");

  const double d3 = plant.diffusion(2);
  const Mat3 Acl = closed_loop_matrix(plant.Q0, pack.K0) + (cfg.delta / gamma) * Mat3::Identity();
  const int n3 = 3 * N;
  const int n6 = 6 * N;
  const double g3inv = 1.0 / (gamma * gamma * gamma);

  s.phi0 = MatrixXd::Zero(n6, n6);
  for (int k = 0; k < 6; ++k) {
    const Mat3 E = p_basis(k);
    MatrixXd A = MatrixXd::Zero(n6, n6);
    for (int j = 0; j < N; ++j) {
      const int o = 3 * j;
      A.block<3, 3>(o, o) = -d3 * pack.lambdas[j] * E + gamma * sym(Mat3(E * Acl)) +
                            sym(Mat3(E * pack.Jbar[j]));
      A.block<3, 3>(o, n3 + o) = g3inv * E;
      A.block<3, 3>(n3 + o, o) = g3inv * E;
    }
    s.phi[k] = std::move(A);
  }
  {
    MatrixXd A = MatrixXd::Zero(n6, n6);
    A.topLeftCorner(n3, n3) = 0.5 * rho * s.l1 * pack.M_Ng;
    A.bottomRightCorner(n3, n3) = -0.5 * rho * MatrixXd::Identity(n3, n3);
    s.phi[6] = std::move(A);
  }
  {
    const double tail_mass = std::max(0.0, actuators.tail_mass);
    MatrixXd A = MatrixXd::Zero(n6, n6);
    A.topLeftCorner(n3, n3) =
        0.5 * rho * std::pow(gamma, 8) * tail_mass * (pack.Q_NNg.transpose() * pack.Q_NNg);
    s.phi[7] = sym(A);
  }

  const Mat3 I3 = Mat3::Identity();
  const double lam_next = basis.lambda(N + 1);
  s.tail0 = MatrixXd::Zero(9, 9);
  s.tail0.block<3, 3>(0, 0) = -lam_next * plant.D() + sym(plant.Q()) + cfg.delta * I3;
  s.tail0.block<3, 3>(0, 3) = I3;
  s.tail0.block<3, 3>(3, 0) = I3;
  s.tail0.block<3, 3>(0, 6) = I3;
  s.tail0.block<3, 3>(6, 0) = I3;
  {
    MatrixXd A = MatrixXd::Zero(9, 9);
    A.block<3, 3>(0, 0) = 0.5 * s.l1 * I3;
    A.block<3, 3>(3, 3) = -2.0 * I3;
    s.tail[6] = std::move(A);
  }
  {
    MatrixXd A = MatrixXd::Zero(9, 9);
    A.block<3, 3>(6, 6) = -2.0 * I3;
    s.tail[7] = std::move(A);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Feasibility

void verify_certificate(const LmiSet& lmis, double epsilon, Certificate& cert) {
  const MatrixXd Phi = lmis.phi_at(cert.P, cert.alpha0, cert.alpha1);
  const MatrixXd Tail = lmis.tail_at(cert.P, cert.alpha0, cert.alpha1);
  cert.margin_phi = -max_eig(Phi);
  cert.margin_tail = -max_eig(Tail);
  cert.scaled_margin_phi = -scaled_max_eig(Phi, epsilon);
  cert.scaled_margin_tail = -scaled_max_eig(Tail, epsilon);
  Eigen::SelfAdjointEigenSolver<Mat3> es(sym(cert.P), Eigen::EigenvaluesOnly);
  cert.min_eig_P = es.eigenvalues().minCoeff();
  const double floor = epsilon * (1.0 - 1e-9);
  cert.feasible = cert.scaled_margin_phi > 0.0 && cert.scaled_margin_tail > 0.0 &&
                  cert.min_eig_P >= floor && cert.alpha0 >= floor && cert.alpha1 >= floor;
}

Certificate solve_feasibility(const LmiSet& lmis, const SynthesisConfig& cfg,
                              const sdp::FeasibilityOracle& oracle) {
  Certificate cert;
  cert.gamma = lmis.gamma;
  cert.rho = lmis.rho;
  cert.N = lmis.N;
  cert.delta = lmis.delta;
  cert.l1 = lmis.l1;
  cert.K0 = lmis.K0;

  sdp::OracleOptions opt;
  opt.epsilon = cfg.epsilon;
  opt.tolerance = cfg.tolerance;
  opt.x0 = LmiSet::pack_unknowns(Mat3::Identity(), 1.0, 1.0);

  sdp::OracleResult r;
  try {
    r = oracle.solve(lmis.system(cfg.bound), opt);
  } catch (const NumericalError& e) {
    cert.status = sdp::Status::Undecided;
    cert.note = e.what();
    return cert;
  }
  cert.oracle_margin = r.margin;
  cert.oracle_upper = r.margin_upper;
  cert.note = r.message;
  if (r.x.size() == LmiSet::kUnknowns) {
    cert.P = LmiSet::unpack_P(r.x);
    cert.alpha0 = r.x(6);
    cert.alpha1 = r.x(7);
    verify_certificate(lmis, cfg.epsilon, cert);
  }
  cert.status = r.status;
  if (r.status == sdp::Status::Feasible && !cert.feasible) {
    cert.status = sdp::Status::Undecided;
    cert.note = "oracle point failed eigenvalue re-verification";
  }
  if (r.status != sdp::Status::Feasible) cert.feasible = false;
  return cert;
}

Certificate solve_feasibility(const LmiSet& lmis, const SynthesisConfig& cfg) {
  return solve_feasibility(lmis, cfg, sdp::BarrierOracle{});
}

// ---------------------------------------------------------------------------
// Grid search

int resolve_threads(int requested) {
  int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* env = std::getenv("PARASTAB_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap >= 1) n = std::min<long>(n, cap);
  }
  return n;
}

Certificate certify_cell(const PlantSpec& plant, const EigenBasis& basis,
                         const ActuatorMatrix& actuators, const SynthesisConfig& cfg,
                         double gamma, double rho, std::optional<double> l1) {
  const RowVec3 K0 = resolve_K0(plant, cfg);
  const TransformPack pack = build_transform(plant, basis, actuators, K0, cfg.N, gamma);
  const LmiSet lmis = assemble_lmis(plant, basis, actuators, pack, cfg, gamma, rho, l1);
  return solve_feasibility(lmis, cfg);
}

Certificate max_l1_at(const PlantSpec& plant, const EigenBasis& basis,
                      const ActuatorMatrix& actuators, const SynthesisConfig& cfg, double gamma,
                      double rho, double hi, double rel_tol) {
  Certificate top = certify_cell(plant, basis, actuators, cfg, gamma, rho, hi);
  if (top.feasible) return top;
  Certificate best = certify_cell(plant, basis, actuators, cfg, gamma, rho, 0.0);
  if (!best.feasible) return best;
  double lo = 0.0;
  while (hi - lo > rel_tol * std::max(lo, 1e-3)) {
    const double mid = 0.5 * (lo + hi);
    Certificate c = certify_cell(plant, basis, actuators, cfg, gamma, rho, mid);
    if (c.feasible) {
      lo = mid;
      best = std::move(c);
    } else {
      hi = mid;
    }
  }
  return best;
}

namespace {

struct Cell {
  double gamma;
  double rho;
};

struct CellOutcome {
  Certificate cert;
  SearchEntry entry;
};

CellOutcome run_cell(const PlantSpec& plant, const EigenBasis& basis,
                     const ActuatorMatrix& actuators, const SynthesisConfig& cfg, Cell cell) {
  CellOutcome out;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (cfg.policy == GridPolicy::MaxL1) {
      out.cert = max_l1_at(plant, basis, actuators, cfg, cell.gamma, cell.rho, cfg.l1_search_max);
    } else {
      out.cert = certify_cell(plant, basis, actuators, cfg, cell.gamma, cell.rho);
    }
  } catch (const std::exception& e) {
    out.cert.gamma = cell.gamma;
    out.cert.rho = cell.rho;
    out.cert.N = cfg.N;
    out.cert.delta = cfg.delta;
    out.cert.status = sdp::Status::Undecided;
    out.cert.oracle_margin = -std::numeric_limits<double>::infinity();
    out.cert.note = e.what();
  }
  const auto t1 = std::chrono::steady_clock::now();
  SearchEntry& e = out.entry;
  e.gamma = cell.gamma;
  e.rho = cell.rho;
  e.l1 = out.cert.l1;
  e.status = out.cert.status;
  e.verified = out.cert.feasible;
  e.oracle_margin = out.cert.oracle_margin;
  e.margin = out.cert.margin();
  e.seconds = std::chrono::duration<double>(t1 - t0).count();
  e.note = out.cert.note;
  return out;
}

}  // namespace

GridSearchResult grid_search(const PlantSpec& plant, const EigenBasis& basis,
                             const ActuatorMatrix& actuators, const SynthesisConfig& cfg) {
  cfg.check();
  std::vector<double> gammas = cfg.gamma_grid;
  std::vector<double> rhos = cfg.rho_values();
  std::sort(gammas.begin(), gammas.end());
  std::sort(rhos.begin(), rhos.end());
  std::vector<Cell> cells;
  for (double g : gammas) {
    for (double r : rhos) cells.push_back({g, r});
  }

  const int threads = resolve_threads(cfg.threads);
  std::vector<CellOutcome> done;
  std::size_t next = 0;
  bool stop = false;
  while (next < cells.size() && !stop) {
    const std::size_t chunk = std::min<std::size_t>(static_cast<std::size_t>(threads),
                                                    cells.size() - next);
    std::vector<CellOutcome> part(chunk);
    if (chunk == 1) {
      part[0] = run_cell(plant, basis, actuators, cfg, cells[next]);
    } else {
      std::vector<std::thread> pool;
      for (std::size_t i = 0; i < chunk; ++i) {
        pool.emplace_back([&, i] { part[i] = run_cell(plant, basis, actuators, cfg, cells[next + i]); });
      }
      for (auto& t : pool) t.join();
    }
    next += chunk;
    for (auto& o : part) {
      if (cfg.policy == GridPolicy::MinGamma && o.cert.feasible) stop = true;
      done.push_back(std::move(o));
    }
  }

  GridSearchResult res;
  for (const auto& o : done) res.log.push_back(o.entry);

  int best = -1;
  for (int i = 0; i < static_cast<int>(done.size()); ++i) {
    const Certificate& c = done[i].cert;
    if (!c.feasible) continue;
    if (best < 0) {
      best = i;
      if (cfg.policy == GridPolicy::MinGamma) break;
      continue;
    }
    const Certificate& b = done[best].cert;
    if (cfg.policy == GridPolicy::MaxMargin && c.oracle_margin > b.oracle_margin) best = i;
    if (cfg.policy == GridPolicy::MaxL1 && c.l1 > b.l1) best = i;
  }
  if (best >= 0) {
    res.status = sdp::Status::Feasible;
    res.best = done[best].cert;
    return res;
  }

  bool undecided = false;
  int closest = 0;
  for (int i = 0; i < static_cast<int>(done.size()); ++i) {
    if (done[i].cert.status == sdp::Status::Undecided) undecided = true;
    if (done[i].cert.oracle_margin > done[closest].cert.oracle_margin) closest = i;
  }
  res.status = undecided ? sdp::Status::Undecided : sdp::Status::Infeasible;
  if (!done.empty()) res.best = done[closest].cert;
  return res;
}

// ---------------------------------------------------------------------------
// Constructive estimates

ConstructiveEstimate constructive_estimate(const PlantSpec& plant, const EigenBasis& basis,
                                 const SynthesisConfig& cfg, double beta1, double eta,
                                 double beta) {
  if (!(beta1 > beta && beta1 < 1.0)) throw ParameterError("beta1 must lie in (beta, 1)");
  ConstructiveEstimate r;
  r.beta1 = beta1;
  r.eta = eta;
  r.beta = beta;
  const double l1 = plant.nonlinearity.lipschitz[0];
  const Mat3 base = sym(plant.Q()) + cfg.delta * Mat3::Identity();

  auto tail_max = [&](int N) {
    const double lam = basis.lambda(N + 1);
    const double lp = std::pow(lam, beta1);
    const double extra = 0.5 * (1.0 / lp + (l1 + 1.0) * lp);
    return max_eig(-lam * plant.D() + base + extra * Mat3::Identity());
  };

  // The inequality needs lambda_{N+1} > 0.
  double best_val = std::numeric_limits<double>::infinity();
  for (int N = 1; N + 1 <= basis.n_max(); ++N) {
    if (basis.lambda(N + 1) <= 0.0) continue;
    const double v = tail_max(N);
    if (v < best_val) best_val = v;
    if (v < 0.0) {
      r.found = true;
      r.N_star = N;
      r.tail_lambda_max = v;
      break;
    }
  }
  if (!r.found) {
    r.tail_lambda_max = best_val;
    r.note = "no N up to " + std::to_string(basis.n_max() - 1) +
             " satisfies the tail inequality; smallest lambda_max = " + std::to_string(best_val);
    return r;
  }

  const RowVec3 K0 = resolve_K0(plant, cfg);
  const Mat3 A = closed_loop_matrix(plant.Q0, K0);
  r.P = solve_lyapunov(A, 2.0 * Mat3::Identity());  // Sym(P A) = -I

  const int N = r.N_star;
  const double lam = basis.lambda(N + 1);
  const double lp1 = std::pow(lam, beta1);
  const double lpd = std::pow(lam, beta1 - beta);
  const double k2 = K0.squaredNorm();
  const Mat3 PPt = r.P * r.P.transpose();
  // S = (-1 + eta |K0|^2 / lam^(b1 - b)) I + (2 / lam^b1) PbarPbar^T, block diagonal.
  const Mat3 S3 = (-1.0 + eta * k2 / lpd) * Mat3::Identity() + (2.0 / lp1) * PPt;
  r.s_margin = max_eig(S3);

  const double d1 = plant.diffusion(0), d2 = plant.diffusion(1), d3 = plant.diffusion(2);
  const double kappa = (d3 - d2) / plant.q21();
  const double lamN = basis.lambda(N);
  const double sigma = 1.0 + std::abs(kappa) * lamN;
  std::vector<double> gammas = cfg.gamma_grid;
  std::sort(gammas.begin(), gammas.end());
  for (double g : gammas) {
    const double xi = std::max(lamN * std::abs(d2 - d1) / g,
                               (lamN / g) * (lamN / g) * std::abs(kappa * (d1 - d3)));
    const double shift = eta * xi * xi / lpd + lp1 * l1 * sigma * sigma / (2.0 * g * g);
    const Mat3 Gi = Vec3(1.0 / (g * g * g), 1.0 / (g * g), 1.0 / g).asDiagonal();
    const Mat3 Gm = Vec3(g * g * g, g * g, g).asDiagonal();
    double worst = -std::numeric_limits<double>::infinity();
    for (int n = 1; n <= N; ++n) {
      Mat3 T = Mat3::Identity(), Ti = Mat3::Identity();
      T(0, 1) = basis.lambda(n) * kappa;
      Ti(0, 1) = -basis.lambda(n) * kappa;
      const Mat3 Jbar = Gi * T * plant.Q1 * Ti * Gm;
      const Mat3 blk = S3 + shift * Mat3::Identity() + (cfg.delta / g) * r.P + (1.0 / g) * r.P * Jbar;
      worst = std::max(worst, max_eig(blk));
    }
    r.gamma0_lambda_max = worst;
    if (worst < 0.0) {
      r.gamma0_found = true;
      r.gamma0 = g;
      break;
    }
  }
  if (!r.gamma0_found) r.note = "no grid gamma satisfies the high-gain inequality";
  return r;
}

ComparisonConstants comparison_constants(const Certificate& cert, const TransformPack& pack) {
  Eigen::SelfAdjointEigenSolver<Mat3> es(sym(cert.P), Eigen::EigenvaluesOnly);
  const double smin = es.eigenvalues().minCoeff();
  const double smax = es.eigenvalues().maxCoeff();
  const double g = cert.gamma;
  const double s2 = pack.sigma_N * pack.sigma_N;
  ComparisonConstants c;
  c.c_lower = std::min(smin / (2.0 * std::pow(g, 6)), cert.rho / 2.0) / s2;
  c.c_upper = std::max(smax / (2.0 * g * g), cert.rho / 2.0) * s2;
  c.M = std::sqrt(c.c_upper / c.c_lower);
  return c;
}

}  // namespace parastab
