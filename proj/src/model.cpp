#include <parastab/model.hpp>
#include <parastab/spectral.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace parastab {

double spectral_norm(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<MatrixXd> svd(m);
  return svd.singularValues()(0);
}

double max_sym_eigenvalue(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

void BoundaryConditions::check() const {
  if (g11 == 0.0 && g12 == 0.0) {
    throw ParameterError("boundary condition at x = 0 has g11 = g12 = 0");
  }
  if (g21 == 0.0 && g22 == 0.0) {
    throw ParameterError("boundary condition at x = L has g21 = g22 = 0");
  }
}

Vec3 Nonlinearity::operator()(const Vec3& z) const {
  Vec3 out = Vec3::Zero();
  for (int i = 0; i < 3; ++i) {
    if (f[i]) out(i) = f[i](z);
  }
  return out;
}

void Nonlinearity::set(int component, const NamedTerm& term) {
  if (component < 1 || component > 3) throw ConfigError("nonlinearity component must be 1, 2 or 3");
  const int c = component - 1;
  if (term.kind == "zero") {
    f[c] = nullptr;
    lipschitz[c] = 0.0;
    label[c] = "zero";
    return;
  }
  if (term.arg < component || term.arg > 3) {
    throw ConfigError("f" + std::to_string(component) + " may only depend on z" +
                      std::to_string(component) + "..z3 (got arg " + std::to_string(term.arg) + ")");
  }
  if (!(term.gain >= 0.0) && !(term.gain < 0.0)) throw ConfigError("nonlinearity gain is not a number");
  const int a = term.arg - 1;
  const double gain = term.gain;
  if (term.kind == "sin") {
    f[c] = [gain, a](const Vec3& z) { return gain * std::sin(z(a)); };
  } else if (term.kind == "tanh") {
    f[c] = [gain, a](const Vec3& z) { return gain * std::tanh(z(a)); };
  } else if (term.kind == "saturation") {
    if (!(term.level > 0.0)) throw ConfigError("saturation level must be positive");
    const double level = term.level;
    f[c] = [gain, a, level](const Vec3& z) { return gain * std::clamp(z(a), -level, level); };
  } else {
    throw ConfigError("unknown nonlinearity kind '" + term.kind + "'");
  }
  lipschitz[c] = std::abs(gain);
  label[c] = term.kind + "(z" + std::to_string(term.arg) + ")";
}

const char* to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::IndicatorPartition: return "indicator";
    case ShapeKind::Eigenfunction: return "eigenfunction";
    case ShapeKind::Custom: return "custom";
  }
  return "custom";
}

ShapeFunctionSet ShapeFunctionSet::with_count(int n) const {
  if (n == count()) return *this;
  if (!resized) {
    throw ParameterError("custom shape set cannot be regenerated at count " + std::to_string(n));
  }
  return resized(n);
}

ShapeFunctionSet ShapeFunctionSet::indicator_partition(double length, int n) {
  if (n < 1) throw ParameterError("indicator_partition: need at least one actuator");
  if (!(length > 0.0)) throw ParameterError("indicator_partition: length must be positive");
  ShapeFunctionSet set;
  set.kind = ShapeKind::IndicatorPartition;
  set.length = length;
  for (int j = 1; j <= n; ++j) {
    const double a = length * (j - 1) / n;
    const double b = length * j / n;
    const bool last = j == n;
    set.b.push_back([a, b, last](double x) {
      return (x >= a && (x < b || (last && x <= b))) ? 1.0 : 0.0;
    });
    set.supports.emplace_back(a, b);
    if (j < n) set.breakpoints.push_back(b);
  }
  set.resized = [length](int m) { return indicator_partition(length, m); };
  return set;
}

void PlantSpec::check() const {
  if (!(length > 0.0)) throw ParameterError("plant length must be positive");
  for (int i = 0; i < 3; ++i) {
    if (!(diffusion(i) > 0.0)) throw ParameterError("diffusion coefficients must be positive");
  }
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      const bool chain = (r == 1 && c == 0) || (r == 2 && c == 1);
      if (!chain && Q0(r, c) != 0.0) {
        throw ParameterError("Q0 may only have entries at (2,1) and (3,2)");
      }
      if (r > c && Q1(r, c) != 0.0) {
        throw ParameterError("Q1 must be upper triangular");
      }
    }
  }
  if (!Q0.allFinite() || !Q1.allFinite()) throw ParameterError("reaction matrices must be finite");
  bc.check();
  if (shapes.count() < 1) throw ParameterError("plant needs at least one actuator");
}

PlantSpec example_plant(double l1) {
  if (!(l1 >= 0.0)) throw ParameterError("l1 must be nonnegative");
  PlantSpec p;
  p.length = 1.0;
  p.diffusion = Vec3(2.0, 2.5, 3.0);
  p.Q0(1, 0) = 1.0;
  p.Q0(2, 1) = 1.0;
  p.bc = BoundaryConditions::dirichlet();
  if (l1 > 0.0) p.nonlinearity.set(1, NamedTerm{"sin", l1, 3, 1.0});
  p.shapes = ShapeFunctionSet::indicator_partition(1.0, 5);
  return p;
}

bool spot_check_lipschitz(const Nonlinearity& f, std::uint64_t seed, int samples, double box) {
  const Vec3 zero = Vec3::Zero();
  const Vec3 f0 = f(zero);
  if (f0.cwiseAbs().maxCoeff() > 1e-14) return false;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-box, box);
  auto draw = [&] { return Vec3(uni(rng), uni(rng), uni(rng)); };
  for (int s = 0; s < samples; ++s) {
    const Vec3 z = draw();
    // Half the pairs are close together to probe the local slope.
    const Vec3 w = (s % 2 == 0) ? draw() : Vec3(z + 1e-3 * draw() / box);
    const Vec3 fz = f(z);
    const Vec3 fw = f(w);
    const double dz = (z - w).norm();
    for (int i = 0; i < 3; ++i) {
      if (std::abs(fz(i) - fw(i)) > f.lipschitz[i] * dz * (1.0 + 1e-9) + 1e-14) return false;
    }
    // Triangular dependency: f2 ignores z1, f3 ignores z1 and z2.
    Vec3 moved = z;
    moved(0) += uni(rng);
    if (std::abs(f(moved)(1) - fz(1)) > 1e-14 || std::abs(f(moved)(2) - fz(2)) > 1e-14) return false;
    moved(1) += uni(rng);
    if (std::abs(f(moved)(2) - fz(2)) > 1e-14) return false;
  }
  return true;
}

AssumptionReport validate(const PlantSpec& plant, const EigenBasis& basis, int n_first,
                          int n_last, std::uint64_t seed) {
  plant.check();
  if (n_first < 1 || n_last < n_first) throw ParameterError("validate: empty N range");
  if (n_last + 1 > basis.n_max()) {
    throw ParameterError("validate: basis must cover N_max + 1 = " + std::to_string(n_last + 1) +
                         " modes");
  }

  AssumptionReport rep;
  rep.a1_ok = plant.q21() != 0.0 && plant.q32() != 0.0;
  rep.a2_ok = spot_check_lipschitz(plant.nonlinearity, seed);
  if (plant.nonlinearity.lipschitz[1] != 0.0 || plant.nonlinearity.lipschitz[2] != 0.0) {
    rep.warnings.push_back(
        "l2 or l3 is nonzero: the stability certificate assumes f2 = f3 = 0; nonzero terms are "
        "only honoured by the simulator");
  }

  const bool resizable = static_cast<bool>(plant.shapes.resized);
  rep.a3_invertible = true;
  for (int n = n_first; n <= n_last; ++n) {
    if (!resizable && n != plant.shapes.count()) continue;
    const ShapeFunctionSet shapes = plant.shapes.with_count(n);
    std::vector<double> bp = shapes.breakpoints;
    const SpatialGrid grid = SpatialGrid::for_modes(plant.length, n + 1, bp);
    A3Sample s;
    s.n = n;
    s.lambda_next = basis.lambda(n + 1);
    try {
      const ActuatorMatrix am = actuator_matrix(shapes, basis, grid);
      const double inv_norm = spectral_norm(am.inverse);
      s.lhs = std::max(0.0, am.tail_mass) * inv_norm * inv_norm;
      s.condition = am.condition;
      s.invertible = true;
    } catch (const AssumptionViolation&) {
      s.invertible = false;
      rep.a3_invertible = false;
      s.lhs = std::numeric_limits<double>::infinity();
    }
    rep.a3_bound_samples.push_back(s);
  }

  // log(lhs) = log(eta) + beta * log(lambda_{N+1}) over the positive samples.
  std::vector<std::pair<double, double>> pts;
  for (const A3Sample& s : rep.a3_bound_samples) {
    if (s.invertible && s.lhs > 1e-14 && s.lambda_next > 0.0) {
      pts.emplace_back(std::log(s.lambda_next), std::log(s.lhs));
    }
  }
  if (pts.size() >= 2) {
    // Slope from the upper half of the range, where the power law is asymptotic.
    const std::vector<std::pair<double, double>> upper(pts.begin() + pts.size() / 2, pts.end());
    const auto& fit_pts = upper.size() >= 2 ? upper : pts;
    double mx = 0, my = 0;
    for (auto [x, y] : fit_pts) {
      mx += x;
      my += y;
    }
    mx /= fit_pts.size();
    my /= fit_pts.size();
    double sxy = 0, sxx = 0;
    for (auto [x, y] : fit_pts) {
      sxy += (x - mx) * (y - my);
      sxx += (x - mx) * (x - mx);
    }
    double beta = sxx > 0 ? sxy / sxx : 0.0;
    beta = std::clamp(beta, 0.0, std::nextafter(1.0, 0.0));
    rep.beta = beta;
    // eta lifted so the power law bounds every sample.
    double log_eta = -std::numeric_limits<double>::infinity();
    for (auto [x, y] : pts) log_eta = std::max(log_eta, y - beta * x);
    rep.eta = std::exp(log_eta);
  } else if (pts.size() == 1) {
    rep.beta = 0.0;
    rep.eta = std::exp(pts[0].second);
  }
  return rep;
}

}  // namespace parastab
