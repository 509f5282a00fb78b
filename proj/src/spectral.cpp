#include <parastab/spectral.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace parastab {

namespace {

constexpr double kPi = std::numbers::pi;

// Shooting solution from the left boundary, phi(0) = g12, phi'(0) = -g11,
// written in the (C, S) representation of EigenBasis::Mode with S scaled so
// that it is entire in lambda.
struct Shot {
  double value;
  double slope;
};

Shot shoot(const BoundaryConditions& bc, double lambda, double x) {
  double c, cp, s, sp;  // C, C', S/w, (S/w)'
  if (lambda > 0.0) {
    const double w = std::sqrt(lambda);
    c = std::cos(w * x);
    cp = -w * std::sin(w * x);
    s = std::sin(w * x) / w;
    sp = std::cos(w * x);
  } else if (lambda < 0.0) {
    const double w = std::sqrt(-lambda);
    c = std::cosh(w * x);
    cp = w * std::sinh(w * x);
    s = std::sinh(w * x) / w;
    sp = std::cosh(w * x);
  } else {
    c = 1.0;
    cp = 0.0;
    s = x;
    sp = 1.0;
  }
  return {bc.g12 * c - bc.g11 * s, bc.g12 * cp - bc.g11 * sp};
}

double characteristic(const BoundaryConditions& bc, double length, double lambda) {
  const Shot sh = shoot(bc, lambda, length);
  return bc.g21 * sh.value + bc.g22 * sh.slope;
}

double bisect(const BoundaryConditions& bc, double length, double lo, double hi) {
  double flo = characteristic(bc, length, lo);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = characteristic(bc, length, mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

int count_interior_zeros(const std::function<double(double)>& f, double length, int samples) {
  int zeros = 0;
  double prev = f(length * 0.5 / samples);
  for (int i = 1; i < samples; ++i) {
    const double v = f(length * (i + 0.5) / samples);
    if ((v < 0.0) != (prev < 0.0)) ++zeros;
    prev = v;
  }
  return zeros;
}

}  // namespace

EigenBasis EigenBasis::compute(const BoundaryConditions& bc, double length, int n_max) {
  bc.check();
  if (!(length > 0.0)) throw ParameterError("EigenBasis: length must be positive");
  if (n_max < 1) throw ParameterError("EigenBasis: n_max must be >= 1");

  EigenBasis basis;
  basis.bc_ = bc;
  basis.length_ = length;
  basis.modes_.resize(n_max);

  if (bc.is_dirichlet()) {
    basis.family_ = Family::Dirichlet;
    for (int n = 1; n <= n_max; ++n) {
      const double w = n * kPi / length;
      basis.modes_[n - 1] = {w * w, w, 0.0, std::sqrt(2.0 / length)};
    }
    return basis;
  }
  if (bc.is_neumann()) {
    basis.family_ = Family::Neumann;
    basis.modes_[0] = {0.0, 0.0, 1.0 / std::sqrt(length), 0.0};
    for (int n = 2; n <= n_max; ++n) {
      const double w = (n - 1) * kPi / length;
      basis.modes_[n - 1] = {w * w, w, std::sqrt(2.0 / length), 0.0};
    }
    return basis;
  }

  basis.family_ = Family::General;
  std::vector<double> roots;
  roots.reserve(n_max);

  // Sweep lambda upward through a sampled sequence and bisect every sign
  // change of the characteristic function. Negative eigenvalues (at most two
  // for separated conditions) sit above -mu_max^2.
  auto ratio = [](double num, double den) {
    return den != 0.0 ? std::abs(num / den) : 0.0;
  };
  const double mu_max = 2.0 * (ratio(bc.g11, bc.g12) + ratio(bc.g21, bc.g22)) + 4.0 / length;
  const int neg_steps = 512;
  std::vector<double> samples;
  for (int i = neg_steps; i >= 1; --i) {
    const double mu = mu_max * i / neg_steps;
    samples.push_back(-mu * mu);
  }
  samples.push_back(0.0);
  const double dw = kPi / (32.0 * length);
  const double w_limit = (n_max + 4) * kPi / length + 4.0 * mu_max;
  for (double w = dw; w <= w_limit; w += dw) samples.push_back(w * w);

  double prev_lambda = samples.front();
  double prev_value = characteristic(bc, length, prev_lambda);
  bool prev_was_root = false;
  for (std::size_t i = 1; i < samples.size() && static_cast<int>(roots.size()) < n_max; ++i) {
    const double lam = samples[i];
    const double val = characteristic(bc, length, lam);
    if (val == 0.0) {
      roots.push_back(lam);
      prev_was_root = true;
    } else {
      if (!prev_was_root && (val < 0.0) != (prev_value < 0.0)) {
        roots.push_back(bisect(bc, length, prev_lambda, lam));
      }
      prev_value = val;
      prev_was_root = false;
    }
    prev_lambda = lam;
  }
  if (static_cast<int>(roots.size()) < n_max) {
    throw NumericalError("EigenBasis: could not bracket eigenvalue index " +
                         std::to_string(roots.size() + 1));
  }

  const SpatialGrid grid = SpatialGrid::for_modes(length, n_max + 2);
  for (int n = 1; n <= n_max; ++n) {
    const double lam = roots[n - 1];
    Mode m;
    m.lambda = lam;
    m.w = std::sqrt(std::abs(lam));
    // shoot() gives g12*C - g11*S/w; convert to the (a, b) representation.
    m.a = bc.g12;
    m.b = (m.w > 0.0) ? -bc.g11 / m.w : -bc.g11;
    basis.modes_[n - 1] = m;
    const double norm_sq = grid.integrate_fn([&](double x) {
      const double v = basis.phi(n, x);
      return v * v;
    });
    double scale = 1.0 / std::sqrt(norm_sq);
    // Positive just to the right of x = 0.
    const double lead = (bc.g12 != 0.0) ? bc.g12 : -bc.g11;
    if (lead < 0.0) scale = -scale;
    basis.modes_[n - 1].a *= scale;
    basis.modes_[n - 1].b *= scale;

    const int zeros = count_interior_zeros([&](double x) { return basis.phi(n, x); },
                                           length, 64 * (n_max + 2));
    if (zeros != n - 1) {
      throw NumericalError("EigenBasis: mode " + std::to_string(n) + " has " +
                           std::to_string(zeros) + " interior zeros, expected " +
                           std::to_string(n - 1));
    }
  }
  return basis;
}

double EigenBasis::phi(int n, double x) const {
  const Mode& m = modes_.at(n - 1);
  if (m.lambda > 0.0) return m.a * std::cos(m.w * x) + m.b * std::sin(m.w * x);
  if (m.lambda < 0.0) return m.a * std::cosh(m.w * x) + m.b * std::sinh(m.w * x);
  return m.a + m.b * x;
}

double EigenBasis::dphi(int n, double x) const {
  const Mode& m = modes_.at(n - 1);
  if (m.lambda > 0.0) return m.w * (-m.a * std::sin(m.w * x) + m.b * std::cos(m.w * x));
  if (m.lambda < 0.0) return m.w * (m.a * std::sinh(m.w * x) + m.b * std::cosh(m.w * x));
  return m.b;
}

std::vector<double> EigenBasis::lambdas() const {
  std::vector<double> out;
  out.reserve(modes_.size());
  for (const Mode& m : modes_) out.push_back(m.lambda);
  return out;
}

ShapeFunctionSet eigenfunction_shapes(const EigenBasis& basis, int n) {
  if (n < 1 || n > basis.n_max()) {
    throw ParameterError("eigenfunction_shapes: count outside the basis range");
  }
  ShapeFunctionSet set;
  set.kind = ShapeKind::Eigenfunction;
  set.length = basis.length();
  for (int j = 1; j <= n; ++j) {
    set.b.push_back([basis, j](double x) { return basis.phi(j, x); });
  }
  set.resized = [basis](int m) { return eigenfunction_shapes(basis, m); };
  return set;
}

VectorXd ModalState::head_stack(int n) const {
  if (n > modes()) throw ParameterError("ModalState: fewer modes than requested");
  VectorXd out(3 * n);
  for (int j = 0; j < n; ++j) out.segment<3>(3 * j) = z.row(j).transpose();
  return out;
}

ModalSampler::ModalSampler(const EigenBasis& basis, const SpatialGrid& grid, int modes)
    : grid_(grid), modes_(modes) {
  if (modes < 1 || modes > basis.n_max()) {
    throw ParameterError("ModalSampler: modes outside the basis range");
  }
  const int np = grid.size();
  phi_.resize(np, modes);
  weighted_phi_.resize(modes, np);
  for (int i = 0; i < np; ++i) {
    const double x = grid.points()[i];
    for (int n = 1; n <= modes; ++n) {
      const double v = basis.phi(n, x);
      phi_(i, n - 1) = v;
      weighted_phi_(n - 1, i) = grid.weights()[i] * v;
    }
  }
}

ModalMatrix ModalSampler::project(const Samples& values) const {
  return weighted_phi_ * values;
}

ModalSampler::Samples ModalSampler::reconstruct(const ModalMatrix& coeffs) const {
  return phi_ * coeffs.topRows(modes_);
}

ModalSampler::Samples ModalSampler::sample(const VectorField& field) const {
  Samples out(grid_.size(), 3);
  for (int i = 0; i < grid_.size(); ++i) out.row(i) = field(grid_.points()[i]).transpose();
  return out;
}

ModalState project(const VectorField& field, const EigenBasis& basis,
                   const SpatialGrid& grid, int modes) {
  const ModalSampler sampler(basis, grid, modes);
  return ModalState(sampler.project(sampler.sample(field)));
}

ModalSampler::Samples reconstruct(const ModalState& state, const EigenBasis& basis,
                                  const SpatialGrid& grid) {
  const ModalSampler sampler(basis, grid, state.modes());
  return sampler.reconstruct(state.z);
}

namespace {

SpatialGrid aligned_grid(const ShapeFunctionSet& shapes, const SpatialGrid& grid) {
  if (shapes.breakpoints.empty()) return grid;
  const int panels = std::max(1, grid.size() / 8);
  return SpatialGrid::composite(grid.length(), panels, shapes.breakpoints);
}

}  // namespace

VectorXd shape_norms_sq(const ShapeFunctionSet& shapes, const SpatialGrid& grid) {
  const int n = shapes.count();
  VectorXd out(n);
  if (shapes.kind == ShapeKind::IndicatorPartition) {
    for (int j = 0; j < n; ++j) out(j) = shapes.supports[j].second - shapes.supports[j].first;
    return out;
  }
  const SpatialGrid g = aligned_grid(shapes, grid);
  for (int j = 0; j < n; ++j) {
    const double v = g.integrate_fn([&](double x) {
      const double b = shapes.b[j](x);
      return b * b;
    });
    if (!std::isfinite(v)) {
      throw ParameterError("shape function " + std::to_string(j + 1) +
                           " has a non-finite L2 norm");
    }
    out(j) = v;
  }
  return out;
}

MatrixXd actuator_projections(const ShapeFunctionSet& shapes, const EigenBasis& basis,
                              const SpatialGrid& grid, int modes) {
  if (modes > basis.n_max()) {
    throw ParameterError("actuator_projections: modes exceed the basis range");
  }
  const int n_act = shapes.count();
  MatrixXd out(modes, n_act);
  const double L = basis.length();
  const bool closed_form = shapes.kind == ShapeKind::IndicatorPartition &&
                           basis.family() != EigenBasis::Family::General;
  if (closed_form) {
    for (int n = 1; n <= modes; ++n) {
      for (int j = 0; j < n_act; ++j) {
        const auto [a, b] = shapes.supports[j];
        if (basis.family() == EigenBasis::Family::Dirichlet) {
          const double w = n * kPi / L;
          out(n - 1, j) = std::sqrt(2.0 / L) * (std::cos(w * a) - std::cos(w * b)) / w;
        } else if (n == 1) {
          out(n - 1, j) = (b - a) / std::sqrt(L);
        } else {
          const double w = (n - 1) * kPi / L;
          out(n - 1, j) = std::sqrt(2.0 / L) * (std::sin(w * b) - std::sin(w * a)) / w;
        }
      }
    }
    return out;
  }
  const SpatialGrid g = aligned_grid(shapes, grid);
  const int np = g.size();
  MatrixXd bvals(np, n_act);
  for (int i = 0; i < np; ++i) {
    for (int j = 0; j < n_act; ++j) bvals(i, j) = g.weights()[i] * shapes.b[j](g.points()[i]);
  }
  MatrixXd phis(modes, np);
  for (int n = 1; n <= modes; ++n) {
    for (int i = 0; i < np; ++i) phis(n - 1, i) = basis.phi(n, g.points()[i]);
  }
  out = phis * bvals;
  if (!out.allFinite()) throw ParameterError("actuator_projections: non-finite quadrature");
  return out;
}

ActuatorMatrix actuator_matrix(const ShapeFunctionSet& shapes, const EigenBasis& basis,
                               const SpatialGrid& grid) {
  const int n = shapes.count();
  if (n < 1) throw ParameterError("actuator_matrix: empty shape set");
  if (n > basis.n_max()) throw ParameterError("actuator_matrix: N exceeds the basis range");

  ActuatorMatrix am;
  am.B_NN = actuator_projections(shapes, basis, grid, n);
  am.shape_norms_sq = shape_norms_sq(shapes, grid);
  am.tail_mass = am.shape_norms_sq.sum() - am.B_NN.squaredNorm();

  Eigen::JacobiSVD<MatrixXd> svd(am.B_NN);
  const auto& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  am.condition = smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity();
  if (!(am.condition <= kMaxActuatorCondition)) {
    throw AssumptionViolation("actuator matrix B_NN is singular or ill-conditioned (cond = " +
                              std::to_string(am.condition) + ")");
  }
  am.inverse = am.B_NN.partialPivLu().inverse();
  return am;
}

}  // namespace parastab
