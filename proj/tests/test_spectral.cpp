#include <parastab/quadrature.hpp>
#include <parastab/spectral.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

using namespace parastab;
using std::numbers::pi;

namespace {

// Positive roots w of the characteristic function for
// phi = g12 w cos(wx) - g11 sin(wx), found by a plain scan and bisection.
std::vector<double> robin_oracle(const BoundaryConditions& bc, double L, int count) {
  auto chr = [&](double w) {
    const double phi = bc.g12 * w * std::cos(w * L) - bc.g11 * std::sin(w * L);
    const double dphi = -bc.g12 * w * w * std::sin(w * L) - bc.g11 * w * std::cos(w * L);
    return bc.g21 * phi + bc.g22 * dphi;
  };
  std::vector<double> lambdas;
  const double step = 1e-3;
  double a = 1e-4, fa = chr(a);
  while (static_cast<int>(lambdas.size()) < count) {
    const double b = a + step, fb = chr(b);
    if (fa == 0.0 || fa * fb < 0.0) {
      double lo = a, hi = b;
      for (int k = 0; k < 200; ++k) {
        const double mid = 0.5 * (lo + hi);
        if ((chr(lo) < 0) == (chr(mid) < 0)) lo = mid;
        else hi = mid;
      }
      lambdas.push_back(std::pow(0.5 * (lo + hi), 2));
    }
    a = b;
    fa = fb;
  }
  return lambdas;
}

double max_orthonormality_defect(const EigenBasis& basis, int n, const SpatialGrid& grid) {
  double worst = 0.0;
  for (int i = 1; i <= n; ++i) {
    for (int j = i; j <= n; ++j) {
      const double ip = grid.integrate_fn([&](double x) { return basis.phi(i, x) * basis.phi(j, x); });
      worst = std::max(worst, std::abs(ip - (i == j ? 1.0 : 0.0)));
    }
  }
  return worst;
}

void expect_boundary_conditions(const EigenBasis& basis, int n) {
  const BoundaryConditions& bc = basis.bc();
  const double L = basis.length();
  for (int k = 1; k <= n; ++k) {
    const double scale = 1.0 + std::sqrt(std::abs(basis.lambda(k)));
    EXPECT_NEAR(bc.g11 * basis.phi(k, 0) + bc.g12 * basis.dphi(k, 0), 0.0, 1e-9 * scale) << k;
    EXPECT_NEAR(bc.g21 * basis.phi(k, L) + bc.g22 * basis.dphi(k, L), 0.0, 1e-9 * scale) << k;
  }
}

}  // namespace

TEST(Quadrature, GaussLegendreIsExactForPolynomials) {
  for (int n : {1, 2, 5, 8, 12}) {
    const GaussRule r = gauss_legendre(n);
    ASSERT_EQ(static_cast<int>(r.nodes.size()), n);
    for (int deg = 0; deg <= 2 * n - 1; ++deg) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += r.weights[i] * std::pow(r.nodes[i], deg);
      const double exact = deg % 2 ? 0.0 : 2.0 / (deg + 1);
      EXPECT_NEAR(acc, exact, 1e-14) << "n = " << n << " deg = " << deg;
    }
  }
}

TEST(Quadrature, CompositeGridHonoursBreakpoints) {
  const std::vector<double> bp{0.3, 0.71};
  const SpatialGrid g = SpatialGrid::composite(2.0, 7, bp);
  double wsum = 0.0;
  for (double w : g.weights()) wsum += w;
  EXPECT_NEAR(wsum, 2.0, 1e-13);
  // integral of an indicator with jumps at the breakpoints is exact
  const double v = g.integrate_fn([](double x) { return (x >= 0.3 && x < 0.71) ? 1.0 : 0.0; });
  EXPECT_NEAR(v, 0.41, 1e-14);
  for (std::size_t i = 1; i < g.points().size(); ++i) EXPECT_LT(g.points()[i - 1], g.points()[i]);
}

TEST(EigenBasis, DirichletClosedForm) {
  const EigenBasis b = EigenBasis::compute(BoundaryConditions::dirichlet(), 1.0, 10);
  EXPECT_EQ(b.family(), EigenBasis::Family::Dirichlet);
  EXPECT_NEAR(b.lambda(1), 9.8696044010893586, 1e-12);
  EXPECT_NEAR(b.lambda(2), 39.478417604357434, 1e-11);
  EXPECT_NEAR(b.phi(3, 0.2), std::sqrt(2.0) * std::sin(3 * pi * 0.2), 1e-14);

  const EigenBasis b2 = EigenBasis::compute(BoundaryConditions::dirichlet(), 2.0, 3);
  EXPECT_NEAR(b2.lambda(3), std::pow(3 * pi / 2.0, 2), 1e-12);
}

TEST(EigenBasis, NeumannConstantMode) {
  const EigenBasis b = EigenBasis::compute(BoundaryConditions::neumann(), 1.0, 6);
  EXPECT_EQ(b.lambda(1), 0.0);
  EXPECT_NEAR(b.phi(1, 0.0), 1.0, 1e-15);
  EXPECT_NEAR(b.phi(1, 0.77), 1.0, 1e-15);
  EXPECT_NEAR(b.lambda(2), pi * pi, 1e-12);
  EXPECT_NEAR(b.lambda(4), 9 * pi * pi, 1e-11);
}

TEST(EigenBasis, MixedDirichletNeumann) {
  const EigenBasis b = EigenBasis::compute({1.0, 0.0, 0.0, 1.0}, 1.0, 8);
  for (int n = 1; n <= 8; ++n) EXPECT_NEAR(b.lambda(n), std::pow((n - 0.5) * pi, 2), 1e-8 * n * n);
  expect_boundary_conditions(b, 8);
}

TEST(EigenBasis, RobinMatchesIndependentRoots) {
  for (const BoundaryConditions bc : {BoundaryConditions{2.0, -1.0, 3.0, 1.0},
                                      BoundaryConditions{0.5, -1.0, 0.0, 1.0},
                                      BoundaryConditions{1.0, -0.1, 4.0, 1.0}}) {
    const EigenBasis b = EigenBasis::compute(bc, 1.0, 20);
    const std::vector<double> ref = robin_oracle(bc, 1.0, 20);
    for (int n = 1; n <= 20; ++n) {
      EXPECT_NEAR(b.lambda(n), ref[n - 1], 1e-8 * std::max(1.0, ref[n - 1])) << "n = " << n;
    }
    expect_boundary_conditions(b, 20);
  }
}

TEST(EigenBasis, NegativeEigenvalueBranch) {
  // z'(0) = -3 z(0), z'(1) = 3 z(1) admits a growing mode
  const BoundaryConditions bc{3.0, 1.0, 3.0, -1.0};
  const EigenBasis b = EigenBasis::compute(bc, 1.0, 12);
  EXPECT_LT(b.lambda(1), 0.0);
  expect_boundary_conditions(b, 12);
  const SpatialGrid g = SpatialGrid::for_modes(1.0, 12);
  EXPECT_LT(max_orthonormality_defect(b, 12, g), 1e-8);
}

TEST(EigenBasis, StrictlyIncreasingAndQuadraticGrowth) {
  const EigenBasis b = EigenBasis::compute({2.0, -1.0, 3.0, 1.0}, 1.0, 100);
  for (int n = 2; n <= 100; ++n) EXPECT_GT(b.lambda(n), b.lambda(n - 1));
  for (int n = 50; n <= 100; ++n) {
    const double r = b.lambda(n) / (n * n);
    EXPECT_GT(r, 0.8 * pi * pi);
    EXPECT_LT(r, 1.2 * pi * pi);
  }
}

TEST(EigenBasis, OrthonormalOnDefaultGrid) {
  for (const BoundaryConditions bc : {BoundaryConditions::dirichlet(), BoundaryConditions::neumann(),
                                      BoundaryConditions{2.0, -1.0, 3.0, 1.0}}) {
    const EigenBasis b = EigenBasis::compute(bc, 1.0, 40);
    const SpatialGrid g = SpatialGrid::for_modes(1.0, 40);
    EXPECT_LT(max_orthonormality_defect(b, 40, g), 1e-8);
  }
}

TEST(EigenBasis, RobinEigenResidualByFiniteDifferences) {
  const EigenBasis b = EigenBasis::compute({2.0, -1.0, 3.0, 1.0}, 1.0, 6);
  for (int n = 1; n <= 6; ++n) {
    double worst = 0.0;
    for (int i = 1; i < 50; ++i) {
      const double x = i / 50.0;
      auto d2 = [&](double h) {
        return (b.phi(n, x + h) - 2 * b.phi(n, x) + b.phi(n, x - h)) / (h * h);
      };
      const double h = 2e-3;
      const double fd = (4 * d2(h / 2) - d2(h)) / 3;  // Richardson step
      worst = std::max(worst, std::abs(fd + b.lambda(n) * b.phi(n, x)));
    }
    EXPECT_LT(worst, 1e-6) << "n = " << n;
  }
}

TEST(Projection, SingleModeAndZeroField) {
  const EigenBasis b = EigenBasis::compute(BoundaryConditions::dirichlet(), 1.0, 20);
  const SpatialGrid g = SpatialGrid::for_modes(1.0, 20);
  const ModalState s = project([&](double x) { return Vec3(b.phi(3, x), 0, 0); }, b, g, 20);
  for (int n = 1; n <= 20; ++n) {
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(s.z(n - 1, i), (n == 3 && i == 0) ? 1.0 : 0.0, 1e-8);
  }
  const ModalState z = project([](double) { return Vec3::Zero(); }, b, g, 20);
  EXPECT_EQ(z.norm(), 0.0);
}

TEST(Projection, ParabolaClosedForm) {
  const EigenBasis b = EigenBasis::compute(BoundaryConditions::dirichlet(), 1.0, 30);
  const SpatialGrid g = SpatialGrid::for_modes(1.0, 30);
  const ModalState s = project([](double x) { return Vec3(x * (1 - x), 0, 0); }, b, g, 30);
  for (int n = 1; n <= 30; ++n) {
    const double exact = 2 * std::sqrt(2.0) * (1 - std::pow(-1.0, n)) / std::pow(n * pi, 3);
    EXPECT_NEAR(s.z(n - 1, 0), exact, 1e-12) << "n = " << n;
  }
}

TEST(Projection, ReconstructRoundTrip) {
  const EigenBasis b = EigenBasis::compute(BoundaryConditions::dirichlet(), 1.0, 10);
  const SpatialGrid g = SpatialGrid::for_modes(1.0, 10);
  auto field = [&](double x) { return Vec3(b.phi(2, x), b.phi(5, x), 0.0); };
  const ModalState s = project(field, b, g, 10);
  const ModalSampler::Samples v = reconstruct(s, b, g);
  for (int i = 0; i < g.size(); ++i) {
    const Vec3 f = field(g.points()[i]);
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(v(i, c), f(c), 1e-8);
  }

  ModalState one(4);
  one.z(0, 1) = 1.0;
  const ModalSampler::Samples w = reconstruct(one, b, g);
  for (int i = 0; i < g.size(); ++i) {
    EXPECT_EQ(w(i, 0), 0.0);
    EXPECT_NEAR(w(i, 1), b.phi(1, g.points()[i]), 1e-14);
    EXPECT_EQ(w(i, 2), 0.0);
  }
}

TEST(Projection, ParsevalDefectShrinksWithModes) {
  auto field = [](double x) {
    return Vec3(x * (1 - x) * std::exp(x), std::sin(pi * x) * std::cos(3 * x),
                x * x * (1 - x) * (2 + std::sin(5 * x)));
  };
  // reference norm on a much finer grid
  const SpatialGrid fine = SpatialGrid::composite(1.0, 400);
  const double energy = fine.integrate_fn([&](double x) { return field(x).squaredNorm(); });

  const EigenBasis b = EigenBasis::compute(BoundaryConditions::dirichlet(), 1.0, 60);
  const SpatialGrid g = SpatialGrid::for_modes(1.0, 60);
  double last = 1e300;
  for (int M : {5, 10, 20, 40, 60}) {
    const double defect = energy - project(field, b, g, M).z.squaredNorm();
    EXPECT_GE(defect, -1e-12);
    EXPECT_LE(defect, last + 1e-15);
    last = defect;
  }
  EXPECT_LT(last, 1e-6);
}

TEST(Actuators, IndicatorClosedFormAgainstQuadrature) {
  const PlantSpec p = example_plant();
  const EigenBasis b = EigenBasis::compute(p.bc, 1.0, 12);
  const SpatialGrid g = SpatialGrid::for_modes(1.0, 12, p.shapes.breakpoints);
  const ActuatorMatrix am = actuator_matrix(p.shapes, b, g);

  EXPECT_NEAR(am.B_NN(0, 0), std::sqrt(2.0) * (1 - std::cos(pi / 5)) / pi, 1e-14);
  EXPECT_NEAR(am.B_NN(0, 0), 0.08598, 1e-5);

  // the same indicators tagged as custom go through quadrature
  ShapeFunctionSet custom = p.shapes;
  custom.kind = ShapeKind::Custom;
  custom.resized = nullptr;
  const ActuatorMatrix aq = actuator_matrix(custom, b, g);
  EXPECT_LT((aq.B_NN - am.B_NN).cwiseAbs().maxCoeff(), 1e-13);

  // row n, column j holds <b_j, phi_n>
  for (int n = 1; n <= 5; ++n) {
    for (int j = 1; j <= 5; ++j) {
      const double exact =
          std::sqrt(2.0) * (std::cos(n * pi * (j - 1) / 5) - std::cos(n * pi * j / 5)) / (n * pi);
      EXPECT_NEAR(am.B_NN(n - 1, j - 1), exact, 1e-14);
    }
  }
}

TEST(Actuators, TailMassAndInverse) {
  const PlantSpec p = example_plant();
  const EigenBasis b = EigenBasis::compute(p.bc, 1.0, 12);
  const SpatialGrid g = SpatialGrid::for_modes(1.0, 12, p.shapes.breakpoints);
  const ActuatorMatrix am = actuator_matrix(p.shapes, b, g);

  double head = 0.0;
  for (int n = 1; n <= 5; ++n) {
    for (int j = 1; j <= 5; ++j) {
      head += std::pow(std::sqrt(2.0) * (std::cos(n * pi * (j - 1) / 5) - std::cos(n * pi * j / 5)) /
                           (n * pi),
                       2);
    }
  }
  EXPECT_NEAR(am.tail_mass, 1.0 - head, 1e-12);
  EXPECT_NEAR(am.tail_mass, 0.2074265, 1e-7);
  EXPECT_GE(am.tail_mass, -1e-10);
  EXPECT_LT((am.B_NN * am.inverse - MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_GT(am.condition, 1.0);
  EXPECT_LT(am.condition, 10.0);
}

TEST(Actuators, EigenfunctionShapesGiveIdentity) {
  const EigenBasis b = EigenBasis::compute({2.0, -1.0, 3.0, 1.0}, 1.0, 10);
  const ShapeFunctionSet s = eigenfunction_shapes(b, 5);
  const SpatialGrid g = SpatialGrid::for_modes(1.0, 10);
  const ActuatorMatrix am = actuator_matrix(s, b, g);
  EXPECT_LT((am.B_NN - MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(am.tail_mass, 0.0, 1e-10);
}

TEST(Actuators, SingularFamilyIsRejected) {
  const EigenBasis b = EigenBasis::compute(BoundaryConditions::dirichlet(), 1.0, 6);
  ShapeFunctionSet s;
  s.b.push_back([](double x) { return x < 0.5 ? 1.0 : 0.0; });
  s.b.push_back([](double x) { return x < 0.5 ? 1.0 : 0.0; });
  s.breakpoints = {0.5};
  const SpatialGrid g = SpatialGrid::for_modes(1.0, 6, s.breakpoints);
  EXPECT_THROW(actuator_matrix(s, b, g), AssumptionViolation);
}
