#include <parastab/synthesis.hpp>
#include <parastab/sim.hpp>
#include <parastab/transform.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace parastab;
using std::numbers::pi;

namespace {

struct Fixture {
  PlantSpec plant;
  EigenBasis basis;
  ActuatorMatrix act;
};

Fixture make(const PlantSpec& p, int N) {
  PlantSpec q = p;
  q.shapes = ShapeFunctionSet::indicator_partition(q.length, N);
  EigenBasis b = EigenBasis::compute(q.bc, q.length, N + 2);
  const SpatialGrid g = SpatialGrid::for_modes(q.length, N + 1, q.shapes.breakpoints);
  ActuatorMatrix a = actuator_matrix(q.shapes, b, g);
  return {q, b, a};
}

const RowVec3 kExampleK0(-3.708, -26.329, -2.222);

PlantSpec random_plant(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(0.2, 5.0), q(-4.0, 4.0);
  PlantSpec p;
  p.diffusion = Vec3(d(rng), d(rng), d(rng));
  do p.Q0(1, 0) = q(rng); while (std::abs(p.Q0(1, 0)) < 0.05);
  do p.Q0(2, 1) = q(rng); while (std::abs(p.Q0(2, 1)) < 0.05);
  for (int r = 0; r < 3; ++r)
    for (int c = r; c < 3; ++c) p.Q1(r, c) = q(rng);
  return p;
}

}  // namespace

TEST(Transform, ExampleConstants) {
  const Fixture f = make(example_plant(), 5);
  const TransformPack t = build_transform(f.plant, f.basis, f.act, kExampleK0, 5, 5.0);
  EXPECT_DOUBLE_EQ(t.kappa, 0.5);
  EXPECT_NEAR(t.sigma_N, 1 + 0.5 * 25 * pi * pi, 1e-10);
  EXPECT_NEAR(t.sigma_N, 124.37, 5e-3);
  EXPECT_EQ(t.T_of(6), Mat3::Identity());
  EXPECT_EQ(t.Gamma, Vec3(125, 25, 5).asDiagonal().toDenseMatrix());
  for (int n = 1; n <= 5; ++n) {
    const double lam = n * n * pi * pi;
    Mat3 T = Mat3::Identity();
    T(0, 1) = 0.5 * lam;
    EXPECT_LT((t.T[n - 1] - T).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(t.G[n - 1](0), lam * 0.5, 1e-10);
    EXPECT_NEAR(t.G[n - 1](1), lam * lam * 0.5 * (2 - 3), 1e-8);
    EXPECT_EQ(t.G[n - 1](2), 0.0);
  }
  EXPECT_EQ(jbar_norm_bound(t), 0.0);
}

TEST(Transform, ProductWithInverseIsExactIdentity) {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 20; ++k) {
    const Fixture f = make(random_plant(rng), 1 + k % 6);
    const TransformPack t = build_transform(f.plant, f.basis, f.act, kExampleK0, f.act.n(), 3.0);
    for (int n = 0; n < t.N; ++n) {
      EXPECT_EQ(t.T[n] * t.T_inv[n], Mat3::Identity());
      EXPECT_EQ(t.T_inv[n] * t.T[n], Mat3::Identity());
    }
  }
}

TEST(Transform, EqualTrailingDiffusionGivesIdentity) {
  PlantSpec p = example_plant();
  p.diffusion = Vec3(1.0, 2.0, 2.0);
  const Fixture f = make(p, 4);
  const TransformPack t = build_transform(f.plant, f.basis, f.act, kExampleK0, 4, 2.0);
  EXPECT_EQ(t.kappa, 0.0);
  for (const Mat3& T : t.T) EXPECT_EQ(T, Mat3::Identity());

  const ModalState z = random_smooth_state(8, 4);
  EXPECT_EQ(transform_state(t, z).z, z.z);
}

TEST(Transform, StateMapRoundTrip) {
  const Fixture f = make(example_plant(), 5);
  const TransformPack t = build_transform(f.plant, f.basis, f.act, kExampleK0, 5, 5.0);
  const ModalState zero(12);
  EXPECT_TRUE(transform_state(t, zero).z.isZero());

  const ModalState z = random_smooth_state(12, 9, 12);
  const ModalState y = transform_state(t, z);
  for (int n = 1; n <= 12; ++n) {
    EXPECT_LT((y.mode(n) - t.T_of(n) * z.mode(n)).norm(), 1e-14 * (1 + y.mode(n).norm()));
  }
  const ModalState back = inverse_transform_state(t, y);
  EXPECT_LT((back.z - z.z).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Transform, NormBoundsOnRandomPlants) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> gam(1.0, 60.0);
  for (int k = 0; k < 50; ++k) {
    const int N = 1 + k % 7;
    const Fixture f = make(random_plant(rng), N);
    const RowVec3 K0 = design_K0(f.plant.Q0, {{{-1, 0}, {-2, 0}, {-3, 0}}});
    const TransformPack t = build_transform(f.plant, f.basis, f.act, K0, N, gam(rng));
    for (int n = 0; n < N; ++n) {
      EXPECT_LE(spectral_norm(t.T[n]), t.sigma_N + 1e-9);
      EXPECT_LE(spectral_norm(t.T_inv[n]), t.sigma_N + 1e-9);
    }
    // M block by block, and below gamma^6 sigma^2 I
    for (int j = 0; j < N; ++j) {
      const Mat3 blk = t.Gamma * t.T_inv[j].transpose() * t.T_inv[j] * t.Gamma;
      EXPECT_LT((t.M_Ng.block<3, 3>(3 * j, 3 * j) - blk).cwiseAbs().maxCoeff(),
                1e-12 * blk.cwiseAbs().maxCoeff());
    }
    const double g6s2 = std::pow(t.gamma, 6) * t.sigma_N * t.sigma_N;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(g6s2 * MatrixXd::Identity(3 * N, 3 * N) - t.M_Ng);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-9 * g6s2);
    Eigen::SelfAdjointEigenSolver<MatrixXd> em(t.M_Ng);
    EXPECT_GT(em.eigenvalues().minCoeff(), 0.0);
  }
}

TEST(Transform, XiIsNonincreasingInGamma) {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 10; ++k) {
    const Fixture f = make(random_plant(rng), 5);
    double last = 1e300;
    for (double g : {1.0, 1.5, 2.0, 5.0, 10.0, 100.0, 1e4}) {
      const TransformPack t = build_transform(f.plant, f.basis, f.act, kExampleK0, 5, g);
      EXPECT_LE(t.xi, last);
      last = t.xi;
    }
  }
}

TEST(Transform, QNormBoundOnRandomPlants) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> gam(1.0, 100.0);
  for (int k = 0; k < 50; ++k) {
    const int N = 1 + k % 6;
    const Fixture f = make(random_plant(rng), N);
    const RowVec3 K0 = design_K0(f.plant.Q0, {{{-1, 0}, {-2, 0}, {-3, 0}}});
    const TransformPack t = build_transform(f.plant, f.basis, f.act, K0, N, gam(rng));
    const double binv = spectral_norm(f.act.inverse);
    // each row of -gamma^-4 Gbar + I (x) K0 has two entries bounded by xi
    EXPECT_LE(spectral_norm(t.Q_NNg), binv * (std::sqrt(2.0) * t.xi + K0.norm()) + 1e-9);
  }
}

TEST(Transform, QNormBoundNeedsRowFactorWhenTermsBalance) {
  // d2 - d1 = 100 and kappa (d1 - d3) = -101 make both row entries close to xi
  PlantSpec p;
  p.diffusion = Vec3(1.0, 101.0, 102.0);
  p.Q0(1, 0) = 1.0;
  p.Q0(2, 1) = 1.0;
  const Fixture f = make(p, 1);
  const RowVec3 K0 = design_K0(p.Q0, {{{-1, 0}, {-2, 0}, {-3, 0}}});
  const double gamma = pi * pi * 101.0 / 100.0;
  const TransformPack t = build_transform(f.plant, f.basis, f.act, K0, 1, gamma);
  const double lhs = spectral_norm(t.Q_NNg);
  const double binv = spectral_norm(f.act.inverse);
  EXPECT_GT(lhs, binv * (t.xi + K0.norm()));
  EXPECT_LE(lhs, binv * (std::sqrt(2.0) * t.xi + K0.norm()));
}

TEST(Transform, JbarClosedForm) {
  std::mt19937_64 rng(6);
  for (int k = 0; k < 10; ++k) {
    const Fixture f = make(random_plant(rng), 4);
    const double g = 1.0 + k;
    const TransformPack t = build_transform(f.plant, f.basis, f.act, kExampleK0, 4, g);
    const Mat3& q = f.plant.Q1;
    for (int n = 1; n <= 4; ++n) {
      const double lk = f.basis.lambda(n) * t.kappa;
      Mat3 ref = Mat3::Zero();
      ref(0, 0) = q(0, 0);
      ref(0, 1) = (q(0, 1) + lk * (q(1, 1) - q(0, 0))) / g;
      ref(0, 2) = (q(0, 2) + lk * q(1, 2)) / (g * g);
      ref(1, 1) = q(1, 1);
      ref(1, 2) = q(1, 2) / g;
      ref(2, 2) = q(2, 2);
      EXPECT_LT((t.Jbar[n - 1] - ref).cwiseAbs().maxCoeff(), 1e-10 * (1 + ref.norm()));
    }
  }
}

TEST(Transform, JbarNormLimits) {
  PlantSpec p = example_plant();
  p.Q1 = Vec3(0.5, -2.0, 1.5).asDiagonal();
  const Fixture f = make(p, 5);
  const TransformPack big = build_transform(f.plant, f.basis, f.act, kExampleK0, 5, 1e6);
  EXPECT_NEAR(jbar_norm_bound(big), 2.0, 1e-3);

  PlantSpec flat = example_plant();
  flat.diffusion = Vec3(2.0, 3.0, 3.0);
  flat.Q1 << 1.0, 2.0, 3.0, 0.0, -1.0, 4.0, 0.0, 0.0, 0.5;
  const Fixture h = make(flat, 3);
  const TransformPack t = build_transform(h.plant, h.basis, h.act, kExampleK0, 3, 2.0);
  const Mat3 G = t.Gamma;
  EXPECT_NEAR(jbar_norm_bound(t), spectral_norm(G.inverse() * flat.Q1 * G), 1e-12);
}

TEST(Transform, Errors) {
  PlantSpec p = example_plant();
  const Fixture f = make(p, 5);
  EXPECT_THROW(build_transform(f.plant, f.basis, f.act, kExampleK0, 5, 0.5), ParameterError);
  EXPECT_THROW(build_transform(f.plant, f.basis, f.act, kExampleK0, 4, 2.0), ParameterError);
  PlantSpec q = f.plant;
  q.Q0(1, 0) = 0.0;
  EXPECT_THROW(build_transform(q, f.basis, f.act, kExampleK0, 5, 2.0), AssumptionViolation);
}
