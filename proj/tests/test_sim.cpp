#include <parastab/sim.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace parastab;
using std::numbers::pi;

namespace {

const RowVec3 kExampleK0(-3.708, -26.329, -2.222);

PlantSpec heat_plant() {
  PlantSpec p = example_plant(0.0);
  p.Q0.setZero();
  return p;
}

SimConfig short_run(int modes, double dt, double t_end) {
  SimConfig c;
  c.modes = modes;
  c.dt = dt;
  c.t_end = t_end;
  c.record_stride = 1;
  return c;
}

Trajectory synthetic(std::function<double(double)> norm, double t_end, double step) {
  Trajectory t;
  for (double s = 0.0; s <= t_end + 1e-12; s += step) {
    t.times.push_back(s);
    t.norms.push_back(norm(s));
  }
  return t;
}

struct ClosedLoop {
  PlantSpec plant;
  EigenBasis basis;
  ActuatorMatrix act;
  TransformPack pack;
  FeedbackGain gain;

  ClosedLoop(double l1, int modes) : plant(example_plant(l1)), basis(EigenBasis::compute(plant.bc, 1.0, modes)) {
    const SpatialGrid g = SpatialGrid::for_modes(1.0, 6, plant.shapes.breakpoints);
    act = actuator_matrix(plant.shapes, basis, g);
    pack = build_transform(plant, basis, act, kExampleK0, 5, 5.0);
    gain = build_gain(act, pack, kExampleK0);
  }
};

}  // namespace

TEST(Simulate, SingleHeatMode) {
  const PlantSpec p = heat_plant();
  const EigenBasis b = EigenBasis::compute(p.bc, 1.0, 10);
  ModalState z0(10);
  z0.z(0, 0) = 1.0;
  const Trajectory t = simulate(p, b, nullptr, z0, short_run(10, 1e-3, 0.1));
  ASSERT_FALSE(t.blew_up);
  const ModalMatrix& z = t.states.back();
  EXPECT_NEAR(t.times.back(), 0.1, 1e-12);
  EXPECT_NEAR(z(0, 0), std::exp(-2.0 * pi * pi * 0.1), 1e-6);
  ModalMatrix rest = z;
  rest(0, 0) = 0.0;
  EXPECT_LT(rest.cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Simulate, MatrixExponentialOracle) {
  PlantSpec p = example_plant(0.0);
  const EigenBasis b = EigenBasis::compute(p.bc, 1.0, 8);
  ModalState z0(8);
  z0.z(0, 0) = 1.0;
  const double T = 0.3;
  const Trajectory t = simulate(p, b, nullptr, z0, short_run(8, 1e-3, T));

  // exp(A T) e1 through an eigendecomposition of the lower-triangular A
  const Mat3 A = -b.lambda(1) * p.D() + p.Q0;
  Eigen::EigenSolver<Mat3> es(A);
  const Eigen::Matrix3cd V = es.eigenvectors();
  Eigen::Vector3cd ex;
  for (int i = 0; i < 3; ++i) ex(i) = std::exp(es.eigenvalues()(i) * T);
  const Vec3 ref = (V * ex.asDiagonal() * V.inverse()).real().col(0);
  EXPECT_LT((t.states.back().row(0).transpose() - ref).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT(t.states.back().bottomRows(7).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Simulate, StepHalvingIsSecondOrder) {
  const ClosedLoop cl(15.0, 16);
  const ModalState z0 = random_smooth_state(16, 7);
  std::vector<ModalMatrix> ends;
  for (double dt : {4e-4, 2e-4, 1e-4}) {
    const Trajectory t = simulate(cl.plant, cl.basis, &cl.gain, z0, short_run(16, dt, 0.2));
    ASSERT_FALSE(t.blew_up);
    ends.push_back(t.states.back());
  }
  const double e1 = (ends[0] - ends[1]).norm();
  const double e2 = (ends[1] - ends[2]).norm();
  ASSERT_GT(e2, 0.0);
  EXPECT_GE(std::log2(e1 / e2), 1.9) << "e1 " << e1 << " e2 " << e2;
}

TEST(Simulate, SchemesAgree) {
  const ClosedLoop cl(15.0, 16);
  const ModalState z0 = random_smooth_state(16, 2);
  SimConfig c = short_run(16, 1e-4, 0.2);
  const Trajectory a = simulate(cl.plant, cl.basis, &cl.gain, z0, c);
  c.scheme = SimScheme::CoupledLinear;
  const Trajectory b = simulate(cl.plant, cl.basis, &cl.gain, z0, c);
  EXPECT_LT((a.states.back() - b.states.back()).norm(), 1e-6 * z0.norm());
}

TEST(Simulate, ZeroInitialStateStaysZero) {
  const ClosedLoop cl(15.0, 20);
  const Trajectory t = simulate(cl.plant, cl.basis, &cl.gain, ModalState(20), short_run(20, 1e-4, 0.05));
  for (const ModalMatrix& z : t.states) EXPECT_TRUE(z.isZero(0.0));
  for (const VectorXd& u : t.controls) EXPECT_TRUE(u.isZero(0.0));
}

TEST(Simulate, DissipativeLinearPlantHasNonincreasingNorm) {
  PlantSpec p = example_plant(0.0);
  p.Q0(1, 0) = 2.0;
  p.Q0(2, 1) = -1.0;
  p.Q1(0, 1) = 2.0;
  p.Q1(1, 2) = -1.0;
  p.Q1.diagonal() = Vec3(-3.0, -5.0, -2.0);
  ASSERT_TRUE((p.Q() - p.Q().transpose()).isZero());
  ASSERT_LE(Eigen::SelfAdjointEigenSolver<Mat3>(p.Q()).eigenvalues().maxCoeff(), 0.0);
  const EigenBasis b = EigenBasis::compute(p.bc, 1.0, 20);
  const Trajectory t = simulate(p, b, nullptr, random_smooth_state(20, 4), short_run(20, 1e-3, 0.5));
  for (std::size_t i = 1; i < t.size(); ++i) EXPECT_LE(t.norms[i], t.norms[i - 1] * (1 + 1e-12));
}

TEST(Simulate, ForcingRespectsLipschitzBound) {
  const PlantSpec p = example_plant(15.0);
  const EigenBasis b = EigenBasis::compute(p.bc, 1.0, 40);
  const SpatialGrid g = SpatialGrid::for_modes(1.0, 40, p.shapes.breakpoints);
  const ModalSampler s(b, g, 40);
  for (int seed = 1; seed <= 10; ++seed) {
    const ModalState z = random_smooth_state(40, seed, 20, 3.0);
    ModalSampler::Samples v = s.reconstruct(z.z);
    for (int i = 0; i < v.rows(); ++i) v.row(i) = p.nonlinearity(v.row(i).transpose()).transpose();
    const ModalMatrix F = s.project(v);
    EXPECT_LE(F.squaredNorm(), 15.0 * 15.0 * z.z.squaredNorm() * (1 + 1e-8));
  }
}

TEST(Simulate, OpenLoopGrowthNeedsLargeReaction) {
  PlantSpec p = example_plant(0.0);
  const EigenBasis b = EigenBasis::compute(p.bc, 1.0, 10);
  // diag{5, 5, 5} leaves -lambda_1 D + Q stable, diag{25, 25, 25} does not
  p.Q1 = 5.0 * Mat3::Identity();
  EXPECT_LT((-b.lambda(1) * p.D() + p.Q()).eigenvalues().real().maxCoeff(), 0.0);
  p.Q1 = 25.0 * Mat3::Identity();
  EXPECT_GT((-b.lambda(1) * p.D() + p.Q()).eigenvalues().real().maxCoeff(), 0.0);

  const Trajectory t = simulate(p, b, nullptr, random_smooth_state(10, 1), short_run(10, 1e-3, 1.0));
  EXPECT_GT(fit_decay(t, 0.5, 1.0).rate, -10.0);
  EXPECT_LT(fit_decay(t, 0.5, 1.0).rate, 0.0);
}

TEST(Simulate, BlowUpGuard) {
  PlantSpec p = example_plant(0.0);
  p.Q1 = 60.0 * Mat3::Identity();
  const EigenBasis b = EigenBasis::compute(p.bc, 1.0, 10);
  SimConfig c = short_run(10, 1e-3, 10.0);
  c.blowup = 1e3;
  const Trajectory t = simulate(p, b, nullptr, random_smooth_state(10, 1), c);
  EXPECT_TRUE(t.blew_up);
  EXPECT_FALSE(t.diagnostic.empty());
  EXPECT_LT(t.times.back(), 10.0);
  EXPECT_GT(t.norms.back(), 1e3);
}

TEST(Simulate, FieldInitialConditionAndSnapshots) {
  const PlantSpec p = heat_plant();
  const EigenBasis b = EigenBasis::compute(p.bc, 1.0, 12);
  SimConfig c = short_run(12, 1e-3, 0.02);
  c.snapshot_times = {0.0, 0.01};
  c.snapshot_points = 11;
  const Trajectory t = simulate(p, b, nullptr, [&](double x) { return Vec3(b.phi(2, x), 0, 0); }, c);
  EXPECT_TRUE(t.warnings.empty());
  ASSERT_EQ(t.snapshots.size(), 2u);
  EXPECT_EQ(t.snapshots[0].x.size(), 11u);
  for (std::size_t i = 0; i < 11; ++i) {
    EXPECT_NEAR(t.snapshots[0].values(i, 0), b.phi(2, t.snapshots[0].x[i]), 1e-8);
    EXPECT_NEAR(t.snapshots[1].values(i, 0), std::exp(-2.0 * 4 * pi * pi * 0.01) * b.phi(2, t.snapshots[1].x[i]),
                1e-6);
  }

  const Trajectory w = simulate(p, b, nullptr, [](double) { return Vec3(1.0, 0, 0); }, c);
  EXPECT_FALSE(w.warnings.empty());
}

TEST(Simulate, RejectsInconsistentSizes) {
  const PlantSpec p = heat_plant();
  const EigenBasis b = EigenBasis::compute(p.bc, 1.0, 10);
  EXPECT_THROW(simulate(p, b, nullptr, ModalState(8), short_run(10, 1e-3, 0.1)), ParameterError);
  EXPECT_THROW(simulate(p, b, nullptr, ModalState(12), short_run(12, 1e-3, 0.1)), ParameterError);
  EXPECT_THROW(simulate(p, b, nullptr, ModalState(10), short_run(10, -1.0, 0.1)), ParameterError);
}

TEST(DecayFit, SyntheticNorms) {
  const DecayFit f = fit_decay(synthetic([](double t) { return 3.0 * std::exp(-2.0 * t); }, 5.0, 0.01), 1.0, 4.0);
  EXPECT_NEAR(f.rate, 2.0, 1e-6);
  EXPECT_NEAR(f.M_fit, 1.0, 1e-9);
  EXPECT_NEAR(fit_decay(synthetic([](double) { return 0.7; }, 5.0, 0.1), 1.0, 4.0).rate, 0.0, 1e-12);

  // norms hitting zero truncate the window
  const Trajectory z = synthetic([](double t) { return t < 2.0 ? std::exp(-5.0 * t) : 0.0; }, 5.0, 0.01);
  const DecayFit g = fit_decay(z, 1.0, 4.0);
  EXPECT_NEAR(g.rate, 5.0, 1e-6);
  EXPECT_LT(g.samples, 120);

  EXPECT_THROW(fit_decay(synthetic([](double) { return 0.0; }, 5.0, 0.1), 1.0, 4.0), ParameterError);
  EXPECT_THROW(fit_decay(z, 3.0, 3.0), ParameterError);
}

TEST(DecayFit, HeatModeRate) {
  const PlantSpec p = heat_plant();
  const EigenBasis b = EigenBasis::compute(p.bc, 1.0, 10);
  ModalState z0(10);
  z0.z(0, 0) = 1.0;
  SimConfig c = short_run(10, 1e-3, 1.0);
  c.record_stride = 10;
  const Trajectory t = simulate(p, b, nullptr, z0, c);
  EXPECT_NEAR(fit_decay(t, 0.2, 0.8).rate, 2.0 * pi * pi, 0.01 * 2.0 * pi * pi);
}

TEST(Lyapunov, DefinitionCases) {
  const ClosedLoop cl(15.0, 10);
  Certificate cert;
  cert.P = Mat3::Identity();
  cert.rho = 0.25;
  EXPECT_EQ(lyapunov_value(ModalState(10), cert, cl.pack), 0.0);
  ModalState z(10);
  z.set_mode(6, Vec3(0.6, 0.0, 0.8));
  EXPECT_DOUBLE_EQ(lyapunov_value(z, cert, cl.pack), 0.125);

  // a mode inside the finite part is read through T and Gamma^{-1}
  ModalState h(10);
  h.set_mode(2, Vec3(0.0, 0.0, 5.0));
  EXPECT_NEAR(lyapunov_value(h, cert, cl.pack), 0.5, 1e-15);
}

TEST(Lyapunov, GrowthMeasure) {
  Trajectory t = synthetic([](double) { return 1.0; }, 2.0, 0.5);
  for (double s : t.times) t.V.push_back(std::exp(-2.0 * s));
  EXPECT_NEAR(lyapunov_growth(t, 1.0), 0.0, 1e-12);
  t.V[3] *= 1.05;
  EXPECT_NEAR(lyapunov_growth(t, 1.0), 0.05, 1e-12);
}

TEST(Output, CsvIsDeterministicAndFull) {
  const ClosedLoop cl(15.0, 12);
  const ModalState z0 = random_smooth_state(12, 11);
  SimConfig c = short_run(12, 1e-4, 0.01);
  c.record_stride = 10;
  c.snapshot_times = {0.005};
  auto run = [&] {
    const Trajectory t = simulate(cl.plant, cl.basis, &cl.gain, z0, c);
    std::ostringstream a, m, s;
    write_trajectory_csv(a, t);
    write_modal_csv(m, t);
    write_snapshots_csv(s, t);
    return a.str() + m.str() + s.str();
  };
  const std::string first = run();
  EXPECT_EQ(first, run());

  const Trajectory t = simulate(cl.plant, cl.basis, &cl.gain, z0, c);
  std::ostringstream os;
  write_trajectory_csv(os, t);
  std::istringstream is(os.str());
  std::string header, row;
  std::getline(is, header);
  EXPECT_EQ(header, "t,u_1,u_2,u_3,u_4,u_5,norm_L2");
  std::getline(is, row);
  std::istringstream rs(row);
  std::string cell;
  std::vector<double> v;
  while (std::getline(rs, cell, ',')) v.push_back(std::stod(cell));
  ASSERT_EQ(v.size(), 7u);
  EXPECT_EQ(v[6], t.norms[0]);
}
