#include <parastab/sim.hpp>

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>

namespace parastab {

const char* to_string(SimScheme s) {
  return s == SimScheme::CoupledLinear ? "coupled" : "split";
}

void SimConfig::check() const {
  if (modes < 1) throw ParameterError("sim: modes must be positive");
  if (!(dt > 0.0)) throw ParameterError("sim: dt must be positive");
  if (!(t_end >= 0.0)) throw ParameterError("sim: t_end must be nonnegative");
  if (record_stride < 1) throw ParameterError("sim: record stride must be positive");
  if (panels_per_mode < 1) throw ParameterError("sim: panels per mode must be positive");
  if (snapshot_points < 2) throw ParameterError("sim: need at least two snapshot points");
}

namespace {

VectorXd flatten(const ModalMatrix& z) {
  VectorXd v(3 * z.rows());
  for (int n = 0; n < z.rows(); ++n) v.segment<3>(3 * n) = z.row(n).transpose();
  return v;
}

ModalMatrix unflatten(const VectorXd& v) {
  ModalMatrix z(v.size() / 3, 3);
  for (int n = 0; n < z.rows(); ++n) z.row(n) = v.segment<3>(3 * n).transpose();
  return z;
}

Snapshot take_snapshot(double t, const ModalMatrix& z, const EigenBasis& basis, int points) {
  Snapshot s;
  s.t = t;
  s.values = ModalSampler::Samples::Zero(points, 3);
  const double L = basis.length();
  for (int i = 0; i < points; ++i) {
    const double x = L * i / (points - 1);
    s.x.push_back(x);
    for (int n = 1; n <= z.rows(); ++n) s.values.row(i) += basis.phi(n, x) * z.row(n - 1);
  }
  return s;
}

}  // namespace

Trajectory simulate(const PlantSpec& plant, const EigenBasis& basis, const FeedbackGain* gain,
                    const ModalState& z0, const SimConfig& cfg) {
  cfg.check();
  const int M = cfg.modes;
  if (M > basis.n_max()) throw ParameterError("sim: more modes than the basis holds");
  if (z0.modes() != M) throw ParameterError("sim: initial state has the wrong number of modes");
  if (gain && gain->N > M) throw ParameterError("sim: gain reads more modes than simulated");
  if (gain && gain->N != plant.actuator_count()) {
    throw ParameterError("sim: gain has " + std::to_string(gain->N) + " inputs, plant has " +
                         std::to_string(plant.actuator_count()) + " actuators");
  }

  const SpatialGrid grid =
      SpatialGrid::for_modes(plant.length, M, plant.shapes.breakpoints, cfg.panels_per_mode);
  const ModalSampler sampler(basis, grid, M);
  const MatrixXd Bfull = actuator_projections(plant.shapes, basis, grid, M);  // M x N
  const Mat3 D = plant.D();
  const Mat3 Q = plant.Q();
  const double dt = cfg.dt;

  const bool coupled = cfg.scheme == SimScheme::CoupledLinear;
  std::vector<Mat3> E;
  MatrixXd Ebig;
  if (coupled) {
    MatrixXd A = MatrixXd::Zero(3 * M, 3 * M);
    for (int n = 1; n <= M; ++n) A.block<3, 3>(3 * (n - 1), 3 * (n - 1)) = -basis.lambda(n) * D + Q;
    if (gain) {
      const MatrixXd BU = Bfull * gain->U_map;  // M x 3N
      for (int n = 0; n < M; ++n) A.block(3 * n, 0, 1, 3 * gain->N) += BU.row(n);
    }
    Ebig = (A * dt).exp();
  } else {
    for (int n = 1; n <= M; ++n) E.push_back(Mat3((-basis.lambda(n) * D + Q) * dt).exp());
  }

  auto propagate = [&](const ModalMatrix& z) {
    if (coupled) return unflatten(Ebig * flatten(z));
    ModalMatrix out(M, 3);
    for (int n = 0; n < M; ++n) out.row(n) = (E[n] * z.row(n).transpose()).transpose();
    return out;
  };

  const bool nonlinear = !plant.nonlinearity.is_zero();
  auto forcing = [&](const ModalMatrix& z) {
    ModalMatrix F = ModalMatrix::Zero(M, 3);
    if (nonlinear) {
      ModalSampler::Samples s = sampler.reconstruct(z);
      for (int i = 0; i < s.rows(); ++i) {
        s.row(i) = plant.nonlinearity(s.row(i).transpose()).transpose();
      }
      F = sampler.project(s);
    }
    if (gain && !coupled) {
      const VectorXd u = control(*gain, ModalState(z));
      F.col(0) += Bfull * u;
    }
    return F;
  };

  Trajectory traj;
  auto record = [&](double t, const ModalMatrix& z) {
    traj.times.push_back(t);
    traj.states.push_back(z);
    traj.norms.push_back(z.norm());
    traj.controls.push_back(gain ? VectorXd(control(*gain, ModalState(z))) : VectorXd());
  };

  std::vector<double> snaps = cfg.snapshot_times;
  std::sort(snaps.begin(), snaps.end());
  std::size_t next_snap = 0;
  auto maybe_snapshot = [&](double t, const ModalMatrix& z) {
    while (next_snap < snaps.size() && snaps[next_snap] <= t + 0.5 * dt) {
      traj.snapshots.push_back(take_snapshot(t, z, basis, cfg.snapshot_points));
      ++next_snap;
    }
  };

  const long long steps = std::llround(cfg.t_end / dt);
  ModalMatrix z = z0.z;
  record(0.0, z);
  maybe_snapshot(0.0, z);
  for (long long k = 1; k <= steps; ++k) {
    const ModalMatrix k1 = forcing(z);
    const ModalMatrix pred = propagate(z + dt * k1);
    const ModalMatrix k2 = forcing(pred);
    z = propagate(z + 0.5 * dt * k1) + 0.5 * dt * k2;
    traj.steps = static_cast<int>(k);

    const double t = k * dt;
    const double nz = z.norm();
    if (!std::isfinite(nz) || nz > cfg.blowup) {
      traj.blew_up = true;
      char buf[160];
      std::snprintf(buf, sizeof buf, "blow-up at t = %.6g: |z| = %.6g exceeds %.3g", t, nz,
                    cfg.blowup);
      traj.diagnostic = buf;
      record(t, z);
      break;
    }
    if (k % cfg.record_stride == 0 || k == steps) record(t, z);
    maybe_snapshot(t, z);
  }
  return traj;
}

Trajectory simulate(const PlantSpec& plant, const EigenBasis& basis, const FeedbackGain* gain,
                    const VectorField& z0, const SimConfig& cfg) {
  cfg.check();
  const SpatialGrid grid =
      SpatialGrid::for_modes(plant.length, cfg.modes, plant.shapes.breakpoints, cfg.panels_per_mode);
  const ModalState s = project(z0, basis, grid, cfg.modes);
  Trajectory traj = simulate(plant, basis, gain, s, cfg);
  if (plant.bc.is_dirichlet()) {
    const double left = z0(0.0).norm();
    const double right = z0(plant.length).norm();
    if (left > 1e-8 || right > 1e-8) {
      traj.warnings.push_back("initial field does not vanish at a Dirichlet boundary");
    }
  }
  return traj;
}

ModalState random_smooth_state(int modes, std::uint64_t seed, int excited, double amplitude) {
  ModalState s(modes);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int K = std::min(excited, modes);
  for (int n = 1; n <= K; ++n) {
    const double w = 1.0 / (static_cast<double>(n) * n);
    s.set_mode(n, Vec3(normal(rng), normal(rng), normal(rng)) * w);
  }
  const double nrm = s.norm();
  if (nrm > 0.0) s.z *= amplitude / nrm;
  return s;
}

double lyapunov_value(const ModalState& z, const Certificate& cert, const TransformPack& pack) {
  const double g = pack.gamma;
  const Vec3 gi(1.0 / (g * g * g), 1.0 / (g * g), 1.0 / g);
  double v = 0.0;
  for (int n = 1; n <= z.modes(); ++n) {
    const Vec3 y = pack.T_of(n) * z.mode(n);
    if (n <= pack.N) {
      const Vec3 yb = gi.cwiseProduct(y);
      v += 0.5 * yb.dot(cert.P * yb);
    } else {
      v += 0.5 * cert.rho * y.squaredNorm();
    }
  }
  return v;
}

std::vector<double> lyapunov_trace(const Trajectory& traj, const Certificate& cert,
                                   const TransformPack& pack) {
  std::vector<double> out;
  out.reserve(traj.size());
  for (const ModalMatrix& z : traj.states) out.push_back(lyapunov_value(ModalState(z), cert, pack));
  return out;
}

DecayFit fit_decay(const Trajectory& traj, double t_a, double t_b) {
  if (!(t_b > t_a)) throw ParameterError("fit_decay: empty window");
  DecayFit fit;
  fit.t_a = t_a;
  fit.t_b = t_b;
  std::vector<std::pair<double, double>> pts;
  const double n0 = traj.norms.empty() ? 0.0 : traj.norms.front();
  const double tiny = 1e-280;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double t = traj.times[i];
    if (t < t_a - 1e-12 || t > t_b + 1e-12) continue;
    if (!(traj.norms[i] > tiny)) break;
    pts.emplace_back(t, std::log(traj.norms[i]));
  }
  if (pts.size() < 2) throw ParameterError("fit_decay: fewer than two usable samples in window");
  double mt = 0, my = 0;
  for (auto [t, y] : pts) {
    mt += t;
    my += y;
  }
  mt /= pts.size();
  my /= pts.size();
  double sty = 0, stt = 0;
  for (auto [t, y] : pts) {
    sty += (t - mt) * (y - my);
    stt += (t - mt) * (t - mt);
  }
  fit.rate = stt > 0 ? -sty / stt : 0.0;
  fit.samples = static_cast<int>(pts.size());
  if (n0 > 0.0) {
    for (std::size_t i = 0; i < traj.size(); ++i) {
      fit.M_fit = std::max(fit.M_fit, traj.norms[i] * std::exp(fit.rate * traj.times[i]) / n0);
    }
  }
  return fit;
}

double lyapunov_growth(const Trajectory& traj, double delta) {
  double worst = 0.0;
  double running_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < traj.V.size(); ++i) {
    const double w = std::exp(2.0 * delta * traj.times[i]) * traj.V[i];
    if (running_min < std::numeric_limits<double>::infinity() && running_min > 0.0) {
      worst = std::max(worst, w / running_min - 1.0);
    }
    running_min = std::min(running_min, w);
  }
  return worst;
}

namespace {

void put(std::ostream& os, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}

}  // namespace

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const std::size_t nu = traj.controls.empty() ? 0 : traj.controls.front().size();
  const bool with_v = traj.V.size() == traj.size() && !traj.V.empty();
  os << "t";
  for (std::size_t j = 1; j <= nu; ++j) os << ",u_" << j;
  os << ",norm_L2";
  if (with_v) os << ",V";
  os << '\n';
  for (std::size_t i = 0; i < traj.size(); ++i) {
    put(os, traj.times[i]);
    for (std::size_t j = 0; j < nu; ++j) {
      os << ',';
      put(os, traj.controls[i](j));
    }
    os << ',';
    put(os, traj.norms[i]);
    if (with_v) {
      os << ',';
      put(os, traj.V[i]);
    }
    os << '\n';
  }
}

void write_modal_csv(std::ostream& os, const Trajectory& traj) {
  os << "t,n,z1,z2,z3\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const ModalMatrix& z = traj.states[i];
    for (int n = 0; n < z.rows(); ++n) {
      put(os, traj.times[i]);
      os << ',' << (n + 1);
      for (int c = 0; c < 3; ++c) {
        os << ',';
        put(os, z(n, c));
      }
      os << '\n';
    }
  }
}

void write_snapshots_csv(std::ostream& os, const Trajectory& traj) {
  os << "t,x,z1,z2,z3\n";
  for (const Snapshot& s : traj.snapshots) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      put(os, s.t);
      os << ',';
      put(os, s.x[i]);
      for (int c = 0; c < 3; ++c) {
        os << ',';
        put(os, s.values(static_cast<int>(i), c));
      }
      os << '\n';
    }
  }
}

}  // namespace parastab
