#include <parastab/transform.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace parastab {

TransformPack build_transform(const PlantSpec& plant, const EigenBasis& basis,
                              const ActuatorMatrix& actuators, const RowVec3& K0, int N,
                              double gamma) {
  if (plant.q21() == 0.0) {
    throw AssumptionViolation("q21 = 0: the reaction chain is not controllable from z1");
  }
  if (!(gamma >= 1.0)) throw ParameterError("high-gain parameter must satisfy gamma >= 1");
  if (N < 1 || N > basis.n_max()) throw ParameterError("transform: N outside the basis range");
  if (actuators.n() != N) {
    throw ParameterError("transform: actuator matrix is " + std::to_string(actuators.n()) +
                         "x" + std::to_string(actuators.n()) + ", expected N = " +
                         std::to_string(N));
  }

  const double d1 = plant.diffusion(0);
  const double d2 = plant.diffusion(1);
  const double d3 = plant.diffusion(2);

  TransformPack p;
  p.N = N;
  p.gamma = gamma;
  p.K0 = K0;
  p.kappa = (d3 - d2) / plant.q21();
  p.Gamma = Vec3(gamma * gamma * gamma, gamma * gamma, gamma).asDiagonal();
  const Mat3 Gamma_inv = Vec3(1.0 / (gamma * gamma * gamma), 1.0 / (gamma * gamma), 1.0 / gamma)
                             .asDiagonal();

  p.Gbar_N = MatrixXd::Zero(N, 3 * N);
  p.J_bar_N = MatrixXd::Zero(3 * N, 3 * N);
  p.M_Ng = MatrixXd::Zero(3 * N, 3 * N);
  MatrixXd shifted = MatrixXd::Zero(N, 3 * N);  // -gamma^{-4} Gbar_N + I_N (x) K0
  const double g4 = std::pow(gamma, 4);

  for (int n = 1; n <= N; ++n) {
    const double lam = basis.lambda(n);
    p.lambdas.push_back(lam);

    // Rank-one structure: T_n = I + lambda_n kappa E12, T_n^{-1} = I - lambda_n kappa E12.
    Mat3 T = Mat3::Identity();
    Mat3 Ti = Mat3::Identity();
    T(0, 1) = lam * p.kappa;
    Ti(0, 1) = -lam * p.kappa;
    p.T.push_back(T);
    p.T_inv.push_back(Ti);

    const RowVec3 G(lam * (d2 - d1), lam * lam * p.kappa * (d1 - d3), 0.0);
    p.G.push_back(G);

    const Mat3 J = T * plant.Q1 * Ti;
    p.J.push_back(J);
    const Mat3 Jbar = Gamma_inv * J * p.Gamma;
    p.Jbar.push_back(Jbar);

    const int o = 3 * (n - 1);
    p.Gbar_N.block<1, 3>(n - 1, o) = G * p.Gamma;
    p.J_bar_N.block<3, 3>(o, o) = Jbar;
    p.M_Ng.block<3, 3>(o, o) = p.Gamma * Ti.transpose() * Ti * p.Gamma;
    shifted.block<1, 3>(n - 1, o) = -G * p.Gamma / g4 + K0;
  }

  const double lamN = basis.lambda(N);
  p.sigma_N = 1.0 + std::abs(p.kappa) * lamN;
  p.xi = std::max(lamN * std::abs(d2 - d1) / gamma,
                  (lamN / gamma) * (lamN / gamma) * std::abs(p.kappa * (d1 - d3)));
  p.Q_NNg = actuators.inverse * shifted;
  return p;
}

ModalState transform_state(const TransformPack& pack, const ModalState& z) {
  if (z.modes() < pack.N) throw ParameterError("transform_state: state has fewer than N modes");
  ModalState y = z;
  for (int n = 1; n <= pack.N; ++n) y.set_mode(n, pack.T[n - 1] * z.mode(n));
  return y;
}

ModalState inverse_transform_state(const TransformPack& pack, const ModalState& y) {
  if (y.modes() < pack.N) throw ParameterError("inverse_transform_state: fewer than N modes");
  ModalState z = y;
  for (int n = 1; n <= pack.N; ++n) z.set_mode(n, pack.T_inv[n - 1] * y.mode(n));
  return z;
}

double jbar_norm_bound(const TransformPack& pack) {
  double out = 0.0;
  for (const Mat3& Jb : pack.Jbar) out = std::max(out, spectral_norm(Jb));
  return out;
}

}  // namespace parastab
