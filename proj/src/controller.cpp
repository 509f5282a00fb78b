#include <parastab/controller.hpp>

#include <cmath>
#include <string>

namespace parastab {

FeedbackGain build_gain(const ActuatorMatrix& actuators, const TransformPack& pack,
                        const RowVec3& K0) {
  const int N = pack.N;
  if (actuators.n() != N) {
    throw ParameterError("build_gain: " + std::to_string(actuators.n()) + " actuators for N = " +
                         std::to_string(N));
  }
  FeedbackGain g;
  g.N = N;
  g.gamma = pack.gamma;
  g.K0 = K0;
  g.B_inv = actuators.inverse;
  g.G_N = MatrixXd::Zero(N, 3 * N);
  g.K = MatrixXd::Zero(N, 3 * N);
  g.T_block = MatrixXd::Zero(3 * N, 3 * N);

  const double gm = pack.gamma;
  const RowVec3 K0Gi(K0(0) / (gm * gm * gm), K0(1) / (gm * gm), K0(2) / gm);
  const double g4 = std::pow(gm, 4);
  for (int j = 0; j < N; ++j) {
    g.G_N.block<1, 3>(j, 3 * j) = pack.G[j];
    g.K.block<1, 3>(j, 3 * j) = g4 * K0Gi;
    g.T_block.block<3, 3>(3 * j, 3 * j) = pack.T[j];
  }
  g.U_map = g.B_inv * (g.K - g.G_N) * g.T_block;
  if (!g.U_map.allFinite()) throw NumericalError("feedback gain has non-finite entries");
  return g;
}

VectorXd control(const FeedbackGain& gain, const ModalState& z) {
  if (z.modes() < gain.N) throw ParameterError("control: state has fewer than N modes");
  return gain.U_map * z.head_stack(gain.N);
}

}  // namespace parastab
