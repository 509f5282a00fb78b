#pragma once

// Modal state feedback u = U_map z^N, where z^N stacks the first N physical
// mode vectors.

#include <parastab/spectral.hpp>
#include <parastab/transform.hpp>
#include <parastab/types.hpp>

namespace parastab {

struct FeedbackGain {
  int N = 0;
  double gamma = 1.0;
  RowVec3 K0 = RowVec3::Zero();

  MatrixXd B_inv;    // N x N
  MatrixXd G_N;      // N x 3N, blockdiag{G_j}
  MatrixXd K;        // N x 3N, gamma^4 (I_N (x) K0 Gamma^{-1})
  MatrixXd T_block;  // 3N x 3N, blockdiag{T_j}
  MatrixXd U_map;    // N x 3N, B_inv (-G_N + K) T_block
};

// Throws ParameterError on a size mismatch between pack and actuators.
FeedbackGain build_gain(const ActuatorMatrix& actuators, const TransformPack& pack,
                        const RowVec3& K0);

// Reads modes 1..N only.
VectorXd control(const FeedbackGain& gain, const ModalState& z);

}  // namespace parastab
