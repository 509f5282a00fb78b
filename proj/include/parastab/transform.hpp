#pragma once

// Modal change of coordinates y_n = T_n z_n that turns the first N mode
// blocks into -lambda_n d3 I + Q0 + e1 G_n + J_n, together with the high-gain
// scaling Gamma = diag{g^3, g^2, g} and every derived matrix the stability
// conditions need.

#include <parastab/model.hpp>
#include <parastab/spectral.hpp>
#include <parastab/types.hpp>

#include <vector>

namespace parastab {

struct TransformPack {
  int N = 0;
  double gamma = 1.0;
  double kappa = 0.0;    // (d3 - d2) / q21
  double sigma_N = 1.0;  // 1 + |kappa| lambda_N
  std::vector<double> lambdas;  // lambda_1..lambda_N

  std::vector<Mat3> T;
  std::vector<Mat3> T_inv;
  Mat3 Gamma = Mat3::Identity();
  std::vector<RowVec3> G;  // G_n = (lambda_n (d2 - d1), lambda_n^2 kappa (d1 - d3), 0)
  std::vector<Mat3> J;     // T_n Q1 T_n^{-1}
  std::vector<Mat3> Jbar;  // Gamma^{-1} J_n Gamma

  MatrixXd Gbar_N;  // N x 3N, blockdiag{G_j Gamma}
  MatrixXd J_bar_N;  // 3N x 3N, blockdiag{Jbar_j}
  MatrixXd M_Ng;     // 3N x 3N, blockdiag{Gamma T_j^{-T} T_j^{-1} Gamma}
  MatrixXd Q_NNg;    // N x 3N, B_NN^{-1} (-gamma^{-4} Gbar_N + I_N (x) K0)
  double xi = 0.0;   // max(lambda_N |d2 - d1| / g, (lambda_N / g)^2 |kappa (d1 - d3)|)

  RowVec3 K0 = RowVec3::Zero();

  // T_n for any n >= 1 (identity beyond N).
  Mat3 T_of(int n) const { return n <= N ? T[n - 1] : Mat3::Identity(); }
  Mat3 T_inv_of(int n) const { return n <= N ? T_inv[n - 1] : Mat3::Identity(); }
};

// Throws AssumptionViolation when q21 = 0 and ParameterError for gamma < 1
// or a basis/actuator size mismatch.
TransformPack build_transform(const PlantSpec& plant, const EigenBasis& basis,
                              const ActuatorMatrix& actuators, const RowVec3& K0, int N,
                              double gamma);

// y_n = T_n z_n (and the inverse map).
ModalState transform_state(const TransformPack& pack, const ModalState& z);
ModalState inverse_transform_state(const TransformPack& pack, const ModalState& y);

// max_n |Jbar_n| in the spectral norm.
double jbar_norm_bound(const TransformPack& pack);

}  // namespace parastab
