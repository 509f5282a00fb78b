#pragma once

// Closed-loop spectral Galerkin simulation of the plant in its first M modes.
//
// Each mode obeys z_n' = L_n z_n + F_n[z] + e1 (b_n . u), L_n = -lambda_n D + Q.
// The linear part is propagated exactly with exp(L_n dt); the forcing goes
// through Heun's rule on the integrating-factor variable (Lawson RK2).
// F_n is computed pseudo-spectrally: reconstruct z on the quadrature grid,
// apply f pointwise, project back.

#include <parastab/controller.hpp>
#include <parastab/model.hpp>
#include <parastab/spectral.hpp>
#include <parastab/synthesis.hpp>
#include <parastab/transform.hpp>
#include <parastab/types.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace parastab {

enum class SimScheme {
  // Control forcing explicit, with the nonlinearity.
  Split,
  // Linear closed loop (including the feedback) inside one exponential of
  // size 3M; only the nonlinearity is explicit.
  CoupledLinear,
};

const char* to_string(SimScheme s);

struct SimConfig {
  int modes = 60;
  double dt = 1e-4;
  double t_end = 5.0;
  int record_stride = 100;  // steps between stored samples
  int panels_per_mode = 2;  // quadrature grid density
  SimScheme scheme = SimScheme::Split;
  double blowup = 1e8;
  std::vector<double> snapshot_times;
  int snapshot_points = 201;

  void check() const;
};

struct Snapshot {
  double t = 0.0;
  std::vector<double> x;
  ModalSampler::Samples values;  // x.size() rows
};

struct Trajectory {
  std::vector<double> times;
  std::vector<ModalMatrix> states;
  std::vector<VectorXd> controls;  // empty vectors in open loop
  std::vector<double> norms;
  std::vector<double> V;  // filled by attach_lyapunov
  std::vector<Snapshot> snapshots;
  std::vector<std::string> warnings;
  bool blew_up = false;
  std::string diagnostic;
  int steps = 0;

  std::size_t size() const { return times.size(); }
};

// gain == nullptr runs the open loop. Throws ParameterError on inconsistent
// sizes; a blow-up ends the run early with blew_up set.
Trajectory simulate(const PlantSpec& plant, const EigenBasis& basis, const FeedbackGain* gain,
                    const ModalState& z0, const SimConfig& cfg);
Trajectory simulate(const PlantSpec& plant, const EigenBasis& basis, const FeedbackGain* gain,
                    const VectorField& z0, const SimConfig& cfg);

// z0 = sum_{k <= excited} c_k phi_k with Gaussian c_k / k^2 per component,
// scaled to L2 norm `amplitude`. Compatible with the boundary conditions.
ModalState random_smooth_state(int modes, std::uint64_t seed, int excited = 8,
                               double amplitude = 1.0);

double lyapunov_value(const ModalState& z, const Certificate& cert, const TransformPack& pack);
std::vector<double> lyapunov_trace(const Trajectory& traj, const Certificate& cert,
                                   const TransformPack& pack);

struct DecayFit {
  double rate = 0.0;
  double M_fit = 0.0;
  double t_a = 0.0;
  double t_b = 0.0;
  int samples = 0;
};

// Least-squares slope of log ||z|| on [t_a, t_b]. Samples after the norm
// hits numerical zero are dropped. Throws ParameterError with fewer than two
// usable samples.
DecayFit fit_decay(const Trajectory& traj, double t_a, double t_b);

// Worst relative increase of e^{2 delta t} V(t) over any earlier sample.
double lyapunov_growth(const Trajectory& traj, double delta);

// CSV writers, 17 significant digits.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
void write_modal_csv(std::ostream& os, const Trajectory& traj);
void write_snapshots_csv(std::ostream& os, const Trajectory& traj);

}  // namespace parastab
