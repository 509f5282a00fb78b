#pragma once

#include <span>
#include <vector>

namespace parastab {

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1], ascending
  std::vector<double> weights;
};

// n-point Gauss-Legendre rule by Newton iteration on P_n.
GaussRule gauss_legendre(int n);

// Composite Gauss-Legendre grid on [0, L].
class SpatialGrid {
 public:
  SpatialGrid() = default;

  // `panels` uniform panels, refined so that every breakpoint in (0, L) is a
  // panel edge.
  static SpatialGrid composite(double length, int panels,
                               std::span<const double> breakpoints = {},
                               int order = 8);

  // Panel count chosen to resolve eigenfunctions up to `n_max`:
  // panels_per_mode panels per half-wave of phi_{n_max}.
  static SpatialGrid for_modes(double length, int n_max,
                               std::span<const double> breakpoints = {},
                               int panels_per_mode = 2);

  const std::vector<double>& points() const { return points_; }
  const std::vector<double>& weights() const { return weights_; }
  int size() const { return static_cast<int>(points_.size()); }
  double length() const { return length_; }

  double integrate(std::span<const double> values) const;

  template <class F>
  double integrate_fn(F&& f) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < points_.size(); ++i) acc += weights_[i] * f(points_[i]);
    return acc;
  }

 private:
  double length_ = 0.0;
  std::vector<double> points_;
  std::vector<double> weights_;
};

}  // namespace parastab
