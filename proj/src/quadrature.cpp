#include <parastab/quadrature.hpp>
#include <parastab/types.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace parastab {

GaussRule gauss_legendre(int n) {
  if (n < 1) throw ParameterError("gauss_legendre: need at least one node");
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Tricomi initial guess for the i-th root from the right.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

SpatialGrid SpatialGrid::composite(double length, int panels,
                                   std::span<const double> breakpoints,
                                   int order) {
  if (!(length > 0.0)) throw ParameterError("SpatialGrid: length must be positive");
  if (panels < 1) throw ParameterError("SpatialGrid: need at least one panel");

  std::vector<double> edges;
  edges.reserve(panels + 1 + breakpoints.size());
  for (int k = 0; k <= panels; ++k) edges.push_back(length * k / panels);
  for (double b : breakpoints) {
    if (b > 0.0 && b < length) edges.push_back(b);
  }
  std::sort(edges.begin(), edges.end());
  const double merge_tol = 1e-12 * length;
  std::vector<double> unique_edges;
  for (double e : edges) {
    if (unique_edges.empty() || e - unique_edges.back() > merge_tol) {
      unique_edges.push_back(e);
    } else if (e == length) {
      unique_edges.back() = length;
    }
  }

  const GaussRule rule = gauss_legendre(order);
  SpatialGrid grid;
  grid.length_ = length;
  for (std::size_t p = 0; p + 1 < unique_edges.size(); ++p) {
    const double a = unique_edges[p];
    const double b = unique_edges[p + 1];
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (int i = 0; i < order; ++i) {
      grid.points_.push_back(mid + half * rule.nodes[i]);
      grid.weights_.push_back(half * rule.weights[i]);
    }
  }
  return grid;
}

SpatialGrid SpatialGrid::for_modes(double length, int n_max,
                                   std::span<const double> breakpoints,
                                   int panels_per_mode) {
  const int panels = std::max(4, panels_per_mode * std::max(1, n_max));
  return composite(length, panels, breakpoints, 8);
}

double SpatialGrid::integrate(std::span<const double> values) const {
  if (values.size() != points_.size()) {
    throw ParameterError("SpatialGrid::integrate: size mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) acc += weights_[i] * values[i];
  return acc;
}

}  // namespace parastab
