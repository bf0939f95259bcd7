// Radial discretization of balls B_k and the discrete operators (gradient,
// Laplace-Beltrami, weighted integrals) acting on radially symmetric fields.
#pragma once

#include <memory>
#include <vector>

#include "yflow/background.hpp"

namespace yflow {

enum class SpacingPolicy { Uniform, GeometricNearBoundary };

// Nodes r_0 = 0 < r_1 < ... < r_N = k. Immutable after construction.
class RadialGrid {
public:
  // Uniform: N = round(k/h) intervals, nodes k*i/N (endpoints exact).
  static std::shared_ptr<const RadialGrid> uniform(double k, double h);
  // Uniform spacing h on [0, k-1], then geometrically shrinking intervals
  // (ratio in (0,1)) toward r = k for boundary-layer resolution.
  static std::shared_ptr<const RadialGrid>
  geometric_near_boundary(double k, double h, double ratio = 0.8);

  double radius() const { return radius_; }
  const std::vector<double>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  double node(std::size_t i) const { return nodes_[i]; }
  double max_spacing() const { return max_spacing_; }
  bool is_uniform() const { return uniform_; }
  SpacingPolicy policy() const { return policy_; }

private:
  RadialGrid(double k, std::vector<double> nodes, SpacingPolicy policy,
             bool uniform);

  double radius_;
  std::vector<double> nodes_;
  SpacingPolicy policy_;
  bool uniform_;
  double max_spacing_;
};

enum class FieldRole { ConformalFactor, Curvature, TestFunction, Generic };

// One real value per grid node. Value-semantic snapshot; the grid is shared.
struct ConformalField {
  std::shared_ptr<const RadialGrid> grid;
  std::vector<double> values;
  FieldRole role = FieldRole::Generic;

  ConformalField() = default;
  ConformalField(std::shared_ptr<const RadialGrid> g, FieldRole r);
  ConformalField(std::shared_ptr<const RadialGrid> g, std::vector<double> v,
                 FieldRole r);

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }

  double min_value() const;
  double max_value() const;
  // Finite everywhere; strictly positive when role == ConformalFactor.
  void validate() const;
};

ConformalField constant_field(std::shared_ptr<const RadialGrid> grid,
                              double value,
                              FieldRole role = FieldRole::Generic);

// Radial first derivative f'(r): central second-order stencil in the
// interior, one-sided second-order at r = k, and f'(0) = 0 by symmetry.
ConformalField radial_derivative(const ConformalField& f);

// |grad f|^2 with respect to g_M, i.e. (f')^2 node-wise.
ConformalField radial_gradient_sq(const ConformalField& f);

// Laplace-Beltrami f'' + (m-1)(rho'/rho) f' of a radial function; at r = 0
// the symmetric limit m f''(0), at r = k a one-sided stencil (diagnostic use).
ConformalField laplace_beltrami_radial(const ConformalField& f,
                                       const BackgroundManifold& bg);

// Integral of f over the ball of radius r_max. With a weight field u the
// measure is u^{m/2} dmu_gM (the conformal volume element), otherwise dmu_gM.
// Composite Simpson on uniform grids, trapezoid otherwise.
double integrate_radial(const ConformalField& f, const ConformalField* weight,
                        const BackgroundManifold& bg, double r_max);

} // namespace yflow
