#include "yflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace yflow {

namespace {

constexpr std::size_t kMinIntervals = 16;

void check_spacing(const std::vector<double>& nodes, double k) {
  if (nodes.size() < kMinIntervals + 1) {
    throw std::invalid_argument("grid: need at least 16 intervals");
  }
  double max_h = 0.0;
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    const double h = nodes[i] - nodes[i - 1];
    if (!(h > 0.0)) {
      throw std::invalid_argument("grid: nodes must be strictly increasing");
    }
    max_h = std::max(max_h, h);
  }
  if (max_h > k / 16.0 * (1.0 + 1e-12)) {
    throw std::invalid_argument("grid: max spacing must be <= k/16");
  }
}

} // namespace

RadialGrid::RadialGrid(double k, std::vector<double> nodes,
                       SpacingPolicy policy, bool uniform)
    : radius_(k), nodes_(std::move(nodes)), policy_(policy), uniform_(uniform) {
  check_spacing(nodes_, k);
  max_spacing_ = 0.0;
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    max_spacing_ = std::max(max_spacing_, nodes_[i] - nodes_[i - 1]);
  }
}

std::shared_ptr<const RadialGrid> RadialGrid::uniform(double k, double h) {
  if (!(k > 0.0) || !(h > 0.0)) {
    throw std::invalid_argument("grid: k and h must be positive");
  }
  const auto n = static_cast<std::size_t>(std::llround(k / h));
  if (n < kMinIntervals) {
    throw std::invalid_argument("grid: k/h gives fewer than 16 intervals");
  }
  std::vector<double> nodes(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    nodes[i] = k * static_cast<double>(i) / static_cast<double>(n);
  }
  nodes.front() = 0.0;
  nodes.back() = k;
  return std::shared_ptr<const RadialGrid>(
      new RadialGrid(k, std::move(nodes), SpacingPolicy::Uniform, true));
}

std::shared_ptr<const RadialGrid>
RadialGrid::geometric_near_boundary(double k, double h, double ratio) {
  if (!(k >= 2.0)) {
    throw std::invalid_argument(
        "grid: geometric refinement needs k >= 2 (refined zone is [k-1, k])");
  }
  if (!(ratio > 0.0) || !(ratio < 1.0)) {
    throw std::invalid_argument("grid: refinement ratio must be in (0, 1)");
  }
  const auto n1 = static_cast<std::size_t>(std::llround((k - 1.0) / h));
  if (n1 < 1) {
    throw std::invalid_argument("grid: spacing too coarse for k - 1");
  }
  std::vector<double> nodes;
  for (std::size_t i = 0; i <= n1; ++i) {
    nodes.push_back((k - 1.0) * static_cast<double>(i) /
                    static_cast<double>(n1));
  }
  // Fill [k-1, k] with intervals shrinking geometrically from ~h down to
  // ~ratio*h at the boundary, rescaled to sum to exactly 1.
  std::size_t n2 = 2;
  double q = 1.0;
  double total = 0.0;
  const auto n2_cap = static_cast<std::size_t>(2.0 / (h * ratio)) + 2;
  for (; n2 <= n2_cap; ++n2) {
    q = std::pow(ratio, 1.0 / static_cast<double>(n2 - 1));
    total = h * (1.0 - std::pow(q, static_cast<double>(n2))) / (1.0 - q);
    if (total >= 1.0) {
      break;
    }
  }
  if (total < 1.0) {
    throw std::invalid_argument("grid: refinement zone construction failed");
  }
  double pos = k - 1.0;
  double size = h / total;
  for (std::size_t j = 0; j < n2; ++j) {
    pos += size;
    nodes.push_back(pos);
    size *= q;
  }
  nodes.back() = k;
  return std::shared_ptr<const RadialGrid>(new RadialGrid(
      k, std::move(nodes), SpacingPolicy::GeometricNearBoundary, false));
}

ConformalField::ConformalField(std::shared_ptr<const RadialGrid> g, FieldRole r)
    : grid(std::move(g)), values(grid->size(), 0.0), role(r) {}

ConformalField::ConformalField(std::shared_ptr<const RadialGrid> g,
                               std::vector<double> v, FieldRole r)
    : grid(std::move(g)), values(std::move(v)), role(r) {
  if (values.size() != grid->size()) {
    throw std::invalid_argument("field: value count does not match grid");
  }
}

double ConformalField::min_value() const {
  return *std::min_element(values.begin(), values.end());
}

double ConformalField::max_value() const {
  return *std::max_element(values.begin(), values.end());
}

void ConformalField::validate() const {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw std::invalid_argument("field: non-finite value at node " +
                                  std::to_string(i));
    }
    if (role == FieldRole::ConformalFactor && !(values[i] > 0.0)) {
      throw std::invalid_argument(
          "field: conformal factor must be positive, node " +
          std::to_string(i));
    }
  }
}

ConformalField constant_field(std::shared_ptr<const RadialGrid> grid,
                              double value, FieldRole role) {
  ConformalField f(std::move(grid), role);
  std::fill(f.values.begin(), f.values.end(), value);
  return f;
}

ConformalField radial_derivative(const ConformalField& f) {
  const auto& r = f.grid->nodes();
  const std::size_t n = r.size();
  if (n < 3) {
    throw std::invalid_argument("radial_derivative: need at least 3 nodes");
  }
  ConformalField out(f.grid, FieldRole::Generic);
  out.values[0] = 0.0; // symmetry at the origin
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double hm = r[i] - r[i - 1];
    const double hp = r[i + 1] - r[i];
    const double dm = (f.values[i] - f.values[i - 1]) / hm;
    const double dp = (f.values[i + 1] - f.values[i]) / hp;
    out.values[i] = (hm * dp + hp * dm) / (hm + hp);
  }
  {
    const double hm = r[n - 2] - r[n - 3];
    const double hp = r[n - 1] - r[n - 2];
    const double dm = (f.values[n - 2] - f.values[n - 3]) / hm;
    const double dp = (f.values[n - 1] - f.values[n - 2]) / hp;
    out.values[n - 1] = dp + (dp - dm) * hp / (hm + hp);
  }
  return out;
}

ConformalField radial_gradient_sq(const ConformalField& f) {
  ConformalField out = radial_derivative(f);
  for (double& v : out.values) {
    v *= v;
  }
  return out;
}

ConformalField laplace_beltrami_radial(const ConformalField& f,
                                       const BackgroundManifold& bg) {
  const auto& r = f.grid->nodes();
  const std::size_t n = r.size();
  if (n < 3) {
    throw std::invalid_argument("laplace_beltrami: need at least 3 nodes");
  }
  const double m = static_cast<double>(bg.dim);
  ConformalField out(f.grid, FieldRole::Generic);
  // Symmetric limit m f''(0) with even extension through the origin.
  out.values[0] =
      m * 2.0 * (f.values[1] - f.values[0]) / (r[1] * r[1]);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double hm = r[i] - r[i - 1];
    const double hp = r[i + 1] - r[i];
    const double dm = (f.values[i] - f.values[i - 1]) / hm;
    const double dp = (f.values[i + 1] - f.values[i]) / hp;
    const double second = 2.0 * (dp - dm) / (hm + hp);
    const double first = (hm * dp + hp * dm) / (hm + hp);
    out.values[i] =
        second + (m - 1.0) * bg.drho(r[i]) / bg.rho(r[i]) * first;
  }
  {
    // One-sided closing stencil; diagnostic only, the solver never uses it.
    const double hm = r[n - 2] - r[n - 3];
    const double hp = r[n - 1] - r[n - 2];
    const double dm = (f.values[n - 2] - f.values[n - 3]) / hm;
    const double dp = (f.values[n - 1] - f.values[n - 2]) / hp;
    const double second = 2.0 * (dp - dm) / (hm + hp);
    const double first = dp + (dp - dm) * hp / (hm + hp);
    out.values[n - 1] =
        second + (m - 1.0) * bg.drho(r[n - 1]) / bg.rho(r[n - 1]) * first;
  }
  return out;
}

namespace {

double interp_linear(const std::vector<double>& r, const std::vector<double>& v,
                     std::size_t i, double x) {
  const double t = (x - r[i]) / (r[i + 1] - r[i]);
  return v[i] + t * (v[i + 1] - v[i]);
}

} // namespace

double integrate_radial(const ConformalField& f, const ConformalField* weight,
                        const BackgroundManifold& bg, double r_max) {
  const auto& r = f.grid->nodes();
  const std::size_t n = r.size();
  const double scale = std::max(1.0, f.grid->radius());
  if (r_max > f.grid->radius() + 1e-12 * scale) {
    throw std::invalid_argument("integrate_radial: r_max exceeds grid radius");
  }
  if (r_max < 0.0) {
    throw std::invalid_argument("integrate_radial: r_max < 0");
  }
  if (weight != nullptr) {
    if (weight->grid.get() != f.grid.get()) {
      throw std::invalid_argument("integrate_radial: weight on another grid");
    }
    weight->validate();
  }
  const double half_m = 0.5 * static_cast<double>(bg.dim);
  auto integrand_at_node = [&](std::size_t i) {
    double g = f.values[i] * volume_density(bg, r[i]);
    if (weight != nullptr) {
      g *= std::pow(weight->values[i], half_m);
    }
    return g;
  };

  // Locate the last node at or below r_max (with snapping for roundoff).
  std::size_t last = 0;
  while (last + 1 < n && r[last + 1] <= r_max + 1e-12 * scale) {
    ++last;
  }
  const bool partial = r_max - r[last] > 1e-12 * scale;

  double total = 0.0;
  if (last >= 1) {
    std::vector<double> g(last + 1);
    for (std::size_t i = 0; i <= last; ++i) {
      g[i] = integrand_at_node(i);
    }
    if (f.grid->is_uniform() && last >= 2) {
      const double h = r[1] - r[0];
      std::size_t simpson_end = last;
      if (last % 2 != 0) {
        simpson_end = last - 3; // close the tail with a 3/8 rule
      }
      for (std::size_t i = 0; i + 2 <= simpson_end; i += 2) {
        total += h / 3.0 * (g[i] + 4.0 * g[i + 1] + g[i + 2]);
      }
      if (last % 2 != 0) {
        total += 3.0 * h / 8.0 *
                 (g[last - 3] + 3.0 * g[last - 2] + 3.0 * g[last - 1] +
                  g[last]);
      }
    } else {
      for (std::size_t i = 1; i <= last; ++i) {
        total += 0.5 * (g[i] + g[i - 1]) * (r[i] - r[i - 1]);
      }
    }
  }
  if (partial) {
    // Trapezoid on the clipped final piece with interpolated integrand.
    double f_end = interp_linear(r, f.values, last, r_max);
    double g_end = f_end * volume_density(bg, r_max);
    if (weight != nullptr) {
      g_end *= std::pow(interp_linear(r, weight->values, last, r_max), half_m);
    }
    total += 0.5 * (integrand_at_node(last) + g_end) * (r_max - r[last]);
  }
  return total;
}

} // namespace yflow
