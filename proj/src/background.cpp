#include "yflow/background.hpp"

#include <cmath>
#include <stdexcept>

#include "yflow/grid.hpp"

namespace yflow {

namespace {

constexpr int kMaxDimension = 12; // sphere-volume table limit, desk scale

void require_dimension(int m) {
  if (m < 3) {
    throw std::invalid_argument("background: dimension m must be >= 3, got " +
                                std::to_string(m));
  }
  if (m > kMaxDimension) {
    throw std::invalid_argument("background: dimension m must be <= " +
                                std::to_string(kMaxDimension) + ", got " +
                                std::to_string(m));
  }
}

} // namespace

double BackgroundManifold::rho(double r) const {
  switch (warp) {
  case WarpForm::Linear:
    return r;
  case WarpForm::Sinh:
    return std::sinh(warp_scale * r) / warp_scale;
  case WarpForm::Cubic:
    return r * (1.0 + r * r / 6.0);
  }
  return r;
}

double BackgroundManifold::drho(double r) const {
  switch (warp) {
  case WarpForm::Linear:
    return 1.0;
  case WarpForm::Sinh:
    return std::cosh(warp_scale * r);
  case WarpForm::Cubic:
    return 1.0 + 0.5 * r * r;
  }
  return 1.0;
}

double BackgroundManifold::warp_second_ratio(double r) const {
  switch (warp) {
  case WarpForm::Linear:
    return 0.0;
  case WarpForm::Sinh:
    // rho'' = a^2 rho
    return warp_scale * warp_scale;
  case WarpForm::Cubic:
    // rho'' = r, rho = r (1 + r^2/6)
    return 1.0 / (1.0 + r * r / 6.0);
  }
  return 0.0;
}

double BackgroundManifold::warp_defect(double r) const {
  switch (warp) {
  case WarpForm::Linear:
    return 0.0;
  case WarpForm::Sinh:
    // 1 - cosh^2 = -sinh^2 = -(a rho)^2
    return -warp_scale * warp_scale;
  case WarpForm::Cubic: {
    // 1 - rho'^2 = -r^2 (1 + r^2/4), rho^2 = r^2 (1 + r^2/6)^2
    const double q = 1.0 + r * r / 6.0;
    return -(1.0 + r * r / 4.0) / (q * q);
  }
  }
  return 0.0;
}

double background_scalar_curvature(const BackgroundManifold& bg, double r) {
  if (r < 0.0) {
    throw std::invalid_argument("background_scalar_curvature: r < 0");
  }
  const double m = static_cast<double>(bg.dim);
  const double value = -2.0 * (m - 1.0) * bg.warp_second_ratio(r) +
                       (m - 1.0) * (m - 2.0) * bg.warp_defect(r);
  if (!std::isfinite(value)) {
    throw std::invalid_argument(
        "background_scalar_curvature: warp not admissible at r = " +
        std::to_string(r));
  }
  return value;
}

double sphere_surface(int dim) {
  if (dim < 1 || dim > kMaxDimension) {
    throw std::invalid_argument("sphere_surface: dimension out of range");
  }
  const double pi = 3.14159265358979323846;
  const double s = 0.5 * static_cast<double>(dim + 1);
  return 2.0 * std::pow(pi, s) / std::tgamma(s);
}

double volume_density(const BackgroundManifold& bg, double r) {
  const double rho = bg.rho(r);
  return sphere_surface(bg.dim - 1) *
         std::pow(rho, static_cast<double>(bg.dim - 1));
}

double yamabe_invariant_model(int m) {
  require_dimension(m);
  const double md = static_cast<double>(m);
  return md * (md - 2.0) / 4.0 * std::pow(sphere_surface(m), 2.0 / md);
}

GeometryConstants geometry_constants(int m) {
  require_dimension(m);
  GeometryConstants gc;
  gc.dim = m;
  gc.conformal_exponent = (static_cast<double>(m) - 2.0) / 4.0;
  gc.sphere_volume = sphere_surface(m);
  gc.yamabe_value = yamabe_invariant_model(m);
  return gc;
}

BackgroundManifold make_euclidean(int m) {
  require_dimension(m);
  BackgroundManifold bg;
  bg.dim = m;
  bg.kind = BackgroundKind::Euclidean;
  bg.warp = WarpForm::Linear;
  bg.curv_mag_hi = 0.0;
  bg.curv_mag_lo = 0.0;
  bg.assumed_yamabe = yamabe_invariant_model(m);
  bg.yamabe_certified = true;
  return bg;
}

BackgroundManifold make_hyperbolic(int m, double curvature_scale) {
  require_dimension(m);
  if (!(curvature_scale > 0.0)) {
    throw std::invalid_argument("make_hyperbolic: curvature scale must be > 0");
  }
  BackgroundManifold bg;
  bg.dim = m;
  bg.kind = BackgroundKind::Hyperbolic;
  bg.warp = WarpForm::Sinh;
  bg.warp_scale = curvature_scale;
  const double mag = static_cast<double>(m) * (static_cast<double>(m) - 1.0) *
                     curvature_scale * curvature_scale;
  bg.curv_mag_hi = mag;
  bg.curv_mag_lo = mag;
  bg.assumed_yamabe = yamabe_invariant_model(m);
  bg.yamabe_certified = true;
  return bg;
}

BackgroundManifold make_custom_warp(int m, std::string_view preset,
                                    double curv_mag_hi, double curv_mag_lo,
                                    double assumed_yamabe) {
  require_dimension(m);
  BackgroundManifold bg;
  bg.dim = m;
  bg.kind = BackgroundKind::CustomWarp;
  if (preset == "sinh") {
    bg.warp = WarpForm::Sinh;
    bg.warp_scale = 1.0;
  } else if (preset == "cubic") {
    bg.warp = WarpForm::Cubic;
  } else {
    throw std::invalid_argument("make_custom_warp: unknown warp preset '" +
                                std::string(preset) +
                                "' (known: sinh, cubic)");
  }
  if (!(curv_mag_hi >= 0.0) || !(curv_mag_lo >= 0.0) ||
      curv_mag_lo > curv_mag_hi) {
    throw std::invalid_argument(
        "make_custom_warp: bounds must satisfy 0 <= beta <= alpha_bar");
  }
  bg.curv_mag_hi = curv_mag_hi;
  bg.curv_mag_lo = curv_mag_lo;
  bg.assumed_yamabe = assumed_yamabe;
  bg.yamabe_certified = false;
  return bg;
}

void validate_background(const BackgroundManifold& bg, const RadialGrid& grid) {
  require_dimension(bg.dim);
  if (!(bg.curv_mag_lo >= 0.0) || bg.curv_mag_lo > bg.curv_mag_hi ||
      !std::isfinite(bg.curv_mag_hi)) {
    throw std::invalid_argument(
        "background: curvature bounds must satisfy 0 <= beta <= alpha_bar < inf");
  }
  if (bg.rho(0.0) != 0.0) {
    throw std::invalid_argument("background: warp must satisfy rho(0) = 0");
  }
  if (std::abs(bg.drho(0.0) - 1.0) > 1e-12) {
    throw std::invalid_argument("background: warp must satisfy rho'(0) = 1");
  }
  // Bound check with a little roundoff slack relative to the bound scale.
  const double slack = 1e-9 * std::max(1.0, bg.curv_mag_hi);
  for (double r : grid.nodes()) {
    if (r > 0.0 && !(bg.rho(r) > 0.0)) {
      throw std::invalid_argument("background: rho(r) <= 0 at r = " +
                                  std::to_string(r));
    }
    const double curv = background_scalar_curvature(bg, r);
    if (curv < -bg.curv_mag_hi - slack || curv > -bg.curv_mag_lo + slack) {
      throw std::invalid_argument(
          "background: scalar curvature outside [-alpha_bar, -beta] at r = " +
          std::to_string(r));
    }
  }
}

std::string to_string(BackgroundKind kind) {
  switch (kind) {
  case BackgroundKind::Euclidean:
    return "euclidean";
  case BackgroundKind::Hyperbolic:
    return "hyperbolic";
  case BackgroundKind::CustomWarp:
    return "custom-warp";
  }
  return "unknown";
}

} // namespace yflow
