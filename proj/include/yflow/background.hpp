// Model background manifolds: radial warped products dr^2 + rho(r)^2 g_{S^{m-1}}
// with non-positive bounded scalar curvature, plus the dimensional constants
// (conformal exponent, sphere volumes, Yamabe invariant of the space forms).
#pragma once

#include <string>
#include <string_view>

namespace yflow {

class RadialGrid;

enum class BackgroundKind { Euclidean, Hyperbolic, CustomWarp };

// Closed-form warp presets. There is deliberately no expression parser:
// each preset supplies rho, rho' and the two curvature ratios rho''/rho and
// (1 - rho'^2)/rho^2 in cancellation-free form so the scalar curvature is
// accurate down to r = 0.
enum class WarpForm {
  Linear, // rho = r            (Euclidean)
  Sinh,   // rho = sinh(a r)/a  (hyperbolic, curvature scale a)
  Cubic,  // rho = r + r^3/6    (non-constant curvature, pinched between
          //                     Euclidean and unit hyperbolic)
};

struct BackgroundManifold {
  int dim = 3;                 // m >= 3
  BackgroundKind kind = BackgroundKind::Euclidean;
  WarpForm warp = WarpForm::Linear;
  double warp_scale = 1.0;     // curvature scale a for WarpForm::Sinh
  double curv_mag_hi = 0.0;    // upper magnitude bound: -curv_mag_hi <= R_gM
  double curv_mag_lo = 0.0;    // lower magnitude bound: R_gM <= -curv_mag_lo <= 0
  double assumed_yamabe = 0.0; // Yamabe lower bound usable in Sobolev checks
  bool yamabe_certified = false; // true for the space forms

  double rho(double r) const;
  double drho(double r) const;
  // rho''(r)/rho(r), finite at r = 0.
  double warp_second_ratio(double r) const;
  // (1 - rho'(r)^2)/rho(r)^2, finite at r = 0.
  double warp_defect(double r) const;
};

struct GeometryConstants {
  int dim;
  double conformal_exponent; // (m-2)/4
  double sphere_volume;      // |S^m|
  double yamabe_value;       // m(m-2)/4 |S^m|^{2/m}
};

// Scalar curvature of the warped product at radius r >= 0:
//   R(r) = -2(m-1) rho''/rho + (m-1)(m-2)(1 - rho'^2)/rho^2,
// with the smooth limit at r = 0.
double background_scalar_curvature(const BackgroundManifold& bg, double r);

// Surface volume |S^{dim}| of the unit sphere (closed Gamma-function form).
double sphere_surface(int dim);

// Area density of the geodesic sphere of radius r: |S^{m-1}| rho(r)^{m-1}.
double volume_density(const BackgroundManifold& bg, double r);

// Yamabe invariant shared by H^m, R^m and S^m: m(m-2)/4 |S^m|^{2/m}.
double yamabe_invariant_model(int m);

GeometryConstants geometry_constants(int m);

BackgroundManifold make_euclidean(int m);
BackgroundManifold make_hyperbolic(int m, double curvature_scale = 1.0);
// Named warp preset ("sinh" or "cubic") with user-declared curvature bounds.
BackgroundManifold make_custom_warp(int m, std::string_view preset,
                                    double curv_mag_hi, double curv_mag_lo,
                                    double assumed_yamabe = 0.0);

// Admissibility at the nodes of a grid: rho > 0 for r > 0, rho(0) = 0,
// rho'(0) = 1, and R_gM within [-curv_mag_hi, -curv_mag_lo]. Throws
// std::invalid_argument naming the first violated condition.
void validate_background(const BackgroundManifold& bg, const RadialGrid& grid);

std::string to_string(BackgroundKind kind);

} // namespace yflow
