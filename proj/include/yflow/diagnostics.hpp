// Curvature fields of computed trajectories and the quantitative checks:
// sandwich bounds, the R >= -1/t lower bound, L^p curvature norms on fixed
// balls, evolution-equation residuals and the Sobolev inequality.
#pragma once

#include <cstdint>
#include <vector>

#include "yflow/flow.hpp"

namespace yflow {

struct CurvatureField {
  ConformalField field; // role Curvature
  double time = 0.0;
};

// R_g = U^{-(m+2)/(m-2)} (R_gM U - 4(m-1)/(m-2) Lap U) with U = u^{(m-2)/4}.
ConformalField scalar_curvature_conformal(const ConformalField& u,
                                          const BackgroundManifold& bg);

// Conformal-formula curvature at every stored time of a trajectory.
std::vector<CurvatureField> curvature_fields(const FlowTrajectory& traj);

// Independent oracle on solution states: R = -(1/u) du/dt by central
// differences; defined at the interior stored times only.
std::vector<CurvatureField>
curvature_from_time_derivative(const FlowTrajectory& traj);

struct SandwichReport {
  double lower_margin = 0.0; // min of u - (u_lo + beta t)
  double upper_margin = 0.0; // min of (u_hi + alpha_bar t) - u
};

SandwichReport check_sandwich(const FlowTrajectory& traj);

struct RLowerReport {
  double main_margin = 0.0; // min over t > 0, all nodes, of R + 1/t
  // Sharper bound R >= -1/(eps + t) with eps = u_lo / alpha_bar.
  double sharp_eps = 0.0;
  double boundary_sharp_margin = 0.0; // at the boundary node
  double interior_sharp_margin = 0.0; // over all nodes
  // The sharper interior bound is only claimed under the initial condition
  // R(., 0) >= -1/eps; record whether this run satisfies it.
  bool interior_hypothesis = false;
};

RLowerReport check_r_lower(const FlowTrajectory& traj);

enum class CurvaturePart { Plus, Minus };

// Integral of max(0, +-R)^p over B_{r0} against the conformal volume
// element u^{m/2} dmu_gM at the stored time nearest t. Requires r0 + 5 <= k.
double lp_curvature_norm(const FlowTrajectory& traj, double t, double r0,
                         double p, CurvaturePart part);

// Max-norm residual of dR/dt = (m-1) Lap_g R + R^2 over interior nodes and
// interior stored times, with Lap_g expanded through the background operator.
double evo_r_residual(const FlowTrajectory& traj);

struct SobolevResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0; // lhs - rhs
};

// Sobolev inequality margin for a test function f compactly supported in
// B_{r_max} against conformal factor u, using the given Yamabe lower bound.
SobolevResult sobolev_check(const ConformalField& u, const ConformalField& f,
                            const BackgroundManifold& bg, double r_max,
                            double yamabe_value);

// Seeded smooth radial test function supported in B_{r_max}: a short random
// cosine sum under the smooth cutoff. Deterministic across platforms.
ConformalField random_test_function(std::shared_ptr<const RadialGrid> grid,
                                    double r_max, std::uint64_t seed);

// Truncated extremal profile (1 + r^2)^{-(m-2)/2} * cutoff(r_trunc-1, r_trunc).
ConformalField bubble_test_function(std::shared_ptr<const RadialGrid> grid,
                                    int m, double r_trunc);

// Discretization tolerance calibrated from one grid/step doubling:
// eps = 10 * (observed max difference between the two resolutions).
struct Calibration {
  FlowTrajectory coarse;
  FlowTrajectory fine;
  double eps_u = 0.0; // for conformal-factor margins
  double eps_r = 0.0; // for curvature margins
};

Calibration calibrate_disc_tolerance(const BackgroundManifold& bg,
                                     const InitialDataSpec& spec, int k,
                                     double h, SpacingPolicy spacing, double T,
                                     double dt, NewtonSettings newton = {});

struct LpRow {
  int k = 0;
  double t = 0.0;
  double p = 0.0;
  double r0 = 0.0;
  CurvaturePart part = CurvaturePart::Plus;
  double value = 0.0;
};

struct BoundsReport {
  int k = 0;
  SandwichReport sandwich;
  RLowerReport r_lower;
  double evo_r = 0.0;
  FormResiduals forms;
  // Max difference between the conformal-formula curvature and the
  // time-derivative oracle over interior nodes and times.
  double curvature_oracle_diff = 0.0;
  std::vector<LpRow> lp_table;
};

BoundsReport build_bounds_report(const FlowTrajectory& traj,
                                 const std::vector<double>& r0_list,
                                 const std::vector<double>& p_list,
                                 const std::vector<double>& sample_times);

} // namespace yflow
