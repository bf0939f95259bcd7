// Bounded-domain conformal flow solver: truncated initial data, moving
// Dirichlet boundary data, implicit Euler time stepping with a full Newton
// solve per step, and the exhaustion sweep over domain radii.
#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "yflow/background.hpp"
#include "yflow/grid.hpp"

namespace yflow {

struct InitialDataSpec {
  enum class Family { Constant, Bump, HighFrequency, UserTable };

  Family family = Family::Constant;
  double u_lo = 1.0; // declared inf of the untruncated data, > 0
  double u_hi = 1.0; // declared sup, >= u_lo
  // Bump: u_lo + (u_hi - u_lo) * normalized even Gaussian pair.
  double center = 0.0;
  double width = 1.0;
  // HighFrequency: midpoint + half-range * cos(frequency * r).
  double frequency = 12.566370614359172; // 4*pi
  // UserTable: (radius, value) knots, piecewise linear, clamped outside.
  std::vector<std::pair<double, double>> table;

  void validate() const;
};

// Closed-form untruncated data sampled on a grid. Values are independent of
// the grid radius so every domain of an exhaustion sees the same function.
ConformalField generate_initial_data(const InitialDataSpec& spec,
                                     std::shared_ptr<const RadialGrid> grid);

struct NewtonSettings {
  double tol = 1e-10; // residual max-norm
  int max_iter = 25;
  int max_halvings = 8; // dt-halving retries per step
};

struct DomainProblem {
  BackgroundManifold bg;
  int k = 6; // domain radius, integer >= 5
  std::shared_ptr<const RadialGrid> grid;
  ConformalField u0_truncated;
  double u_lo = 1.0;
  double u_hi = 1.0;
  double cutoff_inner = 5.0; // k - 1
  double cutoff_outer = 6.0; // k
  double T = 1.0;
  double dt = 1.0 / 512.0;
  NewtonSettings newton;

  void validate() const;
};

DomainProblem make_domain_problem(const BackgroundManifold& bg,
                                  const InitialDataSpec& spec, int k, double h,
                                  SpacingPolicy spacing, double T, double dt,
                                  NewtonSettings newton = {},
                                  double geometric_ratio = 0.8);

struct StepReport {
  double t_end = 0.0;
  int substeps = 1; // 2^halvings
  int newton_iterations = 0;
  double final_residual = 0.0;
  double positivity_margin = 0.0; // min of the accepted state
};

struct FlowTrajectory {
  DomainProblem problem;
  std::vector<double> times;
  std::vector<ConformalField> states;
  std::vector<StepReport> step_reports;

  const ConformalField& state_at(std::size_t j) const { return states[j]; }
  std::size_t steps() const { return step_reports.size(); }
  // Index of the stored time nearest to t (times are uniform in t).
  std::size_t time_index(double t) const;
};

struct StepFailure : std::runtime_error {
  StepFailure(const std::string& what, double residual, double time,
              double step)
      : std::runtime_error(what), last_residual(residual), t(time), dt(step) {}
  double last_residual;
  double t;
  double dt;
};

struct RunFailure : std::runtime_error {
  RunFailure(const std::string& what, double time, ConformalField state)
      : std::runtime_error(what), t(time), failing_state(std::move(state)) {}
  double t;
  ConformalField failing_state;
};

// Smooth cutoff: 1 on [0, inner], 0 at and beyond outer, with the
// exp(-1/(1-s)) / (exp(-1/(1-s)) + exp(-1/s)) transition in between.
double cutoff_value(double r, double inner, double outer);
ConformalField build_cutoff(std::shared_ptr<const RadialGrid> grid,
                            double inner, double outer);

// Node-wise blend (1 - phi) u_lo + phi u0.
ConformalField truncate_initial_data(const ConformalField& u0, double u_lo,
                                     double inner, double outer);

// Dirichlet data at the domain boundary: u_lo - t * R_gM(boundary_radius).
double boundary_value(const BackgroundManifold& bg, double boundary_radius,
                      double u_lo, double t);

// du/dt = -R_gM + (m-1) [Lap u / u + (m-6)/4 |grad u|^2 / u^2] node-wise
// (one-sided closure at r = k; the stepper never uses that entry).
ConformalField pde_rhs(const ConformalField& u, const BackgroundManifold& bg);

// One implicit-Euler step to time t + dt: Newton on the interior unknowns
// with the boundary node eliminated to the exact Dirichlet value.
// Throws StepFailure on non-convergence or positivity loss.
ConformalField step_flow(const ConformalField& u, double t, double dt,
                         const DomainProblem& problem,
                         StepReport* report = nullptr);

// March 0 -> T on the nominal dt lattice with per-step dt halving (up to
// newton.max_halvings). Throws RunFailure once the retry budget is gone.
FlowTrajectory run_domain(const DomainProblem& problem);

struct ExhaustionSettings {
  std::vector<int> k_list;
  double comparison_radius = 2.0; // r0: d_k measured on B_{r0}
  std::vector<double> sample_times;
};

struct ExhaustionReport {
  struct Entry {
    int k = 0;
    bool completed = false;
    std::string error;
    double d_k = 0.0; // max |u_k - u_kref| over B_{r0} and sample times
  };
  int k_ref = 0;
  double comparison_radius = 0.0;
  std::vector<Entry> entries; // ascending k, reference entry included
};

struct ExhaustionResult {
  ExhaustionReport report;
  // Trajectories in k_list order; empty optional where the run failed.
  std::vector<std::optional<FlowTrajectory>> trajectories;
};

ExhaustionResult run_exhaustion(const BackgroundManifold& bg,
                                const InitialDataSpec& spec,
                                const ExhaustionSettings& settings, double h,
                                SpacingPolicy spacing, double T, double dt,
                                NewtonSettings newton = {});

struct FormResiduals {
  double u_power = 0.0;    // fast-diffusion form residual, max-norm
  double divergence = 0.0; // divergence/flux form residual, max-norm
};

// Cross-validation of the computed trajectory against the two equivalent
// formulations of the flow equation (central differences in time).
FormResiduals u_power_form_residual(const FlowTrajectory& traj);

} // namespace yflow
