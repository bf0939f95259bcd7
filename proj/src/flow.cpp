#include "yflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>

namespace yflow {

namespace {

constexpr double kSnapTol = 1e-12;

double pow_int_like(double base, double expo) { return std::pow(base, expo); }

} // namespace

void InitialDataSpec::validate() const {
  if (!(u_lo > 0.0)) {
    throw std::invalid_argument("initial data: u_lo must be > 0");
  }
  if (!(u_hi >= u_lo)) {
    throw std::invalid_argument("initial data: u_hi must be >= u_lo");
  }
  switch (family) {
  case Family::Constant:
    if (u_hi != u_lo) {
      throw std::invalid_argument(
          "initial data: constant family requires u_lo == u_hi");
    }
    break;
  case Family::Bump:
    if (!(width > 0.0) || center < 0.0) {
      throw std::invalid_argument(
          "initial data: bump requires width > 0 and center >= 0");
    }
    break;
  case Family::HighFrequency:
    if (!(frequency > 0.0)) {
      throw std::invalid_argument("initial data: frequency must be > 0");
    }
    break;
  case Family::UserTable: {
    if (table.size() < 2) {
      throw std::invalid_argument("initial data: table needs >= 2 knots");
    }
    for (std::size_t i = 0; i < table.size(); ++i) {
      if (!(table[i].second > 0.0)) {
        throw std::invalid_argument("initial data: table values must be > 0");
      }
      if (i > 0 && !(table[i].first > table[i - 1].first)) {
        throw std::invalid_argument(
            "initial data: table radii must be strictly increasing");
      }
    }
    break;
  }
  }
}

ConformalField generate_initial_data(const InitialDataSpec& spec,
                                     std::shared_ptr<const RadialGrid> grid) {
  spec.validate();
  ConformalField u(grid, FieldRole::ConformalFactor);
  const auto& r = grid->nodes();
  switch (spec.family) {
  case InitialDataSpec::Family::Constant:
    std::fill(u.values.begin(), u.values.end(), spec.u_lo);
    break;
  case InitialDataSpec::Family::Bump: {
    // Even Gaussian pair so the slope vanishes at the origin; normalized
    // analytically (independent of the grid, so every domain radius of an
    // exhaustion samples the same function).
    const double w2 = 2.0 * spec.width * spec.width;
    auto shape = [&](double x) {
      const double dm = x - spec.center;
      const double dp = x + spec.center;
      return std::exp(-dm * dm / w2) + std::exp(-dp * dp / w2);
    };
    double norm = 2.0;
    if (spec.center > 0.0) {
      norm = 0.0;
      const double span = spec.center + 8.0 * spec.width;
      for (int i = 0; i <= 100000; ++i) {
        norm = std::max(norm, shape(span * i / 100000.0));
      }
    }
    for (std::size_t i = 0; i < r.size(); ++i) {
      u.values[i] = spec.u_lo + (spec.u_hi - spec.u_lo) * shape(r[i]) / norm;
    }
    break;
  }
  case InitialDataSpec::Family::HighFrequency: {
    const double mid = 0.5 * (spec.u_lo + spec.u_hi);
    const double amp = 0.5 * (spec.u_hi - spec.u_lo);
    for (std::size_t i = 0; i < r.size(); ++i) {
      u.values[i] = mid + amp * std::cos(spec.frequency * r[i]);
    }
    break;
  }
  case InitialDataSpec::Family::UserTable: {
    for (std::size_t i = 0; i < r.size(); ++i) {
      const double x = r[i];
      if (x <= spec.table.front().first) {
        u.values[i] = spec.table.front().second;
      } else if (x >= spec.table.back().first) {
        u.values[i] = spec.table.back().second;
      } else {
        std::size_t j = 1;
        while (spec.table[j].first < x) {
          ++j;
        }
        const auto& [xa, va] = spec.table[j - 1];
        const auto& [xb, vb] = spec.table[j];
        u.values[i] = va + (vb - va) * (x - xa) / (xb - xa);
      }
    }
    break;
  }
  }
  // Containment is strict; attainment within 1% of the data scale.
  const double lo = u.min_value();
  const double hi = u.max_value();
  const double slack = 1e-12 * std::max(1.0, spec.u_hi);
  if (lo < spec.u_lo - slack || hi > spec.u_hi + slack) {
    throw std::invalid_argument("initial data: values escape [u_lo, u_hi]");
  }
  const double att = 0.01 * std::max(spec.u_hi - spec.u_lo, spec.u_lo);
  if (lo - spec.u_lo > att || spec.u_hi - hi > att) {
    throw std::invalid_argument(
        "initial data: bounds not attained within 1% on this grid");
  }
  u.validate();
  return u;
}

double cutoff_value(double r, double inner, double outer) {
  if (!(0.0 < inner) || !(inner < outer)) {
    throw std::invalid_argument("cutoff: need 0 < inner < outer");
  }
  const double s = (r - inner) / (outer - inner);
  if (s <= 0.0) {
    return 1.0;
  }
  if (s >= 1.0) {
    return 0.0;
  }
  const double a = std::exp(-1.0 / (1.0 - s));
  const double b = std::exp(-1.0 / s);
  return a / (a + b);
}

ConformalField build_cutoff(std::shared_ptr<const RadialGrid> grid,
                            double inner, double outer) {
  ConformalField phi(grid, FieldRole::TestFunction);
  for (std::size_t i = 0; i < grid->size(); ++i) {
    phi.values[i] = cutoff_value(grid->node(i), inner, outer);
  }
  return phi;
}

ConformalField truncate_initial_data(const ConformalField& u0, double u_lo,
                                     double inner, double outer) {
  u0.validate();
  if (!(u_lo > 0.0)) {
    throw std::invalid_argument("truncate_initial_data: u_lo must be > 0");
  }
  ConformalField out(u0.grid, FieldRole::ConformalFactor);
  for (std::size_t i = 0; i < u0.size(); ++i) {
    const double phi = cutoff_value(u0.grid->node(i), inner, outer);
    out.values[i] = (1.0 - phi) * u_lo + phi * u0.values[i];
  }
  return out;
}

double boundary_value(const BackgroundManifold& bg, double boundary_radius,
                      double u_lo, double t) {
  return u_lo - t * background_scalar_curvature(bg, boundary_radius);
}

ConformalField pde_rhs(const ConformalField& u, const BackgroundManifold& bg) {
  if (!(u.min_value() > 0.0)) {
    throw std::invalid_argument("pde_rhs: conformal factor not positive");
  }
  const double m = static_cast<double>(bg.dim);
  const double cg = (m - 6.0) / 4.0;
  const ConformalField lap = laplace_beltrami_radial(u, bg);
  const ConformalField gsq = radial_gradient_sq(u);
  ConformalField out(u.grid, FieldRole::Generic);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double ui = u.values[i];
    out.values[i] = -background_scalar_curvature(bg, u.grid->node(i)) +
                    (m - 1.0) * (lap.values[i] / ui +
                                 cg * gsq.values[i] / (ui * ui));
  }
  return out;
}

namespace {

// Solves the tridiagonal system in place; diag/rhs are overwritten.
bool thomas_solve(std::vector<double>& sub, std::vector<double>& diag,
                  std::vector<double>& super, std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  for (std::size_t i = 1; i < n; ++i) {
    if (std::abs(diag[i - 1]) < 1e-300) {
      return false;
    }
    const double w = sub[i] / diag[i - 1];
    diag[i] -= w * super[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  if (std::abs(diag[n - 1]) < 1e-300) {
    return false;
  }
  rhs[n - 1] /= diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) {
    rhs[i] = (rhs[i] - super[i] * rhs[i + 1]) / diag[i];
  }
  return true;
}

// One implicit step whose Dirichlet value is taken at an explicit target
// time, so stored states match the boundary data bit-exactly.
ConformalField step_to(const ConformalField& u, double t_new, double dt,
                       const DomainProblem& problem, StepReport* report) {
  const auto& grid = *u.grid;
  const auto& r = grid.nodes();
  const std::size_t n = grid.size();
  const std::size_t nu = n - 1; // unknowns: nodes 0 .. n-2
  const BackgroundManifold& bg = problem.bg;
  const double m = static_cast<double>(bg.dim);
  const double cg = (m - 6.0) / 4.0;

  const double g_new =
      boundary_value(bg, grid.radius(), problem.u_lo, t_new);
  if (!(g_new > 0.0)) {
    throw StepFailure("step: boundary value not positive", 0.0, t_new - dt,
                      dt);
  }

  std::vector<double> curv(n), bcoef(n);
  for (std::size_t i = 0; i < n; ++i) {
    curv[i] = background_scalar_curvature(bg, r[i]);
    bcoef[i] = i == 0 ? 0.0 : (m - 1.0) * bg.drho(r[i]) / bg.rho(r[i]);
  }

  std::vector<double> w(u.values.begin(), u.values.begin() + nu);
  std::vector<double> residual(nu), sub(nu), diag(nu), super(nu);

  auto value_at = [&](std::size_t i) { return i < nu ? w[i] : g_new; };

  double res_norm = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter <= problem.newton.max_iter; ++iter) {
    // Residual F_i = w_i - u_i - dt * rhs_i(w).
    res_norm = 0.0;
    for (std::size_t i = 0; i < nu; ++i) {
      double lap, gsq;
      if (i == 0) {
        lap = m * 2.0 * (value_at(1) - w[0]) / (r[1] * r[1]);
        gsq = 0.0;
      } else {
        const double hm = r[i] - r[i - 1];
        const double hp = r[i + 1] - r[i];
        const double dm = (w[i] - w[i - 1]) / hm;
        const double dp = (value_at(i + 1) - w[i]) / hp;
        const double first = (hm * dp + hp * dm) / (hm + hp);
        lap = 2.0 * (dp - dm) / (hm + hp) + bcoef[i] * first;
        gsq = first * first;
      }
      const double rhs = -curv[i] + (m - 1.0) * (lap / w[i] +
                                                 cg * gsq / (w[i] * w[i]));
      residual[i] = w[i] - u.values[i] - dt * rhs;
      res_norm = std::max(res_norm, std::abs(residual[i]));
    }
    if (!std::isfinite(res_norm)) {
      throw StepFailure("step: residual not finite", res_norm, t_new - dt,
                        dt);
    }
    if (res_norm <= problem.newton.tol) {
      ConformalField out(u.grid, FieldRole::ConformalFactor);
      std::copy(w.begin(), w.end(), out.values.begin());
      out.values[nu] = g_new;
      const double margin = out.min_value();
      if (!(margin > 0.0)) {
        throw StepFailure("step: converged state not positive", res_norm,
                          t_new - dt, dt);
      }
      if (report != nullptr) {
        report->t_end = t_new;
        report->newton_iterations = iter;
        report->final_residual = res_norm;
        report->positivity_margin = margin;
      }
      return out;
    }
    if (iter == problem.newton.max_iter) {
      break;
    }

    // Tridiagonal Jacobian of F.
    for (std::size_t i = 0; i < nu; ++i) {
      double dl_dm, dl_di, dl_dp; // Laplacian stencil derivatives
      double df_dm, df_di, df_dp; // first-derivative stencil derivatives
      double lap, first;
      if (i == 0) {
        dl_dm = 0.0;
        dl_di = -2.0 * m / (r[1] * r[1]);
        dl_dp = 2.0 * m / (r[1] * r[1]);
        df_dm = df_di = df_dp = 0.0;
        lap = m * 2.0 * (value_at(1) - w[0]) / (r[1] * r[1]);
        first = 0.0;
      } else {
        const double hm = r[i] - r[i - 1];
        const double hp = r[i + 1] - r[i];
        const double e1 = 2.0 / (hp * (hm + hp));
        const double e2 = 2.0 / (hm * (hm + hp));
        const double c1 = hm / (hp * (hm + hp));
        const double c2 = hp / (hm * (hm + hp));
        const double dm = (w[i] - w[i - 1]) / hm;
        const double dp = (value_at(i + 1) - w[i]) / hp;
        first = (hm * dp + hp * dm) / (hm + hp);
        lap = 2.0 * (dp - dm) / (hm + hp) + bcoef[i] * first;
        dl_dp = e1 + bcoef[i] * c1;
        dl_di = -(e1 + e2) + bcoef[i] * (c2 - c1);
        dl_dm = e2 - bcoef[i] * c2;
        df_dp = c1;
        df_di = c2 - c1;
        df_dm = -c2;
      }
      const double wi = w[i];
      const double gsq = first * first;
      auto drhs = [&](double dlap, double dfirst, bool is_center) {
        double v = (m - 1.0) * (dlap / wi +
                                cg * 2.0 * first * dfirst / (wi * wi));
        if (is_center) {
          v += (m - 1.0) * (-lap / (wi * wi) -
                            2.0 * cg * gsq / (wi * wi * wi));
        }
        return v;
      };
      sub[i] = i == 0 ? 0.0 : -dt * drhs(dl_dm, df_dm, false);
      diag[i] = 1.0 - dt * drhs(dl_di, df_di, true);
      super[i] = i + 1 < nu ? -dt * drhs(dl_dp, df_dp, false) : 0.0;
    }
    std::vector<double> rhs(nu);
    for (std::size_t i = 0; i < nu; ++i) {
      rhs[i] = -residual[i];
    }
    if (!thomas_solve(sub, diag, super, rhs)) {
      throw StepFailure("step: singular Jacobian", res_norm, t_new - dt, dt);
    }
    for (std::size_t i = 0; i < nu; ++i) {
      w[i] += rhs[i];
      if (!(w[i] > 0.0) || !std::isfinite(w[i])) {
        throw StepFailure("step: positivity lost during Newton", res_norm,
                          t_new - dt, dt);
      }
    }
  }
  throw StepFailure("step: Newton did not converge", res_norm, t_new - dt,
                    dt);
}

} // namespace

ConformalField step_flow(const ConformalField& u, double t, double dt,
                         const DomainProblem& problem, StepReport* report) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("step_flow: dt must be > 0");
  }
  if (!(u.min_value() > 0.0)) {
    throw std::invalid_argument("step_flow: state not positive");
  }
  return step_to(u, t + dt, dt, problem, report);
}

void DomainProblem::validate() const {
  if (k < 5) {
    throw std::invalid_argument("problem: domain radius k must be >= 5");
  }
  if (grid == nullptr || grid->radius() != static_cast<double>(k)) {
    throw std::invalid_argument("problem: grid must span [0, k]");
  }
  validate_background(bg, *grid);
  if (!(u_lo > 0.0) || !(u_hi >= u_lo)) {
    throw std::invalid_argument("problem: need 0 < u_lo <= u_hi");
  }
  if (!(cutoff_inner > 0.0) || !(cutoff_inner < cutoff_outer) ||
      cutoff_outer > static_cast<double>(k) + kSnapTol) {
    throw std::invalid_argument("problem: cutoff must satisfy 0 < inner < "
                                "outer <= k");
  }
  if (!(T > 0.0) || !(dt > 0.0) || dt > T) {
    throw std::invalid_argument("problem: need 0 < dt <= T");
  }
  const double steps = T / dt;
  if (std::abs(steps - std::llround(steps)) > 1e-9) {
    throw std::invalid_argument("problem: T must be an integer multiple of dt");
  }
  if (!(newton.tol > 0.0) || newton.max_iter < 1 || newton.max_halvings < 0) {
    throw std::invalid_argument("problem: invalid Newton settings");
  }
  u0_truncated.validate();
  if (u0_truncated.grid.get() != grid.get()) {
    throw std::invalid_argument("problem: initial data on a different grid");
  }
  if (u0_truncated.values.back() != u_lo) {
    throw std::invalid_argument(
        "problem: truncated data must equal u_lo at the boundary");
  }
}

DomainProblem make_domain_problem(const BackgroundManifold& bg,
                                  const InitialDataSpec& spec, int k, double h,
                                  SpacingPolicy spacing, double T, double dt,
                                  NewtonSettings newton,
                                  double geometric_ratio) {
  DomainProblem p;
  p.bg = bg;
  p.k = k;
  p.grid = spacing == SpacingPolicy::Uniform
               ? RadialGrid::uniform(static_cast<double>(k), h)
               : RadialGrid::geometric_near_boundary(static_cast<double>(k), h,
                                                     geometric_ratio);
  p.u_lo = spec.u_lo;
  p.u_hi = spec.u_hi;
  p.cutoff_inner = static_cast<double>(k - 1);
  p.cutoff_outer = static_cast<double>(k);
  ConformalField u0 = generate_initial_data(spec, p.grid);
  p.u0_truncated =
      truncate_initial_data(u0, spec.u_lo, p.cutoff_inner, p.cutoff_outer);
  p.T = T;
  p.dt = dt;
  p.newton = newton;
  p.validate();
  return p;
}

std::size_t FlowTrajectory::time_index(double t) const {
  if (times.empty()) {
    throw std::logic_error("trajectory: empty");
  }
  const double dt = problem.dt;
  auto j = static_cast<long long>(std::llround(t / dt));
  j = std::clamp<long long>(j, 0, static_cast<long long>(times.size()) - 1);
  return static_cast<std::size_t>(j);
}

FlowTrajectory run_domain(const DomainProblem& problem) {
  problem.validate();
  const auto steps = static_cast<std::size_t>(
      std::llround(problem.T / problem.dt));
  FlowTrajectory traj;
  traj.problem = problem;
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.step_reports.reserve(steps);
  traj.times.push_back(0.0);
  traj.states.push_back(problem.u0_truncated);
  traj.states.back().role = FieldRole::ConformalFactor;

  for (std::size_t j = 0; j < steps; ++j) {
    const double t0 = static_cast<double>(j) * problem.dt;
    const double t1 = static_cast<double>(j + 1) * problem.dt;
    bool advanced = false;
    StepReport aggregate;
    std::string last_error;
    for (int halving = 0; halving <= problem.newton.max_halvings;
         ++halving) {
      const int nsub = 1 << halving;
      const double dt_sub = problem.dt / nsub;
      ConformalField state = traj.states.back();
      StepReport sub;
      aggregate = StepReport{};
      aggregate.substeps = nsub;
      try {
        for (int s = 0; s < nsub; ++s) {
          const double target = s + 1 == nsub ? t1 : t0 + dt_sub * (s + 1);
          state = step_to(state, target, dt_sub, problem, &sub);
          aggregate.newton_iterations += sub.newton_iterations;
          aggregate.final_residual = sub.final_residual;
          aggregate.positivity_margin = sub.positivity_margin;
        }
        aggregate.t_end = t1;
        traj.times.push_back(t1);
        traj.states.push_back(std::move(state));
        traj.step_reports.push_back(aggregate);
        advanced = true;
        break;
      } catch (const StepFailure& failure) {
        last_error = failure.what();
      }
    }
    if (!advanced) {
      throw RunFailure("run: retry budget exhausted at t = " +
                           std::to_string(t0) + " (" + last_error + ")",
                       t0, traj.states.back());
    }
  }
  return traj;
}

ExhaustionResult run_exhaustion(const BackgroundManifold& bg,
                                const InitialDataSpec& spec,
                                const ExhaustionSettings& settings, double h,
                                SpacingPolicy spacing, double T, double dt,
                                NewtonSettings newton) {
  if (settings.k_list.empty()) {
    throw std::invalid_argument("exhaustion: empty k list");
  }
  const double r0 = settings.comparison_radius;
  if (!(r0 > 0.0)) {
    throw std::invalid_argument("exhaustion: comparison radius must be > 0");
  }
  for (std::size_t i = 0; i < settings.k_list.size(); ++i) {
    if (settings.k_list[i] < static_cast<int>(std::ceil(r0)) + 5) {
      throw std::invalid_argument(
          "exhaustion: every k must be >= r0 + 5, got k = " +
          std::to_string(settings.k_list[i]));
    }
    if (i > 0 && settings.k_list[i] <= settings.k_list[i - 1]) {
      throw std::invalid_argument("exhaustion: k list must be increasing");
    }
  }

  ExhaustionResult result;
  result.report.comparison_radius = r0;
  const std::size_t nk = settings.k_list.size();
  result.trajectories.resize(nk);
  result.report.entries.resize(nk);

  std::vector<std::future<FlowTrajectory>> futures(nk);
  for (std::size_t i = 0; i < nk; ++i) {
    const int k = settings.k_list[i];
    futures[i] = std::async(std::launch::async, [&, k] {
      DomainProblem p =
          make_domain_problem(bg, spec, k, h, spacing, T, dt, newton);
      return run_domain(p);
    });
  }
  for (std::size_t i = 0; i < nk; ++i) {
    auto& entry = result.report.entries[i];
    entry.k = settings.k_list[i];
    try {
      result.trajectories[i] = futures[i].get();
      entry.completed = true;
    } catch (const std::exception& e) {
      entry.error = e.what();
    }
  }

  // Reference: largest completed k.
  std::size_t ref = nk;
  for (std::size_t i = nk; i-- > 0;) {
    if (result.report.entries[i].completed) {
      ref = i;
      break;
    }
  }
  if (ref == nk) {
    return result; // nothing to compare
  }
  result.report.k_ref = settings.k_list[ref];
  const FlowTrajectory& reference = *result.trajectories[ref];

  for (std::size_t i = 0; i < nk; ++i) {
    auto& entry = result.report.entries[i];
    if (!entry.completed || i == ref) {
      continue;
    }
    const FlowTrajectory& traj = *result.trajectories[i];
    double d = 0.0;
    for (double t : settings.sample_times) {
      const std::size_t jt = traj.time_index(t);
      const std::size_t jr = reference.time_index(t);
      const auto& a = traj.states[jt];
      const auto& b = reference.states[jr];
      for (std::size_t node = 0; node < a.size(); ++node) {
        const double rr = a.grid->node(node);
        if (rr > r0 + kSnapTol) {
          break;
        }
        if (std::abs(rr - b.grid->node(node)) > kSnapTol) {
          throw std::logic_error("exhaustion: grids do not share nodes in "
                                 "the comparison ball");
        }
        d = std::max(d, std::abs(a.values[node] - b.values[node]));
      }
    }
    entry.d_k = d;
  }
  return result;
}

FormResiduals u_power_form_residual(const FlowTrajectory& traj) {
  const std::size_t nt = traj.times.size();
  if (nt < 3) {
    throw std::invalid_argument("form residual: need >= 3 time levels");
  }
  const BackgroundManifold& bg = traj.problem.bg;
  const double m = static_cast<double>(bg.dim);
  const double eta = (m - 2.0) / 4.0;
  const auto& r = traj.states.front().grid->nodes();
  const std::size_t n = r.size();

  std::vector<double> curv(n);
  for (std::size_t i = 0; i < n; ++i) {
    curv[i] = background_scalar_curvature(bg, r[i]);
  }

  FormResiduals out;
  for (std::size_t j = 1; j + 1 < nt; ++j) {
    const auto& um = traj.states[j - 1];
    const auto& uc = traj.states[j];
    const auto& up = traj.states[j + 1];
    const double two_dt = traj.times[j + 1] - traj.times[j - 1];

    ConformalField U(uc.grid, FieldRole::Generic);
    for (std::size_t i = 0; i < n; ++i) {
      U.values[i] = pow_int_like(uc.values[i], eta);
    }
    const ConformalField lapU = laplace_beltrami_radial(U, bg);

    ConformalField V(uc.grid, FieldRole::Generic); // u^{eta+1}
    for (std::size_t i = 0; i < n; ++i) {
      V.values[i] = pow_int_like(uc.values[i], eta + 1.0);
    }
    const ConformalField dV = radial_derivative(V);
    ConformalField flux(uc.grid, FieldRole::Generic);
    for (std::size_t i = 0; i < n; ++i) {
      flux.values[i] = dV.values[i] / uc.values[i];
    }

    for (std::size_t i = 0; i + 1 < n; ++i) {
      // Fast-diffusion form.
      const double wold = pow_int_like(um.values[i], eta + 1.0);
      const double wnew = pow_int_like(up.values[i], eta + 1.0);
      const double lhs = (wnew - wold) / two_dt / (eta + 1.0);
      const double rhs =
          -curv[i] * U.values[i] + (m - 1.0) / eta * lapU.values[i];
      out.u_power = std::max(out.u_power, std::abs(lhs - rhs));

      // Divergence form.
      double div;
      if (i == 0) {
        div = m * flux.values[1] / r[1];
      } else {
        const double hm = r[i] - r[i - 1];
        const double hp = r[i + 1] - r[i];
        const double dm = (flux.values[i] - flux.values[i - 1]) / hm;
        const double dp = (flux.values[i + 1] - flux.values[i]) / hp;
        const double first = (hm * dp + hp * dm) / (hm + hp);
        div = first + (m - 1.0) * bg.drho(r[i]) / bg.rho(r[i]) *
                          flux.values[i];
      }
      const double lhs2 = (wnew - wold) / two_dt / (m - 1.0);
      const double rhs2 = -(eta + 1.0) * curv[i] /
                              ((m - 1.0) * uc.values[i]) * V.values[i] +
                          div;
      out.divergence = std::max(out.divergence, std::abs(lhs2 - rhs2));
    }
  }
  return out;
}

} // namespace yflow
