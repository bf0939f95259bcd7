#include "yflow/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace yflow {

ConformalField scalar_curvature_conformal(const ConformalField& u,
                                          const BackgroundManifold& bg) {
  if (!(u.min_value() > 0.0)) {
    throw std::invalid_argument(
        "scalar_curvature_conformal: conformal factor not positive");
  }
  const double m = static_cast<double>(bg.dim);
  const double eta = (m - 2.0) / 4.0;
  const double neg_exp = -(m + 2.0) / (m - 2.0);
  const double coef = 4.0 * (m - 1.0) / (m - 2.0);

  ConformalField U(u.grid, FieldRole::Generic);
  for (std::size_t i = 0; i < u.size(); ++i) {
    U.values[i] = std::pow(u.values[i], eta);
  }
  const ConformalField lapU = laplace_beltrami_radial(U, bg);
  ConformalField out(u.grid, FieldRole::Curvature);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double curv = background_scalar_curvature(bg, u.grid->node(i));
    out.values[i] = std::pow(U.values[i], neg_exp) *
                    (curv * U.values[i] - coef * lapU.values[i]);
  }
  return out;
}

std::vector<CurvatureField> curvature_fields(const FlowTrajectory& traj) {
  std::vector<CurvatureField> out;
  out.reserve(traj.states.size());
  for (std::size_t j = 0; j < traj.states.size(); ++j) {
    out.push_back({scalar_curvature_conformal(traj.states[j],
                                              traj.problem.bg),
                   traj.times[j]});
  }
  return out;
}

std::vector<CurvatureField>
curvature_from_time_derivative(const FlowTrajectory& traj) {
  if (traj.times.size() < 3) {
    throw std::invalid_argument(
        "curvature_from_time_derivative: need >= 3 time levels");
  }
  std::vector<CurvatureField> out;
  out.reserve(traj.times.size() - 2);
  for (std::size_t j = 1; j + 1 < traj.times.size(); ++j) {
    const double two_dt = traj.times[j + 1] - traj.times[j - 1];
    ConformalField r(traj.states[j].grid, FieldRole::Curvature);
    for (std::size_t i = 0; i < r.size(); ++i) {
      const double dudt =
          (traj.states[j + 1].values[i] - traj.states[j - 1].values[i]) /
          two_dt;
      r.values[i] = -dudt / traj.states[j].values[i];
    }
    out.push_back({std::move(r), traj.times[j]});
  }
  return out;
}

SandwichReport check_sandwich(const FlowTrajectory& traj) {
  const double beta = traj.problem.bg.curv_mag_lo;
  const double alpha = traj.problem.bg.curv_mag_hi;
  SandwichReport report;
  report.lower_margin = std::numeric_limits<double>::infinity();
  report.upper_margin = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < traj.times.size(); ++j) {
    const double t = traj.times[j];
    const double lo = traj.problem.u_lo + beta * t;
    const double hi = traj.problem.u_hi + alpha * t;
    for (double v : traj.states[j].values) {
      report.lower_margin = std::min(report.lower_margin, v - lo);
      report.upper_margin = std::min(report.upper_margin, hi - v);
    }
  }
  return report;
}

RLowerReport check_r_lower(const FlowTrajectory& traj) {
  const auto curv = curvature_fields(traj);
  RLowerReport report;
  report.main_margin = std::numeric_limits<double>::infinity();
  report.boundary_sharp_margin = std::numeric_limits<double>::infinity();
  report.interior_sharp_margin = std::numeric_limits<double>::infinity();

  const double alpha = traj.problem.bg.curv_mag_hi;
  const bool has_sharp = alpha > 0.0;
  report.sharp_eps =
      has_sharp ? traj.problem.u_lo / alpha
                : std::numeric_limits<double>::infinity();

  for (std::size_t j = 1; j < curv.size(); ++j) {
    const double t = curv[j].time;
    const auto& rv = curv[j].field.values;
    for (std::size_t i = 0; i < rv.size(); ++i) {
      report.main_margin = std::min(report.main_margin, rv[i] + 1.0 / t);
      if (has_sharp) {
        const double sharp = rv[i] + 1.0 / (report.sharp_eps + t);
        report.interior_sharp_margin =
            std::min(report.interior_sharp_margin, sharp);
        if (i + 1 == rv.size()) {
          report.boundary_sharp_margin =
              std::min(report.boundary_sharp_margin, sharp);
        }
      }
    }
  }
  if (has_sharp) {
    // The comparison function 1/(eps + t) controls R only when the initial
    // curvature already sits above -1/eps.
    const double r0_min = curv.front().field.min_value();
    report.interior_hypothesis = r0_min >= -1.0 / report.sharp_eps - 1e-9;
  }
  return report;
}

double lp_curvature_norm(const FlowTrajectory& traj, double t, double r0,
                         double p, CurvaturePart part) {
  if (!(p > 1.0)) {
    throw std::invalid_argument("lp_curvature_norm: exponent must be > 1");
  }
  if (r0 + 5.0 > static_cast<double>(traj.problem.k) + 1e-12) {
    throw std::invalid_argument(
        "lp_curvature_norm: need r0 + 5 <= k (r0 too close to the boundary)");
  }
  const std::size_t j = traj.time_index(t);
  const ConformalField r =
      scalar_curvature_conformal(traj.states[j], traj.problem.bg);
  ConformalField integrand(r.grid, FieldRole::Generic);
  const double sign = part == CurvaturePart::Plus ? 1.0 : -1.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    integrand.values[i] = std::pow(std::max(0.0, sign * r.values[i]), p);
  }
  return integrate_radial(integrand, &traj.states[j], traj.problem.bg, r0);
}

double evo_r_residual(const FlowTrajectory& traj) {
  if (traj.times.size() < 3) {
    throw std::invalid_argument("evo_r_residual: need >= 3 time levels");
  }
  const BackgroundManifold& bg = traj.problem.bg;
  const double m = static_cast<double>(bg.dim);
  const auto curv = curvature_fields(traj);

  double residual = 0.0;
  for (std::size_t j = 1; j + 1 < curv.size(); ++j) {
    const auto& rc = curv[j].field;
    const auto& u = traj.states[j];
    const double two_dt = traj.times[j + 1] - traj.times[j - 1];
    const ConformalField lapR = laplace_beltrami_radial(rc, bg);
    const ConformalField dR = radial_derivative(rc);
    const ConformalField du = radial_derivative(u);
    for (std::size_t i = 0; i + 1 < rc.size(); ++i) {
      const double dRdt =
          (curv[j + 1].field.values[i] - curv[j - 1].field.values[i]) /
          two_dt;
      const double ui = u.values[i];
      const double lap_g = lapR.values[i] / ui +
                           (m - 2.0) / 2.0 * du.values[i] * dR.values[i] /
                               (ui * ui);
      const double res =
          dRdt - (m - 1.0) * lap_g - rc.values[i] * rc.values[i];
      residual = std::max(residual, std::abs(res));
    }
  }
  return residual;
}

SobolevResult sobolev_check(const ConformalField& u, const ConformalField& f,
                            const BackgroundManifold& bg, double r_max,
                            double yamabe_value) {
  if (u.grid.get() != f.grid.get()) {
    throw std::invalid_argument("sobolev_check: fields on different grids");
  }
  if (!(u.min_value() > 0.0)) {
    throw std::invalid_argument("sobolev_check: u must be positive");
  }
  if (!(yamabe_value > 0.0)) {
    throw std::invalid_argument("sobolev_check: need a positive Yamabe bound");
  }
  const auto& r = f.grid->nodes();
  double fscale = 0.0;
  for (double v : f.values) {
    fscale = std::max(fscale, std::abs(v));
  }
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i] >= r_max - 1e-12 && std::abs(f.values[i]) > 1e-14 * fscale) {
      throw std::invalid_argument(
          "sobolev_check: f not compactly supported in B_{r_max}");
    }
  }
  const double m = static_cast<double>(bg.dim);

  // |grad^g f|^2 dmu_g = |grad f|^2 u^{m/2 - 1} dmu_gM; fold one power of u
  // out of the weight.
  const ConformalField gsq = radial_gradient_sq(f);
  ConformalField lhs_field(f.grid, FieldRole::Generic);
  for (std::size_t i = 0; i < f.size(); ++i) {
    lhs_field.values[i] = gsq.values[i] / u.values[i];
  }
  SobolevResult out;
  out.lhs = integrate_radial(lhs_field, &u, bg, r_max);

  const double q = 2.0 * m / (m - 2.0);
  ConformalField fq(f.grid, FieldRole::Generic);
  for (std::size_t i = 0; i < f.size(); ++i) {
    fq.values[i] = std::pow(std::abs(f.values[i]), q);
  }
  const double lq = integrate_radial(fq, &u, bg, r_max);

  double inf_u = std::numeric_limits<double>::infinity();
  double sup_u = 0.0;
  for (std::size_t i = 0; i < r.size() && r[i] <= r_max + 1e-12; ++i) {
    inf_u = std::min(inf_u, u.values[i]);
    sup_u = std::max(sup_u, u.values[i]);
  }
  out.rhs = std::pow(inf_u / sup_u, (m - 2.0) / 2.0) * yamabe_value *
            std::pow(lq, (m - 2.0) / m);
  out.margin = out.lhs - out.rhs;
  return out;
}

ConformalField random_test_function(std::shared_ptr<const RadialGrid> grid,
                                    double r_max, std::uint64_t seed) {
  // splitmix64: deterministic and platform-independent.
  auto next = [state = seed]() mutable {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  auto uniform = [&](double lo, double hi) {
    const double x =
        static_cast<double>(next() >> 11) * 0x1.0p-53; // [0, 1)
    return lo + (hi - lo) * x;
  };
  const int terms = 4;
  std::vector<double> amp(terms), freq(terms);
  for (int j = 0; j < terms; ++j) {
    amp[j] = uniform(-1.0, 1.0);
    freq[j] = uniform(0.5, 4.0);
  }
  ConformalField f(std::move(grid), FieldRole::TestFunction);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double r = f.grid->node(i);
    double v = 0.0;
    for (int j = 0; j < terms; ++j) {
      v += amp[j] * std::cos(freq[j] * r);
    }
    f.values[i] = v * cutoff_value(r, r_max - 1.0, r_max);
  }
  return f;
}

ConformalField bubble_test_function(std::shared_ptr<const RadialGrid> grid,
                                    int m, double r_trunc) {
  if (m < 3) {
    throw std::invalid_argument("bubble_test_function: m must be >= 3");
  }
  const double expo = -(static_cast<double>(m) - 2.0) / 2.0;
  ConformalField f(std::move(grid), FieldRole::TestFunction);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double r = f.grid->node(i);
    f.values[i] = std::pow(1.0 + r * r, expo) *
                  cutoff_value(r, r_trunc - 1.0, r_trunc);
  }
  return f;
}

Calibration calibrate_disc_tolerance(const BackgroundManifold& bg,
                                     const InitialDataSpec& spec, int k,
                                     double h, SpacingPolicy spacing, double T,
                                     double dt, NewtonSettings newton) {
  if (spacing != SpacingPolicy::Uniform) {
    throw std::invalid_argument(
        "calibration: only uniform grids align under doubling");
  }
  Calibration cal;
  cal.coarse = run_domain(
      make_domain_problem(bg, spec, k, h, spacing, T, dt, newton));
  cal.fine = run_domain(make_domain_problem(bg, spec, k, h / 2.0, spacing, T,
                                            dt / 2.0, newton));
  const auto curv_c = curvature_fields(cal.coarse);
  const auto curv_f = curvature_fields(cal.fine);
  double du = 0.0;
  double dr = 0.0;
  for (std::size_t j = 0; j < cal.coarse.times.size(); ++j) {
    const auto& uc = cal.coarse.states[j];
    const auto& uf = cal.fine.states[2 * j];
    for (std::size_t i = 0; i < uc.size(); ++i) {
      du = std::max(du,
                    std::abs(uc.values[i] - uf.values[2 * i]));
      dr = std::max(dr, std::abs(curv_c[j].field.values[i] -
                                 curv_f[2 * j].field.values[2 * i]));
    }
  }
  cal.eps_u = 10.0 * du;
  cal.eps_r = 10.0 * dr;
  return cal;
}

BoundsReport build_bounds_report(const FlowTrajectory& traj,
                                 const std::vector<double>& r0_list,
                                 const std::vector<double>& p_list,
                                 const std::vector<double>& sample_times) {
  BoundsReport report;
  report.k = traj.problem.k;
  report.sandwich = check_sandwich(traj);
  report.r_lower = check_r_lower(traj);
  report.evo_r = evo_r_residual(traj);
  report.forms = u_power_form_residual(traj);

  const auto conformal = curvature_fields(traj);
  const auto oracle = curvature_from_time_derivative(traj);
  double diff = 0.0;
  for (std::size_t j = 0; j < oracle.size(); ++j) {
    const auto& a = conformal[j + 1].field.values;
    const auto& b = oracle[j].field.values;
    for (std::size_t i = 0; i + 1 < a.size(); ++i) {
      diff = std::max(diff, std::abs(a[i] - b[i]));
    }
  }
  report.curvature_oracle_diff = diff;

  for (double r0 : r0_list) {
    if (r0 + 5.0 > static_cast<double>(traj.problem.k) + 1e-12) {
      continue;
    }
    for (double p : p_list) {
      for (double t : sample_times) {
        if (t > traj.problem.T + 1e-12) {
          continue;
        }
        for (CurvaturePart part :
             {CurvaturePart::Plus, CurvaturePart::Minus}) {
          LpRow row;
          row.k = traj.problem.k;
          row.t = t;
          row.p = p;
          row.r0 = r0;
          row.part = part;
          row.value = lp_curvature_norm(traj, t, r0, p, part);
          report.lp_table.push_back(row);
        }
      }
    }
  }
  return report;
}

} // namespace yflow
