// Acceptance harness: one pass/fail line per criterion, exit nonzero if any
// criterion fails.  Tolerances are pinned here, next to each check.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "convlab/analysis.hpp"
#include "convlab/core.hpp"
#include "convlab/flows.hpp"
#include "convlab/integrate.hpp"
#include "convlab/lojasiewicz.hpp"
#include "convlab/pde.hpp"
#include "convlab/stability.hpp"

using namespace convlab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const clock::time_point t0 = clock::now();
  return std::chrono::duration<double>(clock::now() - t0).count();
}

Trajectory run(const FirstOrderSystem& sys, const Vec& u0, double t_max,
               double dt, double rel = 1e-10, double abs = 1e-13) {
  IntegratorConfig cfg;
  cfg.t_max = t_max;
  cfg.sample_interval = dt;
  cfg.rel_tol = rel;
  cfg.abs_tol = abs;
  return integrate(sys, u0, cfg);
}

std::vector<double> state_norms(const Trajectory& traj) {
  std::vector<double> d(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) d[i] = traj.states[i].norm();
  return d;
}

std::size_t label_index(const Trajectory& traj, const std::string& label) {
  for (std::size_t i = 0; i < traj.energy_labels.size(); ++i)
    if (traj.energy_labels[i] == label) return i;
  throw UnknownName("no recorded energy labelled " + label);
}

// fit restricted to samples with t >= t_from (then the full slice is the
// window)
DecayFit fit_from(const Trajectory& traj, const std::vector<double>& dist,
                  double t_from) {
  std::vector<double> t, d;
  for (std::size_t i = 0; i < traj.size(); ++i)
    if (traj.times[i] >= t_from) {
      t.push_back(traj.times[i]);
      d.push_back(dist[i]);
    }
  return fit_decay(t, d, 1.0);
}

Vec v1(double a) { return Vec::Constant(1, a); }

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Potential quartic_quarter() {
  return make_potential(
      1, [](const Vec& u) { return 0.25 * std::pow(u[0], 4); },
      [](const Vec& u) { return v1(u[0] * u[0] * u[0]); });
}

Potential even_monomial(int m) {
  return make_potential(
      1,
      [m](const Vec& u) { return std::pow(std::abs(u[0]), 2.0 * m); },
      [m](const Vec& u) {
        const double mag = 2.0 * m * std::pow(std::abs(u[0]), 2.0 * m - 1);
        return v1(u[0] >= 0.0 ? mag : -mag);
      });
}

// --------------------------------------------------------------------------
// 1. Scalar power flows against their closed-form solutions.

Outcome criterion_01() {
  std::ostringstream msg;
  bool ok = true;
  for (int p : {2, 3, 5}) {
    const double t_start = now_seconds();
    FirstOrderSystem sys = make_system(
        1,
        [p](const Vec& u, Vec& out) {
          out[0] = -std::pow(std::abs(u[0]), p - 1) * u[0];
        },
        {}, "power_flow");
    const Trajectory traj = run(sys, v1(1.0), 100.0, 0.05);
    double worst_rel = 0.0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
      const double exact =
          std::pow(1.0 + (p - 1) * traj.times[i], -1.0 / (p - 1));
      worst_rel = std::max(worst_rel,
                           std::abs(traj.states[i][0] - exact) / exact);
    }
    const DecayFit fit = fit_decay(traj.times, state_norms(traj));
    const double want = 1.0 / (p - 1);
    const double elapsed = now_seconds() - t_start;
    const bool this_ok = worst_rel <= 1e-6 && fit.cls == DecayClass::Power &&
                         std::abs(fit.rate - want) <= 0.02 * want &&
                         elapsed < 1.0;
    ok = ok && this_ok;
    msg << "p=" << p << ": sup rel err " << worst_rel << ", fitted t^-"
        << fit.rate << " (want " << want << "), " << elapsed << " s; ";
  }
  return {ok, msg.str()};
}

// --------------------------------------------------------------------------
// 2. Exponent estimates on even monomials drive correct rate predictions.

Outcome criterion_02() {
  const double t_start = now_seconds();
  std::ostringstream msg;
  bool ok = true;
  const double horizons[] = {10.0, 400.0, 2000.0};
  const double steps[] = {0.01, 0.2, 1.0};
  for (int m : {1, 2, 3}) {
    const Potential phi = even_monomial(m);
    const LojasiewiczEstimate est = estimate_exponent(
        phi, v1(0.0), {1e-7, 1e-8, 1e-9}, 64, 42);
    const double theta_true = 1.0 / (2.0 * m);
    const bool theta_ok = std::abs(est.theta_hat - theta_true) <= 0.03;

    const Trajectory traj =
        run(gradient_flow(phi), v1(1.0), horizons[m - 1], steps[m - 1]);
    const DecayFit fit = fit_decay(traj.times, state_norms(traj));
    // estimates carry a small upward bias, so clamp through the estimate
    // mapping before reading off the class
    const RatePrediction pred = predict_from_estimate(est);
    bool rate_ok;
    if (m == 1) {
      rate_ok = pred.cls == RateClass::Exponential &&
                fit.cls == DecayClass::Exponential;
    } else {
      const double want = theta_true / (1.0 - 2.0 * theta_true);
      rate_ok = pred.cls == RateClass::Power && fit.cls == DecayClass::Power &&
                std::abs(fit.rate - want) <= 0.10 * want;
    }
    ok = ok && theta_ok && rate_ok;
    msg << "m=" << m << ": theta_hat " << est.theta_hat << " (want "
        << theta_true << "), fit " << to_string(fit.cls) << " rate "
        << fit.rate << "; ";
  }
  const double elapsed = now_seconds() - t_start;
  ok = ok && elapsed < 10.0;
  msg << elapsed << " s total";
  return {ok, msg.str()};
}

// --------------------------------------------------------------------------
// 3. Linearly damped quartic oscillator: t^{-1/2} decay, perturbed energy
//    non-increasing past the initial transient.

Outcome criterion_03() {
  const Potential phi = quartic_quarter();
  FirstOrderSystem sys = second_order_flow(phi, linear_damping());
  sys.energies.push_back(perturbed_energy(phi, 0.05));
  IntegratorConfig cfg;
  cfg.t_max = 2000.0;
  cfg.sample_interval = 0.25;
  cfg.rel_tol = 1e-10;
  cfg.abs_tol = 1e-13;
  const Trajectory traj = integrate(sys, v2(1.0, 0.0), cfg);

  const DecayFit fit = fit_decay(traj.times, state_norms(traj));
  const double want = 0.5;  // exponent from theta = 1/4 via theta/(1-2 theta)
  const bool rate_ok = fit.cls == DecayClass::Power &&
                       std::abs(fit.rate - want) <= 0.25 * want;
  const EnergyAudit audit =
      energy_audit(traj, label_index(traj, "H_eps"), cfg, 1.0);
  std::ostringstream msg;
  msg << "fitted t^-" << fit.rate << " (want " << want
      << " within 25%), H_eps max uptick " << audit.max_uptick << " (tol "
      << audit.tolerance << ") from t=1";
  return {rate_ok && audit.is_nonincreasing, msg.str()};
}

// --------------------------------------------------------------------------
// 4. Cubic velocity damping on a linear spring: norm decays like t^{-1/2}.

Outcome criterion_04() {
  GalleryEntry e = gallery("power_damped_oscillator", {{"c", 1.0}, {"p", 3.0}});
  const Trajectory traj = run(e.system, e.default_initial, 2000.0, 0.25);
  const DecayFit fit = fit_from(traj, state_norms(traj), 10.0);
  const double want = 0.5;  // 1/(p-1)
  const bool ok = fit.cls == DecayClass::Power &&
                  std::abs(fit.rate - want) <= 0.25 * want;
  std::ostringstream msg;
  msg << "fitted t^-" << fit.rate << " on [10,2000] (want " << want
      << " within 25%)";
  return {ok, msg.str()};
}

// --------------------------------------------------------------------------
// 5. Degenerate velocity damping |u'|^0.2 u' on the quartic well, checked
//    against the guaranteed worst-case exponent.  The trajectory instead
//    follows the damping-dominated balance |u'|^a u' ~ -grad Phi, i.e.
//    u ~ t^{-(1+a)/(2-a)} = t^{-2/3}, which is faster than the guaranteed
//    bound t^{-0.1538}; the 30% consistency window cannot absorb that gap,
//    so this criterion fails by design of the check.

Outcome criterion_05() {
  const double alpha = 0.2;
  const Potential phi = quartic_quarter();
  FirstOrderSystem sys = second_order_flow(phi, power_damping(alpha, 1.0));
  sys.energies.push_back(chergui_energy(phi, alpha, 0.01, 0.0));
  IntegratorConfig cfg;
  cfg.t_max = 2000.0;
  cfg.sample_interval = 0.25;
  cfg.rel_tol = 1e-10;
  cfg.abs_tol = 1e-13;
  const Trajectory traj = integrate(sys, v2(1.0, 0.0), cfg);

  const DecayFit fit = fit_from(traj, state_norms(traj), 10.0);
  const RatePrediction pred = predict_nonlinear_damping(0.25, alpha);
  const bool rate_ok = fit.cls == DecayClass::Power &&
                       std::abs(fit.rate - pred.exponent) <= 0.30 * pred.exponent;
  const EnergyAudit audit =
      energy_audit(traj, label_index(traj, "H_chergui"), cfg, 1000.0);
  std::ostringstream msg;
  msg << "fitted t^-" << fit.rate << " vs guaranteed exponent "
      << pred.exponent << " (30% window); slow-manifold rate (1+a)/(2-a) = "
      << (1.0 + alpha) / (2.0 - alpha)
      << " is what the orbit actually does; tail energy audit "
      << (audit.is_nonincreasing ? "clean" : "violated");
  return {rate_ok && audit.is_nonincreasing, msg.str()};
}

// --------------------------------------------------------------------------
// 6. Spiral with a circle limit set: geometric sub-checks on the radial
//    reduction, plus pointwise planar tracking.  The orbit is transversally
//    exponentially repelling (twin orbits 1e-12 apart separate to ~2e-3 by
//    t=8), so 1e-3 tracking over [0,50] is beyond double precision and that
//    sub-check fails.

Outcome criterion_06() {
  // the exact-time field moves at rate e^{-1/(1-r^2)}, so long-horizon
  // geometry is checked in the rescaled parameterization of the same orbit
  SpiralReduction red = palis_demelo_radial(1, 0.5, true);
  const Trajectory radial = run(red.system, v1(0.5), 1e4, 2.0, 1e-10, 1e-13);
  bool monotone = true;
  for (std::size_t i = 1; i < radial.size(); ++i)
    monotone = monotone && radial.states[i][0] >= radial.states[i - 1][0];
  const double r_final = radial.final_state()[0];

  Trajectory planar;
  planar.dimension = 2;
  for (std::size_t i = 0; i < radial.size(); ++i) {
    planar.times.push_back(radial.times[i]);
    planar.states.push_back(red.reconstruct(radial.states[i][0]).position);
  }
  const OmegaEstimate om = omega_estimate(planar);
  const DisplacementVerdict cauchy = cauchy_convergence_test(
      planar, (planar.times.back() - planar.times.front()) / 20.0);

  const bool geometry_ok = monotone && r_final > 0.99 &&
                           std::abs(om.winding) > 5.0 &&
                           om.kind == OmegaKind::ClosedCurve &&
                           om.mean_radius >= 0.98 && om.mean_radius <= 1.0 &&
                           !cauchy.passed;

  // exact-time tracking: planar flow vs reconstruction of the radial orbit
  SpiralReduction exact = palis_demelo_radial(1, 0.5, false);
  const Vec p0 = exact.reconstruct(0.5).position;
  FirstOrderSystem planar_sys = gallery("palis_demelo").system;
  const Trajectory tp = run(planar_sys, p0, 50.0, 0.05, 1e-11, 1e-13);
  const Trajectory tr = run(exact.system, v1(0.5), 50.0, 0.05, 1e-11, 1e-13);
  double sup = 0.0;
  const std::size_t n = std::min(tp.size(), tr.size());
  for (std::size_t i = 0; i < n; ++i)
    sup = std::max(
        sup, (tp.states[i] - exact.reconstruct(tr.states[i][0]).position).norm());
  const bool tracking_ok = sup <= 1e-3;

  std::ostringstream msg;
  msg << "r monotone " << (monotone ? "yes" : "no") << ", r(1e4) = " << r_final
      << ", winding " << om.winding << " turns, omega " << to_string(om.kind)
      << " mean radius " << om.mean_radius << ", displacement test "
      << (cauchy.passed ? "passed (bad)" : "failed (good)")
      << "; planar tracking sup " << sup
      << " vs 1e-3 (transversally repelling orbit, unattainable in double)";
  return {geometry_ok && tracking_ok, msg.str()};
}

// --------------------------------------------------------------------------
// 7. Convergence criteria agree across the gallery's converging entries and
//    both fail on the energy-conserving oscillator.

Outcome criterion_07() {
  std::ostringstream msg;
  bool ok = true;
  for (const std::string& name : gallery_names()) {
    const GalleryEntry e = gallery(name);
    if (name == "harmonic") {
      const Trajectory traj = run(e.system, e.default_initial,
                                  e.suggested_t_max, e.suggested_sample_interval);
      const DisplacementVerdict cauchy = cauchy_convergence_test(
          traj, (traj.times.back() - traj.times.front()) / 20.0);
      const L2DerivativeResult l2 = l2_derivative_test(traj);
      const bool this_ok = !cauchy.passed && !l2.tail_vanishes;
      ok = ok && this_ok;
      if (!this_ok) msg << name << ": criteria unexpectedly passed; ";
      continue;
    }
    if (e.expected.kind != ExpectedKind::ConvergesTo) continue;
    const Trajectory traj = run(e.system, e.default_initial, e.suggested_t_max,
                                e.suggested_sample_interval);
    const DisplacementVerdict cauchy = cauchy_convergence_test(
        traj, (traj.times.back() - traj.times.front()) / 20.0);
    const L2DerivativeResult l2 = l2_derivative_test(traj);
    const OmegaEstimate om = omega_estimate(traj);
    const Vec limit =
        om.kind == OmegaKind::Singleton ? om.point : traj.final_state();
    const double fn = e.system.field(limit).norm();
    const bool this_ok = cauchy.passed && l2.tail_vanishes && fn <= 1e-4;
    ok = ok && this_ok;
    if (!this_ok)
      msg << name << ": cauchy " << cauchy.passed << " l2 " << l2.tail_vanishes
          << " |field| " << fn << "; ";
  }
  if (ok) msg << "all converging entries pass both criteria; harmonic fails both";
  return {ok, msg.str()};
}

// --------------------------------------------------------------------------
// 8. Equilibrium classification and the polynomial test against a
//    companion-matrix eigenvalue oracle.

double companion_abscissa(const std::vector<double>& p) {
  const int n = static_cast<int>(p.size()) - 1;
  Mat C = Mat::Zero(n, n);
  for (int i = 1; i < n; ++i) C(i, i - 1) = 1.0;
  for (int i = 0; i < n; ++i) C(0, i) = -p[i + 1] / p[0];
  Eigen::EigenSolver<Mat> es(C);
  double a = -1e300;
  for (int i = 0; i < n; ++i) a = std::max(a, es.eigenvalues()[i].real());
  return a;
}

Outcome criterion_08() {
  FirstOrderSystem duffing = gallery("duffing_damped").system;
  const auto eq = find_equilibria(
      duffing, grid_seeds(v2(-2.0, -2.0), v2(2.0, 2.0), 9), 1e-10);
  int stable = 0, unstable = 0;
  bool placement_ok = eq.size() == 3;
  for (const Vec& pt : eq) {
    const StabilityVerdict verdict = classify(linearize(duffing, pt));
    const bool at_origin = pt.norm() < 1e-8;
    const bool at_well = std::abs(std::abs(pt[0]) - 1.0) < 1e-8 &&
                         std::abs(pt[1]) < 1e-8;
    if (at_well && verdict.cls == StabilityClass::AsymptoticallyStable) ++stable;
    if (at_origin && verdict.cls == StabilityClass::Unstable) ++unstable;
    placement_ok = placement_ok && (at_origin || at_well);
  }
  const bool duffing_ok = placement_ok && stable == 2 && unstable == 1;

  Rng rng(0xACCE55);
  int checked = 0, disagreements = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int N = 2 + trial % 3;
    std::vector<double> p(N + 1);
    p[0] = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.2, 2.0);
    for (int i = 1; i <= N; ++i) p[i] = rng.uniform(-2.0, 2.0);
    const double abscissa = companion_abscissa(p);
    // skip trials whose verdict hinges on a quantity below the noise floor
    // in either oracle
    bool ambiguous = std::abs(abscissa) < 1e-9;
    std::vector<double> q = p;
    if (q[0] < 0.0)
      for (double& c : q) c = -c;
    for (int j = 1; j <= N; ++j) ambiguous = ambiguous || std::abs(q[j]) < 1e-12;
    if (N == 3)
      ambiguous = ambiguous || std::abs(q[2] * q[1] - q[3] * q[0]) < 1e-12;
    if (N == 4)
      ambiguous = ambiguous ||
                  std::abs(q[3] * (q[2] * q[1] - q[3] * q[0]) -
                           q[4] * q[1] * q[1]) < 1e-12;
    if (ambiguous) continue;
    ++checked;
    if (hurwitz_check(p).is_hurwitz != (abscissa < 0.0)) ++disagreements;
  }
  const bool cross_ok = checked > 900 && disagreements == 0;

  std::ostringstream msg;
  msg << "duffing: " << stable << " attracting wells, " << unstable
      << " unstable origin; polynomial cross-oracle " << disagreements
      << " disagreements on " << checked << " unambiguous trials";
  return {duffing_ok && cross_ok, msg.str()};
}

// --------------------------------------------------------------------------
// 9. Certified quadratic forms for stable matrices and the descent identity
//    along simulated linear flows.

Outcome criterion_09() {
  Rng rng(0x11A9);
  double worst_residual_scaled = 0.0, worst_identity_rel = 0.0;
  bool ok = true;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 8;
    Mat A(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) A(i, j) = rng.normal();
    Eigen::EigenSolver<Mat> es(A);
    double abscissa = -1e300;
    for (int i = 0; i < n; ++i)
      abscissa = std::max(abscissa, es.eigenvalues()[i].real());
    A -= (abscissa + rng.uniform(0.5, 2.0)) * Mat::Identity(n, n);

    const QuadraticForm q = lyapunov_quadratic(A);
    worst_residual_scaled = std::max(worst_residual_scaled, q.residual / n);
    ok = ok && q.residual <= 1e-10 * n;

    FirstOrderSystem sys = make_system(
        n, [A](const Vec& u, Vec& out) { out = A * u; }, {}, "linear");
    const Trajectory traj = run(sys, rng.normal_vector(n), 6.0, 0.1);
    for (std::size_t i = 0; i < traj.size(); ++i) {
      const Vec& u = traj.states[i];
      const double rel = std::abs(2.0 * u.dot(q.P * traj.derivatives[i]) +
                                  u.squaredNorm()) /
                         u.squaredNorm();
      worst_identity_rel = std::max(worst_identity_rel, rel);
    }
  }
  ok = ok && worst_identity_rel <= 1e-5;
  std::ostringstream msg;
  msg << "worst residual/n " << worst_residual_scaled
      << " (cap 1e-10), worst flow identity rel err " << worst_identity_rel
      << " (cap 1e-5) over 100 matrices";
  return {ok, msg.str()};
}

// --------------------------------------------------------------------------
// 10. Coupled oscillator pair with one damped leg: the strict descent
//     functional decreases, every seeded start converges to the origin
//     exponentially, and the origin classifies as attracting.

Outcome criterion_10() {
  const GalleryEntry e = gallery("coupled");  // lambda=1, c=0.5, H with p=2, eps=0.01
  const StabilityVerdict origin = classify(linearize(e.system, Vec::Zero(4)));
  bool ok = origin.cls == StabilityClass::AsymptoticallyStable;
  std::ostringstream msg;

  IntegratorConfig cfg;
  cfg.t_max = 150.0;
  cfg.sample_interval = 0.05;
  cfg.rel_tol = 1e-10;
  cfg.abs_tol = 1e-13;
  Rng rng(0xC0A57);
  double worst_final = 0.0;
  int exp_fits = 0, audits_ok = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const Vec u0 = rng.normal_vector(4);
    const Trajectory traj = integrate(e.system, u0, cfg);
    const EnergyAudit audit =
        energy_audit(traj, label_index(traj, "H_strict"), cfg);
    if (audit.is_nonincreasing) ++audits_ok;
    const DecayFit fit = fit_decay(traj.times, state_norms(traj));
    if (fit.cls == DecayClass::Exponential) ++exp_fits;
    worst_final = std::max(worst_final, traj.final_state().norm());
  }
  ok = ok && audits_ok == 10 && exp_fits == 10 && worst_final <= 1e-4;
  msg << "origin " << to_string(origin.cls) << "; " << audits_ok
      << "/10 descent audits clean, " << exp_fits
      << "/10 exponential fits, worst final norm " << worst_final;
  return {ok, msg.str()};
}

// --------------------------------------------------------------------------
// 11. Semilinear heat on (0,pi), 64 interior nodes: energy descent, max-norm
//     barrier, convergence to a stationary profile.

Outcome criterion_11() {
  const double t_start = now_seconds();
  const Grid1D grid = make_grid(M_PI, 64);
  const Nonlinearity nl = make_nonlinearity(
      [](double s) { return s * s * s - s; },
      [](double s) { return 0.25 * s * s * s * s - 0.5 * s * s; }, 1.0);
  FirstOrderSystem heat = discretize_heat(nl, grid);
  // antisymmetric data stays off the near-degenerate first mode, so the
  // run converges within a practical horizon
  const Vec u0 = grid_sample(grid, [](double x) { return 0.9 * std::sin(2.0 * x); });

  IntegratorConfig cfg;
  cfg.t_max = 14.0;
  cfg.sample_interval = 0.02;
  cfg.rel_tol = 1e-10;
  cfg.abs_tol = 1e-13;
  const Trajectory traj = integrate(heat, u0, cfg);

  const EnergyAudit audit = energy_audit(traj, label_index(traj, "E_h"), cfg);
  const double cap = std::max(1.0, u0.cwiseAbs().maxCoeff());
  double worst_sup = 0.0;
  for (const Vec& u : traj.states)
    worst_sup = std::max(worst_sup, u.cwiseAbs().maxCoeff());
  const ConvergenceReport rep = analyze_convergence(heat, traj);
  const double field_at_limit =
      rep.verdict == Verdict::Converged ? heat.field(rep.limit).norm() : 1e300;
  const double elapsed = now_seconds() - t_start;

  const bool ok = audit.is_nonincreasing && worst_sup <= cap + 1e-6 &&
                  rep.verdict == Verdict::Converged && field_at_limit <= 1e-6 &&
                  elapsed < 60.0;
  std::ostringstream msg;
  msg << "energy uptick " << audit.max_uptick << " (tol " << audit.tolerance
      << "), sup norm " << worst_sup << " vs cap " << cap << ", verdict "
      << to_string(rep.verdict) << ", |field(limit)| " << field_at_limit
      << ", " << elapsed << " s";
  return {ok, msg.str()};
}

// --------------------------------------------------------------------------
// 12. Damped semilinear wave, 32 interior nodes: the sampled energy balance
//     matches the dissipation integral and the velocity dies out.

Outcome criterion_12() {
  const double gamma = 1.0;
  const Grid1D grid = make_grid(1.0, 32);
  const Nonlinearity nl = make_nonlinearity(
      [](double s) { return s * s * s - s; },
      [](double s) { return 0.25 * s * s * s * s - 0.5 * s * s; }, 1.0);
  FirstOrderSystem wave = discretize_wave(nl, gamma, grid);
  const int m = grid.interior;
  const double h = grid.spacing();

  Vec x0 = Vec::Zero(2 * m);
  x0.head(m) = grid_sample(grid, [](double x) { return 0.5 * std::sin(M_PI * x); });

  IntegratorConfig cfg;
  cfg.t_max = 20.0;
  cfg.sample_interval = 0.005;
  cfg.rel_tol = 1e-10;
  cfg.abs_tol = 1e-13;
  const Trajectory traj = integrate(wave, x0, cfg);

  const auto& E = traj.energy_series[label_index(traj, "E_h")];
  double dissipated = 0.0;  // trapezoid of gamma * h * |v|^2
  for (std::size_t i = 1; i < traj.size(); ++i) {
    const double a = traj.states[i - 1].tail(m).squaredNorm();
    const double b = traj.states[i].tail(m).squaredNorm();
    dissipated += 0.5 * (a + b) * (traj.times[i] - traj.times[i - 1]);
  }
  dissipated *= gamma * h;
  const double drop = E.front() - E.back();
  const double rel_gap =
      std::abs(drop - dissipated) / std::max(std::abs(drop), dissipated);
  const double v_final = std::sqrt(h) * traj.final_state().tail(m).norm();

  const bool ok = rel_gap <= 1e-3 && v_final <= 1e-3;
  std::ostringstream msg;
  msg << "energy drop " << drop << " vs dissipation integral " << dissipated
      << " (rel gap " << rel_gap << ", cap 1e-3), final velocity h-norm "
      << v_final;
  return {ok, msg.str()};
}

// --------------------------------------------------------------------------
// 13. Rate-table algebra: the beta = 1 column reduces to the first-order
//     table, and the hypothesis gate trips exactly on beta(1-theta) >= 1.

Outcome criterion_13() {
  bool ok = true;
  std::ostringstream msg;
  for (int i = 1; i <= 10; ++i) {
    const double theta = 0.05 * i;
    const RatePrediction a = predict_first_order(theta);
    const RatePrediction b = predict_general(theta, 1.0);
    const bool same = a.cls == b.cls &&
                      (a.cls == RateClass::Exponential ||
                       std::abs(a.exponent - b.exponent) <= 1e-12);
    ok = ok && same;
    if (!same) msg << "mismatch at theta=" << theta << "; ";
  }
  int gate_checks = 0;
  for (int ti = 1; ti <= 19; ++ti)
    for (double beta : {1.0, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0}) {
      const double theta = 0.05 * ti;
      const bool expect_trip = beta * (1.0 - theta) >= 1.0;
      bool tripped = false;
      try {
        predict_general(theta, beta);
      } catch (const HypothesisViolated&) {
        tripped = true;
      } catch (const OutsideCase&) {
        // in-hypothesis but uncovered region; not a gate trip
      }
      ++gate_checks;
      if (tripped != expect_trip) {
        ok = false;
        msg << "gate wrong at theta=" << theta << " beta=" << beta << "; ";
      }
    }
  if (ok)
    msg << "beta=1 column identical on 10 thetas; hypothesis gate exact on "
        << gate_checks << " grid points";
  return {ok, msg.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria =
      {{"closed-form power decay oracle", criterion_01},
       {"exponent estimates drive rate predictions", criterion_02},
       {"damped quartic oscillator rate + perturbed energy", criterion_03},
       {"cubic-damping oscillator rate", criterion_04},
       {"degenerate-damping rate self-consistency", criterion_05},
       {"circle limit set geometry + planar tracking", criterion_06},
       {"convergence criteria across the gallery", criterion_07},
       {"equilibrium classification + polynomial cross-oracle", criterion_08},
       {"certified quadratic forms + descent identity", criterion_09},
       {"coupled pair: descent, convergence, classification", criterion_10},
       {"semilinear heat: descent, barrier, convergence", criterion_11},
       {"damped wave: energy balance, velocity decay", criterion_12},
       {"rate-table algebra and hypothesis gate", criterion_13}};

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    if (!out.pass) ++failures;
    std::printf("criterion %02zu [%s] %s — %s\n", i + 1,
                out.pass ? "PASS" : "FAIL", criteria[i].first,
                out.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("acceptance: %zu/%zu criteria passed\n", criteria.size() - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
