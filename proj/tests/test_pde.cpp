#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "convlab/analysis.hpp"
#include "convlab/pde.hpp"

using namespace convlab;

namespace {

Trajectory run(const FirstOrderSystem& sys, const Vec& u0, double t_max,
               double dt) {
  IntegratorConfig cfg;
  cfg.t_max = t_max;
  cfg.sample_interval = dt;
  return integrate(sys, u0, cfg);
}

Nonlinearity cubic_minus_linear() {
  return make_nonlinearity(
      [](double s) { return s * s * s - s; },
      [](double s) { return 0.25 * s * s * s * s - 0.5 * s * s; }, 1.0);
}

double mode_one_rate(const Grid1D& grid) {
  const double h = grid.spacing();
  return (2.0 / (h * h)) * (1.0 - std::cos(M_PI * h / grid.length));
}

Vec mode_one(const Grid1D& grid) {
  return grid_sample(grid, [&grid](double x) {
    return std::sin(M_PI * x / grid.length);
  });
}

}  // namespace

TEST_CASE("grids expose spacing and interior nodes") {
  const Grid1D g = make_grid(2.0, 7);
  CHECK(g.spacing() == Catch::Approx(0.25));
  CHECK(g.node(0) == Catch::Approx(0.25));
  CHECK(g.node(6) == Catch::Approx(1.75));
  CHECK(g.nodes().size() == 7);

  const Vec u = grid_sample(g, [](double x) { return x * x; });
  CHECK(u.size() == 7);
  CHECK(u[2] == Catch::Approx(0.5625));

  CHECK_THROWS_AS(make_grid(0.0, 8), ParameterViolation);
  CHECK_THROWS_AS(make_grid(-1.0, 8), ParameterViolation);
  CHECK_THROWS_AS(make_grid(1.0, 1), ParameterViolation);
}

TEST_CASE("nonlinearities must carry a matching primitive") {
  CHECK_NOTHROW(cubic_minus_linear());
  CHECK_NOTHROW(zero_nonlinearity());
  CHECK_NOTHROW(make_nonlinearity([](double s) { return std::sin(s); },
                                  [](double s) { return 1.0 - std::cos(s); }));
  // primitive of the wrong function
  CHECK_THROWS_AS(make_nonlinearity([](double s) { return s; },
                                    [](double s) { return s * s * s; }),
                  ParameterViolation);
  // primitive not anchored at zero
  CHECK_THROWS_AS(make_nonlinearity([](double s) { return s; },
                                    [](double s) { return 0.5 * s * s + 1.0; }),
                  ParameterViolation);
  CHECK_THROWS_AS(make_nonlinearity([](double s) { return s; },
                                    [](double s) { return 0.5 * s * s; }, -1.0),
                  ParameterViolation);
}

TEST_CASE("heat builder shape, ceiling, and budget") {
  const Grid1D g = make_grid(1.0, 16);
  const FirstOrderSystem sys = discretize_heat(zero_nonlinearity(), g);
  CHECK(sys.dimension == 16);
  CHECK(sys.origin == "heat_mol");
  const double h = g.spacing();
  CHECK(sys.step_ceiling == Catch::Approx(h * h / 4.0));
  REQUIRE(sys.energies.size() == 1);
  CHECK(sys.energies[0].label == "E_h");

  CHECK_THROWS_AS(discretize_heat(zero_nonlinearity(), Grid1D{1.0, 513}),
                  GridTooFine);
  CHECK_THROWS_AS(discretize_wave(zero_nonlinearity(), 1.0, Grid1D{1.0, 513}),
                  GridTooFine);
  CHECK_THROWS_AS(discretize_wave(zero_nonlinearity(), -0.5, g),
                  ParameterViolation);
}

TEST_CASE("linear heat decays at the discrete mode-one rate") {
  const Grid1D g = make_grid(1.0, 32);
  const FirstOrderSystem sys = discretize_heat(zero_nonlinearity(), g);
  const Trajectory traj = run(sys, mode_one(g), 1.2, 0.002);

  std::vector<double> norms(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) norms[k] = traj.states[k].norm();
  const DecayFit fit = fit_decay(traj.times, norms);
  const double mu1 = mode_one_rate(g);
  CHECK(fit.cls == DecayClass::Exponential);
  CHECK(std::abs(fit.rate - mu1) <= 0.01 * mu1);
}

TEST_CASE("the discrete mode-one profile is stationary for a tuned linearity") {
  const Grid1D g = make_grid(1.0, 16);
  const double mu1 = mode_one_rate(g);
  const Nonlinearity tuned = make_nonlinearity(
      [mu1](double s) { return -mu1 * s; },
      [mu1](double s) { return -0.5 * mu1 * s * s; });
  const FirstOrderSystem sys = discretize_heat(tuned, g);
  CHECK(sys.field(mode_one(g)).norm() < 1e-12);
}

TEST_CASE("heat flow respects the sign-condition amplitude bound") {
  const Grid1D g = make_grid(1.0, 24);
  const Nonlinearity nl = cubic_minus_linear();
  const FirstOrderSystem sys = discretize_heat(nl, g);
  const Vec u0 = grid_sample(g, [](double x) {
    return 0.9 * std::sin(2.0 * M_PI * x);
  });
  const double cap = std::max(*nl.sign_bound, u0.cwiseAbs().maxCoeff());

  const Trajectory traj = run(sys, u0, 5.0, 0.01);
  double worst = 0.0;
  for (const Vec& u : traj.states) worst = std::max(worst, u.cwiseAbs().maxCoeff());
  CHECK(worst <= cap + 1e-6);

  const EnergyAudit audit = energy_audit(traj, 0, IntegratorConfig{});
  CHECK(audit.is_nonincreasing);
}

TEST_CASE("damped wave balances dissipated power against the energy drop") {
  const Grid1D g = make_grid(1.0, 16);
  const int m = g.interior;
  const FirstOrderSystem sys = discretize_wave(zero_nonlinearity(), 1.0, g);
  Vec z0 = Vec::Zero(2 * m);
  z0.head(m) = mode_one(g);
  const Trajectory traj = run(sys, z0, 5.0, 0.002);

  const auto& E = traj.energy_series[0];
  const double drop = E.front() - E.back();
  double dissipated = 0.0;
  const double h = g.spacing();
  for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
    const double pa = h * traj.states[k].tail(m).squaredNorm();
    const double pb = h * traj.states[k + 1].tail(m).squaredNorm();
    dissipated += 0.5 * (pa + pb) * (traj.times[k + 1] - traj.times[k]);
  }
  REQUIRE(drop > 0.0);
  CHECK(std::abs(drop - dissipated) <= 1e-4 * drop);

  const EnergyAudit audit = energy_audit(traj, 0, IntegratorConfig{});
  CHECK(audit.is_nonincreasing);
}

TEST_CASE("undamped wave conserves the discrete energy") {
  const Grid1D g = make_grid(1.0, 8);
  const int m = g.interior;
  const FirstOrderSystem sys = discretize_wave(zero_nonlinearity(), 0.0, g);
  Vec z0 = Vec::Zero(2 * m);
  z0.head(m) = mode_one(g);

  IntegratorConfig cfg;
  cfg.t_max = 50.0;
  cfg.sample_interval = 0.05;
  const Trajectory traj = integrate(sys, z0, cfg);

  const auto& E = traj.energy_series[0];
  const double budget = 100.0 * (cfg.abs_tol + cfg.rel_tol * E.front());
  double worst = 0.0;
  for (double e : E) worst = std::max(worst, std::abs(e - E.front()));
  CHECK(worst <= budget);
}

TEST_CASE("small-data nonlinear wave settles and its velocity vanishes") {
  const Grid1D g = make_grid(1.0, 16);
  const int m = g.interior;
  const FirstOrderSystem sys = discretize_wave(cubic_minus_linear(), 1.0, g);
  Vec z0 = Vec::Zero(2 * m);
  z0.head(m) = 0.1 * mode_one(g);
  const Trajectory traj = run(sys, z0, 40.0, 0.02);

  CHECK(traj.final_state().norm() < 1e-5);
  CHECK(traj.final_state().tail(m).norm() < 1e-5);
  const EnergyAudit audit = energy_audit(traj, 0, IntegratorConfig{});
  CHECK(audit.is_nonincreasing);
}

TEST_CASE("heat systems are gradient flows of their discrete energy") {
  Rng rng(0x9DE);

  const Grid1D g16 = make_grid(1.0, 16);
  const FirstOrderSystem linear = discretize_heat(zero_nonlinearity(), g16);
  std::vector<Vec> probes;
  for (int k = 0; k < 5; ++k) probes.push_back(rng.normal_vector(16));
  CHECK(gradient_consistency(linear, probes) < 1e-6);

  const Nonlinearity cubic = make_nonlinearity(
      [](double s) { return s * s * s; },
      [](double s) { return 0.25 * s * s * s * s; });
  const FirstOrderSystem nl16 = discretize_heat(cubic, g16);
  CHECK(gradient_consistency(nl16, {Vec(Vec::Zero(16))}) < 1e-12);

  const Grid1D g32 = make_grid(1.0, 32);
  const Nonlinearity sine = make_nonlinearity(
      [](double s) { return std::sin(s); },
      [](double s) { return 1.0 - std::cos(s); });
  const FirstOrderSystem nl32 = discretize_heat(sine, g32);
  std::vector<Vec> probes32;
  for (int k = 0; k < 10; ++k) probes32.push_back(rng.normal_vector(32));
  CHECK(gradient_consistency(nl32, probes32) < 1e-5);

  CHECK_THROWS_AS(gradient_consistency(linear, {Vec(Vec::Zero(7))}),
                  ParameterViolation);
}
