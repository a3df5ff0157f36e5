#pragma once

// Method-of-lines discretizations of the 1-D semilinear heat and damped wave
// equations on (0, L) with homogeneous Dirichlet boundaries, exposed as
// finite-dimensional first-order systems.

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "convlab/core.hpp"

namespace convlab {

// ---------------------------------------------------------------------------
// Uniform interior grid on (0, L): nodes x_i = i h, i = 1..m, h = L/(m+1).

struct Grid1D {
  double length = 1.0;
  int interior = 2;

  double spacing() const { return length / (interior + 1); }
  double node(int i) const { return spacing() * (i + 1); }  // i in [0, m)

  std::vector<double> nodes() const {
    std::vector<double> x(static_cast<std::size_t>(interior), 0.0);
    for (int i = 0; i < interior; ++i) x[std::size_t(i)] = node(i);
    return x;
  }
};

inline Grid1D make_grid(double length, int interior_nodes) {
  if (!(length > 0.0)) throw ParameterViolation("grid length must be > 0");
  if (interior_nodes < 2) throw ParameterViolation("need at least 2 interior nodes");
  return Grid1D{length, interior_nodes};
}

// Samples a spatial profile at the interior nodes.
inline Vec grid_sample(const Grid1D& grid, const std::function<double(double)>& profile) {
  if (!profile) throw ParameterViolation("profile must be callable");
  Vec u(grid.interior);
  for (int i = 0; i < grid.interior; ++i) u[i] = profile(grid.node(i));
  return u;
}

// ---------------------------------------------------------------------------
// Scalar nonlinearity f with primitive F (F' = f, F(0) = 0).  The optional
// sign bound C asserts f(s) s >= 0 for |s| >= C, which callers may rely on
// for maximum-principle style checks.

struct Nonlinearity {
  std::function<double(double)> f;
  std::function<double(double)> F;
  std::optional<double> sign_bound;
};

// The primitive relation is verified by central differences on a probe grid
// spanning [-2, 2]; a mismatch there rejects the pair outright.
inline Nonlinearity make_nonlinearity(std::function<double(double)> f,
                                      std::function<double(double)> F,
                                      std::optional<double> sign_bound = {}) {
  if (!f || !F) throw ParameterViolation("nonlinearity needs both f and F");
  if (sign_bound && !(*sign_bound >= 0.0))
    throw ParameterViolation("sign bound must be >= 0");
  if (std::abs(F(0.0)) > 1e-12)
    throw ParameterViolation("primitive must vanish at 0");
  const double step = 1e-6;
  for (int j = -20; j <= 20; ++j) {
    const double s = 0.1 * j;
    const double fd = (F(s + step) - F(s - step)) / (2.0 * step);
    const double scale = 1.0 + std::abs(f(s));
    if (!std::isfinite(fd) || std::abs(fd - f(s)) > 1e-4 * scale)
      throw ParameterViolation("primitive does not differentiate to f near s = " +
                               std::to_string(s));
  }
  return Nonlinearity{std::move(f), std::move(F), sign_bound};
}

inline Nonlinearity zero_nonlinearity() {
  return Nonlinearity{[](double) { return 0.0; }, [](double) { return 0.0; },
                      0.0};
}

// ---------------------------------------------------------------------------
// Shared pieces.

namespace detail_pde {

constexpr int kMaxInteriorNodes = 512;

inline void check_grid_budget(const Grid1D& grid) {
  if (grid.interior > kMaxInteriorNodes)
    throw GridTooFine("interior node count " + std::to_string(grid.interior) +
                      " exceeds the explicit-integration cap of " +
                      std::to_string(kMaxInteriorNodes));
}

// Dirichlet second difference (u_{i-1} - 2 u_i + u_{i+1}) / h^2 with
// u_0 = u_{m+1} = 0.
inline double laplacian_at(const Vec& u, int i, int m, double inv_h2) {
  const double left = (i > 0) ? u[i - 1] : 0.0;
  const double right = (i + 1 < m) ? u[i + 1] : 0.0;
  return (left - 2.0 * u[i] + right) * inv_h2;
}

// Discrete energy: sum over all m+1 edges of (u_{i+1}-u_i)^2/(2h) plus
// h * sum_i F(u_i), with the boundary values pinned at zero.
inline double dirichlet_energy(const Vec& u, int m, double h,
                               const std::function<double(double)>& F) {
  double edges = 0.0;
  double prev = 0.0;
  for (int i = 0; i < m; ++i) {
    const double d = u[i] - prev;
    edges += d * d;
    prev = u[i];
  }
  edges += prev * prev;  // the right boundary edge (u_{m+1} = 0)
  double bulk = 0.0;
  for (int i = 0; i < m; ++i) bulk += F(u[i]);
  return edges / (2.0 * h) + h * bulk;
}

}  // namespace detail_pde

// ---------------------------------------------------------------------------
// Semilinear heat equation u_t = u_xx - f(u): the gradient flow of the
// discrete energy in the h-scaled inner product.  The builder injects a step
// ceiling of h^2/4 so the shared explicit integrator stays stable.

inline FirstOrderSystem discretize_heat(const Nonlinearity& nl, const Grid1D& grid) {
  detail_pde::check_grid_budget(grid);
  if (!nl.f || !nl.F) throw ParameterViolation("nonlinearity needs both f and F");
  const int m = grid.interior;
  const double h = grid.spacing();
  const double inv_h2 = 1.0 / (h * h);
  const auto f = nl.f;
  const auto F = nl.F;

  FirstOrderSystem sys = make_system(
      m,
      [m, inv_h2, f](const Vec& u, Vec& out) {
        for (int i = 0; i < m; ++i)
          out[i] = detail_pde::laplacian_at(u, i, m, inv_h2) - f(u[i]);
      },
      {EnergyFunctional{"E_h", EnergyArity::StateOnly,
                        [m, h, F](const Vec& u) {
                          return detail_pde::dirichlet_energy(u, m, h, F);
                        }}},
      "heat_mol");
  sys.step_ceiling = h * h / 4.0;
  return sys;
}

// Damped wave equation u_tt = u_xx - gamma u_t - f(u), first-order in
// (u, v = u_t).  Energy: h|v|^2/2 + the Dirichlet edge/bulk terms.
inline FirstOrderSystem discretize_wave(const Nonlinearity& nl, double gamma,
                                        const Grid1D& grid) {
  detail_pde::check_grid_budget(grid);
  if (!nl.f || !nl.F) throw ParameterViolation("nonlinearity needs both f and F");
  if (!(gamma >= 0.0)) throw ParameterViolation("damping gamma must be >= 0");
  const int m = grid.interior;
  const double h = grid.spacing();
  const double inv_h2 = 1.0 / (h * h);
  const auto f = nl.f;
  const auto F = nl.F;

  FirstOrderSystem sys = make_system(
      2 * m,
      [m, inv_h2, gamma, f](const Vec& z, Vec& out) {
        for (int i = 0; i < m; ++i) {
          const double lap =
              ((i > 0 ? z[i - 1] : 0.0) - 2.0 * z[i] + (i + 1 < m ? z[i + 1] : 0.0)) *
              inv_h2;
          out[i] = z[m + i];
          out[m + i] = lap - gamma * z[m + i] - f(z[i]);
        }
      },
      {EnergyFunctional{"E_h", EnergyArity::StateAndVelocity,
                        [m, h, F](const Vec& z) {
                          const Vec u = z.head(m);
                          return 0.5 * h * z.tail(m).squaredNorm() +
                                 detail_pde::dirichlet_energy(u, m, h, F);
                        }}},
      "wave_mol");
  sys.step_ceiling = h * h / 4.0;
  return sys;
}

// ---------------------------------------------------------------------------
// Certifies the gradient-system structure of the heat discretization: in the
// h-scaled inner product, h * field(u) must equal minus the Euclidean
// gradient of the attached energy.  Returns the worst deviation over probes.

inline double gradient_consistency(const FirstOrderSystem& heat_system,
                                   const std::vector<Vec>& probes) {
  if (heat_system.energies.empty())
    throw ParameterViolation("system carries no energy functional");
  const auto& energy = heat_system.energies.front();
  const int m = heat_system.dimension;

  // Recover h from the system's own stability ceiling (h^2/4 by construction).
  const double h = 2.0 * std::sqrt(heat_system.step_ceiling);

  const Potential as_potential = make_potential(
      m, [&energy](const Vec& u) { return energy.value(u); });

  double worst = 0.0;
  for (const Vec& u : probes) {
    if (u.size() != m) throw ParameterViolation("probe dimension mismatch");
    require_finite(u, "gradient_consistency probe");
    const Vec g = grad_fd(as_potential, u, 1e-6 * (1.0 + u.norm()));
    worst = std::max(worst, (h * heat_system.field(u) + g).norm());
  }
  return worst;
}

}  // namespace convlab
