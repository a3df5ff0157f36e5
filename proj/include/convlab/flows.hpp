#pragma once

// System builders: gradient flows, damped second-order flows, auxiliary
// energies (velocity-coupled perturbations), a partially damped coupled
// oscillator with a strict descent functional, a planar gradient flow whose
// bounded trajectory spirals onto the unit circle (plus its 1-D radial
// reduction), and a named gallery of ready-to-run systems with expected
// long-time behaviour.

#include <map>
#include <optional>

#include "convlab/core.hpp"

namespace convlab {

// ---------------------------------------------------------------------------
// Builders

// u' = -grad phi(u), with E = phi attached.
inline FirstOrderSystem gradient_flow(const Potential& phi) {
  FirstOrderSystem s = make_system(
      phi.dimension,
      [phi](const Vec& u, Vec& out) { out = -phi.gradient_at(u); }, {},
      "gradient_flow");
  s.energies.push_back({"E", EnergyArity::StateOnly,
                        [phi](const Vec& u) { return phi.value(u); }});
  return s;
}

// (u, v)' = (v, -g(v) - grad Phi(u)), with E = |v|^2/2 + Phi(u) attached.
inline FirstOrderSystem second_order_flow(const Potential& Phi, const DampingLaw& g) {
  const int n = Phi.dimension;
  FirstOrderSystem s = make_system(
      2 * n,
      [Phi, g, n](const Vec& u, Vec& out) {
        out.head(n) = u.tail(n);
        out.tail(n) = -g(u.tail(n)) - Phi.gradient_at(u.head(n));
      },
      {}, "second_order_flow");
  s.energies.push_back({"E", EnergyArity::StateAndVelocity,
                        [Phi, n](const Vec& u) {
                          return 0.5 * u.tail(n).squaredNorm() + Phi.value(u.head(n));
                        }});
  if (g.kind == DampingKind::Custom) {
    // Dissipativity probe on fixed pseudo-random velocities; violations warn.
    Rng rng(0x5EEDED);
    for (int i = 0; i < 64; ++i) {
      const Vec v = std::pow(10.0, rng.uniform(-1.0, 1.0)) * rng.normal_vector(n);
      if (!g.dissipative_at(v)) {
        s.warnings.push_back("custom damping failed the dissipativity probe");
        break;
      }
    }
  }
  return s;
}

// H(u, v) = |v|^2/2 + Phi(u) + eps <grad Phi(u), v>.
inline EnergyFunctional perturbed_energy(const Potential& Phi, double eps) {
  if (!(eps >= 0.0)) throw ParameterViolation("perturbed energy needs eps >= 0");
  const int n = Phi.dimension;
  return {"H_eps", EnergyArity::StateAndVelocity, [Phi, eps, n](const Vec& u) {
            const Vec q = u.head(n);
            const Vec v = u.tail(n);
            return 0.5 * v.squaredNorm() + Phi.value(q) +
                   eps * Phi.gradient_at(q).dot(v);
          }};
}

// H(u, v) = |v|^2/2 + Phi(u) - E_inf + eps |grad Phi|^alpha <grad Phi, v>,
// with the convention 0^alpha * <0, v> = 0 at critical points.
inline EnergyFunctional chergui_energy(const Potential& Phi, double alpha,
                                       double eps, double E_inf) {
  if (!(alpha >= 0.0)) throw ParameterViolation("chergui energy needs alpha >= 0");
  if (!(eps >= 0.0)) throw ParameterViolation("chergui energy needs eps >= 0");
  const int n = Phi.dimension;
  return {"H_chergui", EnergyArity::StateAndVelocity,
          [Phi, alpha, eps, E_inf, n](const Vec& u) {
            const Vec q = u.head(n);
            const Vec v = u.tail(n);
            const Vec g = Phi.gradient_at(q);
            const double gn = g.norm();
            const double coupling =
                (gn == 0.0) ? 0.0 : eps * std::pow(gn, alpha) * g.dot(v);
            return 0.5 * v.squaredNorm() + Phi.value(q) - E_inf + coupling;
          }};
}

// State (u, v, u', v'): u'' + u' + lambda u + c v = 0, v'' + lambda v + c u = 0.
// Only the first component is damped; requires c^2 < lambda^2 so the energy
// quadratic form is positive definite.
inline FirstOrderSystem coupled_oscillator(double lambda, double c) {
  if (!(lambda > 0.0)) throw ParameterViolation("coupled oscillator needs lambda > 0");
  if (c == 0.0) throw ParameterViolation("coupled oscillator needs c != 0");
  if (!(c * c < lambda * lambda))
    throw ParameterViolation("coupled oscillator needs c^2 < lambda^2");
  FirstOrderSystem s = make_system(
      4,
      [lambda, c](const Vec& x, Vec& out) {
        out[0] = x[2];
        out[1] = x[3];
        out[2] = -x[2] - lambda * x[0] - c * x[1];
        out[3] = -lambda * x[1] - c * x[0];
      },
      {}, "coupled_oscillator");
  s.energies.push_back(
      {"E", EnergyArity::StateAndVelocity, [lambda, c](const Vec& x) {
         return 0.5 * (x[2] * x[2] + x[3] * x[3] +
                       lambda * (x[0] * x[0] + x[1] * x[1])) +
                c * x[0] * x[1];
       }});
  return s;
}

// Strict descent functional for the coupled oscillator:
// H = E - eps v v' + p eps u u' + ((p+1) lambda eps / (2c)) (u'v - uv').
inline EnergyFunctional strict_liapunov_coupled(double lambda, double c, double p,
                                                double eps) {
  if (!(lambda > 0.0) || c == 0.0 || !(c * c < lambda * lambda))
    throw ParameterViolation("strict descent functional needs 0 < |c| < lambda");
  if (!(p > 1.0)) throw ParameterViolation("strict descent functional needs p > 1");
  if (!(eps >= 0.0)) throw ParameterViolation("strict descent functional needs eps >= 0");
  const double k = (p + 1.0) * lambda * eps / (2.0 * c);
  return {"H_strict", EnergyArity::StateAndVelocity,
          [lambda, c, p, eps, k](const Vec& x) {
            const double u = x[0], v = x[1], du = x[2], dv = x[3];
            const double E =
                0.5 * (du * du + dv * dv + lambda * (u * u + v * v)) + c * u * v;
            return E - eps * v * dv + p * eps * u * du + k * (du * v - u * dv);
          }};
}

// ---------------------------------------------------------------------------
// Planar potential with a spiral trajectory accumulating on the unit circle.
// In polar form f(r, theta) = e^{-w} [1 - A sin(theta - w)] for r < 1
// (w = (1-r^2)^{-k}, A = 4 k^2 r^4 / (4 k^2 r^4 + (1-r^2)^{2k+2})), and 0
// for r >= 1. Value and gradient are evaluated in cartesian coordinates from
// the closed-form polar derivatives; the exponent w is computed first and
// the whole expression short-circuits to 0 once w > 700, avoiding 0 * inf.

namespace detail_spiral {

struct PolarTerms {
  double s = 0.0, w = 0.0, E = 0.0, A = 0.0, D = 0.0;
  bool flat = false;  // r >= 1 or exponent underflow
};

inline PolarTerms polar_terms(int k, double r2) {
  PolarTerms t;
  t.s = 1.0 - r2;
  if (t.s <= 0.0) {
    t.flat = true;
    return t;
  }
  t.w = std::pow(t.s, -static_cast<double>(k));
  if (!(t.w <= 700.0)) {  // also catches overflow/inf
    t.flat = true;
    return t;
  }
  t.E = std::exp(-t.w);
  const double r4 = r2 * r2;
  const double kk4 = 4.0 * k * k;
  t.D = kk4 * r4 + std::pow(t.s, 2.0 * k + 2.0);
  t.A = kk4 * r4 / t.D;
  return t;
}

}  // namespace detail_spiral

inline Potential palis_demelo_potential(int k) {
  if (k < 1) throw ParameterViolation("spiral potential needs k >= 1");
  auto value = [k](const Vec& u) -> double {
    const double x = u[0], y = u[1];
    const double r2 = x * x + y * y;
    const auto t = detail_spiral::polar_terms(k, r2);
    if (t.flat) return 0.0;
    const double psi = std::atan2(y, x) - t.w;
    return t.E * (1.0 - t.A * std::sin(psi));
  };
  auto gradient = [k](const Vec& u) -> Vec {
    const double x = u[0], y = u[1];
    const double r2 = x * x + y * y;
    Vec g = Vec::Zero(2);
    if (r2 == 0.0) return g;
    const auto t = detail_spiral::polar_terms(k, r2);
    if (t.flat) return g;
    const double r = std::sqrt(r2);
    const double r3 = r2 * r;
    const double kk4 = 4.0 * k * k;
    const double dw = 2.0 * k * r * std::pow(t.s, -static_cast<double>(k) - 1.0);
    const double dE = -t.E * dw;
    const double dD = 4.0 * kk4 * r3 -
                      2.0 * r * (2.0 * k + 2.0) * std::pow(t.s, 2.0 * k + 1.0);
    const double dA = (4.0 * kk4 * r3 * t.D - kk4 * r2 * r2 * dD) / (t.D * t.D);
    const double psi = std::atan2(y, x) - t.w;
    const double sp = std::sin(psi), cp = std::cos(psi);
    const double fr = dE * (1.0 - t.A * sp) - t.E * dA * sp + t.E * t.A * cp * dw;
    const double ftheta = -t.E * t.A * cp;
    g[0] = fr * (x / r) + ftheta * (-y / r2);
    g[1] = fr * (y / r) + ftheta * (x / r2);
    return g;
  };
  return make_potential(2, std::move(value), std::move(gradient));
}

// Radial reduction of the spiral trajectory: scalar state r on (0,1) with
// r' = [2 k r (1-r^2)^{k+1} / (4 k^2 r^4 + (1-r^2)^{2k+2})] e^{-(1-r^2)^{-k}},
// plus the curve map r -> (r cos theta, r sin theta), theta = (1-r^2)^{-k}.
// `rescaled_time` drops the exponential factor: the same orbit traversed at
// unit exponential scale, which reaches the circle's neighbourhood within
// practical horizons (the exact field needs t ~ e^{1/(1-r^2)}).
struct SpiralReduction {
  FirstOrderSystem system;  // 1-D radial system
  int k = 1;
  double r0 = 0.5;
  bool rescaled_time = false;

  struct Point {
    Vec position;
    bool clamped = false;  // set when r left (0,1) and was pulled back
  };

  Point reconstruct(double r) const {
    Point p;
    p.position = Vec(2);
    if (!(r > 0.0)) {
      r = 1e-12;
      p.clamped = true;
    }
    if (!(r < 1.0)) {
      r = 1.0 - 1e-12;
      p.clamped = true;
    }
    const double theta = std::pow(1.0 - r * r, -static_cast<double>(k));
    p.position[0] = r * std::cos(theta);
    p.position[1] = r * std::sin(theta);
    return p;
  }
};

inline SpiralReduction palis_demelo_radial(int k, double r0,
                                           bool rescaled_time = false) {
  if (k < 1) throw ParameterViolation("spiral reduction needs k >= 1");
  if (!(r0 > 0.0 && r0 < 1.0))
    throw ParameterViolation("spiral reduction needs r0 in (0,1)");
  SpiralReduction red;
  red.k = k;
  red.r0 = r0;
  red.rescaled_time = rescaled_time;
  red.system = make_system(
      1,
      [k, rescaled_time](const Vec& u, Vec& out) {
        const double r = u[0];
        const double s = 1.0 - r * r;
        if (r <= 0.0 || s <= 0.0) {
          out[0] = 0.0;
          return;
        }
        const double denom = 4.0 * k * k * std::pow(r, 4.0) +
                             std::pow(s, 2.0 * k + 2.0);
        const double base = 2.0 * k * r * std::pow(s, k + 1.0) / denom;
        if (rescaled_time) {
          out[0] = base;
          return;
        }
        const double w = std::pow(s, -static_cast<double>(k));
        out[0] = (w <= 700.0) ? base * std::exp(-w) : 0.0;
      },
      {}, "palis_demelo_radial");
  return red;
}

// Second-order companion potential Phi = phi - |grad phi|^2 / 2; its gradient
// is obtained by differencing the lifted value (no closed form attached).
inline Potential second_order_lift(const Potential& phi) {
  return make_potential(
      phi.dimension,
      [phi](const Vec& u) {
        return phi.value(u) - 0.5 * phi.gradient_at(u).squaredNorm();
      },
      {}, {}, phi.fd_step);
}

// ---------------------------------------------------------------------------
// Gallery

enum class ExpectedKind { ConvergesTo, NonConvergentCircle, Oscillates, EnergyConserved };

struct ExpectedOutcome {
  ExpectedKind kind = ExpectedKind::ConvergesTo;
  std::vector<Vec> targets;  // candidate limit points (ConvergesTo)
  double band_lo = 0.0, band_hi = 0.0;  // Oscillates: crossing interval
  std::string description;
};

struct GalleryEntry {
  std::string name;
  std::string description;
  FirstOrderSystem system;
  Vec default_initial;
  ExpectedOutcome expected;
  std::optional<Potential> potential;  // driving potential, when one exists
  double suggested_t_max = 100.0;
  double suggested_sample_interval = 0.05;
  std::map<std::string, double> params;  // resolved parameter values
};

namespace detail_gallery {

inline Potential quadratic_well() {
  return make_potential(
      1, [](const Vec& u) { return 0.5 * u[0] * u[0]; },
      [](const Vec& u) {
        Vec g(1);
        g[0] = u[0];
        return g;
      },
      [](const Vec&) {
        Mat h(1, 1);
        h(0, 0) = 1.0;
        return h;
      });
}

inline Potential double_well() {
  return make_potential(
      1,
      [](const Vec& u) {
        const double x = u[0];
        return 0.25 * x * x * x * x - 0.5 * x * x;
      },
      [](const Vec& u) {
        Vec g(1);
        g[0] = u[0] * u[0] * u[0] - u[0];
        return g;
      },
      [](const Vec& u) {
        Mat h(1, 1);
        h(0, 0) = 3.0 * u[0] * u[0] - 1.0;
        return h;
      });
}

inline Potential power_well(double p) {
  // phi(u) = |u|^{p+1}/(p+1), grad phi = |u|^{p-1} u.
  return make_potential(
      1,
      [p](const Vec& u) { return std::pow(std::abs(u[0]), p + 1.0) / (p + 1.0); },
      [p](const Vec& u) {
        Vec g(1);
        g[0] = std::pow(std::abs(u[0]), p - 1.0) * u[0];
        return g;
      });
}

// Restoring force that vanishes on [a, b]: f(s) = (s-a)^3 below a,
// 0 inside, (s-b)^3 above b; primitive F with F = 0 on [a, b].
inline Potential flat_interval_well(double a, double b) {
  return make_potential(
      1,
      [a, b](const Vec& u) {
        const double s = u[0];
        if (s < a) return 0.25 * std::pow(s - a, 4.0);
        if (s > b) return 0.25 * std::pow(s - b, 4.0);
        return 0.0;
      },
      [a, b](const Vec& u) {
        Vec g(1);
        const double s = u[0];
        if (s < a)
          g[0] = std::pow(s - a, 3.0);
        else if (s > b)
          g[0] = std::pow(s - b, 3.0);
        else
          g[0] = 0.0;
        return g;
      });
}

inline double param(const std::map<std::string, double>& overrides,
                    std::map<std::string, double>& resolved, const std::string& key) {
  const auto it = overrides.find(key);
  if (it != overrides.end()) resolved[key] = it->second;
  return resolved.at(key);
}

inline void reject_unknown(const std::map<std::string, double>& overrides,
                           const std::map<std::string, double>& defaults,
                           const std::string& name) {
  for (const auto& [key, _] : overrides)
    if (!defaults.count(key))
      throw ParameterViolation("unknown parameter '" + key + "' for gallery entry '" +
                               name + "'");
}

}  // namespace detail_gallery

inline std::vector<std::string> gallery_names() {
  return {"duffing_damped",  "harmonic",          "power_decay",
          "power_damped_oscillator", "weak_damping", "quadratic_damping",
          "palis_demelo",    "palis_demelo_lifted", "coupled",
          "naka_rushton",    "robot_arm"};
}

inline GalleryEntry gallery(const std::string& name,
                            const std::map<std::string, double>& overrides = {}) {
  using namespace detail_gallery;
  GalleryEntry e;
  e.name = name;

  auto vec1 = [](double a) {
    Vec v(1);
    v << a;
    return v;
  };
  auto vec2 = [](double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
  };

  if (name == "duffing_damped") {
    std::map<std::string, double> defaults;
    reject_unknown(overrides, defaults, name);
    const Potential phi = double_well();
    e.system = second_order_flow(phi, linear_damping());
    e.potential = phi;
    e.default_initial = vec2(2.0, 0.0);
    e.description =
        "double-well oscillator u'' + u' + u^3 - u = 0; equilibria (0,0) "
        "(unstable) and (+-1,0) (attracting)";
    e.expected = {ExpectedKind::ConvergesTo,
                  {vec2(-1.0, 0.0), vec2(0.0, 0.0), vec2(1.0, 0.0)},
                  0.0,
                  0.0,
                  "converges to one of (+-1,0),(0,0)"};
    e.suggested_t_max = 80.0;
    e.suggested_sample_interval = 0.05;
    e.params = defaults;
    return e;
  }

  if (name == "harmonic") {
    std::map<std::string, double> defaults;
    reject_unknown(overrides, defaults, name);
    const Potential phi = quadratic_well();
    e.system = second_order_flow(phi, zero_damping());
    e.potential = phi;
    e.default_initial = vec2(1.0, 0.0);
    e.description = "undamped oscillator u'' + u = 0; periodic, never converges";
    e.expected = {ExpectedKind::EnergyConserved, {}, 0.0, 0.0,
                  "energy constant; orbit is a circle"};
    e.suggested_t_max = 200.0;
    e.suggested_sample_interval = 0.05;
    e.params = defaults;
    return e;
  }

  if (name == "power_decay") {
    std::map<std::string, double> defaults{{"p", 3.0}};
    reject_unknown(overrides, defaults, name);
    const double p = param(overrides, defaults, "p");
    if (!(p > 1.0)) throw ParameterViolation("power_decay needs p > 1");
    const Potential phi = power_well(p);
    e.system = gradient_flow(phi);
    e.system.origin = "gallery:power_decay";
    e.potential = phi;
    e.default_initial = vec1(1.0);
    e.description =
        "scalar flow u' = -|u|^{p-1} u; algebraic decay t^{-1/(p-1)} toward 0";
    e.expected = {ExpectedKind::ConvergesTo, {vec1(0.0)}, 0.0, 0.0,
                  "converges to 0 at a power rate"};
    e.suggested_t_max = 2e5;
    e.suggested_sample_interval = 10.0;
    e.params = defaults;
    return e;
  }

  if (name == "power_damped_oscillator") {
    std::map<std::string, double> defaults{{"c", 1.0}, {"p", 2.0}};
    reject_unknown(overrides, defaults, name);
    const double c = param(overrides, defaults, "c");
    const double p = param(overrides, defaults, "p");
    if (!(c > 0.0) || !(p > 1.0))
      throw ParameterViolation("power_damped_oscillator needs c > 0, p > 1");
    const Potential phi = quadratic_well();
    e.system = second_order_flow(phi, power_damping(p - 1.0, c));
    e.potential = phi;
    e.default_initial = vec2(1.0, 0.0);
    e.description =
        "u'' + u + c|u'|^{p-1}u' = 0; converges to rest at a power rate";
    e.expected = {ExpectedKind::ConvergesTo, {vec2(0.0, 0.0)}, 0.0, 0.0,
                  "converges to the origin at a power rate"};
    e.suggested_t_max = 5e4;
    e.suggested_sample_interval = 2.0;
    e.params = defaults;
    return e;
  }

  if (name == "weak_damping") {
    std::map<std::string, double> defaults{{"eps", 0.8}, {"delta", 1.0}};
    reject_unknown(overrides, defaults, name);
    const double eps = param(overrides, defaults, "eps");
    const double delta = param(overrides, defaults, "delta");
    if (!(eps > 0.0 && eps <= 1.0))
      throw ParameterViolation("weak_damping needs eps in (0,1]");
    if (!(delta > 0.0)) throw ParameterViolation("weak_damping needs delta > 0");
    const Potential phi = double_well();
    e.system = second_order_flow(phi, power_damping(1.0 - eps, delta));
    e.potential = phi;
    e.default_initial = vec2(1.2, 0.0);
    e.description =
        "double well with degenerate damping delta |u'|^{1-eps} u'; "
        "<g(v),v> = delta |v|^{3-eps}, still enough for convergence";
    e.expected = {ExpectedKind::ConvergesTo,
                  {vec2(-1.0, 0.0), vec2(0.0, 0.0), vec2(1.0, 0.0)},
                  0.0,
                  0.0,
                  "converges to a rest point of the double well"};
    e.suggested_t_max = 200.0;
    e.suggested_sample_interval = 0.05;
    e.params = defaults;
    return e;
  }

  if (name == "quadratic_damping") {
    std::map<std::string, double> defaults{{"a", -0.5}, {"b", 0.5}};
    reject_unknown(overrides, defaults, name);
    const double a = param(overrides, defaults, "a");
    const double b = param(overrides, defaults, "b");
    if (!(a <= b)) throw ParameterViolation("quadratic_damping needs a <= b");
    const Potential phi = flat_interval_well(a, b);
    e.system = second_order_flow(phi, power_damping(1.0, 1.0));
    e.potential = phi;
    e.default_initial = vec2(0.0, 1.0);
    e.description =
        "u'' + |u'|u' + f(u) = 0 with f = 0 on [a,b]; bounded but keeps "
        "swinging across the flat interval";
    e.expected = {ExpectedKind::Oscillates, {}, a, b,
                  "tail max exceeds b and tail min falls below a"};
    e.suggested_t_max = 200.0;
    e.suggested_sample_interval = 0.02;
    e.params = defaults;
    return e;
  }

  if (name == "palis_demelo" || name == "palis_demelo_lifted") {
    std::map<std::string, double> defaults{{"k", 1.0}};
    reject_unknown(overrides, defaults, name);
    const double kd = param(overrides, defaults, "k");
    const int k = static_cast<int>(kd);
    if (k < 1 || kd != k) throw ParameterViolation("spiral entries need integer k >= 1");
    const Potential phi = palis_demelo_potential(k);
    const SpiralReduction red = palis_demelo_radial(k, 0.5);
    const Vec p0 = red.reconstruct(0.5).position;
    if (name == "palis_demelo") {
      e.system = gradient_flow(phi);
      e.system.origin = "gallery:palis_demelo";
      e.potential = phi;
      e.default_initial = p0;
      e.description =
          "planar gradient flow, C^infinity potential flat outside the unit "
          "disk; the trajectory spirals out and accumulates on the whole circle";
    } else {
      const Potential lifted = second_order_lift(phi);
      e.system = second_order_flow(lifted, linear_damping());
      e.system.origin = "gallery:palis_demelo_lifted";
      e.potential = lifted;
      Vec x0(4);
      x0.head(2) = p0;
      x0.tail(2) = -phi.gradient_at(p0);  // start on the first-order orbit
      e.default_initial = x0;
      e.description =
          "second-order companion of the spiral flow (u'' + u' + grad Phi = 0 "
          "with Phi = phi - |grad phi|^2/2); same non-convergent orbit";
    }
    e.expected = {ExpectedKind::NonConvergentCircle, {}, 0.0, 0.0,
                  "omega-limit set is the whole unit circle"};
    e.suggested_t_max = 50.0;
    e.suggested_sample_interval = 0.01;
    e.params = defaults;
    return e;
  }

  if (name == "coupled") {
    std::map<std::string, double> defaults{{"lambda", 1.0}, {"c", 0.5}};
    reject_unknown(overrides, defaults, name);
    const double lambda = param(overrides, defaults, "lambda");
    const double c = param(overrides, defaults, "c");
    e.system = coupled_oscillator(lambda, c);
    e.system.energies.push_back(strict_liapunov_coupled(lambda, c, 2.0, 0.01));
    Vec x0(4);
    x0 << 1.0, 1.0, 0.0, 0.0;
    e.default_initial = x0;
    e.description =
        "two oscillators, only the first damped; coupling carries the "
        "dissipation everywhere and the origin attracts exponentially";
    e.expected = {ExpectedKind::ConvergesTo, {Vec(Vec::Zero(4))}, 0.0, 0.0,
                  "converges to the origin exponentially"};
    e.suggested_t_max = 120.0;
    e.suggested_sample_interval = 0.05;
    e.params = defaults;
    return e;
  }

  if (name == "naka_rushton") {
    std::map<std::string, double> defaults{{"c", 0.5}};
    reject_unknown(overrides, defaults, name);
    const double c = param(overrides, defaults, "c");
    if (!(c > 0.0)) throw ParameterViolation("naka_rushton needs c > 0");
    e.system = make_system(
        2,
        [c](const Vec& u, Vec& out) {
          out[0] = -u[0] + c * u[1] / (1.0 + std::abs(u[1]));
          out[1] = -u[1] + c * u[0] / (1.0 + std::abs(u[0]));
        },
        {}, "gallery:naka_rushton");
    e.system.energies.push_back({"V", EnergyArity::StateOnly, [](const Vec& u) {
                                   return u.squaredNorm();
                                 }});
    if (!(c < 1.0))
      e.system.warnings.push_back(
          "c >= 1 is outside the validated range (0,1); results unchecked");
    e.default_initial = vec2(1.0, 1.0);
    e.description =
        "mutually saturating pair u' = -u + c v/(1+|v|), v' = -v + c u/(1+|u|); "
        "V = u^2 + v^2 decreases and the origin attracts for c in (0,1)";
    e.expected = {ExpectedKind::ConvergesTo, {vec2(0.0, 0.0)}, 0.0, 0.0,
                  "converges to the origin"};
    e.suggested_t_max = 60.0;
    e.suggested_sample_interval = 0.02;
    e.params = defaults;
    return e;
  }

  if (name == "robot_arm") {
    std::map<std::string, double> defaults{
        {"J", 1.0}, {"p", 2.0}, {"k", 1.0}, {"c", 1.0}};
    reject_unknown(overrides, defaults, name);
    const double J = param(overrides, defaults, "J");
    const double p = param(overrides, defaults, "p");
    const double k = param(overrides, defaults, "k");
    const double c = param(overrides, defaults, "c");
    if (!(J > 0.0 && p > 0.0 && k > 0.0 && c > 0.0))
      throw ParameterViolation("robot_arm needs positive J, p, k, c");
    if (!(c < p)) throw ParameterViolation("robot_arm needs c < p");
    e.system = make_system(
        2,
        [J, p, k, c](const Vec& u, Vec& out) {
          out[0] = u[1];
          out[1] = (-p * std::sin(u[0]) - k * u[1] + c) / J;
        },
        {}, "gallery:robot_arm");
    e.system.energies.push_back(
        {"V", EnergyArity::StateAndVelocity, [J, p, c](const Vec& u) {
           return 0.5 * J * u[1] * u[1] + p * (1.0 - std::cos(u[0])) - c * u[0];
         }});
    e.default_initial = vec2(0.0, 0.0);
    const double ustar = std::asin(c / p);
    e.expected.kind = ExpectedKind::ConvergesTo;
    for (int m = -1; m <= 1; ++m)
      e.expected.targets.push_back(vec2(ustar + 2.0 * M_PI * m, 0.0));
    e.expected.description = "converges to a rest angle asin(c/p) + 2 pi m";
    e.description =
        "driven pendulum J u'' + k u' + p sin u = c with c < p; the descent "
        "functional (J/2)u'^2 + p(1-cos u) - c u forces convergence to a "
        "rest angle";
    e.suggested_t_max = 80.0;
    e.suggested_sample_interval = 0.02;
    e.params = defaults;
    return e;
  }

  throw UnknownName("no gallery entry named '" + name + "'");
}

}  // namespace convlab
