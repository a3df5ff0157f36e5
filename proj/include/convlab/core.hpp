#pragma once

// Core value types for the dissipative-systems laboratory: potentials with
// optional closed-form derivatives, damping laws, energy functionals, and
// autonomous first-order vector fields, plus finite-difference derivative
// operators and the shared error vocabulary.

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace convlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Error vocabulary. Every failure mode carries a stable kind string so the
// CLI can surface it in reports.

class LabError : public std::runtime_error {
public:
  LabError(std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

private:
  std::string kind_;
};

#define CONVLAB_ERROR(NAME)                                        \
  class NAME : public LabError {                                   \
  public:                                                          \
    explicit NAME(const std::string& what) : LabError(#NAME, what) {} \
  }

CONVLAB_ERROR(NonFiniteValue);
CONVLAB_ERROR(ParameterViolation);
CONVLAB_ERROR(UnknownName);
CONVLAB_ERROR(GridTooFine);
CONVLAB_ERROR(TooFewSamples);
CONVLAB_ERROR(DegenerateWindow);
CONVLAB_ERROR(DegenerateSamples);
CONVLAB_ERROR(NotCritical);
CONVLAB_ERROR(OutOfRange);
CONVLAB_ERROR(HypothesisViolated);
CONVLAB_ERROR(OutsideCase);
CONVLAB_ERROR(NotConstantOnSet);
CONVLAB_ERROR(DegreeUnsupported);
CONVLAB_ERROR(ZeroLeadingCoefficient);
CONVLAB_ERROR(NotHurwitz);
CONVLAB_ERROR(IllConditioned);
CONVLAB_ERROR(NonFiniteJacobian);
CONVLAB_ERROR(ParseError);
CONVLAB_ERROR(BuildError);

#undef CONVLAB_ERROR

inline bool all_finite(const Vec& v) { return v.allFinite(); }

inline void require_finite(const Vec& v, const char* where) {
  if (!v.allFinite()) throw NonFiniteValue(where);
}

// ---------------------------------------------------------------------------
// Deterministic RNG helpers. std::normal_distribution streams are
// implementation-defined, so gaussians come from an explicit Box-Muller on
// splitmix64 output; identical seeds reproduce identical samples everywhere.

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t s = master ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
  splitmix64(s);
  return s;
}

class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {
    // Warm up so small seeds decorrelate.
    splitmix64(state_);
    splitmix64(state_);
  }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(splitmix64(state_) >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller (deterministic across platforms).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  Vec normal_vector(int dim) {
    Vec v(dim);
    for (int i = 0; i < dim; ++i) v[i] = normal();
    return v;
  }

  // Uniform on the sphere of given radius.
  Vec on_sphere(int dim, double radius) {
    Vec v = normal_vector(dim);
    double n = v.norm();
    while (n == 0.0) {
      v = normal_vector(dim);
      n = v.norm();
    }
    return (radius / n) * v;
  }

private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// Potential: scalar field with optional closed-form gradient/Hessian.
// Missing derivatives fall back to central differences with step
// fd_step * (1 + ||point||).

struct Potential {
  int dimension = 0;
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;   // optional (may be empty)
  std::function<Mat(const Vec&)> hessian;    // optional (may be empty)
  double fd_step = 1e-5;

  double operator()(const Vec& u) const { return value(u); }

  bool has_gradient() const { return static_cast<bool>(gradient); }
  bool has_hessian() const { return static_cast<bool>(hessian); }

  double scaled_step(const Vec& u) const { return fd_step * (1.0 + u.norm()); }

  Vec gradient_at(const Vec& u) const;
  Mat hessian_at(const Vec& u) const;
};

inline Potential make_potential(int dimension,
                                std::function<double(const Vec&)> value,
                                std::function<Vec(const Vec&)> gradient = {},
                                std::function<Mat(const Vec&)> hessian = {},
                                double fd_step = 1e-5) {
  if (dimension < 1) throw ParameterViolation("potential dimension must be >= 1");
  if (!value) throw ParameterViolation("potential requires a value map");
  if (!(fd_step > 0.0)) throw ParameterViolation("fd_step must be > 0");
  return Potential{dimension, std::move(value), std::move(gradient),
                   std::move(hessian), fd_step};
}

// Central-difference gradient; exact for quadratics up to rounding.
inline Vec grad_fd(const Potential& phi, const Vec& point, double step) {
  if (!(step > 0.0)) throw ParameterViolation("grad_fd step must be > 0");
  require_finite(point, "grad_fd point");
  Vec g(phi.dimension);
  Vec p = point;
  for (int i = 0; i < phi.dimension; ++i) {
    const double x = point[i];
    p[i] = x + step;
    const double fp = phi.value(p);
    p[i] = x - step;
    const double fm = phi.value(p);
    p[i] = x;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw NonFiniteValue("grad_fd: potential not finite near point");
    g[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

inline Vec grad_fd(const Potential& phi, const Vec& point) {
  return grad_fd(phi, point, phi.scaled_step(point));
}

// Second-order central stencil, symmetrized so the result is exactly its
// own transpose.
inline Mat hessian_fd(const Potential& phi, const Vec& point, double step) {
  if (!(step > 0.0)) throw ParameterViolation("hessian_fd step must be > 0");
  require_finite(point, "hessian_fd point");
  const int n = phi.dimension;
  Mat h(n, n);
  Vec p = point;
  const double f0 = phi.value(point);
  if (!std::isfinite(f0)) throw NonFiniteValue("hessian_fd: value at point");
  for (int i = 0; i < n; ++i) {
    const double xi = point[i];
    p[i] = xi + step;
    const double fp = phi.value(p);
    p[i] = xi - step;
    const double fm = phi.value(p);
    p[i] = xi;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw NonFiniteValue("hessian_fd: diagonal stencil");
    h(i, i) = (fp - 2.0 * f0 + fm) / (step * step);
    for (int j = i + 1; j < n; ++j) {
      const double xj = point[j];
      p[i] = xi + step; p[j] = xj + step;
      const double fpp = phi.value(p);
      p[j] = xj - step;
      const double fpm = phi.value(p);
      p[i] = xi - step; p[j] = xj + step;
      const double fmp = phi.value(p);
      p[j] = xj - step;
      const double fmm = phi.value(p);
      p[i] = xi; p[j] = xj;
      if (!std::isfinite(fpp) || !std::isfinite(fpm) || !std::isfinite(fmp) ||
          !std::isfinite(fmm))
        throw NonFiniteValue("hessian_fd: off-diagonal stencil");
      const double v = (fpp - fpm - fmp + fmm) / (4.0 * step * step);
      h(i, j) = v;
      h(j, i) = v;
    }
  }
  return h;
}

inline Mat hessian_fd(const Potential& phi, const Vec& point) {
  return hessian_fd(phi, point, phi.scaled_step(point));
}

inline Vec Potential::gradient_at(const Vec& u) const {
  if (gradient) {
    Vec g = gradient(u);
    require_finite(g, "closed-form gradient");
    return g;
  }
  return grad_fd(*this, u);
}

inline Mat Potential::hessian_at(const Vec& u) const {
  if (hessian) return hessian(u);
  return hessian_fd(*this, u);
}

// ---------------------------------------------------------------------------
// Damping laws g : R^n -> R^n acting on velocities.

enum class DampingKind { Linear, PowerLaw, Custom };

struct DampingLaw {
  DampingKind kind = DampingKind::Linear;
  double alpha = 0.0;  // PowerLaw exponent, >= 0
  double c = 1.0;      // PowerLaw coefficient, > 0
  std::function<Vec(const Vec&)> custom;  // Custom map

  Vec operator()(const Vec& v) const {
    switch (kind) {
      case DampingKind::Linear:
        return v;
      case DampingKind::PowerLaw: {
        const double n = v.norm();
        if (n == 0.0) return Vec::Zero(v.size());
        return (c * std::pow(n, alpha)) * v;
      }
      case DampingKind::Custom:
        return custom(v);
    }
    return v;  // unreachable
  }

  // <g(v), v> >= 0 at a single probe point.
  bool dissipative_at(const Vec& v) const { return (*this)(v).dot(v) >= 0.0; }
};

inline DampingLaw linear_damping() { return DampingLaw{DampingKind::Linear, 0.0, 1.0, {}}; }

inline DampingLaw power_damping(double alpha, double c) {
  if (!(alpha >= 0.0)) throw ParameterViolation("power damping needs alpha >= 0");
  if (!(c > 0.0)) throw ParameterViolation("power damping needs c > 0");
  return DampingLaw{DampingKind::PowerLaw, alpha, c, {}};
}

inline DampingLaw custom_damping(std::function<Vec(const Vec&)> map) {
  if (!map) throw ParameterViolation("custom damping requires a map");
  return DampingLaw{DampingKind::Custom, 0.0, 1.0, std::move(map)};
}

inline DampingLaw zero_damping() {
  return custom_damping([](const Vec& v) { return Vec::Zero(v.size()); });
}

// ---------------------------------------------------------------------------
// Energy functionals evaluated along trajectories. The callable always takes
// the full state vector; StateAndVelocity marks functionals that interpret
// the state as (position, velocity) halves and therefore need even dimension.

enum class EnergyArity { StateOnly, StateAndVelocity };

struct EnergyFunctional {
  std::string label;
  EnergyArity arity = EnergyArity::StateOnly;
  std::function<double(const Vec&)> value;

  double operator()(const Vec& u) const { return value(u); }
};

// ---------------------------------------------------------------------------
// Autonomous first-order system u' = F(u). Builders bake signs into F
// (e.g. gradient flows store F = -grad phi). `field_into` is the hot-path
// allocation-free evaluator; `field` is the convenience wrapper.

struct FirstOrderSystem {
  int dimension = 0;
  std::function<void(const Vec&, Vec&)> field_into;
  std::vector<EnergyFunctional> energies;
  std::string origin;                  // which builder produced it
  std::vector<std::string> warnings;   // non-fatal construction diagnostics
  double step_ceiling = std::numeric_limits<double>::infinity();

  Vec field(const Vec& u) const {
    Vec out(dimension);
    field_into(u, out);
    return out;
  }
};

inline FirstOrderSystem make_system(int dimension,
                                    std::function<void(const Vec&, Vec&)> field_into,
                                    std::vector<EnergyFunctional> energies = {},
                                    std::string origin = "custom") {
  if (dimension < 1) throw ParameterViolation("system dimension must be >= 1");
  if (!field_into) throw ParameterViolation("system requires a field");
  FirstOrderSystem s;
  s.dimension = dimension;
  s.field_into = std::move(field_into);
  s.energies = std::move(energies);
  s.origin = std::move(origin);
  return s;
}

}  // namespace convlab
