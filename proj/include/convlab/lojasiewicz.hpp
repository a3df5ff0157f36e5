#pragma once

// Gradient-inequality exponent estimation near critical points, plus the
// decay-rate tables mapping an exponent (and damping/growth parameters) to a
// predicted convergence class. The estimator samples spheres of decreasing
// radius around a critical point a and measures witness ratios
// e(u) = log|grad phi(u)| / log|phi(u) - phi(a)|, whose shell-wise upper
// percentile approaches 1 - theta.

#include <algorithm>
#include <string>
#include <vector>

#include "convlab/core.hpp"

namespace convlab {

struct ShellStats {
  double radius = 0.0;
  int accepted = 0;
  int rejected = 0;
  double witness_p95 = 0.0;
  double witness_min = 0.0;
  double witness_max = 0.0;
};

struct LojasiewiczEstimate {
  double theta_hat = 0.0;  // in (0,1)
  double c_hat = 0.0;      // modulus for |grad phi| >= c |phi - phi(a)|^{1-theta}
  double sigma = 0.0;      // largest radius whose witnesses match the finest shell
  std::vector<ShellStats> shells;
  int samples_total = 0;
  int samples_rejected = 0;
  std::uint64_t seed = 0;
};

inline LojasiewiczEstimate estimate_exponent(const Potential& phi, const Vec& a,
                                             std::vector<double> radii,
                                             int samples_per_shell,
                                             std::uint64_t seed) {
  if (a.size() != phi.dimension)
    throw ParameterViolation("critical point has the wrong dimension");
  if (radii.size() < 3)
    throw ParameterViolation("exponent estimation needs at least 3 shell radii");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0)) throw ParameterViolation("shell radii must be positive");
    if (i > 0 && !(radii[i] < radii[i - 1]))
      throw ParameterViolation("shell radii must be strictly decreasing");
  }
  if (samples_per_shell < 8)
    throw ParameterViolation("need at least 8 samples per shell");

  const double grad_at_a = phi.gradient_at(a).norm();
  if (!(grad_at_a <= 1e-8))
    throw NotCritical("gradient norm at the base point is " +
                      std::to_string(grad_at_a));
  const double phi_a = phi.value(a);

  LojasiewiczEstimate est;
  est.seed = seed;
  double max_p95 = -std::numeric_limits<double>::infinity();

  struct Retained {
    double grad_norm, dphi;
  };
  std::vector<Retained> retained;

  for (std::size_t s = 0; s < radii.size(); ++s) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(s)));
    ShellStats stats;
    stats.radius = radii[s];
    std::vector<double> witnesses;
    for (int i = 0; i < samples_per_shell; ++i) {
      const Vec u = a + rng.on_sphere(phi.dimension, radii[s]);
      const double dphi = phi.value(u) - phi_a;
      const double gnorm = phi.gradient_at(u).norm();
      ++est.samples_total;
      if (!std::isfinite(dphi) || !std::isfinite(gnorm) || dphi == 0.0 ||
          std::abs(dphi) >= 1.0 || !(gnorm > 0.0)) {
        ++stats.rejected;
        ++est.samples_rejected;
        continue;
      }
      witnesses.push_back(std::log(gnorm) / std::log(std::abs(dphi)));
      retained.push_back({gnorm, std::abs(dphi)});
      ++stats.accepted;
    }
    if (!witnesses.empty()) {
      std::sort(witnesses.begin(), witnesses.end());
      const std::size_t idx = std::min(
          witnesses.size() - 1,
          static_cast<std::size_t>(std::ceil(0.95 * witnesses.size())) - 1);
      stats.witness_p95 = witnesses[idx];
      stats.witness_min = witnesses.front();
      stats.witness_max = witnesses.back();
      max_p95 = std::max(max_p95, stats.witness_p95);
    }
    est.shells.push_back(stats);
  }

  if (est.samples_rejected * 2 > est.samples_total)
    throw DegenerateSamples("more than half of the probe samples were unusable (" +
                            std::to_string(est.samples_rejected) + " of " +
                            std::to_string(est.samples_total) + ")");
  for (const auto& s : est.shells)
    if (s.accepted == 0)
      throw DegenerateSamples("a probe shell produced no usable samples");

  est.theta_hat = std::clamp(1.0 - max_p95, 1e-6, 1.0 - 1e-6);

  est.c_hat = std::numeric_limits<double>::infinity();
  for (const auto& r : retained)
    est.c_hat = std::min(est.c_hat, r.grad_norm / std::pow(r.dphi, 1.0 - est.theta_hat));

  // empirical validity radius: the coarsest shell whose upper witness is
  // still within 0.05 of the finest shell's
  const double finest = est.shells.back().witness_p95;
  est.sigma = est.shells.back().radius;
  for (const auto& s : est.shells)
    if (std::abs(s.witness_p95 - finest) <= 0.05) {
      est.sigma = s.radius;
      break;
    }
  return est;
}

// ---------------------------------------------------------------------------
// Rate tables

enum class RateClass { Exponential, Power };

struct RatePrediction {
  RateClass cls = RateClass::Exponential;
  double exponent = 0.0;  // decay exponent for the Power class
  std::string source;     // which table produced the prediction
};

// First-order gradient flow: exponential at theta = 1/2, otherwise
// t^{-theta/(1-2 theta)}.
inline RatePrediction predict_first_order(double theta) {
  if (!(theta > 0.0) || !(theta <= 0.5))
    throw OutOfRange("first-order rate table needs theta in (0, 1/2]");
  RatePrediction p;
  p.source = "first_order";
  if (theta == 0.5) {
    p.cls = RateClass::Exponential;
    return p;
  }
  p.cls = RateClass::Power;
  p.exponent = theta / (1.0 - 2.0 * theta);
  return p;
}

// Growth-exponent generalization: requires beta >= 1 and beta(1-theta) < 1;
// exponential exactly on beta = theta/(1-theta), power above it, and the
// table simply does not cover beta below it.
inline RatePrediction predict_general(double theta, double beta) {
  if (!(theta > 0.0) || !(theta < 1.0))
    throw OutOfRange("general rate table needs theta in (0, 1)");
  if (!(beta >= 1.0)) throw OutOfRange("general rate table needs beta >= 1");
  if (beta * (1.0 - theta) >= 1.0)
    throw HypothesisViolated("beta*(1-theta) must stay below 1");
  const double pivot = theta / (1.0 - theta);
  RatePrediction p;
  p.source = "general_beta";
  if (std::abs(beta - pivot) <= 1e-12 * std::max(1.0, beta)) {
    p.cls = RateClass::Exponential;
    return p;
  }
  if (beta < pivot)
    throw OutsideCase("the table covers beta >= theta/(1-theta) only");
  p.cls = RateClass::Power;
  p.exponent = (1.0 - beta * (1.0 - theta)) / (beta * (1.0 - theta) - theta);
  return p;
}

// Velocity-power damping: alpha in [0, theta/(1-theta)) gives
// t^{-(theta - alpha(1-theta)) / (1 - 2 theta + alpha(1-theta))}; the
// degenerate denominator (theta = 1/2, alpha = 0) falls back to the
// first-order exponential.
inline RatePrediction predict_nonlinear_damping(double theta, double alpha) {
  if (!(theta > 0.0) || !(theta <= 0.5))
    throw OutOfRange("damped rate table needs theta in (0, 1/2]");
  if (!(alpha >= 0.0) || !(alpha < theta / (1.0 - theta)))
    throw OutOfRange("damped rate table needs alpha in [0, theta/(1-theta))");
  const double denom = 1.0 - 2.0 * theta + alpha * (1.0 - theta);
  if (denom == 0.0) return predict_first_order(0.5);
  RatePrediction p;
  p.source = "nonlinear_damping";
  p.cls = RateClass::Power;
  p.exponent = (theta - alpha * (1.0 - theta)) / denom;
  return p;
}

// Adapter for estimated exponents: estimates carry upward sampling bias, and
// every theta' < theta is also a valid exponent, so anything at or above 1/2
// is snapped to the exponential endpoint before consulting the table.
inline RatePrediction predict_from_estimate(double theta_hat) {
  if (!(theta_hat > 0.0) || !(theta_hat < 1.0))
    throw OutOfRange("estimated exponent must lie in (0, 1)");
  return predict_first_order(std::min(theta_hat, 0.5));
}

inline RatePrediction predict_from_estimate(const LojasiewiczEstimate& est) {
  return predict_from_estimate(est.theta_hat);
}

// ---------------------------------------------------------------------------
// Uniform constants over a connected critical set: valid only when the
// potential is constant across the set; the uniform exponent/modulus are the
// per-point infima and the uniform radius is half the smallest per-point one.

struct UniformEstimate {
  double theta = 0.0;
  double c = 0.0;
  double sigma = 0.0;
  double value_spread = 0.0;  // max - min of phi over the set
};

inline UniformEstimate uniformize_on_set(const Potential& phi,
                                         const std::vector<Vec>& critical_set,
                                         const std::vector<LojasiewiczEstimate>& per_point) {
  if (critical_set.empty()) throw ParameterViolation("critical set must be nonempty");
  if (critical_set.size() != per_point.size())
    throw ParameterViolation("one estimate per critical point is required");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const Vec& p : critical_set) {
    if (phi.gradient_at(p).norm() > 1e-8)
      throw NotCritical("a set member fails the critical-point test");
    const double v = phi.value(p);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  UniformEstimate u;
  u.value_spread = hi - lo;
  if (!(u.value_spread <= 1e-8))
    throw NotConstantOnSet("potential varies by " + std::to_string(u.value_spread) +
                           " over the set");
  u.theta = per_point.front().theta_hat;
  u.c = per_point.front().c_hat;
  u.sigma = per_point.front().sigma;
  for (const auto& e : per_point) {
    u.theta = std::min(u.theta, e.theta_hat);
    u.c = std::min(u.c, e.c_hat);
    u.sigma = std::min(u.sigma, e.sigma);
  }
  u.sigma *= 0.5;
  return u;
}

}  // namespace convlab
