#pragma once

// Trajectory-level diagnostics: limit-set estimation, convergence criteria,
// decay-rate fitting, and integral tail-bound checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "convlab/core.hpp"
#include "convlab/integrate.hpp"
#include "convlab/lojasiewicz.hpp"

namespace convlab {

// ---------------------------------------------------------------------------
// Limit-set estimation from the trajectory tail.

enum class OmegaKind { Singleton, ClosedCurve, Indeterminate };

inline const char* to_string(OmegaKind k) {
  switch (k) {
    case OmegaKind::Singleton: return "singleton";
    case OmegaKind::ClosedCurve: return "closed_curve";
    case OmegaKind::Indeterminate: return "indeterminate";
  }
  return "?";
}

struct OmegaEstimate {
  OmegaKind kind = OmegaKind::Indeterminate;
  std::vector<Vec> samples;    // tail states (subsampled to at most 4000)
  double diameter = 0.0;       // max pairwise distance over the tail samples
  bool connected = false;      // epsilon-chain connectivity of the samples
  double chain_eps = 0.0;      // the epsilon actually used
  Vec point;                   // tail centroid (the limit when Singleton)
  double winding = 0.0;        // signed turns around the centroid (curves)
  double mean_radius = 0.0;    // mean distance to the centroid (curves)
  double radial_spread = 0.0;  // max - min distance to the centroid (curves)
};

namespace detail_analysis {

constexpr std::size_t kMaxTailSamples = 4000;

inline std::size_t tail_start_index(const Trajectory& traj, double burn_in) {
  const double t0 = traj.times.front();
  const double cut = t0 + burn_in * (traj.times.back() - t0);
  std::size_t k = 0;
  while (k < traj.size() && traj.times[k] < cut) ++k;
  return k;
}

}  // namespace detail_analysis

// Estimates the limit set from the post-burn-in tail.  Closed-curve detection
// needs two coordinates: it runs on the given projection axes, defaulting to
// the full state when the dimension is exactly two and staying off otherwise.
// chain_eps <= 0 selects twice the largest consecutive sample gap.
inline OmegaEstimate omega_estimate(const Trajectory& traj,
                                    double burn_in_fraction = 0.5,
                                    double chain_eps = -1.0,
                                    std::pair<int, int> projection = {-1, -1}) {
  if (!(burn_in_fraction >= 0.0) || !(burn_in_fraction < 1.0))
    throw ParameterViolation("burn_in_fraction must lie in [0, 1)");
  if (traj.size() < 2) throw TooFewSamples("trajectory has fewer than 2 samples");

  const std::size_t start = detail_analysis::tail_start_index(traj, burn_in_fraction);
  const std::size_t count = traj.size() - start;
  if (count < 100)
    throw TooFewSamples("need at least 100 post-burn-in samples, have " +
                        std::to_string(count));

  OmegaEstimate est;

  // Subsample the tail for the quadratic-cost statistics.
  const std::size_t stride =
      (count + detail_analysis::kMaxTailSamples - 1) / detail_analysis::kMaxTailSamples;
  for (std::size_t k = start; k < traj.size(); k += stride)
    est.samples.push_back(traj.states[k]);
  const std::size_t m = est.samples.size();

  Vec centroid = Vec::Zero(traj.dimension);
  for (const Vec& s : est.samples) centroid += s;
  centroid /= double(m);
  est.point = centroid;

  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      est.diameter = std::max(est.diameter, (est.samples[i] - est.samples[j]).norm());

  // Epsilon-chain connectivity (breadth-first over the sample set).
  if (chain_eps <= 0.0) {
    double max_gap = 0.0;
    for (std::size_t i = 1; i < m; ++i)
      max_gap = std::max(max_gap, (est.samples[i] - est.samples[i - 1]).norm());
    chain_eps = std::max(2.0 * max_gap, 1e-12);
  }
  est.chain_eps = chain_eps;
  {
    std::vector<char> seen(m, 0);
    std::vector<std::size_t> queue{0};
    seen[0] = 1;
    std::size_t visited = 1;
    while (!queue.empty()) {
      const std::size_t i = queue.back();
      queue.pop_back();
      for (std::size_t j = 0; j < m; ++j)
        if (!seen[j] && (est.samples[i] - est.samples[j]).norm() <= chain_eps) {
          seen[j] = 1;
          ++visited;
          queue.push_back(j);
        }
    }
    est.connected = (visited == m);
  }

  // Scale-aware singleton threshold: absolute floor or one thousandth of the
  // distance travelled from the initial state to the tail.
  const double travel = (traj.states.front() - centroid).norm();
  const double singleton_threshold = std::max(1e-5, 1e-3 * travel);
  if (est.diameter <= singleton_threshold) {
    est.kind = OmegaKind::Singleton;
    return est;
  }

  // Closed-curve test on a two-coordinate projection of the full tail.
  int ax = projection.first, ay = projection.second;
  if (ax < 0 && traj.dimension == 2) { ax = 0; ay = 1; }
  if (ax >= 0) {
    if (ax >= traj.dimension || ay < 0 || ay >= traj.dimension || ax == ay)
      throw ParameterViolation("projection axes out of range");
    double cx = 0.0, cy = 0.0;
    for (std::size_t k = start; k < traj.size(); ++k) {
      cx += traj.states[k][ax];
      cy += traj.states[k][ay];
    }
    cx /= double(count);
    cy /= double(count);
    double total_angle = 0.0;
    double r_min = std::numeric_limits<double>::infinity(), r_max = 0.0, r_sum = 0.0;
    double prev_angle = 0.0;
    for (std::size_t k = start; k < traj.size(); ++k) {
      const double x = traj.states[k][ax] - cx, y = traj.states[k][ay] - cy;
      const double r = std::hypot(x, y);
      r_min = std::min(r_min, r);
      r_max = std::max(r_max, r);
      r_sum += r;
      const double angle = std::atan2(y, x);
      if (k > start) {
        double d = angle - prev_angle;
        while (d > M_PI) d -= 2.0 * M_PI;
        while (d < -M_PI) d += 2.0 * M_PI;
        total_angle += d;
      }
      prev_angle = angle;
    }
    est.winding = total_angle / (2.0 * M_PI);
    est.mean_radius = r_sum / double(count);
    est.radial_spread = r_max - r_min;
    if (std::abs(est.winding) >= 1.0 &&
        est.radial_spread < 0.1 * est.mean_radius) {
      est.kind = OmegaKind::ClosedCurve;
      return est;
    }
  }

  est.kind = OmegaKind::Indeterminate;
  return est;
}

// ---------------------------------------------------------------------------
// Sliding-window displacement criterion: convergence is equivalent to the
// sup over bounded look-ahead displacements tending to zero.

struct DisplacementVerdict {
  bool passed = false;
  double alpha = 0.0;
  double first_window_sup = 0.0;
  double last_window_sup = 0.0;
  std::vector<double> window_sups;
};

inline DisplacementVerdict cauchy_convergence_test(const Trajectory& traj,
                                                   double alpha, int windows = 5) {
  if (!(alpha > 0.0)) throw ParameterViolation("alpha must be > 0");
  if (windows < 2) throw ParameterViolation("need at least 2 windows");
  if (traj.size() < 2) throw TooFewSamples("trajectory has fewer than 2 samples");
  const double t0 = traj.times.front(), t1 = traj.times.back();
  const double span = t1 - t0;
  if (!(alpha < span / windows))
    throw ParameterViolation("alpha must be smaller than span / windows");

  DisplacementVerdict v;
  v.alpha = alpha;
  v.window_sups.assign(std::size_t(windows), 0.0);
  const double window_len = span / windows;

  std::size_t j_hi = 0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double t_end = traj.times[i] + alpha;
    if (t_end > t1 + 1e-12 * (1.0 + std::abs(t1))) break;
    if (j_hi < i) j_hi = i;
    while (j_hi + 1 < traj.size() && traj.times[j_hi + 1] <= t_end) ++j_hi;
    double d = 0.0;
    for (std::size_t j = i + 1; j <= j_hi; ++j)
      d = std::max(d, (traj.states[j] - traj.states[i]).norm());
    const int w = std::min(windows - 1, int((traj.times[i] - t0) / window_len));
    v.window_sups[std::size_t(w)] = std::max(v.window_sups[std::size_t(w)], d);
  }

  v.first_window_sup = v.window_sups.front();
  v.last_window_sup = v.window_sups.back();
  v.passed = (v.first_window_sup == 0.0 && v.last_window_sup == 0.0) ||
             v.last_window_sup < 0.1 * v.first_window_sup;
  return v;
}

// ---------------------------------------------------------------------------
// Square-integrability of the derivative along the trajectory.

struct L2DerivativeResult {
  double integral = 0.0;           // trapezoid of |u'|^2 over the whole span
  double tail_contribution = 0.0;  // share accrued over the last time decade
  bool tail_vanishes = false;      // tail contribution below 5% of the total
};

inline L2DerivativeResult l2_derivative_test(const Trajectory& traj) {
  if (traj.size() < 2) throw TooFewSamples("trajectory has fewer than 2 samples");
  if (traj.derivatives.size() != traj.size())
    throw ParameterViolation("trajectory carries no derivative samples");

  L2DerivativeResult r;
  const double t1 = traj.times.back();
  const double tail_lo = t1 / 10.0;  // the last decade of the time axis
  for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
    const double ta = traj.times[k], tb = traj.times[k + 1];
    const double fa = traj.derivatives[k].squaredNorm();
    const double fb = traj.derivatives[k + 1].squaredNorm();
    const double piece = 0.5 * (fa + fb) * (tb - ta);
    r.integral += piece;
    const double overlap = std::max(0.0, tb - std::max(ta, tail_lo));
    r.tail_contribution += piece * (overlap / (tb - ta));
  }
  r.tail_vanishes = (r.integral == 0.0) ||
                    (r.tail_contribution < 0.05 * r.integral);
  return r;
}

// ---------------------------------------------------------------------------
// Decay-rate fitting on distance-to-limit data.

enum class DecayClass { Exponential, Power, NoDecay };

inline const char* to_string(DecayClass c) {
  switch (c) {
    case DecayClass::Exponential: return "exponential";
    case DecayClass::Power: return "power";
    case DecayClass::NoDecay: return "no_decay";
  }
  return "?";
}

struct DecayFit {
  DecayClass cls = DecayClass::NoDecay;
  double rate = 0.0;       // decay constant (exponential) or exponent (power)
  double amplitude = 0.0;  // multiplicative constant of the fitted model
  double residual = 0.0;   // rms log-residual of the selected model
  double residual_exponential = 0.0;
  double residual_power = 0.0;
  bool ambiguous = false;  // model residuals closer than the margin ratio
  double t_lo = 0.0, t_hi = 0.0;  // fit window
};

namespace detail_analysis {

struct LineFit {
  double slope = 0.0, intercept = 0.0, rms = 0.0;
  bool ok = false;
};

inline LineFit least_squares_line(const std::vector<double>& x,
                                  const std::vector<double>& y) {
  LineFit f;
  const std::size_t n = x.size();
  if (n < 4) return f;
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) { sx += x[i]; sy += y[i]; }
  const double mx = sx / double(n), my = sy / double(n);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) return f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - (f.intercept + f.slope * x[i]);
    ss += e * e;
  }
  f.rms = std::sqrt(ss / double(n));
  f.ok = true;
  return f;
}

}  // namespace detail_analysis

// Fits exponential (log-linear) and power (log-log) models over the trailing
// window and keeps the smaller-residual model.  The winner must beat the
// loser by a 1.2x residual ratio, otherwise the fit is flagged ambiguous.
// NoDecay when the best residual exceeds 0.5, the fitted rate is not
// positive, or the model's own drop across the window is within twice the
// residual (no signal above the noise).
inline DecayFit fit_decay(const std::vector<double>& times,
                          const std::vector<double>& distances,
                          double window_fraction = 0.5) {
  if (times.size() != distances.size())
    throw ParameterViolation("times/distances size mismatch");
  if (!(window_fraction > 0.0) || !(window_fraction > 0.0 && window_fraction <= 1.0))
    throw ParameterViolation("window_fraction must lie in (0, 1]");
  const std::size_t n = times.size();
  const std::size_t take = std::max<std::size_t>(std::size_t(std::ceil(n * window_fraction)), 1);
  if (n < 4 || take < 4) throw DegenerateWindow("need at least 4 samples in the fit window");
  const std::size_t start = n - take;

  std::vector<double> t, logd, logt, logd_pos;
  t.reserve(take);
  logd.reserve(take);
  for (std::size_t i = start; i < n; ++i) {
    if (!std::isfinite(times[i]) || !std::isfinite(distances[i]))
      throw NonFiniteValue("fit window contains a non-finite sample");
    const double d = std::max(distances[i], 1e-15);  // clip zeros
    t.push_back(times[i]);
    logd.push_back(std::log(d));
    if (times[i] > 0.0) {
      logt.push_back(std::log(times[i]));
      logd_pos.push_back(std::log(d));
    }
  }

  const detail_analysis::LineFit fe = detail_analysis::least_squares_line(t, logd);
  const detail_analysis::LineFit fp = detail_analysis::least_squares_line(logt, logd_pos);
  if (!fe.ok && !fp.ok) throw DegenerateWindow("fit window has no spread in time");

  DecayFit fit;
  fit.t_lo = t.front();
  fit.t_hi = t.back();
  const double inf = std::numeric_limits<double>::infinity();
  fit.residual_exponential = fe.ok ? fe.rms : inf;
  fit.residual_power = fp.ok ? fp.rms : inf;

  const bool exp_wins = fit.residual_exponential <= fit.residual_power;
  const double best = std::min(fit.residual_exponential, fit.residual_power);
  const double worst = std::max(fit.residual_exponential, fit.residual_power);
  fit.ambiguous = std::isfinite(worst) && worst < 1.2 * best;

  double rate, amplitude, drop;
  if (exp_wins) {
    fit.cls = DecayClass::Exponential;
    rate = -fe.slope;
    amplitude = std::exp(fe.intercept);
    drop = rate * (fit.t_hi - fit.t_lo);
  } else {
    fit.cls = DecayClass::Power;
    rate = -fp.slope;
    amplitude = std::exp(fp.intercept);
    drop = (logt.empty()) ? 0.0 : rate * (logt.back() - logt.front());
  }
  fit.residual = best;
  fit.rate = rate;
  fit.amplitude = amplitude;

  if (!(best <= 0.5) || !(rate > 0.0) || !(drop > 2.0 * best)) {
    fit.cls = DecayClass::NoDecay;
    fit.rate = 0.0;
    fit.amplitude = 0.0;
  }
  return fit;
}

// ---------------------------------------------------------------------------
// Integral tail-bound checks: from a windowed bound on the square of a
// nonnegative function to a bound on its plain integral, with explicit
// constants.  Comparisons carry a 1e-3 relative slack to absorb quadrature
// error on the sample grid.

struct ExpTailMode {
  double gamma = 1.0;  // decay rate in the squared-integral hypothesis
  double a = 1.0;      // amplitude in the squared-integral hypothesis
};

struct PolTailMode {
  double alpha = 1.0;  // power in the conclusion bound
  double K = 1.0;      // amplitude in the windowed hypothesis
};

struct TailCheckResult {
  bool hypothesis_holds = false;
  bool conclusion_holds = false;
  double worst_hypothesis_ratio = 0.0;  // max integral/bound observed
  double worst_conclusion_ratio = 0.0;
  int windows_checked = 0;
};

namespace detail_analysis {

constexpr double kTailSlack = 1e-3;

inline void validate_tail_samples(const std::vector<double>& times,
                                  const std::vector<double>& p) {
  if (times.size() != p.size()) throw ParameterViolation("times/p size mismatch");
  if (times.size() < 3) throw TooFewSamples("need at least 3 tail samples");
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!std::isfinite(times[i]) || !std::isfinite(p[i]))
      throw NonFiniteValue("tail samples must be finite");
    if (p[i] < 0.0) throw ParameterViolation("tail samples must be nonnegative");
    if (i > 0 && !(times[i] > times[i - 1]))
      throw ParameterViolation("tail sample times must be strictly increasing");
  }
}

// Cumulative trapezoid values C[i] = integral from times[0] to times[i].
inline std::vector<double> cumulative_trapezoid(const std::vector<double>& times,
                                                const std::vector<double>& f) {
  std::vector<double> c(times.size(), 0.0);
  for (std::size_t i = 1; i < times.size(); ++i)
    c[i] = c[i - 1] + 0.5 * (f[i] + f[i - 1]) * (times[i] - times[i - 1]);
  return c;
}

// Interpolated cumulative value at an arbitrary time inside the grid.
inline double cumulative_at(const std::vector<double>& times,
                            const std::vector<double>& f,
                            const std::vector<double>& cum, double tq) {
  const auto it = std::upper_bound(times.begin(), times.end(), tq);
  if (it == times.begin()) return 0.0;
  if (it == times.end()) return cum.back();
  const std::size_t hi = std::size_t(it - times.begin());
  const std::size_t lo = hi - 1;
  const double w = (tq - times[lo]) / (times[hi] - times[lo]);
  const double fq = f[lo] + w * (f[hi] - f[lo]);
  return cum[lo] + 0.5 * (f[lo] + fq) * (tq - times[lo]);
}

inline bool leq_with_slack(double value, double bound) {
  return value <= bound * (1.0 + kTailSlack) + 1e-12;
}

}  // namespace detail_analysis

// Exponential mode: a windowed bound int_t^T p^2 <= a e^{-gamma t} implies
// int_t^T p <= sqrt(a) b e^{-gamma t / 2} with b = e^{gamma/2}/(e^{gamma/2}-1).
inline TailCheckResult zelenyak_tail_check(const std::vector<double>& times,
                                           const std::vector<double>& p,
                                           const ExpTailMode& mode) {
  using namespace detail_analysis;
  validate_tail_samples(times, p);
  if (!(mode.gamma > 0.0)) throw ParameterViolation("gamma must be > 0");
  if (!(mode.a >= 0.0)) throw ParameterViolation("a must be >= 0");

  std::vector<double> p2(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) p2[i] = p[i] * p[i];
  const std::vector<double> cum_p = cumulative_trapezoid(times, p);
  const std::vector<double> cum_p2 = cumulative_trapezoid(times, p2);

  const double b = std::exp(0.5 * mode.gamma) / (std::exp(0.5 * mode.gamma) - 1.0);
  TailCheckResult r;
  r.hypothesis_holds = r.conclusion_holds = true;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double tail_p2 = cum_p2.back() - cum_p2[i];
    const double tail_p = cum_p.back() - cum_p[i];
    const double hyp_bound = mode.a * std::exp(-mode.gamma * times[i]);
    const double con_bound =
        std::sqrt(mode.a) * b * std::exp(-0.5 * mode.gamma * times[i]);
    if (hyp_bound > 0.0)
      r.worst_hypothesis_ratio = std::max(r.worst_hypothesis_ratio, tail_p2 / hyp_bound);
    if (con_bound > 0.0)
      r.worst_conclusion_ratio = std::max(r.worst_conclusion_ratio, tail_p / con_bound);
    if (!leq_with_slack(tail_p2, hyp_bound)) r.hypothesis_holds = false;
    if (!leq_with_slack(tail_p, con_bound)) r.conclusion_holds = false;
    ++r.windows_checked;
  }
  return r;
}

// Polynomial mode: windowed bounds int_t^{2t} p^2 <= K t^{-2 alpha - 1} imply
// int_t^infty p <= (sqrt(K)/(1 - 2^{-alpha})) t^{-alpha}; the conclusion is
// checked against the computable partial integral up to the grid end.
inline TailCheckResult zelenyak_tail_check(const std::vector<double>& times,
                                           const std::vector<double>& p,
                                           const PolTailMode& mode) {
  using namespace detail_analysis;
  validate_tail_samples(times, p);
  if (!(mode.alpha > 0.0)) throw ParameterViolation("alpha must be > 0");
  if (!(mode.K >= 0.0)) throw ParameterViolation("K must be >= 0");

  std::vector<double> p2(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) p2[i] = p[i] * p[i];
  const std::vector<double> cum_p = cumulative_trapezoid(times, p);
  const std::vector<double> cum_p2 = cumulative_trapezoid(times, p2);

  const double con_const = std::sqrt(mode.K) / (1.0 - std::pow(2.0, -mode.alpha));
  const double T = times.back();
  TailCheckResult r;
  r.hypothesis_holds = r.conclusion_holds = true;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double ti = times[i];
    if (!(ti > 0.0)) continue;
    if (2.0 * ti <= T) {
      const double window = cumulative_at(times, p2, cum_p2, 2.0 * ti) - cum_p2[i];
      const double hyp_bound = mode.K * std::pow(ti, -2.0 * mode.alpha - 1.0);
      if (hyp_bound > 0.0)
        r.worst_hypothesis_ratio = std::max(r.worst_hypothesis_ratio, window / hyp_bound);
      if (!leq_with_slack(window, hyp_bound)) r.hypothesis_holds = false;
      ++r.windows_checked;
    }
    const double tail_p = cum_p.back() - cum_p[i];
    const double con_bound = con_const * std::pow(ti, -mode.alpha);
    if (con_bound > 0.0)
      r.worst_conclusion_ratio = std::max(r.worst_conclusion_ratio, tail_p / con_bound);
    if (!leq_with_slack(tail_p, con_bound)) r.conclusion_holds = false;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Combined convergence report.

enum class Verdict { Converged, NonConvergent, Inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Converged: return "converged";
    case Verdict::NonConvergent: return "non_convergent";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct ReportOptions {
  double burn_in_fraction = 0.5;
  double chain_eps = -1.0;                  // auto
  std::pair<int, int> projection = {-1, -1};  // auto (2-D systems only)
  double alpha = -1.0;                      // auto: span / (4 * windows)
  int windows = 5;
  std::optional<Vec> candidate_limit;       // default: tail centroid / final state
  std::optional<RatePrediction> predicted;  // carried through to the report
};

struct ConvergenceReport {
  Verdict verdict = Verdict::Inconclusive;
  Vec limit;  // set when Converged
  double field_norm_at_limit = std::numeric_limits<double>::quiet_NaN();
  OmegaEstimate omega;
  DisplacementVerdict cauchy;
  L2DerivativeResult l2;
  DecayFit fitted;
  std::optional<RatePrediction> predicted;
};

// A trajectory is declared Converged only when the tail collapses to a
// point, the sliding-window displacement criterion passes, and the vector
// field nearly vanishes at the tail centroid.
inline ConvergenceReport analyze_convergence(const FirstOrderSystem& sys,
                                             const Trajectory& traj,
                                             const ReportOptions& opt = {}) {
  ConvergenceReport rep;
  rep.predicted = opt.predicted;
  rep.omega = omega_estimate(traj, opt.burn_in_fraction, opt.chain_eps, opt.projection);

  const double span = traj.times.back() - traj.times.front();
  const double alpha = (opt.alpha > 0.0) ? opt.alpha : span / (4.0 * opt.windows);
  rep.cauchy = cauchy_convergence_test(traj, alpha, opt.windows);
  rep.l2 = l2_derivative_test(traj);

  const Vec candidate = opt.candidate_limit
                            ? *opt.candidate_limit
                            : (rep.omega.kind == OmegaKind::Singleton
                                   ? rep.omega.point
                                   : traj.final_state());
  std::vector<double> dist(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k)
    dist[k] = (traj.states[k] - candidate).norm();
  rep.fitted = fit_decay(traj.times, dist);

  if (rep.omega.kind == OmegaKind::Singleton) {
    rep.field_norm_at_limit = sys.field(rep.omega.point).norm();
    if (rep.cauchy.passed && rep.field_norm_at_limit <= 1e-4) {
      rep.verdict = Verdict::Converged;
      rep.limit = rep.omega.point;
      return rep;
    }
  } else if (rep.omega.kind == OmegaKind::ClosedCurve) {
    rep.verdict = Verdict::NonConvergent;
    return rep;
  }
  rep.verdict = Verdict::Inconclusive;
  return rep;
}

// ---------------------------------------------------------------------------
// JSON serialization with stable field names.

inline nlohmann::json to_json(const RatePrediction& p) {
  nlohmann::json j;
  j["class"] = (p.cls == RateClass::Exponential) ? "exponential" : "power";
  if (p.cls == RateClass::Power) j["exponent"] = p.exponent;
  j["source"] = p.source;
  return j;
}

inline nlohmann::json to_json(const ConvergenceReport& rep) {
  nlohmann::json j;
  j["verdict"] = to_string(rep.verdict);
  if (rep.verdict == Verdict::Converged) {
    j["limit"] = std::vector<double>(rep.limit.data(), rep.limit.data() + rep.limit.size());
    j["field_norm_at_limit"] = rep.field_norm_at_limit;
  } else {
    j["limit"] = nullptr;
  }
  j["fitted"] = {{"class", to_string(rep.fitted.cls)},
                 {"rate", rep.fitted.rate},
                 {"residual", rep.fitted.residual},
                 {"ambiguous", rep.fitted.ambiguous}};
  j["predicted"] = rep.predicted ? to_json(*rep.predicted) : nlohmann::json(nullptr);
  j["criteria"] = {
      {"cauchy",
       {{"passed", rep.cauchy.passed},
        {"first_window_sup", rep.cauchy.first_window_sup},
        {"last_window_sup", rep.cauchy.last_window_sup}}},
      {"l2",
       {{"integral", rep.l2.integral},
        {"tail_vanishes", rep.l2.tail_vanishes}}}};
  j["omega"] = {{"kind", to_string(rep.omega.kind)},
                {"diameter", rep.omega.diameter},
                {"connected", rep.omega.connected},
                {"winding", rep.omega.winding},
                {"mean_radius", rep.omega.mean_radius}};
  return j;
}

}  // namespace convlab
