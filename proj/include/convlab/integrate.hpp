#pragma once

// Adaptive explicit Runge-Kutta 5(4) (Dormand-Prince pair) with PI step
// control, fourth-order dense output, event location by bisection, and
// typed stop outcomes (time horizon, halting event, norm blow-up, step
// underflow). Output is resampled onto a uniform grid; sample derivatives
// are recomputed from the field so `derivatives[k] == F(states[k])` exactly.

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "convlab/core.hpp"

namespace convlab {

// ---------------------------------------------------------------------------
// Events

enum class EventKind { GradNormBelow, VelocityNormBelow, StateEnters, StateNormAbove };
enum class EventAction { Record, Halt };

struct EventSpec {
  EventKind kind = EventKind::StateNormAbove;
  EventAction action = EventAction::Record;
  double threshold = 0.0;  // epsilon / R for the norm events
  Vec center;              // StateEnters only
  double radius = 0.0;     // StateEnters only

  std::string label() const {
    switch (kind) {
      case EventKind::GradNormBelow: return "grad_norm_below";
      case EventKind::VelocityNormBelow: return "velocity_norm_below";
      case EventKind::StateEnters: return "state_enters";
      case EventKind::StateNormAbove: return "state_norm_above";
    }
    return "event";
  }
};

inline EventSpec grad_norm_below(double eps, EventAction action = EventAction::Record) {
  if (!(eps > 0.0)) throw ParameterViolation("event threshold must be > 0");
  return EventSpec{EventKind::GradNormBelow, action, eps, {}, 0.0};
}

inline EventSpec velocity_norm_below(double eps, EventAction action = EventAction::Record) {
  if (!(eps > 0.0)) throw ParameterViolation("event threshold must be > 0");
  return EventSpec{EventKind::VelocityNormBelow, action, eps, {}, 0.0};
}

inline EventSpec state_enters(Vec center, double radius,
                              EventAction action = EventAction::Record) {
  if (!(radius > 0.0)) throw ParameterViolation("event radius must be > 0");
  return EventSpec{EventKind::StateEnters, action, 0.0, std::move(center), radius};
}

inline EventSpec state_norm_above(double R, EventAction action = EventAction::Record) {
  if (!(R > 0.0)) throw ParameterViolation("event threshold must be > 0");
  return EventSpec{EventKind::StateNormAbove, action, R, {}, 0.0};
}

// ---------------------------------------------------------------------------
// Configuration

struct IntegratorConfig {
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  double t_max = 10.0;
  double max_step = std::numeric_limits<double>::infinity();
  double min_step = 1e-14;
  double sample_interval = 0.01;
  double blow_up_norm = 1e8;
  std::vector<EventSpec> events;
};

inline void validate_config(const IntegratorConfig& cfg, int dimension) {
  if (!(cfg.rel_tol > 0.0 && cfg.rel_tol < 1.0))
    throw ParameterViolation("rel_tol must lie in (0,1)");
  if (!(cfg.abs_tol > 0.0 && cfg.abs_tol < 1.0))
    throw ParameterViolation("abs_tol must lie in (0,1)");
  if (!(cfg.t_max > 0.0)) throw ParameterViolation("t_max must be > 0");
  if (!(cfg.min_step > 0.0) || !(cfg.min_step < cfg.max_step))
    throw ParameterViolation("need 0 < min_step < max_step");
  if (!(cfg.sample_interval > 0.0))
    throw ParameterViolation("sample_interval must be > 0");
  if (!(cfg.blow_up_norm > 0.0))
    throw ParameterViolation("blow_up_norm must be > 0");
  for (const auto& ev : cfg.events) {
    if (ev.kind == EventKind::StateEnters) {
      if (!(ev.radius > 0.0)) throw ParameterViolation("event radius must be > 0");
      if (ev.center.size() != dimension)
        throw ParameterViolation("event center dimension mismatch");
    } else if (!(ev.threshold > 0.0)) {
      throw ParameterViolation("event threshold must be > 0");
    }
    if (ev.kind == EventKind::VelocityNormBelow && dimension % 2 != 0)
      throw ParameterViolation(
          "velocity event needs an even-dimensional (position,velocity) state");
  }
}

// ---------------------------------------------------------------------------
// Results

enum class StopReason { ReachedTMax, HaltEvent, BlowUp, StepUnderflow };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::ReachedTMax: return "reached_t_max";
    case StopReason::HaltEvent: return "halt_event";
    case StopReason::BlowUp: return "blow_up";
    case StopReason::StepUnderflow: return "step_underflow";
  }
  return "unknown";
}

struct EventRecord {
  std::size_t event_index = 0;
  std::string label;
  double t = 0.0;
  Vec state;
};

struct Trajectory {
  int dimension = 0;
  std::vector<double> times;   // strictly increasing, starts at 0
  std::vector<Vec> states;
  std::vector<Vec> derivatives;  // field(states[k]), recomputed exactly
  std::vector<std::string> energy_labels;
  std::vector<std::vector<double>> energy_series;  // [functional][sample]
  std::vector<EventRecord> events_fired;
  StopReason reason = StopReason::ReachedTMax;
  double stop_time = 0.0;

  std::size_t size() const { return times.size(); }
  const Vec& final_state() const { return states.back(); }
};

// ---------------------------------------------------------------------------
// Integrator internals

namespace detail {

// Dormand-Prince coefficients.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
// Error weights: (5th order) - (4th order embedded).
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// Dense-output weights.
constexpr double d1 = -12715105075.0 / 11282082432.0;
constexpr double d3 = 87487479700.0 / 32700410799.0;
constexpr double d4 = -10690763975.0 / 1880347072.0;
constexpr double d5 = 701980252875.0 / 199316789632.0;
constexpr double d6 = -1453857185.0 / 822651844.0;
constexpr double d7 = 69997945.0 / 29380423.0;

struct DenseStep {
  double t0 = 0.0, h = 0.0;
  Vec r1, r2, r3, r4, r5;

  Vec at(double t) const {
    const double theta = (t - t0) / h;
    const double omt = 1.0 - theta;
    return r1 + theta * (r2 + omt * (r3 + theta * (r4 + omt * r5)));
  }
};

// Signed margin: the event fires when the margin becomes negative.
inline double event_margin(const EventSpec& ev, const FirstOrderSystem& sys,
                           const Vec& u, Vec& scratch) {
  switch (ev.kind) {
    case EventKind::GradNormBelow:
      sys.field_into(u, scratch);
      return scratch.norm() - ev.threshold;
    case EventKind::VelocityNormBelow:
      return u.tail(u.size() / 2).norm() - ev.threshold;
    case EventKind::StateEnters:
      return (u - ev.center).norm() - ev.radius;
    case EventKind::StateNormAbove:
      return ev.threshold - u.norm();
  }
  return 1.0;
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline Trajectory integrate(const FirstOrderSystem& sys, const Vec& u0,
                            const IntegratorConfig& cfg) {
  using namespace detail;
  const int n = sys.dimension;
  if (u0.size() != n) throw ParameterViolation("initial state dimension mismatch");
  require_finite(u0, "initial state");
  validate_config(cfg, n);
  for (const auto& e : sys.energies)
    if (e.arity == EnergyArity::StateAndVelocity && n % 2 != 0)
      throw ParameterViolation("state-and-velocity energy needs even dimension");

  const double hmax = std::min(cfg.max_step, sys.step_ceiling);
  const double t_end = cfg.t_max;

  Trajectory traj;
  traj.dimension = n;
  for (const auto& e : sys.energies) traj.energy_labels.push_back(e.label);
  traj.energy_series.resize(sys.energies.size());

  auto emit = [&](double t, const Vec& u) {
    traj.times.push_back(t);
    traj.states.push_back(u);
    traj.derivatives.push_back(sys.field(u));
    for (std::size_t j = 0; j < sys.energies.size(); ++j)
      traj.energy_series[j].push_back(sys.energies[j](u));
  };

  // Stage storage (allocation-free inner loop).
  Vec u = u0;
  Vec k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), utmp(n), unew(n), errv(n);
  Vec scratch(n);

  sys.field_into(u, k1);
  if (!k1.allFinite()) throw NonFiniteValue("field at initial state");

  double t = 0.0;
  emit(0.0, u);

  // Event arming: fire immediately if already inside the target region.
  std::vector<double> margins(cfg.events.size());
  std::vector<bool> armed(cfg.events.size(), true);
  double halt_at = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cfg.events.size(); ++i) {
    margins[i] = event_margin(cfg.events[i], sys, u, scratch);
    if (margins[i] < 0.0) {
      traj.events_fired.push_back({i, cfg.events[i].label(), 0.0, u});
      armed[i] = false;
      if (cfg.events[i].action == EventAction::Halt) halt_at = 0.0;
    }
  }
  if (halt_at == 0.0) {
    traj.reason = StopReason::HaltEvent;
    traj.stop_time = 0.0;
    return traj;
  }

  double next_sample = cfg.sample_interval;
  std::size_t sample_idx = 1;

  // Initial step size guess; the controller adapts quickly either way.
  double h = 1e-2 * (1.0 + u.norm()) / (1.0 + k1.norm());
  h = std::min({h, hmax, t_end});
  h = std::max(h, std::min(cfg.min_step, t_end));

  const double safe = 0.9, beta = 0.04, expo1 = 0.2 - beta * 0.75;
  const double facc1 = 5.0, facc2 = 0.1;  // bounds on the step-change factor
  double facold = 1e-4;

  auto finalize = [&](StopReason reason, double t_stop, const Vec& u_stop) {
    while (!traj.times.empty() && traj.times.back() > t_stop + 1e-15) {
      traj.times.pop_back();
      traj.states.pop_back();
      traj.derivatives.pop_back();
      for (auto& s : traj.energy_series) s.pop_back();
    }
    if (traj.times.empty() || t_stop > traj.times.back() + 1e-12 * (1.0 + t_stop))
      emit(t_stop, u_stop);
    traj.reason = reason;
    traj.stop_time = t_stop;
  };

  while (t < t_end) {
    bool final_step = false;
    h = std::min(h, hmax);
    if (t + h >= t_end) {
      h = t_end - t;
      final_step = true;
    }
    if (!final_step && h < cfg.min_step) {
      finalize(StopReason::StepUnderflow, t, u);
      return traj;
    }

    // Stages (FSAL: k1 already holds F(u)).
    utmp = u + h * (a21 * k1);
    sys.field_into(utmp, k2);
    utmp = u + h * (a31 * k1 + a32 * k2);
    sys.field_into(utmp, k3);
    utmp = u + h * (a41 * k1 + a42 * k2 + a43 * k3);
    sys.field_into(utmp, k4);
    utmp = u + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    sys.field_into(utmp, k5);
    utmp = u + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    sys.field_into(utmp, k6);
    unew = u + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    sys.field_into(unew, k7);
    errv = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    if (!unew.allFinite() || !errv.allFinite()) {
      h *= 0.5;
      if (h < cfg.min_step) {
        finalize(StopReason::StepUnderflow, t, u);
        return traj;
      }
      continue;
    }

    const double scale = cfg.abs_tol + cfg.rel_tol * std::max(u.norm(), unew.norm());
    const double err_ratio = errv.norm() / scale;

    if (err_ratio > 1.0) {  // reject
      const double fac11 = std::pow(err_ratio, expo1);
      h /= std::min(facc1, fac11 / safe);
      if (h < cfg.min_step) {
        finalize(StopReason::StepUnderflow, t, u);
        return traj;
      }
      continue;
    }

    // Accepted: build the continuous extension over [t, t+h].
    DenseStep dense;
    dense.t0 = t;
    dense.h = h;
    dense.r1 = u;
    dense.r2 = unew - u;
    dense.r3 = h * k1 - dense.r2;
    dense.r4 = dense.r2 - h * k7 - dense.r3;
    dense.r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
    const double t_new = t + h;

    // Locate the earliest stopping condition inside the step, if any.
    double t_stop = std::numeric_limits<double>::infinity();
    StopReason stop_reason = StopReason::ReachedTMax;

    if (unew.norm() > cfg.blow_up_norm) {
      double lo = t, hi = t_new;
      while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        (dense.at(mid).norm() > cfg.blow_up_norm ? hi : lo) = mid;
      }
      t_stop = hi;
      stop_reason = StopReason::BlowUp;
    }

    std::vector<EventRecord> fired_now;
    for (std::size_t i = 0; i < cfg.events.size(); ++i) {
      const double m_new = event_margin(cfg.events[i], sys, unew, scratch);
      if (armed[i] && margins[i] >= 0.0 && m_new < 0.0) {
        double lo = t, hi = t_new;
        while (hi - lo > 1e-10) {
          const double mid = 0.5 * (lo + hi);
          Vec um = dense.at(mid);
          (event_margin(cfg.events[i], sys, um, scratch) < 0.0 ? hi : lo) = mid;
        }
        const double te = hi;
        fired_now.push_back({i, cfg.events[i].label(), te, dense.at(te)});
        armed[i] = false;
        if (cfg.events[i].action == EventAction::Halt && te < t_stop) {
          t_stop = te;
          stop_reason = StopReason::HaltEvent;
        }
      }
      if (m_new >= 0.0) armed[i] = true;
      margins[i] = m_new;
    }
    std::sort(fired_now.begin(), fired_now.end(),
              [](const EventRecord& a, const EventRecord& b) { return a.t < b.t; });
    for (auto& r : fired_now)
      if (r.t <= t_stop) traj.events_fired.push_back(std::move(r));

    const double emit_until = std::min(t_stop, static_cast<double>(t_new));
    while (next_sample <= emit_until + 1e-14 * std::max(1.0, emit_until) &&
           next_sample <= t_end) {
      emit(next_sample, dense.at(next_sample));
      ++sample_idx;
      next_sample = static_cast<double>(sample_idx) * cfg.sample_interval;
    }

    if (t_stop <= t_new) {
      finalize(stop_reason, t_stop, dense.at(t_stop));
      return traj;
    }

    t = t_new;
    u.swap(unew);
    k1.swap(k7);  // FSAL

    const double fac11 = std::pow(std::max(err_ratio, 1e-10), expo1);
    double fac = fac11 / std::pow(facold, beta);
    fac = std::max(facc2, std::min(facc1, fac / safe));
    h = h / fac;
    facold = std::max(err_ratio, 1e-4);
  }

  finalize(StopReason::ReachedTMax, t_end, u);
  return traj;
}

// ---------------------------------------------------------------------------
// Energy audit: largest consecutive increase of a sampled energy series,
// compared against the integrator tolerance budget.

struct EnergyAudit {
  std::string label;
  double max_uptick = 0.0;
  double tolerance = 0.0;
  bool is_nonincreasing = false;
  std::size_t samples = 0;
};

inline EnergyAudit energy_audit(const Trajectory& traj, std::size_t energy_index,
                                double abs_tol, double rel_tol,
                                double from_time = 0.0) {
  if (energy_index >= traj.energy_series.size())
    throw ParameterViolation("energy index out of range");
  const auto& series = traj.energy_series[energy_index];
  double max_uptick = -std::numeric_limits<double>::infinity();
  double scale = 0.0;
  std::size_t count = 0;
  double prev = 0.0;
  bool have_prev = false;
  for (std::size_t k = 0; k < series.size(); ++k) {
    if (traj.times[k] < from_time) continue;
    ++count;
    scale = std::max(scale, std::abs(series[k]));
    if (have_prev) max_uptick = std::max(max_uptick, series[k] - prev);
    prev = series[k];
    have_prev = true;
  }
  if (count < 2) throw TooFewSamples("energy audit needs >= 2 samples in window");
  EnergyAudit audit;
  audit.label = traj.energy_labels[energy_index];
  audit.max_uptick = max_uptick;
  audit.tolerance = 10.0 * (abs_tol + rel_tol * scale);
  audit.is_nonincreasing = max_uptick <= audit.tolerance;
  audit.samples = count;
  return audit;
}

inline EnergyAudit energy_audit(const Trajectory& traj, std::size_t energy_index,
                                const IntegratorConfig& cfg, double from_time = 0.0) {
  return energy_audit(traj, energy_index, cfg.abs_tol, cfg.rel_tol, from_time);
}

// ---------------------------------------------------------------------------
// CSV round-trip: header `t,x1..xn,dx1..dxn[,<energy label>...]`,
// 17 significant digits.

inline void write_trajectory_csv(const Trajectory& traj, std::ostream& os) {
  os << 't';
  for (int i = 1; i <= traj.dimension; ++i) os << ",x" << i;
  for (int i = 1; i <= traj.dimension; ++i) os << ",dx" << i;
  for (const auto& label : traj.energy_labels) os << ',' << label;
  os << '\n';
  char buf[40];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
  };
  for (std::size_t k = 0; k < traj.size(); ++k) {
    put(traj.times[k]);
    for (int i = 0; i < traj.dimension; ++i) { os << ','; put(traj.states[k][i]); }
    for (int i = 0; i < traj.dimension; ++i) { os << ','; put(traj.derivatives[k][i]); }
    for (const auto& s : traj.energy_series) { os << ','; put(s[k]); }
    os << '\n';
  }
}

inline void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ParseError("cannot open for writing: " + path);
  write_trajectory_csv(traj, f);
}

inline Trajectory read_trajectory_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError("empty trajectory file");
  std::vector<std::string> cols;
  {
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
  }
  if (cols.empty() || cols[0] != "t")
    throw ParseError("trajectory header must start with 't'");
  int n = 0;
  while (1 + n < static_cast<int>(cols.size()) &&
         cols[1 + n] == "x" + std::to_string(n + 1))
    ++n;
  if (n == 0) throw ParseError("trajectory header has no state columns");
  for (int i = 0; i < n; ++i) {
    const std::size_t idx = 1 + n + i;
    if (idx >= cols.size() || cols[idx] != "dx" + std::to_string(i + 1))
      throw ParseError("trajectory header missing derivative column dx" +
                       std::to_string(i + 1));
  }
  Trajectory traj;
  traj.dimension = n;
  for (std::size_t j = 1 + 2 * n; j < cols.size(); ++j) {
    traj.energy_labels.push_back(cols[j]);
    traj.energy_series.emplace_back();
  }
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(lineno) + ": bad number '" +
                         cell + "'");
      }
    }
    if (row.size() != cols.size())
      throw ParseError("line " + std::to_string(lineno) + ": expected " +
                       std::to_string(cols.size()) + " columns");
    traj.times.push_back(row[0]);
    traj.states.push_back(Eigen::Map<Vec>(row.data() + 1, n));
    traj.derivatives.push_back(Eigen::Map<Vec>(row.data() + 1 + n, n));
    for (std::size_t j = 0; j < traj.energy_labels.size(); ++j)
      traj.energy_series[j].push_back(row[1 + 2 * n + j]);
  }
  if (traj.times.empty()) throw ParseError("trajectory file has no samples");
  for (std::size_t k = 1; k < traj.times.size(); ++k)
    if (!(traj.times[k] > traj.times[k - 1]))
      throw ParseError("trajectory times must be strictly increasing");
  traj.reason = StopReason::ReachedTMax;
  traj.stop_time = traj.times.back();
  return traj;
}

inline Trajectory read_trajectory_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open: " + path);
  return read_trajectory_csv(f);
}

}  // namespace convlab
