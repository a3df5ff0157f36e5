#pragma once

// Scenario-driven runner: declarative JSON scenarios resolve to systems,
// get integrated, analyzed, and written out as stable JSON reports plus
// plot-ready trajectory CSV files.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "convlab/analysis.hpp"
#include "convlab/core.hpp"
#include "convlab/flows.hpp"
#include "convlab/integrate.hpp"
#include "convlab/lojasiewicz.hpp"
#include "convlab/pde.hpp"
#include "convlab/stability.hpp"

namespace convlab {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kArtifactVersion = "1.0.0";

// ---------------------------------------------------------------------------
// Parsed scenario.

struct LojaRequest {
  std::optional<Vec> point;               // default: the converged limit
  std::vector<double> radii{1e-5, 1e-6, 1e-7};
  int samples_per_shell = 64;
};

struct StabilityRequest {
  double box_lo = -2.0, box_hi = 2.0;
  int per_dim = 3;
};

struct Scenario {
  std::string name;
  nlohmann::json system;                  // unresolved system block
  std::optional<std::vector<double>> initial;
  nlohmann::json profile;                 // optional spatial profile block
  std::optional<std::uint64_t> seed;
  std::set<std::string> analyses;
  nlohmann::json integrator;              // raw overrides
  LojaRequest loja;
  StabilityRequest stability;
  std::optional<Vec> fit_limit;           // caller-supplied limit for fitting
  nlohmann::json echo;                    // the full original document
};

namespace detail_scenario {

inline const std::set<std::string>& known_analyses() {
  static const std::set<std::string> k{"omega", "cauchy", "l2",
                                       "fit",   "loja",   "stability"};
  return k;
}

[[noreturn]] inline void fail(const std::string& where, const std::string& what) {
  throw ParseError(where + ": " + what);
}

inline const nlohmann::json& need(const nlohmann::json& j, const char* key,
                                  const std::string& where) {
  if (!j.is_object() || !j.contains(key)) fail(where, std::string("missing field '") + key + "'");
  return j.at(key);
}

inline double need_number(const nlohmann::json& j, const char* key,
                          const std::string& where) {
  const auto& v = need(j, key, where);
  if (!v.is_number()) fail(where, std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

inline std::string need_string(const nlohmann::json& j, const char* key,
                               const std::string& where) {
  const auto& v = need(j, key, where);
  if (!v.is_string()) fail(where, std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

inline std::vector<double> number_array(const nlohmann::json& v,
                                        const std::string& where) {
  if (!v.is_array() || v.empty()) fail(where, "expected a non-empty number array");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) fail(where, "array entries must be numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

inline Vec to_vec(const std::vector<double>& v) {
  Vec out(Eigen::Index(v.size()));
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = v[std::size_t(i)];
  return out;
}

inline void reject_unknown_keys(const nlohmann::json& j,
                                const std::set<std::string>& allowed,
                                const std::string& where) {
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) fail(where, "unknown field '" + key + "'");
}

}  // namespace detail_scenario

// ---------------------------------------------------------------------------
// Schema parsing.

inline Scenario parse_scenario(const nlohmann::json& doc) {
  using namespace detail_scenario;
  const std::string where = "scenario";
  if (!doc.is_object()) fail(where, "document root must be an object");
  reject_unknown_keys(doc,
                      {"schema_version", "name", "system", "initial", "profile",
                       "seed", "analyses", "integrator", "loja", "stability",
                       "fit"},
                      where);

  Scenario sc;
  sc.echo = doc;

  const auto& ver = need(doc, "schema_version", where);
  if (!ver.is_number_integer() || ver.get<int>() != kSchemaVersion)
    fail(where, "unsupported schema_version (expected " +
                    std::to_string(kSchemaVersion) + ")");

  sc.name = need_string(doc, "name", where);
  sc.system = need(doc, "system", where);
  if (!sc.system.is_object() || !sc.system.contains("kind"))
    fail("scenario.system", "missing field 'kind'");

  if (doc.contains("initial"))
    sc.initial = number_array(doc.at("initial"), "scenario.initial");
  if (doc.contains("profile")) sc.profile = doc.at("profile");

  if (doc.contains("seed")) {
    const auto& s = doc.at("seed");
    if (!s.is_number_integer() || (s.is_number_integer() && !s.is_number_unsigned() &&
                                   s.get<std::int64_t>() < 0))
      fail(where, "seed must be a nonnegative integer");
    sc.seed = s.get<std::uint64_t>();
  }

  if (doc.contains("analyses")) {
    const auto& arr = doc.at("analyses");
    if (!arr.is_array()) fail(where, "analyses must be an array of names");
    for (const auto& a : arr) {
      if (!a.is_string() || !known_analyses().count(a.get<std::string>()))
        fail("scenario.analyses", "unknown analysis '" + a.dump() + "'");
      sc.analyses.insert(a.get<std::string>());
    }
  } else {
    sc.analyses = {"omega", "cauchy", "l2", "fit"};
  }
  if (sc.analyses.count("loja") && !sc.seed)
    fail(where, "a seed is required whenever the loja analysis is requested");

  if (doc.contains("integrator")) {
    sc.integrator = doc.at("integrator");
    if (!sc.integrator.is_object()) fail(where, "integrator must be an object");
    reject_unknown_keys(sc.integrator,
                        {"t_max", "sample_interval", "rel_tol", "abs_tol",
                         "max_step", "blow_up_norm"},
                        "scenario.integrator");
  }

  if (doc.contains("loja")) {
    const auto& lj = doc.at("loja");
    if (!lj.is_object()) fail(where, "loja must be an object");
    reject_unknown_keys(lj, {"point", "radii", "samples_per_shell"}, "scenario.loja");
    if (lj.contains("point"))
      sc.loja.point = to_vec(number_array(lj.at("point"), "scenario.loja.point"));
    if (lj.contains("radii"))
      sc.loja.radii = number_array(lj.at("radii"), "scenario.loja.radii");
    if (lj.contains("samples_per_shell")) {
      if (!lj.at("samples_per_shell").is_number_integer())
        fail("scenario.loja", "samples_per_shell must be an integer");
      sc.loja.samples_per_shell = lj.at("samples_per_shell").get<int>();
    }
  }

  if (doc.contains("stability")) {
    const auto& st = doc.at("stability");
    if (!st.is_object()) fail(where, "stability must be an object");
    reject_unknown_keys(st, {"box", "per_dim"}, "scenario.stability");
    if (st.contains("box")) {
      const auto box = number_array(st.at("box"), "scenario.stability.box");
      if (box.size() != 2 || !(box[0] < box[1]))
        fail("scenario.stability", "box must be [lo, hi] with lo < hi");
      sc.stability.box_lo = box[0];
      sc.stability.box_hi = box[1];
    }
    if (st.contains("per_dim")) {
      if (!st.at("per_dim").is_number_integer())
        fail("scenario.stability", "per_dim must be an integer");
      sc.stability.per_dim = st.at("per_dim").get<int>();
    }
  }

  if (doc.contains("fit")) {
    const auto& ft = doc.at("fit");
    if (!ft.is_object()) fail(where, "fit must be an object");
    reject_unknown_keys(ft, {"limit"}, "scenario.fit");
    if (ft.contains("limit"))
      sc.fit_limit = to_vec(number_array(ft.at("limit"), "scenario.fit.limit"));
  }

  return sc;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file: " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    // e.what() carries the byte position of the syntax error
    throw ParseError(path + ": " + e.what());
  }
  return parse_scenario(doc);
}

// ---------------------------------------------------------------------------
// System resolution.

namespace detail_scenario {

// Multivariate polynomial from a coefficient/exponent table.
inline Potential polynomial_potential(int dim, const nlohmann::json& terms,
                                      const std::string& where) {
  if (!terms.is_array() || terms.empty())
    fail(where, "terms must be a non-empty array");
  struct Term {
    double coeff;
    std::vector<int> powers;
  };
  std::vector<Term> table;
  for (const auto& t : terms) {
    if (!t.is_object()) fail(where, "each term must be an object");
    reject_unknown_keys(t, {"coeff", "powers"}, where);
    Term term;
    term.coeff = need_number(t, "coeff", where);
    const auto& pw = need(t, "powers", where);
    if (!pw.is_array() || int(pw.size()) != dim)
      fail(where, "powers must list one exponent per dimension");
    for (const auto& p : pw) {
      if (!p.is_number_integer() || p.get<int>() < 0)
        fail(where, "exponents must be nonnegative integers");
      term.powers.push_back(p.get<int>());
    }
    table.push_back(std::move(term));
  }

  auto ipow = [](double x, int n) {
    double r = 1.0;
    for (int i = 0; i < n; ++i) r *= x;
    return r;
  };
  auto value = [table, ipow](const Vec& u) {
    double s = 0.0;
    for (const auto& t : table) {
      double term = t.coeff;
      for (int i = 0; i < int(t.powers.size()); ++i) term *= ipow(u[i], t.powers[i]);
      s += term;
    }
    return s;
  };
  auto gradient = [table, ipow, dim](const Vec& u) {
    Vec g = Vec::Zero(dim);
    for (const auto& t : table)
      for (int j = 0; j < dim; ++j) {
        if (t.powers[j] == 0) continue;
        double term = t.coeff * t.powers[j] * ipow(u[j], t.powers[j] - 1);
        for (int i = 0; i < dim; ++i)
          if (i != j) term *= ipow(u[i], t.powers[i]);
        g[j] += term;
      }
    return g;
  };
  return make_potential(dim, value, gradient);
}

inline Nonlinearity named_nonlinearity(const std::string& name,
                                       const std::string& where) {
  if (name == "zero") return zero_nonlinearity();
  if (name == "cubic_minus_linear")
    return make_nonlinearity(
        [](double s) { return s * s * s - s; },
        [](double s) { return 0.25 * s * s * s * s - 0.5 * s * s; }, 1.0);
  if (name == "sine")
    return make_nonlinearity([](double s) { return std::sin(s); },
                             [](double s) { return 1.0 - std::cos(s); });
  fail(where, "unknown nonlinearity '" + name + "'");
}

inline DampingLaw damping_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object()) fail(where, "damping must be an object");
  const std::string type = need_string(j, "type", where);
  if (type == "linear") {
    reject_unknown_keys(j, {"type"}, where);
    return linear_damping();
  }
  if (type == "zero") {
    reject_unknown_keys(j, {"type"}, where);
    return zero_damping();
  }
  if (type == "power") {
    reject_unknown_keys(j, {"type", "alpha", "c"}, where);
    return power_damping(need_number(j, "alpha", where), need_number(j, "c", where));
  }
  fail(where, "unknown damping type '" + type + "'");
}

}  // namespace detail_scenario

struct ResolvedSystem {
  FirstOrderSystem system;
  std::optional<Potential> potential;  // available for loja
  IntegratorConfig defaults;           // pre-override integrator settings
  Vec default_initial;                 // may be empty when none applies
  // Radial spiral runs are integrated in the 1-D radius and analyzed on the
  // reconstructed planar curve.
  std::optional<SpiralReduction> spiral;
  std::optional<Grid1D> grid;          // set for PDE systems
};

inline ResolvedSystem resolve_system(const Scenario& sc) {
  using namespace detail_scenario;
  const std::string where = "scenario.system";
  const nlohmann::json& j = sc.system;
  const std::string kind = need_string(j, "kind", where);

  try {
    ResolvedSystem rs;
    if (kind == "gallery") {
      reject_unknown_keys(j, {"kind", "gallery", "params"}, where);
      const std::string name = need_string(j, "gallery", where);
      std::map<std::string, double> params;
      if (j.contains("params")) {
        if (!j.at("params").is_object()) fail(where, "params must be an object");
        for (const auto& [key, value] : j.at("params").items()) {
          if (!value.is_number()) fail(where, "params values must be numbers");
          params[key] = value.get<double>();
        }
      }
      GalleryEntry entry = gallery(name, params);
      rs.system = std::move(entry.system);
      rs.potential = std::move(entry.potential);
      rs.default_initial = entry.default_initial;
      rs.defaults.t_max = entry.suggested_t_max;
      rs.defaults.sample_interval = entry.suggested_sample_interval;
      return rs;
    }
    if (kind == "gradient" || kind == "second_order") {
      reject_unknown_keys(j, {"kind", "dimension", "terms", "damping"}, where);
      const auto& dimj = need(j, "dimension", where);
      if (!dimj.is_number_integer() || dimj.get<int>() < 1)
        fail(where, "dimension must be a positive integer");
      const int dim = dimj.get<int>();
      Potential phi = polynomial_potential(dim, need(j, "terms", where),
                                           "scenario.system.terms");
      if (kind == "gradient") {
        rs.system = gradient_flow(phi);
      } else {
        const DampingLaw damping =
            j.contains("damping")
                ? damping_from_json(j.at("damping"), "scenario.system.damping")
                : linear_damping();
        rs.system = second_order_flow(phi, damping);
      }
      rs.potential = std::move(phi);
      return rs;
    }
    if (kind == "heat" || kind == "wave") {
      reject_unknown_keys(j, {"kind", "length", "interior", "nonlinearity", "gamma"},
                          where);
      const Grid1D grid = make_grid(need_number(j, "length", where),
                                    int(need_number(j, "interior", where)));
      const Nonlinearity nl =
          named_nonlinearity(need_string(j, "nonlinearity", where), where);
      if (kind == "heat") {
        rs.system = discretize_heat(nl, grid);
      } else {
        rs.system = discretize_wave(nl, need_number(j, "gamma", where), grid);
      }
      rs.grid = grid;
      rs.defaults.t_max = 10.0;
      rs.defaults.sample_interval = 0.01;
      return rs;
    }
    if (kind == "spiral_radial") {
      reject_unknown_keys(j, {"kind", "k", "r0", "rescaled"}, where);
      const int k = int(need_number(j, "k", where));
      const double r0 = need_number(j, "r0", where);
      const bool rescaled = j.contains("rescaled") ? j.at("rescaled").get<bool>() : true;
      rs.spiral = palis_demelo_radial(k, r0, rescaled);
      rs.system = rs.spiral->system;
      rs.default_initial = Vec::Constant(1, r0);
      rs.defaults.t_max = rescaled ? 300.0 : 1e4;
      rs.defaults.sample_interval = rescaled ? 0.02 : 1.0;
      return rs;
    }
    fail(where, "unknown system kind '" + kind + "'");
  } catch (const ParseError&) {
    throw;
  } catch (const LabError& e) {
    throw BuildError(e.what());
  }
}

// ---------------------------------------------------------------------------
// Run pipeline.

struct RunOverrides {
  std::string out_prefix;                 // empty: write nothing
  std::optional<std::uint64_t> seed;
  std::optional<double> t_max;
  std::optional<double> tol;              // overrides rel_tol (abs = rel*1e-3)
};

struct RunReport {
  nlohmann::json document;
  bool converged = false;
};

namespace detail_scenario {

inline nlohmann::json omega_to_json(const OmegaEstimate& om) {
  nlohmann::json j;
  j["kind"] = to_string(om.kind);
  j["diameter"] = om.diameter;
  j["connected"] = om.connected;
  j["winding"] = om.winding;
  j["mean_radius"] = om.mean_radius;
  j["point"] = std::vector<double>(om.point.data(), om.point.data() + om.point.size());
  return j;
}

inline nlohmann::json fit_to_json(const DecayFit& fit) {
  return {{"class", to_string(fit.cls)},  {"rate", fit.rate},
          {"amplitude", fit.amplitude},   {"residual", fit.residual},
          {"ambiguous", fit.ambiguous},   {"window", {fit.t_lo, fit.t_hi}}};
}

inline nlohmann::json loja_to_json(const LojasiewiczEstimate& est) {
  nlohmann::json shells = nlohmann::json::array();
  for (const auto& s : est.shells)
    shells.push_back({{"radius", s.radius},
                      {"accepted", s.accepted},
                      {"rejected", s.rejected},
                      {"witness_p95", s.witness_p95}});
  return {{"theta_hat", est.theta_hat},
          {"c_hat", est.c_hat},
          {"sigma", est.sigma},
          {"samples_total", est.samples_total},
          {"samples_rejected", est.samples_rejected},
          {"seed", est.seed},
          {"shells", shells}};
}

inline std::vector<double> vec_to_std(const Vec& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

// Chain rule through the curve map r -> (r cos theta(r), r sin theta(r)),
// theta = (1-r^2)^{-k}: exact planar velocity of the reconstructed spiral.
inline Vec spiral_planar_velocity(int k, double r, double rdot) {
  if (!(r > 0.0)) r = 1e-12;
  if (!(r < 1.0)) r = 1.0 - 1e-12;
  const double q = 1.0 - r * r;
  const double theta = std::pow(q, -double(k));
  const double dtheta_dr = 2.0 * double(k) * r * std::pow(q, -double(k) - 1.0);
  Vec v(2);
  v[0] = (std::cos(theta) - r * std::sin(theta) * dtheta_dr) * rdot;
  v[1] = (std::sin(theta) + r * std::cos(theta) * dtheta_dr) * rdot;
  return v;
}

// Planar extension of the radial field: exact on the spiral's orbit, extended
// off it by radius.  Lets the full convergence report run on reconstructions.
inline FirstOrderSystem spiral_planar_field(const SpiralReduction& red) {
  const FirstOrderSystem radial = red.system;
  const int k = red.k;
  return make_system(
      2,
      [radial, k](const Vec& u, Vec& out) {
        const double r = u.norm();
        Vec ru = Vec::Constant(1, std::min(std::max(r, 1e-12), 1.0 - 1e-12));
        Vec rdot(1);
        radial.field_into(ru, rdot);
        out = spiral_planar_velocity(k, ru[0], rdot[0]);
      },
      {}, "spiral_planar");
}

}  // namespace detail_scenario

inline RunReport run_scenario(const Scenario& sc, const RunOverrides& ov = {}) {
  using namespace detail_scenario;
  const auto t_start = std::chrono::steady_clock::now();

  ResolvedSystem rs = resolve_system(sc);

  // Initial state: explicit vector, named profile, or the system default.
  Vec u0;
  if (sc.initial) {
    u0 = to_vec(*sc.initial);
  } else if (!sc.profile.is_null()) {
    if (!rs.grid) throw BuildError("profile initial data requires a PDE system");
    const std::string ptype = need_string(sc.profile, "type", "scenario.profile");
    if (ptype != "sine_mode")
      fail("scenario.profile", "unknown profile type '" + ptype + "'");
    reject_unknown_keys(sc.profile, {"type", "mode", "amplitude"}, "scenario.profile");
    const double mode = need_number(sc.profile, "mode", "scenario.profile");
    const double amp = need_number(sc.profile, "amplitude", "scenario.profile");
    const Grid1D& g = *rs.grid;
    const Vec shape = grid_sample(g, [&](double x) {
      return amp * std::sin(mode * M_PI * x / g.length);
    });
    if (rs.system.dimension == g.interior) {
      u0 = shape;
    } else {
      u0 = Vec::Zero(2 * g.interior);
      u0.head(g.interior) = shape;
    }
  } else if (rs.default_initial.size() == rs.system.dimension) {
    u0 = rs.default_initial;
  } else {
    throw BuildError("scenario provides no initial state and the system has no default");
  }
  if (u0.size() != rs.system.dimension)
    throw BuildError("initial state dimension mismatch: got " +
                     std::to_string(u0.size()) + ", system needs " +
                     std::to_string(rs.system.dimension));

  // Integrator configuration: resolved defaults, then file, then flags.
  IntegratorConfig cfg = rs.defaults;
  if (sc.integrator.is_object()) {
    const auto& ij = sc.integrator;
    if (ij.contains("t_max")) cfg.t_max = ij.at("t_max").get<double>();
    if (ij.contains("sample_interval"))
      cfg.sample_interval = ij.at("sample_interval").get<double>();
    if (ij.contains("rel_tol")) cfg.rel_tol = ij.at("rel_tol").get<double>();
    if (ij.contains("abs_tol")) cfg.abs_tol = ij.at("abs_tol").get<double>();
    if (ij.contains("max_step")) cfg.max_step = ij.at("max_step").get<double>();
    if (ij.contains("blow_up_norm"))
      cfg.blow_up_norm = ij.at("blow_up_norm").get<double>();
  }
  if (ov.t_max) cfg.t_max = *ov.t_max;
  if (ov.tol) {
    cfg.rel_tol = *ov.tol;
    cfg.abs_tol = *ov.tol * 1e-3;
  }
  const std::uint64_t seed = ov.seed ? *ov.seed : sc.seed.value_or(0);

  const Trajectory raw = integrate(rs.system, u0, cfg);

  // Radial spiral runs are analyzed on the reconstructed planar curve.
  Trajectory analyzed;
  const Trajectory* traj = &raw;
  if (rs.spiral) {
    analyzed.dimension = 2;
    for (std::size_t k = 0; k < raw.size(); ++k) {
      analyzed.times.push_back(raw.times[k]);
      analyzed.states.push_back(rs.spiral->reconstruct(raw.states[k][0]).position);
      analyzed.derivatives.push_back(spiral_planar_velocity(
          rs.spiral->k, raw.states[k][0], raw.derivatives[k][0]));
    }
    traj = &analyzed;
  }

  nlohmann::json doc;
  doc["artifact"] = {{"name", "convlab"},
                     {"version", kArtifactVersion},
                     {"schema_version", kSchemaVersion}};
  doc["scenario"] = sc.echo;
  doc["system"] = {{"dimension", rs.system.dimension},
                   {"origin", rs.system.origin},
                   {"warnings", rs.system.warnings}};
  doc["trajectory"] = {{"samples", traj->size()},
                       {"t_final", raw.times.back()},
                       {"stop_reason", to_string(raw.reason)},
                       {"final_state", vec_to_std(traj->final_state())}};
  doc["analyses"] = nlohmann::json::object();
  doc["errors"] = nlohmann::json::object();

  auto record_error = [&doc](const std::string& which, const std::exception& e) {
    doc["errors"][which] = e.what();
    doc["analyses"][which] = nullptr;
  };

  // The combined convergence report (verdict) is always attempted; spiral
  // reconstructions use the planar extension of the radial field.
  std::optional<ConvergenceReport> convergence;
  try {
    ReportOptions opt;
    if (sc.fit_limit) opt.candidate_limit = *sc.fit_limit;
    convergence = analyze_convergence(
        rs.spiral ? spiral_planar_field(*rs.spiral) : rs.system, *traj, opt);
    doc["convergence"] = to_json(*convergence);
  } catch (const std::exception& e) {
    doc["convergence"] = nullptr;
    doc["errors"]["convergence"] = e.what();
  }

  std::optional<DecayFit> fitted;
  std::optional<LojasiewiczEstimate> loja_est;

  for (const std::string& which : sc.analyses) {
    try {
      if (which == "omega") {
        doc["analyses"]["omega"] = omega_to_json(omega_estimate(*traj));
      } else if (which == "cauchy") {
        const double span = traj->times.back() - traj->times.front();
        const DisplacementVerdict v = cauchy_convergence_test(*traj, span / 20.0);
        doc["analyses"]["cauchy"] = {{"passed", v.passed},
                                     {"alpha", v.alpha},
                                     {"first_window_sup", v.first_window_sup},
                                     {"last_window_sup", v.last_window_sup}};
      } else if (which == "l2") {
        const L2DerivativeResult r = l2_derivative_test(*traj);
        doc["analyses"]["l2"] = {{"integral", r.integral},
                                 {"tail_contribution", r.tail_contribution},
                                 {"tail_vanishes", r.tail_vanishes}};
      } else if (which == "fit") {
        Vec candidate;
        if (sc.fit_limit) {
          candidate = *sc.fit_limit;
        } else if (convergence && convergence->omega.kind == OmegaKind::Singleton) {
          candidate = convergence->omega.point;
        } else {
          candidate = traj->final_state();
        }
        if (candidate.size() != traj->dimension)
          throw BuildError("fit limit dimension mismatch");
        std::vector<double> dist(traj->size());
        for (std::size_t k = 0; k < traj->size(); ++k)
          dist[k] = (traj->states[k] - candidate).norm();
        fitted = fit_decay(traj->times, dist);
        doc["analyses"]["fit"] = fit_to_json(*fitted);
      } else if (which == "loja") {
        if (!rs.potential)
          throw BuildError("loja requested but the system has no potential");
        Vec point;
        if (sc.loja.point) {
          point = *sc.loja.point;
        } else if (convergence && convergence->verdict == Verdict::Converged) {
          point = convergence->limit;
        } else {
          throw BuildError("loja point not given and no converged limit available");
        }
        // Second-order states carry (position, velocity); the potential only
        // sees the position block.
        if (point.size() == 2 * rs.potential->dimension)
          point = point.head(rs.potential->dimension).eval();
        loja_est = estimate_exponent(*rs.potential, point, sc.loja.radii,
                                     sc.loja.samples_per_shell, seed);
        doc["analyses"]["loja"] = loja_to_json(*loja_est);
      } else if (which == "stability") {
        const int n = rs.system.dimension;
        std::vector<Vec> seeds;
        if (n <= 6) {
          seeds = grid_seeds(Vec::Constant(n, sc.stability.box_lo),
                             Vec::Constant(n, sc.stability.box_hi),
                             sc.stability.per_dim);
        } else {
          seeds = {Vec::Zero(n), u0, traj->final_state()};
        }
        int dropped = 0;
        const std::vector<Vec> eq = find_equilibria(rs.system, seeds, 1e-10, &dropped);
        nlohmann::json list = nlohmann::json::array();
        for (const Vec& p : eq) {
          const Linearization lin = linearize(rs.system, p);
          const StabilityVerdict verdict = classify(lin);
          list.push_back({{"point", vec_to_std(p)},
                          {"class", to_string(verdict.cls)},
                          {"spectral_abscissa", lin.spectral_abscissa},
                          {"field_norm", lin.field_norm}});
        }
        doc["analyses"]["stability"] = {{"equilibria", list},
                                        {"dropped_seeds", dropped}};
      }
    } catch (const std::exception& e) {
      record_error(which, e);
    }
  }

  // Predicted-vs-fitted rate comparison when both sides exist.
  nlohmann::json rates;
  rates["predicted"] = nullptr;
  rates["fitted"] = fitted ? fit_to_json(*fitted) : nlohmann::json(nullptr);
  rates["consistent"] = nullptr;
  if (loja_est) {
    try {
      const RatePrediction pred = predict_from_estimate(*loja_est);
      rates["predicted"] = to_json(pred);
      if (fitted && fitted->cls != DecayClass::NoDecay) {
        const bool class_match =
            (pred.cls == RateClass::Exponential &&
             fitted->cls == DecayClass::Exponential) ||
            (pred.cls == RateClass::Power && fitted->cls == DecayClass::Power);
        bool ok = class_match;
        if (class_match && pred.cls == RateClass::Power)
          ok = std::abs(fitted->rate - pred.exponent) <=
               0.25 * std::max(pred.exponent, 1e-12);
        rates["consistent"] = ok;
      }
    } catch (const std::exception& e) {
      doc["errors"]["rates"] = e.what();
    }
  }
  doc["rates"] = rates;

  const auto t_end = std::chrono::steady_clock::now();
  doc["wall_seconds"] =
      std::chrono::duration_cast<std::chrono::duration<double>>(t_end - t_start)
          .count();

  if (!ov.out_prefix.empty()) {
    write_trajectory_csv(raw, ov.out_prefix + ".trajectory.csv");
    std::ofstream out(ov.out_prefix + ".report.json");
    if (!out) throw BuildError("cannot write report next to " + ov.out_prefix);
    out << doc.dump(2) << '\n';
  }

  RunReport rep;
  rep.converged = convergence && convergence->verdict == Verdict::Converged;
  rep.document = std::move(doc);
  return rep;
}

inline RunReport run_scenario_file(const std::string& path,
                                   const RunOverrides& ov = {}) {
  return run_scenario(load_scenario(path), ov);
}

// ---------------------------------------------------------------------------
// Trajectory-only analysis (no system available): the stationarity check
// falls back on the recorded derivative at the tail centroid's nearest
// sample.

inline nlohmann::json analyze_trajectory_document(const Trajectory& traj) {
  using namespace detail_scenario;
  nlohmann::json doc;
  doc["artifact"] = {{"name", "convlab"},
                     {"version", kArtifactVersion},
                     {"schema_version", kSchemaVersion}};
  doc["trajectory"] = {{"samples", traj.size()},
                       {"t_final", traj.times.back()},
                       {"final_state", vec_to_std(traj.final_state())}};
  doc["analyses"] = nlohmann::json::object();
  doc["errors"] = nlohmann::json::object();

  std::optional<OmegaEstimate> om;
  try {
    om = omega_estimate(traj);
    doc["analyses"]["omega"] = omega_to_json(*om);
  } catch (const std::exception& e) {
    doc["errors"]["omega"] = e.what();
    doc["analyses"]["omega"] = nullptr;
  }
  std::optional<DisplacementVerdict> cauchy;
  try {
    const double span = traj.times.back() - traj.times.front();
    cauchy = cauchy_convergence_test(traj, span / 20.0);
    doc["analyses"]["cauchy"] = {{"passed", cauchy->passed},
                                 {"first_window_sup", cauchy->first_window_sup},
                                 {"last_window_sup", cauchy->last_window_sup}};
  } catch (const std::exception& e) {
    doc["errors"]["cauchy"] = e.what();
    doc["analyses"]["cauchy"] = nullptr;
  }
  try {
    const L2DerivativeResult r = l2_derivative_test(traj);
    doc["analyses"]["l2"] = {{"integral", r.integral},
                             {"tail_vanishes", r.tail_vanishes}};
  } catch (const std::exception& e) {
    doc["errors"]["l2"] = e.what();
    doc["analyses"]["l2"] = nullptr;
  }
  try {
    const Vec candidate = om && om->kind == OmegaKind::Singleton
                              ? om->point
                              : traj.final_state();
    std::vector<double> dist(traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k)
      dist[k] = (traj.states[k] - candidate).norm();
    doc["analyses"]["fit"] = fit_to_json(fit_decay(traj.times, dist));
  } catch (const std::exception& e) {
    doc["errors"]["fit"] = e.what();
    doc["analyses"]["fit"] = nullptr;
  }

  std::string verdict = "inconclusive";
  if (om && om->kind == OmegaKind::ClosedCurve) verdict = "non_convergent";
  if (om && om->kind == OmegaKind::Singleton && cauchy && cauchy->passed &&
      !traj.derivatives.empty() && traj.derivatives.back().norm() <= 1e-4)
    verdict = "converged";
  doc["verdict"] = verdict;
  return doc;
}

// ---------------------------------------------------------------------------
// Directory batch: each *.json scenario runs in isolation; failures are
// per-scenario entries.  Parallelism is capped by CONVERGE_LAB_THREADS.

struct BatchSummary {
  nlohmann::json document;
  bool all_ok = true;
};

inline int batch_thread_cap() {
  if (const char* env = std::getenv("CONVERGE_LAB_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? int(hw) : 1;
}

inline BatchSummary batch_run(const std::string& directory,
                              const std::string& out_dir = "",
                              int max_threads = -1) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(directory))
    throw ParseError("batch directory does not exist: " + directory);

  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(directory))
    if (entry.is_regular_file() && entry.path().extension() == ".json")
      files.push_back(entry.path().string());
  std::sort(files.begin(), files.end());

  const int threads =
      std::max(1, std::min<int>(max_threads > 0 ? max_threads : batch_thread_cap(),
                                int(files.empty() ? 1 : files.size())));

  std::vector<nlohmann::json> results(files.size());
  std::vector<char> failed(files.size(), 0);
  std::atomic<std::size_t> next{0};

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= files.size()) return;
      RunOverrides ov;
      if (!out_dir.empty())
        ov.out_prefix =
            (fs::path(out_dir) / fs::path(files[i]).stem()).string();
      try {
        const RunReport rep = run_scenario_file(files[i], ov);
        results[i] = {{"file", files[i]},
                      {"status", "ok"},
                      {"converged", rep.converged},
                      {"report", rep.document}};
      } catch (const std::exception& e) {
        results[i] = {{"file", files[i]}, {"status", "failed"}, {"error", e.what()}};
        failed[i] = 1;
      }
    }
  };

  if (!out_dir.empty()) fs::create_directories(out_dir);
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  BatchSummary summary;
  int bad = 0;
  nlohmann::json list = nlohmann::json::array();
  for (std::size_t i = 0; i < files.size(); ++i) {
    list.push_back(results[i]);
    if (failed[i]) ++bad;
  }
  summary.document = {{"total", files.size()},
                      {"failed", bad},
                      {"scenarios", list}};
  summary.all_ok = (bad == 0);
  return summary;
}

}  // namespace convlab
