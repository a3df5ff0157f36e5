#pragma once

// Equilibrium location (damped Newton on the field), linearization with an
// eigenvalue-based three-way stability verdict, low-degree polynomial
// stability tests by inequality chains, Lyapunov quadratic forms from the
// matrix equation A^T P + P A = -I, and the exponential-stability
// perturbation bound (admissibility + shrunken radius + decay rate).

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

#include "convlab/core.hpp"

namespace convlab {

// Central-difference Jacobian of the field, column by column.
inline Mat jacobian_fd(const FirstOrderSystem& sys, const Vec& point, double step) {
  if (!point.allFinite()) throw NonFiniteJacobian("jacobian requested at a non-finite point");
  if (!(step > 0.0)) throw ParameterViolation("jacobian step must be positive");
  const int n = sys.dimension;
  Mat J(n, n);
  Vec xp = point, xm = point, fp(n), fm(n);
  for (int j = 0; j < n; ++j) {
    xp[j] = point[j] + step;
    xm[j] = point[j] - step;
    sys.field_into(xp, fp);
    sys.field_into(xm, fm);
    if (!fp.allFinite() || !fm.allFinite())
      throw NonFiniteJacobian("field returned a non-finite value near the probe point");
    J.col(j) = (fp - fm) / (2.0 * step);
    xp[j] = point[j];
    xm[j] = point[j];
  }
  return J;
}

struct Linearization {
  Vec point;
  Mat jacobian;
  std::vector<std::complex<double>> eigenvalues;
  double spectral_abscissa = 0.0;
  double field_norm = 0.0;            // |field(point)|
  bool off_equilibrium = false;       // field_norm > 1e-6
};

inline Linearization linearize(const FirstOrderSystem& sys, const Vec& point,
                               double fd_step = -1.0) {
  if (point.size() != sys.dimension)
    throw ParameterViolation("linearization point has the wrong dimension");
  if (fd_step <= 0.0) fd_step = 1e-5 * (1.0 + point.norm());
  Linearization lin;
  lin.point = point;
  Vec f(sys.dimension);
  sys.field_into(point, f);
  if (!f.allFinite()) throw NonFiniteJacobian("field is non-finite at the requested point");
  lin.field_norm = f.norm();
  lin.off_equilibrium = lin.field_norm > 1e-6;
  lin.jacobian = jacobian_fd(sys, point, fd_step);
  Eigen::EigenSolver<Mat> es(lin.jacobian);
  if (es.info() != Eigen::Success)
    throw IllConditioned("eigenvalue computation did not converge");
  lin.spectral_abscissa = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < sys.dimension; ++i) {
    lin.eigenvalues.push_back(es.eigenvalues()[i]);
    lin.spectral_abscissa = std::max(lin.spectral_abscissa, es.eigenvalues()[i].real());
  }
  return lin;
}

enum class StabilityClass { AsymptoticallyStable, Unstable, Marginal };

inline const char* to_string(StabilityClass c) {
  switch (c) {
    case StabilityClass::AsymptoticallyStable: return "AsymptoticallyStable";
    case StabilityClass::Unstable: return "Unstable";
    default: return "Marginal";
  }
}

struct StabilityVerdict {
  StabilityClass cls = StabilityClass::Marginal;
  double margin = 0.0;
  std::vector<std::complex<double>> witnesses;  // eigenvalues deciding the verdict
};

// Three-way verdict: strictly negative abscissa (beyond the margin) is
// asymptotically stable, strictly positive is unstable, the band in between
// is reported as Marginal rather than guessed.
inline StabilityVerdict classify(const Linearization& lin, double margin = -1.0) {
  if (margin < 0.0) margin = 1e-7 * (1.0 + lin.jacobian.norm());
  StabilityVerdict v;
  v.margin = margin;
  if (lin.spectral_abscissa < -margin) {
    v.cls = StabilityClass::AsymptoticallyStable;
  } else if (lin.spectral_abscissa > margin) {
    v.cls = StabilityClass::Unstable;
    for (const auto& ev : lin.eigenvalues)
      if (ev.real() > margin) v.witnesses.push_back(ev);
  } else {
    v.cls = StabilityClass::Marginal;
    for (const auto& ev : lin.eigenvalues)
      if (std::abs(ev.real()) <= margin) v.witnesses.push_back(ev);
  }
  return v;
}

// ---------------------------------------------------------------------------
// Polynomial stability by explicit inequality chains, degrees 2..4.
// Coefficients p0..pN are given from the leading term down; the sign of p0 is
// normalized away first, then the necessary condition p_j p0 > 0 is screened
// before the degree-specific determinant inequalities.

struct HurwitzResult {
  bool is_hurwitz = false;
  std::string failed_condition;  // empty when is_hurwitz
};

inline HurwitzResult hurwitz_check(std::vector<double> p) {
  const int N = static_cast<int>(p.size()) - 1;
  if (N < 2 || N > 4)
    throw DegreeUnsupported("polynomial degree must be 2, 3, or 4; got " +
                            std::to_string(N));
  for (double c : p)
    if (!std::isfinite(c)) throw NonFiniteValue("polynomial coefficient is not finite");
  if (p[0] == 0.0) throw ZeroLeadingCoefficient("leading coefficient must be nonzero");
  if (p[0] < 0.0)
    for (double& c : p) c = -c;

  HurwitzResult r;
  for (int j = 1; j <= N; ++j)
    if (!(p[j] > 0.0)) {
      r.failed_condition = "p" + std::to_string(j) + "*p0 > 0";
      return r;
    }
  if (N == 3 && !(p[2] * p[1] > p[3] * p[0])) {
    r.failed_condition = "p2*p1 > p3*p0";
    return r;
  }
  if (N == 4 && !(p[3] * (p[2] * p[1] - p[3] * p[0]) > p[4] * p[1] * p[1])) {
    r.failed_condition = "p3*(p2*p1-p3*p0) > p4*p1^2";
    return r;
  }
  r.is_hurwitz = true;
  return r;
}

// ---------------------------------------------------------------------------
// Lyapunov quadratic form: P solving A^T P + P A = -I via the Kronecker
// vectorization; along u' = Au this gives d/dt u^T P u = -|u|^2.

struct QuadraticForm {
  Mat P;
  double residual = 0.0;  // Frobenius norm of A^T P + P A + I
};

namespace detail_stab {

inline Mat kron(const Mat& X, const Mat& Y) {
  Mat K(X.rows() * Y.rows(), X.cols() * Y.cols());
  for (int i = 0; i < X.rows(); ++i)
    for (int j = 0; j < X.cols(); ++j)
      K.block(i * Y.rows(), j * Y.cols(), Y.rows(), Y.cols()) = X(i, j) * Y;
  return K;
}

}  // namespace detail_stab

inline QuadraticForm lyapunov_quadratic(const Mat& A) {
  const int n = static_cast<int>(A.rows());
  if (A.cols() != n || n < 1) throw ParameterViolation("matrix must be square");
  if (n > 32) throw ParameterViolation("dense vectorized solve is limited to n <= 32");
  if (!A.allFinite()) throw NonFiniteValue("matrix has non-finite entries");

  Eigen::EigenSolver<Mat> es(A);
  if (es.info() != Eigen::Success)
    throw IllConditioned("eigenvalue computation did not converge");
  double abscissa = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) abscissa = std::max(abscissa, es.eigenvalues()[i].real());
  if (!(abscissa < 0.0))
    throw NotHurwitz("spectral abscissa is " + std::to_string(abscissa) +
                     "; the quadratic form integral diverges");

  const Mat I = Mat::Identity(n, n);
  const Mat At = A.transpose();
  const Mat K = detail_stab::kron(I, At) + detail_stab::kron(At, I);
  const Vec rhs = -Eigen::Map<const Vec>(I.data(), n * n);
  const Vec x = Eigen::PartialPivLU<Mat>(K).solve(rhs);
  Mat P = Eigen::Map<const Mat>(x.data(), n, n);
  P = 0.5 * (P + P.transpose()).eval();

  QuadraticForm q;
  q.P = P;
  q.residual = (At * P + P * A + I).norm();
  if (!(q.residual <= 1e-10 * n))
    throw IllConditioned("Lyapunov residual " + std::to_string(q.residual) +
                         " exceeds the certification threshold");
  Eigen::LLT<Mat> llt(P);
  if (llt.info() != Eigen::Success)
    throw IllConditioned("computed quadratic form is not positive definite");
  return q;
}

// ---------------------------------------------------------------------------
// Exponential-stability perturbation bound: given the linear estimate
// |e^{tA}| <= M e^{-delta t} and a Lipschitz-1 perturbation of size eta, the
// perturbed flow still contracts at rate gamma = delta - eta M inside the
// shrunken ball R1 = R0 / M, provided eta < delta / M.

struct PerturbationBound {
  bool admissible = false;
  double R1 = 0.0;
  double gamma = 0.0;
};

inline PerturbationBound perturbation_radius(double M, double delta, double eta,
                                             double R0) {
  if (!(M >= 1.0)) throw ParameterViolation("perturbation bound needs M >= 1");
  if (!(delta > 0.0)) throw ParameterViolation("perturbation bound needs delta > 0");
  if (!(eta >= 0.0)) throw ParameterViolation("perturbation bound needs eta >= 0");
  if (!(R0 > 0.0)) throw ParameterViolation("perturbation bound needs R0 > 0");
  PerturbationBound b;
  b.admissible = eta < delta / M;
  b.R1 = R0 / M;
  b.gamma = delta - eta * M;
  return b;
}

// ---------------------------------------------------------------------------
// Equilibrium search: damped Newton from each seed, duplicates merged.

inline std::vector<Vec> grid_seeds(const Vec& lo, const Vec& hi, int per_dim) {
  if (lo.size() != hi.size()) throw ParameterViolation("grid bounds dimension mismatch");
  if (per_dim < 2) throw ParameterViolation("grid needs at least 2 points per axis");
  const int n = static_cast<int>(lo.size());
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) total *= static_cast<std::size_t>(per_dim);
  std::vector<Vec> seeds;
  seeds.reserve(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    Vec s(n);
    std::size_t rest = idx;
    for (int i = 0; i < n; ++i) {
      const int q = static_cast<int>(rest % per_dim);
      rest /= per_dim;
      s[i] = lo[i] + (hi[i] - lo[i]) * q / double(per_dim - 1);
    }
    seeds.push_back(std::move(s));
  }
  return seeds;
}

inline std::vector<Vec> find_equilibria(const FirstOrderSystem& sys,
                                        const std::vector<Vec>& seeds,
                                        double tol = 1e-10,
                                        int* dropped_seeds = nullptr) {
  if (!(tol > 0.0)) throw ParameterViolation("equilibrium tolerance must be positive");
  std::vector<Vec> found;
  int dropped = 0;
  Vec f(sys.dimension), fn(sys.dimension);
  for (const Vec& seed : seeds) {
    if (seed.size() != sys.dimension)
      throw ParameterViolation("seed dimension mismatch");
    Vec x = seed;
    bool ok = false;
    for (int iter = 0; iter < 60; ++iter) {
      sys.field_into(x, f);
      if (!f.allFinite()) break;
      const double fnorm = f.norm();
      if (fnorm <= tol) {
        ok = true;
        break;
      }
      Mat J;
      try {
        J = jacobian_fd(sys, x, 1e-6 * (1.0 + x.norm()));
      } catch (const NonFiniteJacobian&) {
        break;
      }
      const Vec d = Eigen::ColPivHouseholderQR<Mat>(J).solve(-f);
      if (!d.allFinite()) break;
      double lambda = 1.0;
      bool moved = false;
      for (int h = 0; h < 12; ++h) {
        const Vec xn = x + lambda * d;
        sys.field_into(xn, fn);
        if (fn.allFinite() && fn.norm() < (1.0 - 0.25 * lambda) * fnorm) {
          x = xn;
          moved = true;
          break;
        }
        lambda *= 0.5;
      }
      if (!moved) break;
    }
    if (!ok) {
      ++dropped;
      continue;
    }
    bool duplicate = false;
    for (const Vec& p : found)
      if ((p - x).norm() <= 10.0 * tol) {
        duplicate = true;
        break;
      }
    if (!duplicate) found.push_back(x);
  }
  if (dropped_seeds) *dropped_seeds = dropped;
  return found;
}

}  // namespace convlab
