#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <vector>

#include "qspde/grid.hpp"
#include "qspde/spectral.hpp"

namespace qspde {

// Module tolerances; every test may override them per call.
struct CalculusTolerances {
  double invert_eps = 1e-12;     // smallest |eigenvalue| treated as singular
  double eig_cond_max = 1e8;     // eigenvector conditioning before Schur fallback
  double exp_overflow = 1e12;    // ||e^{-tau A}|| beyond this is a misuse signal
};

// A discretized sectorial operator acting on spectral coefficients.
//
// Sign convention: `mat` stores the POSITIVE sectorial operator, i.e. the
// object whose exponential e^{-tau A} decays for parabolic problems. The PDE
// drift is -mat (plus `shift` worth of compensation when a shift was folded
// in to clear the spectrum off the imaginary axis).
struct OperatorSnapshot {
  const SpectralBasis* basis = nullptr;
  int comps = 1;
  Eigen::MatrixXd mat;
  double shift = 0.0;

  OperatorSnapshot() = default;
  OperatorSnapshot(const SpectralBasis& b, int components, Eigen::MatrixXd m,
                   double shift_ = 0.0);

  int dim() const { return static_cast<int>(mat.rows()); }
  static OperatorSnapshot identity_like(const OperatorSnapshot& other);
};

using OperatorPath = std::function<OperatorSnapshot(double t)>;

struct PowerDiagnostics {
  bool schur_fallback = false;
  double eig_cond = 0.0;
  double min_abs_eig = 0.0;
  double min_real_eig = 0.0;
};

// A^beta for beta in [-1, 1] via dense eigendecomposition, falling back to a
// Schur-based matrix power when the eigenvector basis is ill-conditioned.
// A^0 = I and A^1 = A exactly. Requires spectrum with positive real part.
OperatorSnapshot fractional_power(const OperatorSnapshot& A, double beta,
                                  PowerDiagnostics* diag = nullptr,
                                  const CalculusTolerances& tol = {});

// e^{-tau A} by scaling-and-squaring with a truncated Taylor evaluation; no
// pivoting anywhere, so component-permuted inputs give permuted outputs
// bitwise. tau = 0 returns the identity exactly.
OperatorSnapshot operator_exp(const OperatorSnapshot& A, double tau,
                              const CalculusTolerances& tol = {});

struct SectorReport {
  std::vector<std::complex<double>> spectrum;
  double phi = 0.0;
  double margin = 0.0;
  double m_est = 0.0;       // worst (|lambda|+1) * ||(lambda I - A)^{-1}||
  double min_real = 0.0;
  double min_abs = 0.0;
  bool pass_a1 = false;
  bool pass_a2 = false;
  bool pass() const { return pass_a1 && pass_a2; }
};

// Numerical audit of (A1) (spectrum inside the sector of half-angle phi) and
// (A2) (Hille-Yosida resolvent bound sampled on rays arg = +-(phi+margin) and
// the negative real axis, |lambda| log-spaced over [1e-2, 1e3]).
// Failures are reported, never thrown.
SectorReport audit_sectoriality(const OperatorSnapshot& A, double phi,
                                int ray_samples = 13, double margin = 0.1,
                                double m_cap = 1e8);

struct HolderModulus {
  double nu = 1.0;
  double delta = 1.0;
  double L_est = 0.0;
  bool constant_path = false;

  static HolderModulus declared(double nu, double delta, double L);
};

// Least-squares fit of log ||A^nu(t) (A(t)^{-1} - A(s)^{-1})|| against
// log |t - s| over all grid pairs.
HolderModulus estimate_at_modulus(const OperatorPath& path, double nu,
                                  const TimeGrid& grid,
                                  const CalculusTolerances& tol = {});

// Dense operator 2-norm (largest singular value).
double op_norm2(const Eigen::MatrixXd& m);

// Least-squares slope/intercept of y against x.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace qspde
