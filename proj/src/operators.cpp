#include "qspde/operators.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

#include "qspde/errors.hpp"
#include "qspde/kernels.hpp"

namespace qspde {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
}

OperatorSnapshot::OperatorSnapshot(const SpectralBasis& b, int components,
                                   Eigen::MatrixXd m, double shift_)
    : basis(&b), comps(components), mat(std::move(m)), shift(shift_) {
  if (mat.rows() != mat.cols() ||
      mat.rows() != static_cast<long>(components) * b.modes)
    throw InvalidArgument("OperatorSnapshot: block dimensions mismatch");
  if (!mat.allFinite())
    throw InvalidArgument("OperatorSnapshot: non-finite entries");
}

OperatorSnapshot OperatorSnapshot::identity_like(const OperatorSnapshot& other) {
  OperatorSnapshot id = other;
  id.mat = Eigen::MatrixXd::Identity(other.dim(), other.dim());
  id.shift = 0.0;
  return id;
}

double op_norm2(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw InvalidArgument("fit_line: need at least two points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  if (std::abs(denom) < 1e-300) throw InvalidArgument("fit_line: degenerate abscissae");
  LineFit f;
  f.slope = (n * sxy - sx * sy) / denom;
  f.intercept = (sy - f.slope * sx) / n;
  return f;
}

OperatorSnapshot fractional_power(const OperatorSnapshot& A, double beta,
                                  PowerDiagnostics* diag,
                                  const CalculusTolerances& tol) {
  if (beta < -1.0 || beta > 1.0)
    throw InvalidArgument("fractional_power: beta must lie in [-1, 1]");
  OperatorSnapshot out = A;
  if (beta == 0.0) {
    out.mat = Eigen::MatrixXd::Identity(A.dim(), A.dim());
    return out;
  }
  if (beta == 1.0) return out;

  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(A.mat.cast<std::complex<double>>());
  if (es.info() != Eigen::Success)
    throw CalculusError("fractional_power: eigendecomposition failed");
  const Eigen::VectorXcd lam = es.eigenvalues();
  double min_abs = lam.cwiseAbs().minCoeff();
  double min_real = lam.real().minCoeff();
  if (diag) {
    diag->min_abs_eig = min_abs;
    diag->min_real_eig = min_real;
  }
  if (min_abs < tol.invert_eps)
    throw CalculusError("fractional_power: operator is numerically singular (min |eig| = " +
                        std::to_string(min_abs) + ")");
  if (min_real <= 0.0)
    throw CalculusError(
        "fractional_power: spectrum not in the right half-plane; shift the snapshot by +cI first");

  if (beta == -1.0) {
    out.mat = A.mat.partialPivLu().inverse();
    return out;
  }

  Eigen::BDCSVD<Eigen::MatrixXcd> svd(es.eigenvectors());
  const double cond = svd.singularValues()(0) /
                      svd.singularValues()(svd.singularValues().size() - 1);
  if (diag) diag->eig_cond = cond;

  if (cond <= tol.eig_cond_max) {
    Eigen::VectorXcd pw(lam.size());
    for (long i = 0; i < lam.size(); ++i) pw(i) = std::pow(lam(i), beta);
    const Eigen::MatrixXcd result =
        es.eigenvectors() * pw.asDiagonal() *
        es.eigenvectors().partialPivLu().inverse();
    out.mat = result.real();
    return out;
  }

  // Defective / highly non-normal snapshot: Schur-based matrix power.
  if (diag) diag->schur_fallback = true;
  Eigen::MatrixPower<Eigen::MatrixXd> apow(A.mat);
  out.mat = apow(beta);
  return out;
}

OperatorSnapshot operator_exp(const OperatorSnapshot& A, double tau,
                              const CalculusTolerances& tol) {
  if (tau < 0.0) throw InvalidArgument("operator_exp: tau must be >= 0");
  const int dim = A.dim();
  OperatorSnapshot out = A;
  out.shift = 0.0;
  if (tau == 0.0) {
    out.mat = Eigen::MatrixXd::Identity(dim, dim);
    return out;
  }

  // Scaling and squaring with an order-18 Taylor evaluation. Only matrix
  // products are involved (no LU), which keeps the result equivariant under
  // component permutations of the input blocks.
  Eigen::MatrixXd B = (-tau) * A.mat;
  const double norm1 = B.cwiseAbs().colwise().sum().maxCoeff();
  int s = 0;
  if (norm1 > 1.0) s = static_cast<int>(std::ceil(std::log2(norm1)));
  if (s > 0) B *= std::pow(2.0, -s);

  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(dim, dim);
  Eigen::MatrixXd T = I + B / 18.0;
  Eigen::MatrixXd tmp(dim, dim);
  for (int k = 17; k >= 1; --k) {
    kern::matmul(B, T, A.comps, tmp);
    T = I + tmp / static_cast<double>(k);
  }
  for (int i = 0; i < s; ++i) {
    kern::matmul(T, T, A.comps, tmp);
    T.swap(tmp);
  }

  const double mx = T.cwiseAbs().maxCoeff();
  if (!std::isfinite(mx) || mx > tol.exp_overflow)
    throw CalculusError("operator_exp: ||e^{-tau A}|| exceeds overflow bound (anti-dissipative misuse?)");
  out.mat = std::move(T);
  return out;
}

SectorReport audit_sectoriality(const OperatorSnapshot& A, double phi,
                                int ray_samples, double margin, double m_cap) {
  if (!(phi > 0.0) || !(phi < kPi / 2.0))
    throw InvalidArgument("audit_sectoriality: need 0 < phi < pi/2");
  SectorReport rep;
  rep.phi = phi;
  rep.margin = margin;

  Eigen::EigenSolver<Eigen::MatrixXd> es(A.mat);
  if (es.info() != Eigen::Success)
    throw CalculusError("audit_sectoriality: eigendecomposition failed");
  const Eigen::VectorXcd lam = es.eigenvalues();
  rep.spectrum.assign(lam.data(), lam.data() + lam.size());
  rep.min_real = lam.real().minCoeff();
  rep.min_abs = lam.cwiseAbs().minCoeff();

  rep.pass_a1 = true;
  for (long i = 0; i < lam.size(); ++i) {
    const double a = std::abs(std::atan2(lam(i).imag(), lam(i).real()));
    if (!(a < phi) || !(std::abs(lam(i)) > 0.0)) rep.pass_a1 = false;
  }

  // Resolvent samples on rays just outside the sector and on the negative
  // real axis; ||(lambda I - A)^{-1}||_2 = 1 / sigma_min(lambda I - A).
  const std::vector<double> angles = {phi + margin, -(phi + margin), kPi};
  rep.m_est = 0.0;
  bool finite = true;
  const int S = std::max(ray_samples, 2);
  for (double ang : angles) {
    for (int i = 0; i < S; ++i) {
      const double r =
          std::pow(10.0, -2.0 + 5.0 * static_cast<double>(i) / (S - 1));
      const std::complex<double> z = std::polar(r, ang);
      Eigen::MatrixXcd R = -A.mat.cast<std::complex<double>>();
      R.diagonal().array() += z;
      Eigen::BDCSVD<Eigen::MatrixXcd> svd(R);
      const double smin = svd.singularValues()(svd.singularValues().size() - 1);
      if (smin <= 0.0 || !std::isfinite(smin)) {
        finite = false;
        continue;
      }
      rep.m_est = std::max(rep.m_est, (r + 1.0) / smin);
    }
  }
  rep.pass_a2 = finite && rep.m_est <= m_cap;
  return rep;
}

HolderModulus HolderModulus::declared(double nu, double delta, double L) {
  if (!(nu > 0.0 && nu <= 1.0 && delta > 0.0 && delta <= 1.0))
    throw InvalidArgument("HolderModulus: exponents must lie in (0, 1]");
  if (!(nu + delta > 1.0))
    throw InvalidArgument("HolderModulus: requires nu + delta > 1");
  HolderModulus h;
  h.nu = nu;
  h.delta = delta;
  h.L_est = L;
  return h;
}

HolderModulus estimate_at_modulus(const OperatorPath& path, double nu,
                                  const TimeGrid& grid,
                                  const CalculusTolerances& tol) {
  const int P = grid.points();
  std::vector<OperatorSnapshot> snaps;
  std::vector<Eigen::MatrixXd> inv;
  std::vector<Eigen::MatrixXd> anu;
  snaps.reserve(static_cast<size_t>(P));
  double scale = 0.0;
  for (int i = 0; i < P; ++i) {
    snaps.push_back(path(grid.time(i)));
    const Eigen::MatrixXd& m = snaps.back().mat;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
    const double smin = svd.singularValues()(svd.singularValues().size() - 1);
    const double smax = svd.singularValues()(0);
    if (smin < tol.invert_eps * std::max(1.0, smax))
      throw CalculusError("estimate_at_modulus: snapshot at t = " +
                          std::to_string(grid.time(i)) + " is not invertible");
    inv.push_back(m.partialPivLu().inverse());
    anu.push_back(fractional_power(snaps.back(), nu, nullptr, tol).mat);
    scale = std::max(scale, smax);
  }

  std::vector<double> logs_dt, logs_val;
  double max_val = 0.0;
  for (int i = 0; i < P; ++i) {
    for (int j = i + 1; j < P; ++j) {
      const double v = op_norm2(anu[static_cast<size_t>(j)] *
                                (inv[static_cast<size_t>(j)] - inv[static_cast<size_t>(i)]));
      max_val = std::max(max_val, v);
      if (v > 0.0) {
        logs_dt.push_back(std::log(grid.time(j) - grid.time(i)));
        logs_val.push_back(std::log(v));
      }
    }
  }

  HolderModulus h;
  h.nu = nu;
  if (max_val < 1e-13 * (1.0 + scale)) {
    h.constant_path = true;
    h.L_est = 0.0;
    h.delta = std::numeric_limits<double>::quiet_NaN();
    return h;
  }
  const LineFit fit = fit_line(logs_dt, logs_val);
  h.delta = fit.slope;
  h.L_est = std::exp(fit.intercept);
  return h;
}

}  // namespace qspde
