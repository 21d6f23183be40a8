#include "qspde/evolution.hpp"

#include <algorithm>
#include <cmath>

#include "qspde/errors.hpp"
#include "qspde/kernels.hpp"

namespace qspde {

namespace {

void check_pair(const EvolutionFamily& fam, int j, int i) {
  if (i < 0 || j > fam.grid.steps || i > j)
    throw InvalidArgument("evolution family: need grid indices 0 <= i <= j <= steps");
}

}  // namespace

void EvolutionFamily::build_checkpoints(int len) {
  if (len < 2) throw InvalidArgument("build_checkpoints: block length must be >= 2");
  block_len = len;
  block_prod.clear();
  const int K = grid.steps;
  for (int b = 0; b * len < K; ++b) {
    const int lo = b * len;
    const int hi = std::min(lo + len, K);
    Eigen::MatrixXd M = prop[static_cast<size_t>(lo)];
    Eigen::MatrixXd tmp;
    for (int l = lo + 1; l < hi; ++l) {
      kern::matmul(prop[static_cast<size_t>(l)], M, comps, tmp);
      M.swap(tmp);
    }
    block_prod.push_back(std::move(M));
  }
}

EvolutionFamily build_family(std::vector<OperatorSnapshot> snapshots,
                             const TimeGrid& grid,
                             const CalculusTolerances& tol) {
  if (static_cast<int>(snapshots.size()) != grid.points())
    throw InvalidArgument("build_family: need one snapshot per grid point");
  EvolutionFamily fam;
  fam.grid = grid;
  fam.comps = snapshots.front().comps;
  fam.prop.reserve(static_cast<size_t>(grid.steps));
  for (int i = 0; i < grid.steps; ++i) {
    OperatorSnapshot ex = operator_exp(snapshots[static_cast<size_t>(i)], grid.h, tol);
    const double mx = ex.mat.cwiseAbs().maxCoeff();
    if (!std::isfinite(mx) || mx > tol.exp_overflow)
      throw CalculusError("build_family: propagator norm blow-up during assembly");
    fam.prop.push_back(std::move(ex.mat));
  }
  fam.snapshots = std::move(snapshots);
  return fam;
}

EvolutionFamily build_family(const OperatorPath& path, const TimeGrid& grid,
                             AuditMode audit, double phi,
                             const CalculusTolerances& tol) {
  std::vector<OperatorSnapshot> snaps;
  snaps.reserve(static_cast<size_t>(grid.points()));
  for (int i = 0; i < grid.points(); ++i) {
    snaps.push_back(path(grid.time(i)));
    if (audit == AuditMode::Require) {
      const SectorReport rep = audit_sectoriality(snaps.back(), phi);
      if (!rep.pass())
        throw CalculusError("build_family: snapshot at t = " +
                            std::to_string(grid.time(i)) +
                            " failed the sectoriality audit (min Re = " +
                            std::to_string(rep.min_real) + ")");
    }
  }
  return build_family(std::move(snaps), grid, tol);
}

Eigen::VectorXd apply(const EvolutionFamily& fam, int j, int i,
                      const Eigen::VectorXd& x) {
  check_pair(fam, j, i);
  Eigen::VectorXd y = x;
  Eigen::VectorXd tmp;
  for (int l = i; l < j; ++l) {
    kern::matvec(fam.prop[static_cast<size_t>(l)], y, fam.comps, tmp);
    y.swap(tmp);
  }
  return y;
}

Eigen::VectorXd apply_cached(const EvolutionFamily& fam, int j, int i,
                             const Eigen::VectorXd& x) {
  check_pair(fam, j, i);
  if (fam.block_len < 2) return apply(fam, j, i, x);
  Eigen::VectorXd y = x;
  Eigen::VectorXd tmp;
  int l = i;
  while (l < j && l % fam.block_len != 0) {
    kern::matvec(fam.prop[static_cast<size_t>(l)], y, fam.comps, tmp);
    y.swap(tmp);
    ++l;
  }
  while (l + fam.block_len <= j && l % fam.block_len == 0) {
    kern::matvec(fam.block_prod[static_cast<size_t>(l / fam.block_len)], y,
                 fam.comps, tmp);
    y.swap(tmp);
    l += fam.block_len;
  }
  while (l < j) {
    kern::matvec(fam.prop[static_cast<size_t>(l)], y, fam.comps, tmp);
    y.swap(tmp);
    ++l;
  }
  return y;
}

Eigen::MatrixXd family_matrix(const EvolutionFamily& fam, int j, int i) {
  check_pair(fam, j, i);
  const int d = fam.dim();
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd tmp;
  for (int l = i; l < j; ++l) {
    kern::matmul(fam.prop[static_cast<size_t>(l)], M, fam.comps, tmp);
    M.swap(tmp);
  }
  return M;
}

SmoothingReport smoothing_audit(const EvolutionFamily& fam,
                                const std::vector<double>& betas,
                                const std::vector<double>& alphas,
                                int n_gaps, int min_gap_steps) {
  if (betas.size() != alphas.size())
    throw InvalidArgument("smoothing_audit: betas and alphas must pair up");
  const int K = fam.grid.steps;
  if (K < min_gap_steps + 8)
    throw InvalidArgument("smoothing_audit: grid too short for the gap range");

  // Log-spaced gap sizes in steps, from min_gap_steps to K.
  std::vector<int> gaps;
  for (int g = 0; g < n_gaps; ++g) {
    const double f = static_cast<double>(g) / (n_gaps - 1);
    int steps = static_cast<int>(std::round(
        std::exp(std::log(static_cast<double>(min_gap_steps)) +
                 f * (std::log(static_cast<double>(K)) -
                      std::log(static_cast<double>(min_gap_steps))))));
    steps = std::clamp(steps, min_gap_steps, K);
    if (gaps.empty() || gaps.back() != steps) gaps.push_back(steps);
  }

  SmoothingReport report;
  for (size_t p = 0; p < betas.size(); ++p) {
    const double beta = betas[p];
    const double alpha = alphas[p];
    std::vector<double> lx, ly;
    for (int gs : gaps) {
      // Anchor t at the grid end (and midpoint when it fits); take the worse.
      double worst = 0.0;
      for (int tj : {K, (K + gs) / 2 + gs / 2}) {
        if (tj > K || tj - gs < 0) continue;
        const int si = tj - gs;
        const Eigen::MatrixXd U = family_matrix(fam, tj, si);
        Eigen::MatrixXd M = U;
        if (beta != 0.0)
          M = fractional_power(fam.snapshots[static_cast<size_t>(tj)], beta).mat * M;
        if (alpha != 0.0)
          M = M * fractional_power(fam.snapshots[static_cast<size_t>(si)], -alpha).mat;
        worst = std::max(worst, op_norm2(M));
      }
      if (worst > 0.0) {
        lx.push_back(std::log(gs * fam.grid.h));
        ly.push_back(std::log(worst));
      }
    }
    SmoothingFit fit;
    fit.beta = beta;
    fit.alpha = alpha;
    fit.gaps = static_cast<int>(lx.size());
    if (lx.size() >= 2) {
      const LineFit lf = fit_line(lx, ly);
      fit.slope = lf.slope;
      fit.c_est = std::exp(lf.intercept);
      fit.pass = fit.slope >= (alpha - beta) - 0.1;
    }
    report.fits.push_back(fit);
  }
  return report;
}

FamilyDifference family_difference(const EvolutionFamily& fam1,
                                   const EvolutionFamily& fam2, int j, int i,
                                   const Eigen::VectorXd& x) {
  if (fam1.grid.steps != fam2.grid.steps || fam1.grid.h != fam2.grid.h ||
      fam1.grid.t0 != fam2.grid.t0)
    throw InvalidArgument("family_difference: grids must match");
  check_pair(fam1, j, i);

  FamilyDifference out;
  out.direct = apply(fam2, j, i, x) - apply(fam1, j, i, x);

  // Trapezoid in tau over grid points i..j of U1(t,tau) (A1 - A2)(tau) U2(tau,s) x.
  const int d = fam1.dim();
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(d);
  for (int l = i; l <= j; ++l) {
    const Eigen::VectorXd inner = apply(fam2, l, i, x);
    const Eigen::VectorXd mid =
        kern::matvec(fam1.snapshots[static_cast<size_t>(l)].mat -
                         fam2.snapshots[static_cast<size_t>(l)].mat,
                     inner, fam1.comps);
    const Eigen::VectorXd outer = apply(fam1, j, l, mid);
    const double w = (l == i || l == j) ? 0.5 : 1.0;
    acc += w * outer;
  }
  out.integral = fam1.grid.h * acc;
  const double scale = std::max(out.direct.norm(), 1e-300);
  out.rel_err = (out.direct - out.integral).norm() / scale;
  return out;
}

double uniform_bound_estimate(const EvolutionFamily& fam, int max_pairs) {
  const int K = fam.grid.steps;
  const int stride = std::max(1, K * K / std::max(max_pairs, 1));
  double worst = 0.0;
  int counter = 0;
  for (int i = 0; i <= K; ++i) {
    Eigen::MatrixXd M = Eigen::MatrixXd::Identity(fam.dim(), fam.dim());
    Eigen::MatrixXd tmp;
    for (int j = i + 1; j <= K; ++j) {
      kern::matmul(fam.prop[static_cast<size_t>(j - 1)], M, fam.comps, tmp);
      M.swap(tmp);
      if (counter++ % stride == 0) worst = std::max(worst, op_norm2(M));
    }
  }
  return worst;
}

}  // namespace qspde
