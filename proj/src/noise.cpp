#include "qspde/noise.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "qspde/errors.hpp"
#include "qspde/operators.hpp"
#include "qspde/rng.hpp"

namespace qspde {

WienerPath sample_wiener(int M, const TimeGrid& grid, std::uint64_t master_seed,
                         std::uint64_t sample_index) {
  if (M < 1) throw InvalidArgument("sample_wiener: need M >= 1");
  WienerPath path;
  path.grid = grid;
  path.modes = M;
  path.master_seed = master_seed;
  path.sample_index = sample_index;
  path.dW.resize(grid.steps, M);
  const double sqrt_h = std::sqrt(grid.h);
  for (int i = 0; i < grid.steps; ++i)
    for (int m = 0; m < M; ++m)
      path.dW(i, m) =
          sqrt_h * rng::standard_normal(rng::key(master_seed, sample_index,
                                                 static_cast<std::uint64_t>(i),
                                                 static_cast<std::uint64_t>(m)));
  return path;
}

void export_csv(const WienerPath& path, const std::string& file) {
  std::ofstream out(file);
  if (!out) throw InvalidArgument("export_csv: cannot open " + file);
  out << "t,mode,increment\n";
  char buf[64];
  for (int i = 0; i < path.grid.steps; ++i)
    for (int m = 0; m < path.modes; ++m) {
      std::snprintf(buf, sizeof(buf), "%.17g", path.dW(i, m));
      out << path.grid.time(i) << ',' << m << ',' << buf << '\n';
    }
}

NoiseOperator NoiseOperator::none() { return NoiseOperator{}; }

NoiseOperator NoiseOperator::constant_matrix(Eigen::MatrixXd sigma) {
  NoiseOperator op;
  op.channels = static_cast<int>(sigma.cols());
  op.constant = std::move(sigma);
  return op;
}

void NoiseOperator::at(double t, const Eigen::VectorXd& u_coef,
                       Eigen::MatrixXd& out) const {
  if (zero()) {
    out.resize(0, 0);
    return;
  }
  if (state_dependent) {
    build(t, u_coef, out);
  } else {
    out = constant;
  }
}

double hs_norm(const Eigen::MatrixXd& sigma, const SpectralBasis& basis,
               int comps, double mu) {
  const int N = basis.modes;
  if (sigma.rows() != static_cast<long>(comps) * N)
    throw InvalidArgument("hs_norm: row count does not match comps * modes");
  double total = 0.0;
  for (int c = 0; c < comps; ++c) {
    double s = 0.0;
    for (int k = 0; k < N; ++k) {
      const double w = std::pow(1.0 + basis.lambda(k), 2.0 * mu);
      for (long m = 0; m < sigma.cols(); ++m) {
        const double v = sigma(static_cast<long>(c) * N + k, m);
        s += w * v * v;
      }
    }
    total += s;
  }
  return std::sqrt(total);
}

const Eigen::VectorXd& TrajectoryPrefix::at(int i) const {
  if (i < 0 || i > limit_)
    throw NonAdaptedAccess("integrand requested trajectory value at step " +
                           std::to_string(i) + " past its prefix limit " +
                           std::to_string(limit_));
  return (*values_)[static_cast<size_t>(i)];
}

std::vector<Eigen::VectorXd> ito_integral(const AdaptedIntegrand& sigma,
                                          const WienerPath& path, int start,
                                          int count,
                                          const std::vector<Eigen::VectorXd>& traj) {
  if (start < 0 || count < 1 || start + count > path.grid.steps)
    throw InvalidArgument("ito_integral: window out of range");
  std::vector<Eigen::VectorXd> J(static_cast<size_t>(count) + 1);
  Eigen::MatrixXd sig;
  sigma(0, path.grid.time(start), TrajectoryPrefix(traj, 0), sig);
  const long dim = sig.rows();
  J[0] = Eigen::VectorXd::Zero(dim);
  for (int i = 0; i < count; ++i) {
    if (i > 0) sigma(i, path.grid.time(start + i), TrajectoryPrefix(traj, i), sig);
    J[static_cast<size_t>(i) + 1] =
        J[static_cast<size_t>(i)] +
        sig * path.dW.row(start + i).transpose();
  }
  return J;
}

std::vector<Eigen::VectorXd> ito_integral(const Eigen::MatrixXd& sigma,
                                          const WienerPath& path) {
  std::vector<Eigen::VectorXd> empty;
  return ito_integral(
      [&sigma](int, double, const TrajectoryPrefix&, Eigen::MatrixXd& out) {
        out = sigma;
      },
      path, 0, path.grid.steps, empty);
}

RegularityEstimate holder_estimate(const std::vector<Eigen::VectorXd>& series,
                                   const SpectralBasis& basis, int comps,
                                   double mu, double h, int p) {
  const int len = static_cast<int>(series.size());
  if (len < 64) throw InvalidArgument("holder_estimate: need at least 64 points");

  auto slope_on = [&](int lo, int hi, bool& degenerate) {
    std::vector<double> lx, ly;
    double scale = 0.0;
    for (int i = lo; i < hi; ++i)
      scale = std::max(scale, series[static_cast<size_t>(i)].cwiseAbs().maxCoeff());
    double maxinc_any = 0.0;
    for (int g = 1; g <= (hi - lo) / 4; g *= 2) {
      double mx = 0.0;
      for (int i = lo; i + g < hi; ++i) {
        const double v = sobolev_norm(series[static_cast<size_t>(i + g)] -
                                          series[static_cast<size_t>(i)],
                                      basis, comps, mu);
        mx = std::max(mx, v);
      }
      maxinc_any = std::max(maxinc_any, mx);
      if (mx > 0.0) {
        lx.push_back(std::log(g * h));
        ly.push_back(std::log(mx));
      }
    }
    if (maxinc_any < 1e-14 * (1.0 + scale)) {
      degenerate = true;
      return 0.0;
    }
    degenerate = false;
    return std::clamp(fit_line(lx, ly).slope, 0.0, 1.0);
  };

  RegularityEstimate est;
  est.p = p;
  bool degen = false;
  est.gamma_hat = slope_on(0, len, degen);
  est.degenerate = degen;
  if (degen) return est;

  // Subsample bootstrap over four contiguous segments.
  est.band_lo = est.gamma_hat;
  est.band_hi = est.gamma_hat;
  const int seg = len / 4;
  if (seg >= 64) {
    for (int s = 0; s < 4; ++s) {
      bool d = false;
      const double g = slope_on(s * seg, (s + 1) * seg, d);
      if (!d) {
        est.band_lo = std::min(est.band_lo, g);
        est.band_hi = std::max(est.band_hi, g);
      }
    }
  }
  return est;
}

double sobolev_slice_seminorm(const std::vector<Eigen::VectorXd>& series,
                              const SpectralBasis& basis, int comps, double mu,
                              double h, double alpha_hat, int p) {
  const int len = static_cast<int>(series.size());
  if (len < 2) throw InvalidArgument("sobolev_slice_seminorm: series too short");
  double acc = 0.0;
  for (int i = 0; i < len; ++i) {
    for (int j = i + 1; j < len; ++j) {
      const double dt = (j - i) * h;
      const double v = sobolev_norm(series[static_cast<size_t>(j)] -
                                        series[static_cast<size_t>(i)],
                                    basis, comps, mu);
      acc += 2.0 * std::pow(v, p) / std::pow(dt, 1.0 + alpha_hat * p) * h * h;
    }
  }
  return std::pow(acc, 1.0 / p);
}

}  // namespace qspde
