#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qspde/grid.hpp"
#include "qspde/spectral.hpp"

namespace qspde {

// Truncated cylindrical Brownian increments on a grid. Every increment is a
// pure function of (master_seed, sample_index, step, mode), so a sample can
// be replayed in isolation and ensembles are order-independent.
struct WienerPath {
  TimeGrid grid;
  int modes = 0;
  std::uint64_t master_seed = 0;
  std::uint64_t sample_index = 0;
  Eigen::MatrixXd dW;  // grid.steps x modes, entries ~ N(0, h)
};

WienerPath sample_wiener(int M, const TimeGrid& grid, std::uint64_t master_seed,
                         std::uint64_t sample_index);

// CSV export: columns t, mode, increment.
void export_csv(const WienerPath& path, const std::string& file);

// sigma(t, u): H -> X as a (comps*N) x M coefficient array, possibly state
// dependent through `build`. Declared local Lipschitz/growth constants ride
// along as metadata.
struct NoiseOperator {
  int channels = 0;
  bool state_dependent = false;
  Eigen::MatrixXd constant;  // rows = comps*N
  std::function<void(double t, const Eigen::VectorXd& u_coef, Eigen::MatrixXd& out)> build;
  double lip_coef = 0.0;    // L_sigma(n) = lip_coef * (1 + n)
  double growth_coef = 0.0; // l_sigma

  bool zero() const { return channels == 0; }
  void at(double t, const Eigen::VectorXd& u_coef, Eigen::MatrixXd& out) const;

  static NoiseOperator none();
  static NoiseOperator constant_matrix(Eigen::MatrixXd sigma);
};

// Hilbert-Schmidt norm of sigma into H^{2 mu}: weighted Frobenius norm with
// row weights (1 + lambda_k)^{mu}.
double hs_norm(const Eigen::MatrixXd& sigma, const SpectralBasis& basis,
               int comps, double mu);

// Read-only view of the first `limit + 1` trajectory values; any access past
// the limit throws NonAdaptedAccess. This is how adaptedness of integrands is
// enforced structurally.
class TrajectoryPrefix {
 public:
  TrajectoryPrefix(const std::vector<Eigen::VectorXd>& values, int limit)
      : values_(&values), limit_(limit) {}
  const Eigen::VectorXd& at(int i) const;
  int limit() const { return limit_; }

 private:
  const std::vector<Eigen::VectorXd>* values_;
  int limit_;
};

using AdaptedIntegrand =
    std::function<void(int step, double t, const TrajectoryPrefix& prefix,
                       Eigen::MatrixXd& out)>;

// Left-point Ito sums J_j = sum_{i<j} sigma(t_i, .) dW_i over the window
// [start, start + count] of the path's grid; J_0 = 0. The integrand for step
// i sees only the trajectory prefix up to i.
std::vector<Eigen::VectorXd> ito_integral(const AdaptedIntegrand& sigma,
                                          const WienerPath& path, int start,
                                          int count,
                                          const std::vector<Eigen::VectorXd>& traj);

// Constant-integrand convenience form over the whole grid.
std::vector<Eigen::VectorXd> ito_integral(const Eigen::MatrixXd& sigma,
                                          const WienerPath& path);

struct RegularityEstimate {
  double gamma_hat = 0.0;
  int p = 2;
  double band_lo = 0.0;
  double band_hi = 0.0;
  bool degenerate = false;
};

// Pathwise Hölder exponent by dyadic max-increment regression in the chosen
// Sobolev scale; subsample bootstrap gives the confidence band. Needs at
// least 64 points. Constant series are flagged degenerate instead of fitted.
RegularityEstimate holder_estimate(const std::vector<Eigen::VectorXd>& series,
                                   const SpectralBasis& basis, int comps,
                                   double mu, double h, int p = 2);

// W^{alpha,p} double-sum seminorm; the slower cross-check behind a flag.
double sobolev_slice_seminorm(const std::vector<Eigen::VectorXd>& series,
                              const SpectralBasis& basis, int comps, double mu,
                              double h, double alpha_hat, int p);

}  // namespace qspde
