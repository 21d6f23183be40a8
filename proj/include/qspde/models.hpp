#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qspde/solver.hpp"
#include "qspde/spectral.hpp"

namespace qspde {

// Noise shapes used by the model library. Diagonal in the spectral modes of
// each component, with the decay profile q_m = (1 + lambda_m)^{-decay} that
// keeps the Hilbert-Schmidt norm into H^{2 beta} finite.
struct NoiseProfile {
  enum class Kind { None, AdditiveLowModes, TanhMultiplicative };
  Kind kind = Kind::None;
  double sigma0 = 0.0;
  double decay = 2.0;
  int active_modes = 0;  // AdditiveLowModes: number of lowest modes driven
};

// driven_comps <= comps: the profile drives the leading components only (the
// blow-up examples put noise on the first component alone).
NoiseOperator make_noise(const NoiseProfile& profile, const SpectralBasis& basis,
                         int comps, int driven_comps);
NoiseOperator make_noise(const NoiseProfile& profile, const SpectralBasis& basis,
                         int comps);

// ---------------------------------------------------------------------------
// Cross-diffusion two-species competition model.

struct SKTParams {
  double k1 = 1.0, k2 = 1.0;          // linear diffusion rates
  double d11 = 0.1, d21 = 0.1;        // linear growth rates
  double a = 0.1, b = 0.1;            // cross-diffusion rates
  double c = 1.0, d = 1.0;            // self-diffusion rates
  double g11 = 0.1, g12 = 0.1;        // competition rates, first species
  double g21 = 0.1, g22 = 0.1;        // competition rates, second species
  NoiseProfile noise;

  void validate() const;
};

struct EllipticityCertificate {
  bool strong_ok = false;   // a^2 < 8cb and b^2 < 8da
  bool weak_ok = false;     // ab < 64cd
  double min_sym_eig = 0.0; // sweep of sym(diffusion matrix) over the box
  double box_u = 0.0, box_v = 0.0;
  bool pass() const { return strong_ok || weak_ok; }
};

// Checks the two sufficient positive-definiteness conditions and sweeps the
// symmetric part's smallest eigenvalue over [0,umax] x [0,vmax].
EllipticityCertificate check_ellipticity(const SKTParams& p, double umax,
                                         double vmax, int sweep = 33);

// Discretized divergence-form operator of the frozen state U = (u,v): minus
// div(A(U) grad .) in the Neumann cosine basis, plus a unit sectorial shift
// (recorded in the snapshot) so the constant mode clears the origin. The
// drift compensates the shift through the nonlinearity.
// Throws CalculusError when the diffusion matrix loses positive definiteness
// at a quadrature node.
OperatorSnapshot skt_operator(const SKTParams& p, const SpectralBasis& basis,
                              const Eigen::VectorXd& U_coef);

// Lotka-Volterra competition reactions, pseudo-spectral with de-aliasing.
Eigen::VectorXd skt_nonlinearity(const SKTParams& p, const SpectralBasis& basis,
                                 const Eigen::VectorXd& U_coef);

// Full problem wiring: generator, shift-compensated drift, noise, exponents.
ProblemSpec build_skt_spec(const SKTParams& p, const SpectralBasis& basis,
                           const Eigen::VectorXd& u0, double horizon);

// ---------------------------------------------------------------------------
// Eigenfunction blow-up examples (Dirichlet sine basis).

struct BlowupParams {
  int example = 1;        // 1, 2 or 3
  double k = 2.0;         // growth rate of the auxiliary component; k > lambda_1
  double y0 = 2.0;        // target initial functional (u0, phi)
  bool coupled = false;   // solve the full system instead of the reduced one
  NoiseProfile noise;

  void validate(double lambda1) const;
};

// Examples 1/2 reduce the auxiliary component exactly (it solves its own
// linear equation in closed form) unless `coupled` is set; example 3 is the
// three-component system whose third block degenerates with the sign of u.
ProblemSpec build_blowup_spec(const BlowupParams& p, const SpectralBasis& basis,
                              double horizon);

struct OdeBound {
  double lambda1 = 0.0;
  double y0 = 0.0;
  std::vector<std::pair<double, double>> trajectory;
  bool blows_up = false;
  double blowup_time = std::numeric_limits<double>::infinity();
  double zero_time = std::numeric_limits<double>::infinity();
  std::string note;
};

// Comparison dynamics for the functional y(t) = <u, phi>:
//   example 1: y' = -lambda1 y + y^2, blow-up time in closed form for
//              y0 > lambda1 (T* = ln(y0/(y0-lambda1)) / lambda1);
//   example 2: the exponential envelope whose first root bounds the sign
//              change of y.
// iphi2 is the integral of phi^2 over the domain.
OdeBound ode_comparison(int example, double lambda1, double y0, double k,
                        double iphi2, double horizon);

// Mean functional with CLT bands from an ensemble of trajectories.
struct MeanCurve {
  std::vector<double> t;
  std::vector<double> mean;
  std::vector<double> half_width;  // 3 sigma / sqrt(samples)
  int samples = 0;
};

struct StudyAssertion {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double bound = 0.0;
};

struct BlowupStudyConfig {
  int ensemble = 50;
  std::uint64_t master_seed = 1;
  double h = 5e-4;
  double horizon = 1.0;
  std::vector<double> n_sequence = {2, 4, 8, 16, 32, 64, 128, 256};
  double level = 100.0;          // example 1 crossing level
  double margin = 0.15;          // allowed lag past the comparison time
  ContinuationOptions continuation{};
};

struct BlowupStudyReport {
  MeanCurve y_curve;
  OdeBound comparison;
  std::vector<StudyAssertion> assertions;
  std::vector<std::vector<StoppingRecord>> ladders;  // per sample
  double det_crossing_time = std::numeric_limits<double>::infinity();
  bool all_pass() const {
    for (const auto& a : assertions)
      if (!a.pass) return false;
    return !assertions.empty();
  }
};

BlowupStudyReport blowup_study(const BlowupParams& p, const SpectralBasis& basis,
                               const BlowupStudyConfig& cfg);

struct DegeneracyCertificate {
  bool emitted = false;
  double time = std::numeric_limits<double>::infinity();
  double min_real_eig = 0.0;
  std::uint64_t master_seed = 0;
  std::uint64_t sample = 0;
};

// Runs the three-component system and returns the first time the frozen
// third-block operator fails the sectoriality audit. Producing the
// certificate is the success path.
DegeneracyCertificate degenerate_witness(const BlowupParams& p,
                                         const SpectralBasis& basis,
                                         double horizon, double h,
                                         std::uint64_t master_seed,
                                         std::uint64_t sample,
                                         const ContinuationOptions& opts = {});

}  // namespace qspde
