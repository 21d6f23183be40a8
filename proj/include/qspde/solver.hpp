#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "qspde/evolution.hpp"
#include "qspde/grid.hpp"
#include "qspde/noise.hpp"
#include "qspde/operators.hpp"
#include "qspde/spectral.hpp"

namespace qspde {

// Quasilinear problem data: generator map u -> A(u), semilinear drift F(t,u),
// noise sigma(t,u), exponent and radius bookkeeping. The exponent constraints
// are the (A4')-style admissibility conditions and are validated before any
// solve.
struct ProblemSpec {
  const SpectralBasis* basis = nullptr;
  int comps = 1;

  std::function<OperatorSnapshot(double t, const Eigen::VectorXd& u_coef)> generator;
  bool frozen_generator = false;  // A independent of (t, u): family built once

  std::function<Eigen::VectorXd(double t, const Eigen::VectorXd& u_coef)> drift;
  double lip_F_coef = 0.0;   // L_F(n) = lip_F_coef * (1 + n)
  double growth_F = 0.0;     // l_F

  NoiseOperator sigma;

  Eigen::VectorXd u0;

  double alpha = 0.0;
  double beta = 0.625;
  double nu = 1.0;
  double r = 1.0;
  double R = 2.0;
  double delta = 0.1;        // Hölder target for the iterates
  double gamma_noise = 0.45; // declared Hölder exponent of J(sigma)
  double horizon = 1.0;
  double holder_k = 0.0;     // 0 -> default 10 (||u0||_Z + 1)

  double z_norm(const Eigen::VectorXd& coef) const;
  double y_norm(const Eigen::VectorXd& coef) const;
  double effective_holder_k() const;

  // Throws InvalidArgument naming the violated constraint.
  void validate() const;
};

struct SolverOptions {
  double tol = 1e-8;              // relative sup-Y convergence tolerance
  int max_iter = 12;
  double phi = 0.7853981633974483; // sector half-angle for audits
  bool audit = true;               // audit every snapshot inside the loop
  double overflow = 1e12;
  CalculusTolerances calc{};
};

struct Trajectory {
  TimeGrid grid;
  const SpectralBasis* basis = nullptr;
  int comps = 1;
  std::vector<Eigen::VectorXd> values;  // grid.points() entries (or fewer if truncated)
  std::vector<double> norm_z;
  std::vector<double> norm_y;
  bool overflow = false;
  bool degenerate = false;
  double degenerate_time = std::numeric_limits<double>::quiet_NaN();

  int last_index() const { return static_cast<int>(values.size()) - 1; }
};

struct PicardDiagnostics {
  int iterations = 0;
  std::vector<double> diffs;     // successive sup-Y differences (relative)
  std::vector<double> ratios;    // d_{j+1} / d_j where defined
  std::vector<bool> in_ball;     // sup ||v - u_start||_Z <= r
  std::vector<bool> in_holder;   // discrete Hölder-Y seminorm <= k
  double t_tilde = 0.0;
  bool converged = false;
  bool non_contraction = false;
  bool degenerate = false;
  double degenerate_time = std::numeric_limits<double>::quiet_NaN();
  double degenerate_min_real = std::numeric_limits<double>::quiet_NaN();
  std::string message;

  double final_ratio() const { return ratios.empty() ? 0.0 : ratios.back(); }
};

struct StoppingRecord {
  double n = 0.0;
  double tau = std::numeric_limits<double>::infinity();
  bool hit = false;
  int index = -1;  // grid index of the crossing
};

// The four-term pathwise mild formula on a window of the path's grid:
//   u_j = U(t_j,0) u0 + U(t_j,0) J_j + int U(t_j,s) f(s) ds
//         + sum_{i<j} U(t_j,t_i) A(t_i) (J_j - J_i) h.
// (Stored positive convention; in the paper's drift convention the last term
// carries the minus sign.) snapshots/f_vals per grid point, sigma_vals per
// step. On overflow the trajectory is truncated and flagged.
Trajectory linear_pathwise_mild(const std::vector<OperatorSnapshot>& snapshots,
                                const std::vector<Eigen::VectorXd>& f_vals,
                                const std::vector<Eigen::MatrixXd>& sigma_vals,
                                const WienerPath& W, int start_step,
                                const Eigen::VectorXd& u_start,
                                const TimeGrid& window,
                                const SolverOptions& opts = {});

// Spec-level signature: path/drift callables, audited family.
Trajectory linear_pathwise_mild(const OperatorPath& path,
                                const std::function<Eigen::VectorXd(double)>& f,
                                const NoiseOperator& sigma, const WienerPath& W,
                                const Eigen::VectorXd& u0, const TimeGrid& grid,
                                AuditMode audit = AuditMode::Require,
                                const SolverOptions& opts = {});

struct PicardResult {
  Trajectory trajectory;
  PicardDiagnostics diagnostics;
  StoppingRecord stopping;
};

// Picard fixed point of the semilinear freezing: iterate v^{j+1} solves the
// linear problem with A(v^j(t)), F(t, v^j(t)), sigma(t, v^j(t)); v^0 is the
// constant-in-time initial value. Stops on the relative sup-Y tolerance or
// max_iter; evaluates tau_n on the final iterate and truncates there.
PicardResult picard_solve(const ProblemSpec& spec, const WienerPath& W,
                          const TimeGrid& window, int start_step,
                          const Eigen::VectorXd& u_start, double tol,
                          int max_iter, double n_threshold,
                          const SolverOptions& opts = {});

// Whole-grid convenience starting from spec.u0.
PicardResult picard_solve(const ProblemSpec& spec, const WienerPath& W,
                          const TimeGrid& grid, double tol, int max_iter,
                          double n_threshold, const SolverOptions& opts = {});

struct ContinuationOptions {
  double window = 0.05;          // base T~ per Picard window
  bool scale_window = true;      // shrink as ||u_start||_Z grows
  double tol = 1e-8;
  int max_iter = 12;
  int window_retries = 3;        // halve T~ on non-contraction
  SolverOptions solver{};
};

enum class TauInfinityMarker { AllThresholdsHit, SurvivedHorizon, Overflow, Degenerate };

struct ContinuationResult {
  Trajectory trajectory;                  // concatenated segments
  std::vector<StoppingRecord> records;    // one per threshold n
  TauInfinityMarker marker = TauInfinityMarker::SurvivedHorizon;
  bool non_contraction = false;
  double worst_ratio = 0.0;
  int windows = 0;
  std::optional<PicardDiagnostics> degenerate_diag;

  // Discrete blow-up shadow: tau_n gaps shrink by >= 1.5x per doubling.
  bool cauchy_ladder() const;
};

// Maximal continuation over an ascending threshold ladder; each segment
// restarts the Picard windows from the previous segment's endpoint, exactly
// the piecewise construction u(t) = u_n(t) on [tau_{n-1}, tau_n).
ContinuationResult maximal_continuation(const ProblemSpec& spec,
                                        const WienerPath& W,
                                        const TimeGrid& grid,
                                        const std::vector<double>& n_sequence,
                                        const ContinuationOptions& opts = {});

struct LifetimeReport {
  double eps = 0.0;
  double fraction = 0.0;
  double wilson_lo = 0.0;
  double wilson_hi = 0.0;
  double fraction_half_eps = 0.0;  // same samples, eps/2
  int samples = 0;
};

// Monte Carlo estimate of P(tau_n > eps) with a Wilson interval; the eps/2
// fraction is evaluated on the same paths (monotone events).
LifetimeReport lifetime_probability(const ProblemSpec& spec, double h,
                                    double eps, int samples, double n_threshold,
                                    std::uint64_t master_seed,
                                    const ContinuationOptions& opts = {});

struct IbpAuditReport {
  double strong_form_residual = 0.0;  // sup ||u_pw - (int B u_pw + J)||
  double em_sup_diff = 0.0;           // sup ||u_pw - Euler-Maruyama||
};

// Appendix-style self-consistency audit for bounded generators: evaluates the
// pathwise formula for dU = B(t) U dt + G dW (drift convention input), then
// reconstructs the strong form by quadrature and compares, plus an
// Euler-Maruyama cross-check on the same increments.
IbpAuditReport ibp_identity_audit(
    const std::function<Eigen::MatrixXd(double)>& B_drift,
    const Eigen::MatrixXd& G, const WienerPath& W, const TimeGrid& grid);

}  // namespace qspde
