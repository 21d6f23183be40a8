#include "qspde/solver.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "qspde/errors.hpp"
#include "qspde/kernels.hpp"

namespace qspde {

namespace {

double norm_or_euclid(const Eigen::VectorXd& coef, const SpectralBasis* basis,
                      int comps, double mu) {
  if (basis == nullptr) return coef.norm();
  return sobolev_norm(coef, *basis, comps, mu);
}

}  // namespace

double ProblemSpec::z_norm(const Eigen::VectorXd& coef) const {
  return norm_or_euclid(coef, basis, comps, beta);
}

double ProblemSpec::y_norm(const Eigen::VectorXd& coef) const {
  return norm_or_euclid(coef, basis, comps, alpha);
}

double ProblemSpec::effective_holder_k() const {
  if (holder_k > 0.0) return holder_k;
  return 10.0 * (z_norm(u0) + 1.0);
}

void ProblemSpec::validate() const {
  if (!(alpha >= 0.0 && alpha < beta && beta < nu && nu <= 1.0))
    throw InvalidArgument(
        "ProblemSpec: admissibility requires 0 <= alpha < beta < nu <= 1 "
        "(got alpha=" + std::to_string(alpha) + ", beta=" + std::to_string(beta) +
        ", nu=" + std::to_string(nu) + ")");
  if (!(beta + nu > 1.0 + alpha))
    throw InvalidArgument("ProblemSpec: admissibility requires beta + nu > 1 + alpha");
  if (!(beta >= 0.5))
    throw InvalidArgument("ProblemSpec: admissibility requires beta >= 1/2");
  if (!(r > 0.0 && r < R))
    throw InvalidArgument("ProblemSpec: radii must satisfy 0 < r < R");
  if (!(delta > 0.0 && delta <= 1.0))
    throw InvalidArgument("ProblemSpec: Hölder target delta must lie in (0, 1]");
  if (!(delta < std::min(beta - alpha, gamma_noise)))
    throw InvalidArgument(
        "ProblemSpec: Hölder target must satisfy delta < min(beta - alpha, gamma)");
  if (nu < 1.0 && !(delta > 1.0 - nu))
    throw InvalidArgument("ProblemSpec: Hölder target must satisfy delta > 1 - nu");
  if (!(horizon > 0.0)) throw InvalidArgument("ProblemSpec: horizon must be positive");
  if (u0.size() == 0) throw InvalidArgument("ProblemSpec: initial value missing");
  if (!generator) throw InvalidArgument("ProblemSpec: generator map missing");
}

Trajectory linear_pathwise_mild(const std::vector<OperatorSnapshot>& snapshots,
                                const std::vector<Eigen::VectorXd>& f_vals,
                                const std::vector<Eigen::MatrixXd>& sigma_vals,
                                const WienerPath& W, int start_step,
                                const Eigen::VectorXd& u_start,
                                const TimeGrid& window,
                                const SolverOptions& opts) {
  const int K = window.steps;
  const long dim = u_start.size();
  const bool uniform = snapshots.size() == 1;
  if (!uniform && static_cast<int>(snapshots.size()) != K + 1)
    throw InvalidArgument("linear_pathwise_mild: need snapshots at every grid point (or one frozen)");
  if (static_cast<int>(f_vals.size()) != K + 1)
    throw InvalidArgument("linear_pathwise_mild: need drift values at every grid point");
  const bool noise = !sigma_vals.empty();
  const bool sigma_uniform = sigma_vals.size() == 1;
  if (noise && !sigma_uniform && static_cast<int>(sigma_vals.size()) != K)
    throw InvalidArgument("linear_pathwise_mild: need one sigma per step (or one constant)");
  if (noise && (start_step < 0 || start_step + K > W.grid.steps))
    throw InvalidArgument("linear_pathwise_mild: window exceeds the sampled path");

  const int comps = snapshots.front().comps;
  Trajectory traj;
  traj.grid = window;
  traj.basis = snapshots.front().basis;
  traj.comps = comps;
  traj.values.reserve(static_cast<size_t>(K) + 1);
  traj.values.push_back(u_start);

  // Propagators (one per step; a single one when the generator is frozen).
  std::vector<Eigen::MatrixXd> prop;
  prop.reserve(uniform ? 1 : static_cast<size_t>(K));
  const int nprop = uniform ? 1 : K;
  for (int i = 0; i < nprop; ++i)
    prop.push_back(operator_exp(snapshots[static_cast<size_t>(i)], window.h, opts.calc).mat);

  // Window-local Ito sums J_j.
  std::vector<Eigen::VectorXd> J(static_cast<size_t>(K) + 1);
  J[0] = Eigen::VectorXd::Zero(dim);
  for (int i = 0; i < K; ++i) {
    if (noise) {
      const Eigen::MatrixXd& sig = sigma_vals[sigma_uniform ? 0 : static_cast<size_t>(i)];
      J[static_cast<size_t>(i) + 1] =
          J[static_cast<size_t>(i)] + sig * W.dW.row(start_step + i).transpose();
    } else {
      J[static_cast<size_t>(i) + 1] = J[static_cast<size_t>(i)];
    }
  }

  // Forward recursions:
  //   U0_j = U(t_j, t_0)                      (terms 1-2)
  //   G_j  = 1/2 U(t_j,t_0) f_0 + sum_{0<i<j} U(t_j,t_i) f_i   (term 3, trapezoid)
  //   M_j  = h sum_{i<j} U(t_j,t_i) A(t_i)    (term 4)
  //   V_j  = h sum_{i<j} U(t_j,t_i) A(t_i) J_i
  Eigen::MatrixXd U0 = Eigen::MatrixXd::Identity(dim, dim);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd G = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd V = Eigen::VectorXd::Zero(dim);
  Eigen::MatrixXd mtmp(dim, dim);
  Eigen::VectorXd vtmp(dim), vtmp2(dim);

  const double h = window.h;
  for (int j = 1; j <= K; ++j) {
    const Eigen::MatrixXd& P = prop[uniform ? 0 : static_cast<size_t>(j - 1)];
    const Eigen::MatrixXd& A = snapshots[uniform ? 0 : static_cast<size_t>(j - 1)].mat;

    kern::matmul(P, U0, comps, mtmp);
    U0.swap(mtmp);

    if (j == 1) {
      vtmp = 0.5 * f_vals[0];
    } else {
      vtmp = G + f_vals[static_cast<size_t>(j - 1)];
    }
    kern::matvec(P, vtmp, comps, G);

    mtmp = M + h * A;
    kern::matmul(P, mtmp, comps, M);

    kern::matvec(A, J[static_cast<size_t>(j - 1)], comps, vtmp);
    vtmp2 = V + h * vtmp;
    kern::matvec(P, vtmp2, comps, V);

    // u_j = U0 (u_start + J_j) + h (G + f_j / 2) + M J_j - V
    kern::matvec(U0, u_start + J[static_cast<size_t>(j)], comps, vtmp);
    Eigen::VectorXd u = vtmp + h * (G + 0.5 * f_vals[static_cast<size_t>(j)]);
    kern::matvec(M, J[static_cast<size_t>(j)], comps, vtmp2);
    u += vtmp2 - V;

    const double mx = u.cwiseAbs().maxCoeff();
    if (!std::isfinite(mx) || mx > opts.overflow) {
      traj.overflow = true;
      break;
    }
    traj.values.push_back(std::move(u));
  }
  return traj;
}

Trajectory linear_pathwise_mild(const OperatorPath& path,
                                const std::function<Eigen::VectorXd(double)>& f,
                                const NoiseOperator& sigma, const WienerPath& W,
                                const Eigen::VectorXd& u0, const TimeGrid& grid,
                                AuditMode audit, const SolverOptions& opts) {
  std::vector<OperatorSnapshot> snaps;
  snaps.reserve(static_cast<size_t>(grid.points()));
  for (int i = 0; i < grid.points(); ++i) {
    snaps.push_back(path(grid.time(i)));
    if (audit == AuditMode::Require) {
      const SectorReport rep = audit_sectoriality(snaps.back(), opts.phi);
      if (!rep.pass())
        throw CalculusError("linear_pathwise_mild: snapshot at t = " +
                            std::to_string(grid.time(i)) + " failed the sector audit");
    }
  }
  std::vector<Eigen::VectorXd> f_vals;
  f_vals.reserve(static_cast<size_t>(grid.points()));
  for (int i = 0; i < grid.points(); ++i)
    f_vals.push_back(f ? f(grid.time(i)) : Eigen::VectorXd::Zero(u0.size()));

  std::vector<Eigen::MatrixXd> sigma_vals;
  if (!sigma.zero()) {
    if (sigma.state_dependent)
      throw InvalidArgument("linear problems take state-independent noise");
    sigma_vals.push_back(sigma.constant);
  }
  return linear_pathwise_mild(snaps, f_vals, sigma_vals, W, 0, u0, grid, opts);
}

namespace {

void fill_norms(Trajectory& traj, const ProblemSpec& spec) {
  traj.norm_z.clear();
  traj.norm_y.clear();
  traj.norm_z.reserve(traj.values.size());
  traj.norm_y.reserve(traj.values.size());
  for (const auto& v : traj.values) {
    traj.norm_z.push_back(spec.z_norm(v));
    traj.norm_y.push_back(spec.y_norm(v));
  }
}

// Discrete Hölder-Y seminorm max_{i<j} ||u_j - u_i||_Y / (t_j - t_i)^delta.
double holder_seminorm_y(const ProblemSpec& spec, const Trajectory& traj) {
  double worst = 0.0;
  const int n = traj.last_index();
  for (int i = 0; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j) {
      const double dt = (j - i) * traj.grid.h;
      const double v = spec.y_norm(traj.values[static_cast<size_t>(j)] -
                                   traj.values[static_cast<size_t>(i)]);
      worst = std::max(worst, v / std::pow(dt, spec.delta));
    }
  return worst;
}

}  // namespace

PicardResult picard_solve(const ProblemSpec& spec, const WienerPath& W,
                          const TimeGrid& window, int start_step,
                          const Eigen::VectorXd& u_start, double tol,
                          int max_iter, double n_threshold,
                          const SolverOptions& opts) {
  spec.validate();
  const int P = window.points();
  PicardResult out;
  out.diagnostics.t_tilde = window.h * window.steps;

  std::vector<Eigen::VectorXd> v(static_cast<size_t>(P), u_start);
  Trajectory current;
  double prev_diff = -1.0;
  int flat_ratios = 0;

  std::vector<OperatorSnapshot> snaps;
  std::vector<Eigen::VectorXd> f_vals(static_cast<size_t>(P));
  std::vector<Eigen::MatrixXd> sigma_vals;

  for (int iter = 1; iter <= max_iter; ++iter) {
    // Freeze generator, drift and noise along the previous iterate.
    snaps.clear();
    const int snap_count = spec.frozen_generator ? 1 : P;
    for (int i = 0; i < snap_count; ++i) {
      snaps.push_back(spec.generator(window.time(i), v[static_cast<size_t>(i)]));
      if (opts.audit) {
        const SectorReport rep = audit_sectoriality(snaps.back(), opts.phi);
        if (!rep.pass()) {
          out.diagnostics.degenerate = true;
          out.diagnostics.degenerate_time = window.time(i);
          out.diagnostics.degenerate_min_real = rep.min_real;
          out.diagnostics.iterations = iter;
          out.diagnostics.message =
              "generator failed the sectoriality audit (min Re = " +
              std::to_string(rep.min_real) + ")";
          out.trajectory.grid = window;
          out.trajectory.basis = spec.basis;
          out.trajectory.comps = spec.comps;
          out.trajectory.values.assign(v.begin(), v.begin() + std::max(i, 1));
          out.trajectory.degenerate = true;
          out.trajectory.degenerate_time = window.time(i);
          fill_norms(out.trajectory, spec);
          return out;
        }
      }
    }
    for (int i = 0; i < P; ++i)
      f_vals[static_cast<size_t>(i)] =
          spec.drift ? spec.drift(window.time(i), v[static_cast<size_t>(i)])
                     : Eigen::VectorXd::Zero(u_start.size());

    sigma_vals.clear();
    if (!spec.sigma.zero()) {
      if (spec.sigma.state_dependent) {
        Eigen::MatrixXd sig;
        for (int i = 0; i < window.steps; ++i) {
          spec.sigma.at(window.time(i), v[static_cast<size_t>(i)], sig);
          sigma_vals.push_back(sig);
        }
      } else {
        sigma_vals.push_back(spec.sigma.constant);
      }
    }

    current = linear_pathwise_mild(snaps, f_vals, sigma_vals, W, start_step,
                                   u_start, window, opts);
    out.diagnostics.iterations = iter;
    if (current.overflow) {
      out.diagnostics.message = "norm overflow inside the Picard iteration";
      break;
    }

    double diff = 0.0;
    double scale = 0.0;
    for (int i = 0; i <= current.last_index(); ++i) {
      diff = std::max(diff, spec.y_norm(current.values[static_cast<size_t>(i)] -
                                        v[static_cast<size_t>(i)]));
      scale = std::max(scale, spec.y_norm(current.values[static_cast<size_t>(i)]));
    }
    out.diagnostics.diffs.push_back(diff);
    if (prev_diff > 10.0 * std::numeric_limits<double>::epsilon()) {
      const double ratio = diff / prev_diff;
      out.diagnostics.ratios.push_back(ratio);
      flat_ratios = (ratio >= 1.0) ? flat_ratios + 1 : 0;
    }
    prev_diff = diff;

    // K-membership of the accepted iterate (Definition-of-the-set checks).
    double ball = 0.0;
    for (int i = 0; i <= current.last_index(); ++i)
      ball = std::max(ball, spec.z_norm(current.values[static_cast<size_t>(i)] - u_start));
    out.diagnostics.in_ball.push_back(ball <= spec.r);
    out.diagnostics.in_holder.push_back(holder_seminorm_y(spec, current) <=
                                        spec.effective_holder_k());

    v.assign(current.values.begin(), current.values.end());
    v.resize(static_cast<size_t>(P), current.values.back());

    if (diff <= tol * std::max(scale, 1e-300)) {
      out.diagnostics.converged = true;
      break;
    }
    if (flat_ratios >= 3) {
      out.diagnostics.non_contraction = true;
      out.diagnostics.message =
          "no contraction after 3 consecutive ratios >= 1; choose a smaller T~";
      break;
    }
  }

  out.trajectory = std::move(current);
  fill_norms(out.trajectory, spec);

  // Stopping time tau_n on the final iterate; truncate past the crossing.
  out.stopping.n = n_threshold;
  for (size_t i = 0; i < out.trajectory.norm_z.size(); ++i) {
    if (out.trajectory.norm_z[i] >= n_threshold) {
      out.stopping.hit = true;
      out.stopping.index = static_cast<int>(i);
      out.stopping.tau = window.time(static_cast<int>(i));
      out.trajectory.values.resize(i + 1);
      out.trajectory.norm_z.resize(i + 1);
      out.trajectory.norm_y.resize(i + 1);
      break;
    }
  }
  return out;
}

PicardResult picard_solve(const ProblemSpec& spec, const WienerPath& W,
                          const TimeGrid& grid, double tol, int max_iter,
                          double n_threshold, const SolverOptions& opts) {
  return picard_solve(spec, W, grid, 0, spec.u0, tol, max_iter, n_threshold, opts);
}

bool ContinuationResult::cauchy_ladder() const {
  std::vector<double> taus;
  for (const auto& r : records)
    if (r.hit) taus.push_back(r.tau);
  if (taus.size() < 3) return false;
  for (size_t i = 2; i < taus.size(); ++i) {
    const double g_prev = taus[i - 1] - taus[i - 2];
    const double g_cur = taus[i] - taus[i - 1];
    if (g_prev <= 0.0) continue;
    if (g_cur > g_prev / 1.5) return false;
  }
  return true;
}

ContinuationResult maximal_continuation(const ProblemSpec& spec,
                                        const WienerPath& W,
                                        const TimeGrid& grid,
                                        const std::vector<double>& n_sequence,
                                        const ContinuationOptions& opts) {
  spec.validate();
  for (size_t i = 1; i < n_sequence.size(); ++i)
    if (!(n_sequence[i] > n_sequence[i - 1]))
      throw InvalidArgument("maximal_continuation: thresholds must be strictly increasing");

  ContinuationResult out;
  out.trajectory.grid = grid;
  out.trajectory.basis = spec.basis;
  out.trajectory.comps = spec.comps;
  out.trajectory.values.push_back(spec.u0);
  out.trajectory.norm_z.push_back(spec.z_norm(spec.u0));
  out.trajectory.norm_y.push_back(spec.y_norm(spec.u0));

  int cur = 0;
  Eigen::VectorXd cur_val = spec.u0;
  const int base_steps =
      std::max(2, static_cast<int>(std::round(opts.window / grid.h)));

  bool stop_all = false;
  for (double n : n_sequence) {
    StoppingRecord rec;
    rec.n = n;
    while (!stop_all) {
      if (cur >= grid.steps) break;  // horizon reached
      int wsteps = base_steps;
      if (opts.scale_window) {
        const double z = spec.z_norm(cur_val);
        wsteps = std::max(2, static_cast<int>(std::round(base_steps / (1.0 + z))));
      }
      wsteps = std::min(wsteps, grid.steps - cur);

      PicardResult pic;
      int tries = 0;
      while (true) {
        pic = picard_solve(spec, W, grid.window(cur, wsteps), cur, cur_val,
                           opts.tol, opts.max_iter, n, opts.solver);
        ++out.windows;
        out.worst_ratio = std::max(out.worst_ratio, pic.diagnostics.final_ratio());
        if (!pic.diagnostics.non_contraction || tries >= opts.window_retries || wsteps <= 2)
          break;
        wsteps = std::max(2, wsteps / 2);
        ++tries;
      }
      if (pic.diagnostics.non_contraction) out.non_contraction = true;

      // Append everything past the window's initial point.
      for (int i = 1; i <= pic.trajectory.last_index(); ++i) {
        out.trajectory.values.push_back(pic.trajectory.values[static_cast<size_t>(i)]);
        out.trajectory.norm_z.push_back(pic.trajectory.norm_z[static_cast<size_t>(i)]);
        out.trajectory.norm_y.push_back(pic.trajectory.norm_y[static_cast<size_t>(i)]);
      }
      cur += pic.trajectory.last_index();
      cur_val = pic.trajectory.values.back();

      if (pic.diagnostics.degenerate) {
        out.marker = TauInfinityMarker::Degenerate;
        out.degenerate_diag = pic.diagnostics;
        out.trajectory.degenerate = true;
        out.trajectory.degenerate_time = pic.diagnostics.degenerate_time;
        stop_all = true;
        break;
      }
      if (pic.trajectory.overflow) {
        out.marker = TauInfinityMarker::Overflow;
        out.trajectory.overflow = true;
        stop_all = true;
        break;
      }
      if (pic.stopping.hit) {
        rec.hit = true;
        rec.index = cur;
        rec.tau = grid.time(cur);
        break;
      }
    }
    out.records.push_back(rec);
    if (stop_all) break;
    if (!rec.hit && cur >= grid.steps) {
      out.marker = TauInfinityMarker::SurvivedHorizon;
      // The remaining larger thresholds cannot be hit either.
      for (size_t i = out.records.size(); i < n_sequence.size(); ++i) {
        StoppingRecord r;
        r.n = n_sequence[i];
        out.records.push_back(r);
      }
      return out;
    }
  }
  if (!stop_all && !out.records.empty() && out.records.back().hit)
    out.marker = TauInfinityMarker::AllThresholdsHit;
  return out;
}

LifetimeReport lifetime_probability(const ProblemSpec& spec, double h,
                                    double eps, int samples, double n_threshold,
                                    std::uint64_t master_seed,
                                    const ContinuationOptions& opts) {
  if (!(eps > 0.0 && eps < 1.0))
    throw InvalidArgument("lifetime_probability: need 0 < eps < 1");
  if (samples < 100)
    throw InvalidArgument("lifetime_probability: need at least 100 samples");

  const int steps = std::max(2, static_cast<int>(std::ceil(eps / h)));
  const TimeGrid grid(0.0, eps / steps, steps);
  const int M = spec.sigma.zero() ? 1 : spec.sigma.channels;

  std::vector<int> survived(static_cast<size_t>(samples), 0);
  std::vector<int> survived_half(static_cast<size_t>(samples), 0);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (int s = 0; s < samples; ++s) {
    const WienerPath W = sample_wiener(M, grid, master_seed,
                                       static_cast<std::uint64_t>(s));
    const ContinuationResult res =
        maximal_continuation(spec, W, grid, {n_threshold}, opts);
    const bool hit = res.records.front().hit;
    const double tau = res.records.front().tau;
    survived[static_cast<size_t>(s)] = hit ? 0 : 1;
    survived_half[static_cast<size_t>(s)] = (!hit || tau > eps / 2.0) ? 1 : 0;
  }

  int count = 0, count_half = 0;
  for (int s = 0; s < samples; ++s) {
    count += survived[static_cast<size_t>(s)];
    count_half += survived_half[static_cast<size_t>(s)];
  }

  LifetimeReport rep;
  rep.eps = eps;
  rep.samples = samples;
  rep.fraction = static_cast<double>(count) / samples;
  rep.fraction_half_eps = static_cast<double>(count_half) / samples;
  const double z = 1.959963984540054;
  const double nn = static_cast<double>(samples);
  const double phat = rep.fraction;
  const double denom = 1.0 + z * z / nn;
  const double center = phat + z * z / (2.0 * nn);
  const double spread = z * std::sqrt(phat * (1.0 - phat) / nn + z * z / (4.0 * nn * nn));
  rep.wilson_lo = (center - spread) / denom;
  rep.wilson_hi = (center + spread) / denom;
  return rep;
}

IbpAuditReport ibp_identity_audit(
    const std::function<Eigen::MatrixXd(double)>& B_drift,
    const Eigen::MatrixXd& G, const WienerPath& W, const TimeGrid& grid) {
  const long dim = G.rows();

  std::vector<OperatorSnapshot> snaps;
  snaps.reserve(static_cast<size_t>(grid.points()));
  std::vector<Eigen::MatrixXd> B(static_cast<size_t>(grid.points()));
  for (int i = 0; i < grid.points(); ++i) {
    B[static_cast<size_t>(i)] = B_drift(grid.time(i));
    OperatorSnapshot s;
    s.comps = 1;
    s.mat = -B[static_cast<size_t>(i)];
    snaps.push_back(std::move(s));
  }
  std::vector<Eigen::VectorXd> f_vals(static_cast<size_t>(grid.points()),
                                      Eigen::VectorXd::Zero(dim));
  std::vector<Eigen::MatrixXd> sigma_vals = {G};

  const Trajectory u = linear_pathwise_mild(snaps, f_vals, sigma_vals, W, 0,
                                            Eigen::VectorXd::Zero(dim), grid);

  // J on the same increments.
  std::vector<Eigen::VectorXd> J = ito_integral(G, W);

  IbpAuditReport rep;
  // Strong form U(t) = int_0^t B(s) U(s) ds + J(t), trapezoidal quadrature.
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(dim);
  for (int j = 1; j <= u.last_index(); ++j) {
    acc += 0.5 * grid.h *
           (B[static_cast<size_t>(j - 1)] * u.values[static_cast<size_t>(j - 1)] +
            B[static_cast<size_t>(j)] * u.values[static_cast<size_t>(j)]);
    const double res = (u.values[static_cast<size_t>(j)] -
                        (acc + J[static_cast<size_t>(j)])).norm();
    rep.strong_form_residual = std::max(rep.strong_form_residual, res);
  }

  // Euler-Maruyama on the same increments.
  Eigen::VectorXd em = Eigen::VectorXd::Zero(dim);
  for (int j = 1; j <= u.last_index(); ++j) {
    em += grid.h * (B[static_cast<size_t>(j - 1)] * em) +
          G * W.dW.row(j - 1).transpose();
    rep.em_sup_diff = std::max(
        rep.em_sup_diff, (u.values[static_cast<size_t>(j)] - em).norm());
  }
  return rep;
}

}  // namespace qspde
