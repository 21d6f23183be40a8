#include "qspde/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "qspde/errors.hpp"
#include "qspde/version.hpp"

namespace qspde {

namespace {

using nlohmann::json;

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void require_keys(const json& j, const std::set<std::string>& allowed,
                  const std::string& where) {
  for (const auto& item : j.items())
    if (!allowed.count(item.key()))
      throw InvalidArgument("config: unknown key \"" + item.key() + "\" in " + where);
}

// Fixed-shape pairwise summation; deterministic for any thread count because
// aggregation runs single-threaded in sample order.
double pairwise_sum(const double* v, size_t n) {
  if (n == 0) return 0.0;
  if (n == 1) return v[0];
  const size_t half = n / 2;
  return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

double pairwise_mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return pairwise_sum(v.data(), v.size()) / static_cast<double>(v.size());
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
  require_keys(j, {"schema_version", "model", "domain", "bc", "modes", "horizon",
                   "step", "ensemble", "master_seed", "out_dir", "threads", "tol",
                   "max_iter", "window", "scale_window", "n_sequence",
                   "n_threshold", "exponents", "noise", "skt", "blowup",
                   "initial_scale", "verify", "level", "margin"},
               "top level");
  RunConfig c;
  c.schema_version = j.value("schema_version", 1);
  if (c.schema_version != 1)
    throw InvalidArgument("config: unsupported schema_version");
  c.model = j.value("model", c.model);
  const std::set<std::string> models = {"skt",          "blowup1",
                                        "blowup2",      "degenerate3",
                                        "custom_linear", "custom_quasilinear"};
  if (!models.count(c.model)) throw InvalidArgument("config: unknown model \"" + c.model + "\"");

  if (j.contains("domain")) {
    const json& d = j.at("domain");
    require_keys(d, {"kind", "length"}, "domain");
    if (d.value("kind", "interval") != std::string("interval"))
      throw InvalidArgument("config: only interval domains are wired into the CLI models");
    c.domain_length = d.value("length", c.domain_length);
    if (!(c.domain_length > 0.0)) throw InvalidArgument("config: domain length must be positive");
  }
  c.bc = j.value("bc", c.bc);
  c.modes = j.value("modes", c.modes);
  c.horizon = j.value("horizon", c.horizon);
  c.step = j.value("step", c.step);
  c.ensemble = j.value("ensemble", c.ensemble);
  c.master_seed = j.value("master_seed", c.master_seed);
  c.out_dir = j.value("out_dir", c.out_dir);
  c.threads = j.value("threads", c.threads);
  c.tol = j.value("tol", c.tol);
  c.max_iter = j.value("max_iter", c.max_iter);
  c.window = j.value("window", c.window);
  c.scale_window = j.value("scale_window", c.scale_window);
  if (j.contains("n_sequence"))
    c.n_sequence = j.at("n_sequence").get<std::vector<double>>();
  c.n_threshold = j.value("n_threshold", c.n_threshold);
  c.initial_scale = j.value("initial_scale", c.initial_scale);
  c.level = j.value("level", c.level);
  c.margin = j.value("margin", c.margin);

  if (j.contains("exponents")) {
    const json& e = j.at("exponents");
    require_keys(e, {"alpha", "beta", "nu", "delta", "gamma"}, "exponents");
    c.alpha = e.value("alpha", c.alpha);
    c.beta = e.value("beta", c.beta);
    c.nu = e.value("nu", c.nu);
    c.delta = e.value("delta", c.delta);
    c.gamma = e.value("gamma", c.gamma);
  }
  if (j.contains("noise")) {
    const json& n = j.at("noise");
    require_keys(n, {"profile", "sigma0", "decay", "active_modes"}, "noise");
    const std::string prof = n.value("profile", "none");
    if (prof == "none")
      c.noise.kind = NoiseProfile::Kind::None;
    else if (prof == "additive")
      c.noise.kind = NoiseProfile::Kind::AdditiveLowModes;
    else if (prof == "tanh")
      c.noise.kind = NoiseProfile::Kind::TanhMultiplicative;
    else
      throw InvalidArgument("config: unknown noise profile \"" + prof + "\"");
    c.noise.sigma0 = n.value("sigma0", 0.0);
    c.noise.decay = n.value("decay", 2.0);
    c.noise.active_modes = n.value("active_modes", 0);
  }
  if (j.contains("skt")) {
    const json& s = j.at("skt");
    require_keys(s, {"k1", "k2", "d11", "d21", "a", "b", "c", "d", "g11", "g12",
                     "g21", "g22"},
                 "skt");
    c.skt.k1 = s.value("k1", c.skt.k1);
    c.skt.k2 = s.value("k2", c.skt.k2);
    c.skt.d11 = s.value("d11", c.skt.d11);
    c.skt.d21 = s.value("d21", c.skt.d21);
    c.skt.a = s.value("a", c.skt.a);
    c.skt.b = s.value("b", c.skt.b);
    c.skt.c = s.value("c", c.skt.c);
    c.skt.d = s.value("d", c.skt.d);
    c.skt.g11 = s.value("g11", c.skt.g11);
    c.skt.g12 = s.value("g12", c.skt.g12);
    c.skt.g21 = s.value("g21", c.skt.g21);
    c.skt.g22 = s.value("g22", c.skt.g22);
  }
  if (j.contains("blowup")) {
    const json& b = j.at("blowup");
    require_keys(b, {"k", "y0", "coupled"}, "blowup");
    c.blowup.k = b.value("k", c.blowup.k);
    c.blowup.y0 = b.value("y0", c.blowup.y0);
    c.blowup.coupled = b.value("coupled", c.blowup.coupled);
  }
  if (j.contains("verify")) {
    const json& v = j.at("verify");
    require_keys(v, {"sector", "smoothing", "at_modulus"}, "verify");
    c.verify_sector = v.value("sector", true);
    c.verify_smoothing = v.value("smoothing", true);
    c.verify_at_modulus = v.value("at_modulus", true);
  }

  if (!(c.modes >= 1)) throw InvalidArgument("config: modes must be >= 1");
  if (!(c.step > 0.0 && c.horizon > c.step))
    throw InvalidArgument("config: need step > 0 and horizon > step");
  if (!(c.ensemble >= 1)) throw InvalidArgument("config: ensemble must be >= 1");
  return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("config: cannot open " + path);
  json j;
  try {
    j = json::parse(in);  // strict: comments are a parse error
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("config: JSON parse error: ") + e.what());
  }
  return from_json(j);
}

json RunConfig::to_json() const {
  json j;
  j["schema_version"] = schema_version;
  j["model"] = model;
  j["domain"] = {{"kind", "interval"}, {"length", domain_length}};
  j["bc"] = bc;
  j["modes"] = modes;
  j["horizon"] = horizon;
  j["step"] = step;
  j["ensemble"] = ensemble;
  j["master_seed"] = master_seed;
  j["out_dir"] = out_dir;
  j["threads"] = threads;
  j["tol"] = tol;
  j["max_iter"] = max_iter;
  j["window"] = window;
  j["scale_window"] = scale_window;
  j["n_sequence"] = n_sequence;
  j["n_threshold"] = n_threshold;
  j["exponents"] = {{"alpha", alpha}, {"beta", beta}, {"nu", nu},
                    {"delta", delta}, {"gamma", gamma}};
  const char* prof = noise.kind == NoiseProfile::Kind::None ? "none"
                     : noise.kind == NoiseProfile::Kind::AdditiveLowModes
                         ? "additive"
                         : "tanh";
  j["noise"] = {{"profile", prof},
                {"sigma0", noise.sigma0},
                {"decay", noise.decay},
                {"active_modes", noise.active_modes}};
  j["skt"] = {{"k1", skt.k1}, {"k2", skt.k2}, {"d11", skt.d11}, {"d21", skt.d21},
              {"a", skt.a},   {"b", skt.b},   {"c", skt.c},     {"d", skt.d},
              {"g11", skt.g11}, {"g12", skt.g12}, {"g21", skt.g21}, {"g22", skt.g22}};
  j["blowup"] = {{"k", blowup.k}, {"y0", blowup.y0}, {"coupled", blowup.coupled}};
  j["initial_scale"] = initial_scale;
  j["verify"] = {{"sector", verify_sector},
                 {"smoothing", verify_smoothing},
                 {"at_modulus", verify_at_modulus}};
  j["level"] = level;
  j["margin"] = margin;
  return j;
}

json RunManifest::to_json() const {
  json j;
  j["config"] = config_echo;
  j["version"] = version;
  json arr = json::array();
  for (const auto& s : samples) {
    json e;
    e["index"] = s.index;
    e["outcome"] = s.outcome;
    if (std::isfinite(s.tau)) e["tau"] = s.tau;
    e["file"] = s.file;
    arr.push_back(e);
  }
  j["samples"] = arr;
  return j;
}

SpectralBasis build_model_basis(const RunConfig& cfg) {
  BoundaryCondition bc;
  if (cfg.bc == "dirichlet")
    bc = BoundaryCondition::Dirichlet;
  else if (cfg.bc == "neumann")
    bc = BoundaryCondition::Neumann;
  else if (cfg.bc == "auto")
    bc = (cfg.model == "skt") ? BoundaryCondition::Neumann
                              : BoundaryCondition::Dirichlet;
  else
    throw InvalidArgument("config: bc must be dirichlet, neumann or auto");
  return build_basis(Domain::interval(cfg.domain_length), bc, cfg.modes);
}

ProblemSpec build_model_spec(const RunConfig& cfg, const SpectralBasis& basis) {
  const int N = basis.modes;
  ProblemSpec spec;
  if (cfg.model == "skt") {
    SKTParams p = cfg.skt;
    p.noise = cfg.noise;
    Eigen::VectorXd u0 = Eigen::VectorXd::Zero(2 * N);
    // scale * (1 + first nonconstant mode) in both components
    const double L = cfg.domain_length;
    u0(0) = cfg.initial_scale * std::sqrt(L);
    if (N > 1) u0(1) = cfg.initial_scale;
    u0(N) = cfg.initial_scale * std::sqrt(L);
    if (N > 1) u0(N + 1) = cfg.initial_scale;
    spec = build_skt_spec(p, basis, u0, cfg.horizon);
  } else if (cfg.model == "blowup1" || cfg.model == "blowup2" ||
             cfg.model == "degenerate3") {
    BlowupParams p = cfg.blowup;
    p.noise = cfg.noise;
    p.example = (cfg.model == "blowup1") ? 1 : (cfg.model == "blowup2") ? 2 : 3;
    spec = build_blowup_spec(p, basis, cfg.horizon);
  } else if (cfg.model == "custom_linear") {
    spec.basis = &basis;
    spec.comps = 1;
    Eigen::MatrixXd A =
        (basis.lambda.array() + 1.0).matrix().asDiagonal();  // I - laplacian
    const SpectralBasis* bp = &basis;
    spec.generator = [bp, A](double, const Eigen::VectorXd&) {
      return OperatorSnapshot(*bp, 1, A);
    };
    spec.frozen_generator = true;
    spec.sigma = make_noise(cfg.noise, basis, 1, 1);
    spec.u0 = Eigen::VectorXd::Zero(N);
    spec.u0(0) = cfg.initial_scale;
    spec.horizon = cfg.horizon;
    const double z0 = spec.z_norm(spec.u0);
    spec.r = 1.0 + z0;
    spec.R = 2.0 * (1.0 + z0);
  } else if (cfg.model == "custom_quasilinear") {
    spec.basis = &basis;
    spec.comps = 1;
    const SpectralBasis* bp = &basis;
    const double beta = cfg.beta;
    spec.generator = [bp, beta](double, const Eigen::VectorXd& u) {
      const double z = sobolev_norm(u, *bp, 1, beta);
      Eigen::MatrixXd A =
          ((1.0 + z * z) * (bp->lambda.array() + 1.0)).matrix().asDiagonal();
      return OperatorSnapshot(*bp, 1, std::move(A));
    };
    // Constant drift along the ground mode, strong enough to push the norm
    // through small thresholds.
    Eigen::VectorXd push = Eigen::VectorXd::Zero(N);
    push(0) = cfg.level;
    spec.drift = [push](double, const Eigen::VectorXd&) { return push; };
    spec.sigma = make_noise(cfg.noise, basis, 1, 1);
    spec.u0 = Eigen::VectorXd::Zero(N);
    spec.u0(0) = cfg.initial_scale;
    spec.horizon = cfg.horizon;
    const double z0 = spec.z_norm(spec.u0);
    spec.r = 2.0 + z0;
    spec.R = 2.0 * (2.0 + z0);
  } else {
    throw InvalidArgument("config: unknown model");
  }
  spec.alpha = cfg.alpha;
  spec.beta = cfg.beta;
  spec.nu = cfg.nu;
  spec.delta = cfg.delta;
  spec.gamma_noise = cfg.gamma;
  spec.validate();
  return spec;
}

void write_trajectory_csv(const Trajectory& traj, const std::string& file) {
  std::ofstream out(file);
  if (!out) throw InvalidArgument("cannot open " + file + " for writing");
  out << "t,component,mode,coefficient\n";
  const int N = traj.basis ? traj.basis->modes
                           : static_cast<int>(traj.values.front().size());
  for (int i = 0; i <= traj.last_index(); ++i) {
    const double t = traj.grid.time(i);
    for (int c = 0; c < traj.comps; ++c)
      for (int m = 0; m < N; ++m)
        out << fmt17(t) << ',' << c << ',' << m << ','
            << fmt17(traj.values[static_cast<size_t>(i)](static_cast<long>(c) * N + m))
            << '\n';
  }
}

void apply_thread_settings(int threads_flag, int config_threads) {
#ifdef _OPENMP
  int n = 0;
  if (threads_flag > 0) {
    n = threads_flag;
  } else if (const char* env = std::getenv("QSPDE_THREADS"); env && *env) {
    n = std::atoi(env);
  } else if (config_threads > 0) {
    n = config_threads;
  }
  if (n > 0) omp_set_num_threads(n);
#else
  (void)threads_flag;
  (void)config_threads;
#endif
}

namespace {

struct SampleRun {
  Trajectory trajectory;
  std::vector<StoppingRecord> records;
  std::string outcome;
  double tau = std::numeric_limits<double>::infinity();
};

SampleRun run_one_sample(const RunConfig& cfg, const ProblemSpec& spec,
                         const TimeGrid& grid, int sample) {
  const int M = spec.sigma.zero() ? 1 : spec.sigma.channels;
  const WienerPath W = sample_wiener(M, grid, cfg.master_seed,
                                     static_cast<std::uint64_t>(sample));
  ContinuationOptions copts;
  copts.window = cfg.window;
  copts.scale_window = cfg.scale_window;
  copts.tol = cfg.tol;
  copts.max_iter = cfg.max_iter;

  SampleRun out;
  const bool ladder = cfg.model.rfind("blowup", 0) == 0 || cfg.model == "degenerate3";
  if (ladder) {
    const ContinuationResult res =
        maximal_continuation(spec, W, grid, cfg.n_sequence, copts);
    out.trajectory = res.trajectory;
    out.records = res.records;
    switch (res.marker) {
      case TauInfinityMarker::Degenerate: out.outcome = "degenerate"; break;
      case TauInfinityMarker::Overflow: out.outcome = "overflow"; break;
      case TauInfinityMarker::AllThresholdsHit: out.outcome = "stopped-at-tau"; break;
      default: out.outcome = "survived"; break;
    }
    for (const auto& r : res.records)
      if (r.hit) out.tau = r.tau;
  } else {
    const double n = cfg.n_threshold > 0.0 ? cfg.n_threshold
                                           : 10.0 * spec.z_norm(spec.u0);
    const ContinuationResult res = maximal_continuation(spec, W, grid, {n}, copts);
    out.trajectory = res.trajectory;
    out.records = res.records;
    if (res.marker == TauInfinityMarker::Degenerate)
      out.outcome = "degenerate";
    else if (res.marker == TauInfinityMarker::Overflow)
      out.outcome = "overflow";
    else if (res.records.front().hit) {
      out.outcome = "stopped-at-tau";
      out.tau = res.records.front().tau;
    } else {
      out.outcome = "converged";
    }
  }
  return out;
}

}  // namespace

int cmd_run(const std::string& config_path, const std::string& out_override,
            int threads_override, std::int64_t seed_override) {
  RunConfig cfg;
  try {
    cfg = RunConfig::from_file(config_path);
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  if (!out_override.empty()) cfg.out_dir = out_override;
  if (seed_override >= 0) cfg.master_seed = static_cast<std::uint64_t>(seed_override);
  apply_thread_settings(threads_override, cfg.threads);

  try {
    const SpectralBasis basis = build_model_basis(cfg);
    const ProblemSpec spec = build_model_spec(cfg, basis);
    const int steps = std::max(2, static_cast<int>(std::round(cfg.horizon / cfg.step)));
    const TimeGrid grid(0.0, cfg.step, steps);

    std::vector<SampleRun> runs(static_cast<size_t>(cfg.ensemble));
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (int s = 0; s < cfg.ensemble; ++s)
      runs[static_cast<size_t>(s)] = run_one_sample(cfg, spec, grid, s);

    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    fs::create_directories(cfg.out_dir + "/samples");
    fs::create_directories(cfg.out_dir + "/plotdata");

    RunManifest manifest;
    manifest.config_echo = cfg.to_json();
    manifest.version = kVersion;
    for (int s = 0; s < cfg.ensemble; ++s) {
      char name[32];
      std::snprintf(name, sizeof(name), "samples/%04d.csv", s);
      const std::string file = cfg.out_dir + "/" + name;
      write_trajectory_csv(runs[static_cast<size_t>(s)].trajectory, file);
      SampleOutcome so;
      so.index = s;
      so.outcome = runs[static_cast<size_t>(s)].outcome;
      so.tau = runs[static_cast<size_t>(s)].tau;
      so.file = name;
      manifest.samples.push_back(so);
    }
    std::ofstream(cfg.out_dir + "/manifest.json") << manifest.to_json().dump(2) << "\n";

    // Aggregate: mean Z-norm curve on the shared prefix, tau histogram.
    size_t min_len = runs.front().trajectory.norm_z.size();
    for (const auto& r : runs) min_len = std::min(min_len, r.trajectory.norm_z.size());
    json summary;
    {
      json curve = json::array();
      std::vector<double> vals(static_cast<size_t>(cfg.ensemble));
      for (size_t i = 0; i < min_len; ++i) {
        for (int s = 0; s < cfg.ensemble; ++s)
          vals[static_cast<size_t>(s)] = runs[static_cast<size_t>(s)].trajectory.norm_z[i];
        curve.push_back({{"t", grid.time(static_cast<int>(i))},
                         {"mean_norm_z", pairwise_mean(vals)}});
      }
      summary["mean_norm_z"] = curve;
      json hist = json::object();
      for (const auto& r : runs)
        for (const auto& rec : r.records)
          if (rec.hit) {
            const std::string key = fmt17(rec.n);
            hist[key] = hist.value(key, 0) + 1;
          }
      summary["tau_hits"] = hist;
      json outcomes = json::object();
      for (const auto& r : runs)
        outcomes[r.outcome] = outcomes.value(r.outcome, 0) + 1;
      summary["outcomes"] = outcomes;
    }
    std::ofstream(cfg.out_dir + "/summary.json") << summary.dump(2) << "\n";

    {
      std::ofstream plot(cfg.out_dir + "/plotdata/mean_norm_z.csv");
      plot << "t,mean_norm_z\n";
      std::vector<double> vals(static_cast<size_t>(cfg.ensemble));
      for (size_t i = 0; i < min_len; ++i) {
        for (int s = 0; s < cfg.ensemble; ++s)
          vals[static_cast<size_t>(s)] = runs[static_cast<size_t>(s)].trajectory.norm_z[i];
        plot << fmt17(grid.time(static_cast<int>(i))) << ',' << fmt17(pairwise_mean(vals))
             << '\n';
      }
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "run error: " << e.what() << "\n";
    return (dynamic_cast<const InvalidArgument*>(&e) != nullptr) ? 2 : 3;
  }
}

int cmd_verify(const std::string& config_path, const std::string& out_override,
               int threads_override) {
  RunConfig cfg;
  try {
    cfg = RunConfig::from_file(config_path);
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  if (!out_override.empty()) cfg.out_dir = out_override;
  apply_thread_settings(threads_override, cfg.threads);

  json report;
  bool ok = true;
  try {
    const SpectralBasis basis = build_model_basis(cfg);
    const ProblemSpec spec = build_model_spec(cfg, basis);

    if (cfg.verify_sector) {
      const OperatorSnapshot A0 = spec.generator(0.0, spec.u0);
      const SectorReport rep = audit_sectoriality(A0, 0.785398163397448, 9);
      report["sector"] = {{"pass_a1", rep.pass_a1},
                          {"pass_a2", rep.pass_a2},
                          {"m_est", rep.m_est},
                          {"min_real", rep.min_real}};
      ok = ok && rep.pass();
    }

    // The remaining audits run on a fixed commuting test family.
    const SpectralBasis tb =
        build_basis(Domain::interval(3.141592653589793), BoundaryCondition::Dirichlet,
                    std::min(cfg.modes, 32));
    const Eigen::MatrixXd base =
        (tb.lambda.array() + 1.0).matrix().asDiagonal();
    const OperatorPath path = [&tb, &base](double t) {
      return OperatorSnapshot(tb, 1, ((1.0 + 0.5 * t) * base).eval());
    };
    const TimeGrid tgrid(0.0, 2e-3, 100);
    const EvolutionFamily fam = build_family(path, tgrid, AuditMode::Require);

    if (cfg.verify_smoothing) {
      const SmoothingReport rep = smoothing_audit(fam, {0.5, 1.0, 0.75}, {0.0, 0.0, 0.5});
      json fits = json::array();
      for (const auto& f : rep.fits) {
        fits.push_back({{"beta", f.beta},
                        {"alpha", f.alpha},
                        {"slope", f.slope},
                        {"c_est", f.c_est},
                        {"pass", std::abs(f.slope - (f.alpha - f.beta)) <= 0.1}});
        ok = ok && std::abs(f.slope - (f.alpha - f.beta)) <= 0.1;
      }
      report["smoothing"] = fits;
    }

    if (cfg.verify_at_modulus) {
      const HolderModulus h = estimate_at_modulus(path, 1.0, TimeGrid(0.0, 0.02, 10));
      report["at_modulus"] = {{"delta", h.delta},
                              {"L_est", h.L_est},
                              {"constant", h.constant_path}};
      ok = ok && !h.constant_path && std::abs(h.delta - 1.0) <= 0.1;
    }

    {
      // Cocycle and identity checks.
      Eigen::VectorXd x = Eigen::VectorXd::Zero(fam.dim());
      x(0) = 1.0;
      if (fam.dim() > 1) x(1) = -0.5;
      const Eigen::VectorXd a = apply(fam, 100, 40, apply(fam, 40, 10, x));
      const Eigen::VectorXd b = apply(fam, 100, 10, x);
      const double cocycle_err = (a - b).norm();
      const double id_err = (apply(fam, 57, 57, x) - x).norm();
      report["cocycle"] = {{"cocycle_err", cocycle_err}, {"identity_err", id_err}};
      ok = ok && cocycle_err <= 1e-12 && id_err == 0.0;
    }

    {
      // Ornstein-Uhlenbeck oracle on a short grid.
      const int N = std::min(cfg.modes, 16);
      const SpectralBasis ob =
          build_basis(Domain::interval(3.141592653589793),
                      BoundaryCondition::Dirichlet, N);
      Eigen::MatrixXd sig = Eigen::MatrixXd::Zero(N, N);
      for (int m = 0; m < N; ++m)
        sig(m, m) = std::pow(1.0 + ob.lambda(m), -2.0);
      const TimeGrid og(0.0, 1e-3, 200);
      double worst = 0.0;
      for (int s = 0; s < 10; ++s) {
        const WienerPath W = sample_wiener(N, og, cfg.master_seed, 1000 + s);
        std::vector<OperatorSnapshot> snaps = {OperatorSnapshot(
            ob, 1, (ob.lambda.array() + 1.0).matrix().asDiagonal())};
        Eigen::VectorXd u0 = Eigen::VectorXd::Zero(N);
        u0(0) = 1.0;
        std::vector<Eigen::VectorXd> f(static_cast<size_t>(og.points()),
                                       Eigen::VectorXd::Zero(N));
        const Trajectory traj =
            linear_pathwise_mild(snaps, f, {sig}, W, 0, u0, og);
        // Exact exponential left-point integration of the same increments.
        Eigen::VectorXd ex = u0;
        double sup = 0.0;
        for (int j = 1; j <= traj.last_index(); ++j) {
          for (int m = 0; m < N; ++m) {
            const double a = 1.0 + ob.lambda(m);
            ex(m) = std::exp(-a * og.h) * (ex(m) + sig(m, m) * W.dW(j - 1, m));
          }
          sup = std::max(sup, (traj.values[static_cast<size_t>(j)] - ex).norm());
        }
        worst = std::max(worst, sup);
      }
      report["ou_oracle"] = {{"worst_sup_error", worst}};
      ok = ok && worst < 5e-3;
    }

    {
      // Bounded rotating generator: pathwise formula vs the strong form.
      const TimeGrid ag(0.0, 1e-3, 1000);
      const WienerPath W = sample_wiener(2, ag, cfg.master_seed, 777);
      const auto B = [](double t) {
        Eigen::MatrixXd m(2, 2);
        m << 0.0, 1.0 + t, -(1.0 + t), 0.0;
        return m;
      };
      const IbpAuditReport rep =
          ibp_identity_audit(B, Eigen::MatrixXd::Identity(2, 2), W, ag);
      report["integration_by_parts"] = {
          {"strong_form_residual", rep.strong_form_residual},
          {"em_sup_diff", rep.em_sup_diff}};
      ok = ok && rep.strong_form_residual < 5e-2 && rep.em_sup_diff < 1e-1;
    }

    report["pass"] = ok;
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    std::ofstream(cfg.out_dir + "/verify.json") << report.dump(2) << "\n";
    std::cout << report.dump(2) << "\n";
    return ok ? 0 : 4;
  } catch (const Error& e) {
    std::cerr << "verify error: " << e.what() << "\n";
    return 3;
  }
}

int cmd_blowup_study(const std::string& config_path,
                     const std::string& out_override, int threads_override,
                     std::int64_t seed_override) {
  RunConfig cfg;
  try {
    cfg = RunConfig::from_file(config_path);
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  if (!out_override.empty()) cfg.out_dir = out_override;
  if (seed_override >= 0) cfg.master_seed = static_cast<std::uint64_t>(seed_override);
  apply_thread_settings(threads_override, cfg.threads);
  if (cfg.model != "blowup1" && cfg.model != "blowup2" && cfg.model != "degenerate3") {
    std::cerr << "config error: blowup-study needs a blowup1/blowup2/degenerate3 model\n";
    return 2;
  }

  try {
    const SpectralBasis basis = build_model_basis(cfg);
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    fs::create_directories(cfg.out_dir + "/plotdata");

    json report;
    if (cfg.model == "degenerate3") {
      BlowupParams p = cfg.blowup;
      p.noise = cfg.noise;
      ContinuationOptions copts;
      copts.window = cfg.window;
      copts.tol = cfg.tol;
      copts.max_iter = cfg.max_iter;
      const DegeneracyCertificate cert = degenerate_witness(
          p, basis, cfg.horizon, cfg.step, cfg.master_seed, 0, copts);
      report["certificate"] = {{"emitted", cert.emitted},
                               {"time", cert.time},
                               {"min_real_eig", cert.min_real_eig}};
      report["pass"] = cert.emitted;
    } else {
      BlowupParams p = cfg.blowup;
      p.noise = cfg.noise;
      p.example = (cfg.model == "blowup1") ? 1 : 2;
      BlowupStudyConfig scfg;
      scfg.ensemble = cfg.ensemble;
      scfg.master_seed = cfg.master_seed;
      scfg.h = cfg.step;
      scfg.horizon = cfg.horizon;
      scfg.n_sequence = cfg.n_sequence;
      scfg.level = cfg.level;
      scfg.margin = cfg.margin;
      scfg.continuation.window = cfg.window;
      scfg.continuation.tol = cfg.tol;
      scfg.continuation.max_iter = cfg.max_iter;
      const BlowupStudyReport rep = blowup_study(p, basis, scfg);

      json asserts = json::array();
      for (const auto& a : rep.assertions)
        asserts.push_back({{"name", a.name},
                           {"pass", a.pass},
                           {"value", a.value},
                           {"bound", a.bound}});
      report["assertions"] = asserts;
      report["det_crossing_time"] = rep.det_crossing_time;
      report["comparison_blowup_time"] = rep.comparison.blowup_time;
      report["comparison_zero_time"] = rep.comparison.zero_time;
      report["pass"] = rep.all_pass();

      {
        std::ofstream plot(cfg.out_dir + "/plotdata/y_mean.csv");
        plot << "t,mean,half_width\n";
        for (size_t i = 0; i < rep.y_curve.t.size(); ++i)
          plot << fmt17(rep.y_curve.t[i]) << ',' << fmt17(rep.y_curve.mean[i])
               << ',' << fmt17(rep.y_curve.half_width[i]) << '\n';
      }
      {
        std::ofstream plot(cfg.out_dir + "/plotdata/comparison.csv");
        plot << "t,y\n";
        for (const auto& [t, y] : rep.comparison.trajectory)
          plot << fmt17(t) << ',' << fmt17(y) << '\n';
      }
      {
        std::ofstream plot(cfg.out_dir + "/plotdata/tau_ladder.csv");
        plot << "sample,n,tau,hit\n";
        for (size_t s = 0; s < rep.ladders.size(); ++s)
          for (const auto& r : rep.ladders[s])
            plot << s << ',' << fmt17(r.n) << ',' << fmt17(r.tau) << ','
                 << (r.hit ? 1 : 0) << '\n';
      }
    }
    std::ofstream(cfg.out_dir + "/study.json") << report.dump(2) << "\n";
    std::cout << report.dump(2) << "\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << "study error: " << e.what() << "\n";
    return 3;
  }
}

int cmd_replay(const std::string& config_path, int sample,
               const std::string& out_override) {
  RunConfig cfg;
  try {
    cfg = RunConfig::from_file(config_path);
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  if (!out_override.empty()) cfg.out_dir = out_override;
  if (sample < 0 || sample >= cfg.ensemble) {
    std::cerr << "replay: sample index out of range\n";
    return 2;
  }
  try {
    const SpectralBasis basis = build_model_basis(cfg);
    const ProblemSpec spec = build_model_spec(cfg, basis);
    const int steps = std::max(2, static_cast<int>(std::round(cfg.horizon / cfg.step)));
    const TimeGrid grid(0.0, cfg.step, steps);
    const SampleRun run = run_one_sample(cfg, spec, grid, sample);

    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir + "/replay");
    char name[32];
    std::snprintf(name, sizeof(name), "%04d.csv", sample);
    const std::string file = cfg.out_dir + "/replay/" + name;
    write_trajectory_csv(run.trajectory, file);

    const std::string original = cfg.out_dir + "/samples/" + name;
    if (fs::exists(original)) {
      std::ifstream a(original, std::ios::binary), b(file, std::ios::binary);
      const std::string sa((std::istreambuf_iterator<char>(a)), {});
      const std::string sb((std::istreambuf_iterator<char>(b)), {});
      if (sa == sb) {
        std::cout << "replay identical to " << original << "\n";
      } else {
        std::cout << "replay DIFFERS from " << original << "\n";
        return 3;
      }
    } else {
      std::cout << "replay written to " << file << " (no original to compare)\n";
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "replay error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace qspde
