#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "qspde/models.hpp"
#include "qspde/solver.hpp"

namespace qspde {

// Batch run description. JSON is parsed strictly: unknown keys are rejected,
// defaulted fields are echoed back into the persisted config so the manifest
// alone reproduces every byte of output.
struct RunConfig {
  int schema_version = 1;
  std::string model = "skt";  // skt | blowup1 | blowup2 | degenerate3 |
                              // custom_linear | custom_quasilinear
  double domain_length = 3.141592653589793238462643;
  std::string bc = "auto";    // dirichlet | neumann | auto (model default)
  int modes = 16;
  double horizon = 0.05;
  double step = 5e-4;
  int ensemble = 1;
  std::uint64_t master_seed = 12345;
  std::string out_dir = "out";
  int threads = 0;  // 0 = library default / QSPDE_THREADS

  double tol = 1e-8;
  int max_iter = 12;
  double window = 0.05;
  bool scale_window = true;
  std::vector<double> n_sequence = {2, 4, 8, 16, 32, 64, 128, 256};
  double n_threshold = 0.0;  // 0 -> 10 * ||u0||_Z for single-threshold runs

  double alpha = 0.5, beta = 0.625, nu = 1.0, delta = 0.1, gamma = 0.45;

  NoiseProfile noise;
  SKTParams skt;
  BlowupParams blowup;
  double initial_scale = 0.1;  // skt: u0 = scale * (1 + first mode profile)

  bool verify_sector = true;
  bool verify_smoothing = true;
  bool verify_at_modulus = true;

  double level = 100.0;
  double margin = 0.15;

  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig from_file(const std::string& path);
  nlohmann::json to_json() const;
};

struct SampleOutcome {
  int index = 0;
  std::string outcome;  // converged | stopped-at-tau | degenerate | overflow | survived
  double tau = std::numeric_limits<double>::infinity();
  std::string file;
};

struct RunManifest {
  nlohmann::json config_echo;
  std::string version;
  std::vector<SampleOutcome> samples;
  nlohmann::json to_json() const;
};

// Exit codes: 0 ok, 2 config error, 3 run failure, 4 verification failure.
int cmd_run(const std::string& config_path, const std::string& out_override,
            int threads_override, std::int64_t seed_override);
int cmd_verify(const std::string& config_path, const std::string& out_override,
               int threads_override);
int cmd_blowup_study(const std::string& config_path,
                     const std::string& out_override, int threads_override,
                     std::int64_t seed_override);
int cmd_replay(const std::string& config_path, int sample,
               const std::string& out_override);

// Shared helpers (used by the CLI and by tests).
ProblemSpec build_model_spec(const RunConfig& cfg, const SpectralBasis& basis);
SpectralBasis build_model_basis(const RunConfig& cfg);
void write_trajectory_csv(const Trajectory& traj, const std::string& file);
void apply_thread_settings(int threads_flag, int config_threads);

}  // namespace qspde
