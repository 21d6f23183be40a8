#include <CLI11.hpp>

#include "qspde/ensemble.hpp"

int main(int argc, char** argv) {
  CLI::App app{"qspde: pathwise mild solver laboratory for quasilinear SPDEs"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir;
  int threads = 0;
  std::int64_t seed = -1;
  int sample = 0;

  auto add_common = [&](CLI::App* cmd, bool with_seed) {
    cmd->add_option("--config", config, "run configuration (JSON)")->required();
    cmd->add_option("--out", out_dir, "output directory override");
    cmd->add_option("--threads", threads, "worker thread count (0 = default)");
    if (with_seed) cmd->add_option("--seed", seed, "master seed override");
  };

  CLI::App* run = app.add_subcommand("run", "execute a seeded ensemble");
  add_common(run, true);
  CLI::App* verify =
      app.add_subcommand("verify", "run the operator/family/formula audits");
  add_common(verify, false);
  CLI::App* study =
      app.add_subcommand("blowup-study", "blow-up and degeneracy studies");
  add_common(study, true);
  CLI::App* replay = app.add_subcommand("replay", "re-run a single sample");
  add_common(replay, false);
  replay->add_option("--sample", sample, "sample index")->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return qspde::cmd_run(config, out_dir, threads, seed);
  if (verify->parsed()) return qspde::cmd_verify(config, out_dir, threads);
  if (study->parsed()) return qspde::cmd_blowup_study(config, out_dir, threads, seed);
  if (replay->parsed()) return qspde::cmd_replay(config, sample, out_dir);
  return 1;
}
