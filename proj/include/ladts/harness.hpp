#pragma once

#include <string>
#include <vector>

#include "ladts/env.hpp"
#include "ladts/policies.hpp"
#include "ladts/sac.hpp"

namespace ladts {

// Everything a run needs: environment ranges, trainer hyperparameters,
// diffusion settings, method/seed bookkeeping, and output handling.
struct ExperimentConfig {
  EnvConfig env;
  Hyperparams hp;
  Method method = Method::lad;
  uint64_t seed = 1;
  int num_seeds = 5;
  int denoise_steps = 5;
  double beta_min = 0.1;
  double beta_max = 10.0;
  int embed_dim = 16;
  int hidden = 20;
  bool eval_greedy = true;
  bool training = true;
  bool measure_wall = true;  // wall_ms is the one column timing makes nondeterministic
  BatchMode batch_mode = BatchMode::openmp;
  std::string out_dir;
  std::string checkpoint_dir;  // load before running when set
  std::string sweep_param;     // tags rows; empty means plain runs
  double sweep_value = 0.0;
};

struct MetricsRow {
  std::string method;
  uint64_t seed = 0;
  std::string sweep_param = "none";
  double sweep_value = 0.0;
  int episode = 0;
  double mean_delay_s = 0.0;
  int convergence_episode = 0;
  double wall_ms = 0.0;
};

// convergence_episode: first episode whose trailing-5 moving average is
// within 5% of the final-10-episode mean; final_delay is that mean.
struct ConvergenceSummary {
  int convergence_episode = 0;
  double final_delay = 0.0;
};

ConvergenceSummary summarize(const std::vector<double>& episode_delays);

PolicyConfig policy_config_from(const ExperimentConfig& cfg);

// One episode of the slotted loop: reset, then per slot / per node / per
// task observe-decide-apply, per-node training at slot end. Optionally
// records every task delay.
MetricsRow run_episode(const ExperimentConfig& cfg, SchedulerPolicy& policy,
                       Environment& env, int episode,
                       std::vector<double>* delay_log = nullptr);

struct RunResult {
  std::vector<MetricsRow> rows;
  ConvergenceSummary summary;
};

// Full training run for one (method, seed): E episodes with a fresh
// environment reset each episode and persistent networks. Saves
// checkpoints under <out_dir>/ckpt when out_dir is set.
RunResult run_training(const ExperimentConfig& cfg);

// num_seeds runs at seeds seed..seed+num_seeds-1 (independent jobs).
std::vector<MetricsRow> run_seeds(const ExperimentConfig& cfg);

// Fresh multi-seed run per sweep value, everything else fixed. Accepted
// parameters: N_max, f_max, z_max, B, I, alpha.
std::vector<MetricsRow> sweep(const ExperimentConfig& cfg,
                              const std::string& param,
                              const std::vector<double>& values);

void apply_sweep_value(ExperimentConfig& cfg, const std::string& param,
                       double value);

// Fixed column order:
// method,seed,sweep_param,sweep_value,episode,mean_delay_s,convergence_episode,wall_ms
// Floats at 6 significant digits; byte-stable given identical rows.
void write_csv(const std::vector<MetricsRow>& rows, const std::string& path);

std::vector<MetricsRow> read_csv(const std::string& path);

// Per-series plot files: curve_<method>[_<param>_<value>].dat holds
// episode vs mean/std over seeds; final_delays.dat holds one line per
// (method, sweep value) with the final-window mean/std over seeds.
void emit_plot_data(const std::vector<MetricsRow>& rows,
                    const std::string& dir);

}  // namespace ladts
