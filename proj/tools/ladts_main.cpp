// Command-line front end: train / sweep / eval over the slotted
// offloading environment. All knobs can also come from a flat key=value
// config file (--config); command-line flags win.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ladts/harness.hpp"

namespace {

// Options carry Table-style units (Mbits, GHz); build() converts to the
// base units the environment uses.
struct Options {
  // environment
  int num_nodes = 20;
  int horizon = 60;
  double slot_seconds = 1.0;
  int tasks_min = 1, tasks_max = 50;
  double data_mbits_min = 2.0, data_mbits_max = 5.0;
  double result_mbits_min = 0.6, result_mbits_max = 1.0;
  int quality_min = 1, quality_max = 15;
  double rho_min = 100.0, rho_max = 300.0;
  double rho_scale = 1e6;
  double rate_mbits_min = 400.0, rate_mbits_max = 500.0;
  double capacity_ghz_min = 10.0, capacity_ghz_max = 50.0;
  // trainer
  double gamma = 0.95, tau = 0.005, alpha = 0.05, target_entropy = -1.0;
  int batch = 64;
  double lr_actor = 1e-4, lr_critic = 1e-3, lr_alpha = 3e-4;
  int replay_capacity = 1000, train_threshold = 300, episodes = 60;
  // diffusion
  int denoise_steps = 5;
  double beta_min = 0.1, beta_max = 10.0;
  int embed_dim = 16, hidden = 20;
  // run control
  std::string method = "lad";
  uint64_t seed = 1;
  int seeds = 5;
  std::string out = "out";
  bool eval_greedy = true;
  bool measure_wall = true;
  bool parallel_kernels = true;
  std::string target_style = "paper";
  std::string actor_style = "paper";
  std::string noise_coeff = "half_var";

  ladts::ExperimentConfig build() const {
    ladts::ExperimentConfig cfg;
    cfg.env.num_nodes = num_nodes;
    cfg.env.horizon = horizon;
    cfg.env.slot_seconds = slot_seconds;
    cfg.env.tasks_min = tasks_min;
    cfg.env.tasks_max = tasks_max;
    cfg.env.data_bits_min = data_mbits_min * 1e6;
    cfg.env.data_bits_max = data_mbits_max * 1e6;
    cfg.env.result_bits_min = result_mbits_min * 1e6;
    cfg.env.result_bits_max = result_mbits_max * 1e6;
    cfg.env.quality_min = quality_min;
    cfg.env.quality_max = quality_max;
    cfg.env.rho_min = rho_min;
    cfg.env.rho_max = rho_max;
    cfg.env.rho_scale = rho_scale;
    cfg.env.rate_min = rate_mbits_min * 1e6;
    cfg.env.rate_max = rate_mbits_max * 1e6;
    cfg.env.capacity_min = capacity_ghz_min * 1e9;
    cfg.env.capacity_max = capacity_ghz_max * 1e9;
    cfg.env.validate();

    cfg.hp.gamma = gamma;
    cfg.hp.tau = tau;
    cfg.hp.alpha_init = alpha;
    cfg.hp.target_entropy = target_entropy;
    cfg.hp.batch = batch;
    cfg.hp.lr_actor = lr_actor;
    cfg.hp.lr_critic = lr_critic;
    cfg.hp.lr_alpha = lr_alpha;
    cfg.hp.replay_capacity = replay_capacity;
    cfg.hp.train_threshold = train_threshold;
    cfg.hp.episodes = episodes;
    cfg.hp.target_style = target_style == "expectation"
                              ? ladts::TargetStyle::expectation
                              : ladts::TargetStyle::paper;
    cfg.hp.actor_style = actor_style == "standard" ? ladts::ActorStyle::standard
                                                   : ladts::ActorStyle::paper;
    cfg.hp.noise_coeff = noise_coeff == "sqrt_var" ? ladts::NoiseCoeff::sqrt_var
                                                   : ladts::NoiseCoeff::half_var;

    cfg.method = ladts::parse_method(method);
    cfg.seed = seed;
    cfg.num_seeds = seeds;
    cfg.denoise_steps = denoise_steps;
    cfg.beta_min = beta_min;
    cfg.beta_max = beta_max;
    cfg.embed_dim = embed_dim;
    cfg.hidden = hidden;
    cfg.eval_greedy = eval_greedy;
    cfg.measure_wall = measure_wall;
    cfg.batch_mode = parallel_kernels ? ladts::BatchMode::openmp
                                      : ladts::BatchMode::serial;
    cfg.out_dir = out;
    return cfg;
  }
};

void add_options(CLI::App& app, Options& o) {
  app.add_option("--num-nodes", o.num_nodes, "Number of edge nodes B");
  app.add_option("--horizon", o.horizon, "Time slots per episode");
  app.add_option("--slot-seconds", o.slot_seconds, "Slot length in seconds");
  app.add_option("--tasks-min", o.tasks_min, "Min arrivals per node per slot");
  app.add_option("--tasks-max", o.tasks_max, "Max arrivals per node per slot");
  app.add_option("--data-mbits-min", o.data_mbits_min, "Min request size (Mbit)");
  app.add_option("--data-mbits-max", o.data_mbits_max, "Max request size (Mbit)");
  app.add_option("--result-mbits-min", o.result_mbits_min, "Min result size (Mbit)");
  app.add_option("--result-mbits-max", o.result_mbits_max, "Max result size (Mbit)");
  app.add_option("--quality-min", o.quality_min, "Min denoising steps per task");
  app.add_option("--quality-max", o.quality_max, "Max denoising steps per task");
  app.add_option("--rho-min", o.rho_min, "Min per-step cycle cost (rho units)");
  app.add_option("--rho-max", o.rho_max, "Max per-step cycle cost (rho units)");
  app.add_option("--rho-scale", o.rho_scale, "Cycles per rho unit");
  app.add_option("--rate-mbits-min", o.rate_mbits_min, "Min link rate (Mbit/s)");
  app.add_option("--rate-mbits-max", o.rate_mbits_max, "Max link rate (Mbit/s)");
  app.add_option("--capacity-ghz-min", o.capacity_ghz_min, "Min node capacity (GHz)");
  app.add_option("--capacity-ghz-max", o.capacity_ghz_max, "Max node capacity (GHz)");

  app.add_option("--gamma", o.gamma, "Reward decay");
  app.add_option("--tau", o.tau, "Soft-update weight");
  app.add_option("--alpha", o.alpha, "Initial entropy temperature");
  app.add_option("--target-entropy", o.target_entropy, "Entropy target");
  app.add_option("--batch", o.batch, "Training batch size");
  app.add_option("--lr-actor", o.lr_actor, "Actor learning rate");
  app.add_option("--lr-critic", o.lr_critic, "Critic learning rate");
  app.add_option("--lr-alpha", o.lr_alpha, "Temperature learning rate");
  app.add_option("--replay-capacity", o.replay_capacity, "Experience pool size");
  app.add_option("--train-threshold", o.train_threshold,
                 "Train only once strictly more tuples are stored");
  app.add_option("--episodes", o.episodes, "Training episodes E");

  app.add_option("--denoise-steps", o.denoise_steps, "Chain length I");
  app.add_option("--beta-min", o.beta_min, "Schedule endpoint");
  app.add_option("--beta-max", o.beta_max, "Schedule endpoint");
  app.add_option("--embed-dim", o.embed_dim, "Timestep embedding width");
  app.add_option("--hidden", o.hidden, "Hidden layer width");

  app.add_option("--method", o.method, "lad|dqn|sac|d2sac|opt");
  app.add_option("--seed", o.seed, "Base seed");
  app.add_option("--seeds", o.seeds, "Seeds per configuration");
  app.add_option("--out", o.out, "Output directory");
  app.add_flag("--eval-greedy,!--no-eval-greedy", o.eval_greedy,
               "Argmax action selection outside training");
  app.add_flag("--measure-wall,!--no-measure-wall", o.measure_wall,
               "Record wall time per episode (the one nondeterministic column)");
  app.add_flag("--parallel,!--serial", o.parallel_kernels,
               "OpenMP batch kernels (serial reference otherwise)");
  app.add_option("--target-style", o.target_style, "paper|expectation");
  app.add_option("--actor-style", o.actor_style, "paper|standard");
  app.add_option("--noise-coeff", o.noise_coeff, "half_var|sqrt_var");
}

void write_outputs(const std::vector<ladts::MetricsRow>& rows,
                   const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::string csv = out_dir + "/metrics.csv";
  ladts::write_csv(rows, csv);
  ladts::emit_plot_data(rows, out_dir + "/plots");
  std::cout << "wrote " << rows.size() << " rows to " << csv << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-slotted edge offloading simulator with diffusion-policy "
               "and baseline schedulers"};
  app.require_subcommand(1);

  Options opt;
  add_options(app, opt);
  app.set_config("--config", "", "Flat key=value config file; flags override");

  auto* train = app.add_subcommand("train", "Train one method across seeds");
  train->fallthrough();

  auto* sweep_cmd = app.add_subcommand("sweep", "Fresh runs per parameter value");
  sweep_cmd->fallthrough();
  std::string sweep_param;
  std::vector<double> sweep_values;
  sweep_cmd->add_option("--param", sweep_param, "N_max|f_max|z_max|B|I|alpha")
      ->required();
  sweep_cmd->add_option("--values", sweep_values, "Comma-separated values")
      ->required()
      ->delimiter(',');

  auto* eval_cmd = app.add_subcommand("eval", "Run saved checkpoints without training");
  eval_cmd->fallthrough();
  std::string ckpt_dir;
  eval_cmd->add_option("--ckpt", ckpt_dir, "Checkpoint directory");

  CLI11_PARSE(app, argc, argv);

  try {
    ladts::ExperimentConfig cfg = opt.build();
    if (train->parsed()) {
      write_outputs(ladts::run_seeds(cfg), cfg.out_dir);
    } else if (sweep_cmd->parsed()) {
      write_outputs(ladts::sweep(cfg, sweep_param, sweep_values), cfg.out_dir);
    } else if (eval_cmd->parsed()) {
      cfg.training = false;
      cfg.checkpoint_dir = ckpt_dir;
      write_outputs(ladts::run_seeds(cfg), cfg.out_dir);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
