#include "ladts/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace ladts {

namespace {

double mean_of(const std::vector<double>& v, size_t from, size_t to) {
  double s = 0.0;
  for (size_t i = from; i < to; ++i) s += v[i];
  return s / static_cast<double>(to - from);
}

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

ConvergenceSummary summarize(const std::vector<double>& episode_delays) {
  const size_t e = episode_delays.size();
  if (e == 0) return {};
  const size_t tail = std::min<size_t>(10, e);
  const double final_mean = mean_of(episode_delays, e - tail, e);
  ConvergenceSummary s;
  s.final_delay = final_mean;
  s.convergence_episode = static_cast<int>(e);
  for (size_t i = 0; i < e; ++i) {
    const size_t from = i >= 4 ? i - 4 : 0;
    const double ma = mean_of(episode_delays, from, i + 1);
    if (std::abs(ma - final_mean) <= 0.05 * std::abs(final_mean)) {
      s.convergence_episode = static_cast<int>(i + 1);
      break;
    }
  }
  return s;
}

PolicyConfig policy_config_from(const ExperimentConfig& cfg) {
  PolicyConfig p;
  p.method = cfg.method;
  p.num_nodes = cfg.env.num_nodes;
  p.obs_dim = cfg.env.num_nodes + 2;
  p.latent_slots = cfg.env.tasks_max;
  p.hidden = cfg.hidden;
  p.embed_dim = cfg.embed_dim;
  p.denoise_steps = cfg.denoise_steps;
  p.beta_min = cfg.beta_min;
  p.beta_max = cfg.beta_max;
  p.hp = cfg.hp;
  p.seed = cfg.seed;
  p.eval_greedy = cfg.eval_greedy;
  p.batch_mode = cfg.batch_mode;
  p.planned_train_steps =
      static_cast<long>(cfg.hp.episodes) * static_cast<long>(cfg.env.horizon);
  return p;
}

MetricsRow run_episode(const ExperimentConfig& cfg, SchedulerPolicy& policy,
                       Environment& env, int episode,
                       std::vector<double>* delay_log) {
  const auto t0 = std::chrono::steady_clock::now();
  env.reset();
  double delay_sum = 0.0;
  long task_count = 0;

  for (int t = 1; t <= cfg.env.horizon; ++t) {
    env.begin_slot();
    for (int b = 0; b < cfg.env.num_nodes; ++b) {
      for (const Task& task : env.tasks_at(b)) {
        const Observation obs = env.observe(task);
        const TaskContext ctx{b, task.arrival_index, &env, cfg.training};
        const Action a = policy.select(obs, task, ctx);
        const StepOutcome out = env.apply_decision(task, a);
        policy.feedback(obs, task, a, out.reward, ctx);
        delay_sum += out.service_delay_s;
        ++task_count;
        if (delay_log) delay_log->push_back(out.service_delay_s);
      }
      if (cfg.training) policy.on_slot_end(b);
    }
    env.advance_slot();
  }
  policy.on_episode_end();

  MetricsRow row;
  row.method = method_name(cfg.method);
  row.seed = cfg.seed;
  row.sweep_param = cfg.sweep_param.empty() ? "none" : cfg.sweep_param;
  row.sweep_value = cfg.sweep_value;
  row.episode = episode;
  row.mean_delay_s = delay_sum / static_cast<double>(task_count);
  if (cfg.measure_wall) {
    const auto t1 = std::chrono::steady_clock::now();
    row.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  }
  return row;
}

RunResult run_training(const ExperimentConfig& cfg) {
  Environment env(cfg.env, cfg.seed);
  auto policy = make_policy(policy_config_from(cfg));
  if (!cfg.checkpoint_dir.empty()) policy->load(cfg.checkpoint_dir);

  RunResult result;
  std::vector<double> episode_delays;
  episode_delays.reserve(cfg.hp.episodes);
  for (int e = 1; e <= cfg.hp.episodes; ++e) {
    MetricsRow row = run_episode(cfg, *policy, env, e);
    episode_delays.push_back(row.mean_delay_s);
    result.rows.push_back(std::move(row));
  }
  result.summary = summarize(episode_delays);
  for (auto& row : result.rows)
    row.convergence_episode = result.summary.convergence_episode;

  if (cfg.training && !cfg.out_dir.empty()) {
    const std::string ckpt = cfg.out_dir + "/ckpt";
    std::filesystem::create_directories(ckpt);
    policy->save(ckpt);
  }
  return result;
}

std::vector<MetricsRow> run_seeds(const ExperimentConfig& cfg) {
  std::vector<ExperimentConfig> jobs(cfg.num_seeds, cfg);
  for (int i = 0; i < cfg.num_seeds; ++i) jobs[i].seed = cfg.seed + i;
  std::vector<RunResult> results(jobs.size());
  // independent jobs; row order below stays fixed regardless of scheduling
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < static_cast<int>(jobs.size()); ++i)
    results[i] = run_training(jobs[i]);

  std::vector<MetricsRow> rows;
  for (const auto& r : results)
    rows.insert(rows.end(), r.rows.begin(), r.rows.end());
  return rows;
}

void apply_sweep_value(ExperimentConfig& cfg, const std::string& param,
                       double value) {
  if (param == "N_max") {
    cfg.env.tasks_max = std::max(cfg.env.tasks_min,
                                 static_cast<int>(std::lround(value)));
  } else if (param == "f_max") {
    cfg.env.capacity_max = value;
    cfg.env.capacity_min = std::min(cfg.env.capacity_min, value);
  } else if (param == "z_max") {
    cfg.env.quality_max = std::max(cfg.env.quality_min,
                                   static_cast<int>(std::lround(value)));
  } else if (param == "B") {
    cfg.env.num_nodes = static_cast<int>(std::lround(value));
  } else if (param == "I") {
    cfg.denoise_steps = static_cast<int>(std::lround(value));
  } else if (param == "alpha") {
    cfg.hp.alpha_init = value;
  } else {
    throw std::invalid_argument("sweep: unknown parameter " + param);
  }
  cfg.env.validate();
}

std::vector<MetricsRow> sweep(const ExperimentConfig& cfg,
                              const std::string& param,
                              const std::vector<double>& values) {
  std::vector<ExperimentConfig> jobs;
  for (double v : values) {
    ExperimentConfig c = cfg;
    apply_sweep_value(c, param, v);
    c.sweep_param = param;
    c.sweep_value = v;
    for (int i = 0; i < cfg.num_seeds; ++i) {
      ExperimentConfig job = c;
      job.seed = cfg.seed + i;
      jobs.push_back(std::move(job));
    }
  }
  std::vector<RunResult> results(jobs.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < static_cast<int>(jobs.size()); ++i)
    results[i] = run_training(jobs[i]);

  std::vector<MetricsRow> rows;
  for (const auto& r : results)
    rows.insert(rows.end(), r.rows.begin(), r.rows.end());
  return rows;
}

void write_csv(const std::vector<MetricsRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // fixed newlines on every platform
  if (!out) throw std::runtime_error("write_csv: cannot open " + path);
  out << "method,seed,sweep_param,sweep_value,episode,mean_delay_s,"
         "convergence_episode,wall_ms\n";
  for (const auto& r : rows) {
    out << r.method << ',' << r.seed << ',' << r.sweep_param << ','
        << fmt_g(r.sweep_value) << ',' << r.episode << ','
        << fmt_g(r.mean_delay_s) << ',' << r.convergence_episode << ','
        << fmt_g(r.wall_ms) << '\n';
  }
  if (!out) throw std::runtime_error("write_csv: write failed for " + path);
}

std::vector<MetricsRow> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("read_csv: empty file " + path);
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    MetricsRow r;
    std::getline(ss, r.method, ',');
    std::getline(ss, field, ',');
    r.seed = std::stoull(field);
    std::getline(ss, r.sweep_param, ',');
    std::getline(ss, field, ',');
    r.sweep_value = std::stod(field);
    std::getline(ss, field, ',');
    r.episode = std::stoi(field);
    std::getline(ss, field, ',');
    r.mean_delay_s = std::stod(field);
    std::getline(ss, field, ',');
    r.convergence_episode = std::stoi(field);
    std::getline(ss, field, ',');
    r.wall_ms = std::stod(field);
    rows.push_back(std::move(r));
  }
  return rows;
}

namespace {

struct SeriesKey {
  std::string method;
  std::string param;
  double value;
  bool operator<(const SeriesKey& o) const {
    if (method != o.method) return method < o.method;
    if (param != o.param) return param < o.param;
    return value < o.value;
  }
};

}  // namespace

void emit_plot_data(const std::vector<MetricsRow>& rows,
                    const std::string& dir) {
  std::filesystem::create_directories(dir);

  // group: series -> episode -> per-seed delays
  std::map<SeriesKey, std::map<int, std::vector<double>>> curves;
  // series -> seed -> per-episode delays (for the final window)
  std::map<SeriesKey, std::map<uint64_t, std::vector<double>>> by_seed;
  for (const auto& r : rows) {
    const SeriesKey key{r.method, r.sweep_param, r.sweep_value};
    curves[key][r.episode].push_back(r.mean_delay_s);
    by_seed[key][r.seed].push_back(r.mean_delay_s);
  }

  for (const auto& [key, episodes] : curves) {
    std::string name = "curve_" + key.method;
    if (key.param != "none") name += "_" + key.param + "_" + fmt_g(key.value);
    std::ofstream out(dir + "/" + name + ".dat", std::ios::binary);
    if (!out) throw std::runtime_error("emit_plot_data: cannot open " + dir + "/" + name);
    out << "# episode mean_delay_s std_delay_s seeds\n";
    for (const auto& [episode, vals] : episodes) {
      double mean = 0.0;
      for (double v : vals) mean += v;
      mean /= static_cast<double>(vals.size());
      double var = 0.0;
      for (double v : vals) var += (v - mean) * (v - mean);
      const double sd = vals.size() > 1 ? std::sqrt(var / vals.size()) : 0.0;
      out << episode << ' ' << fmt_g(mean) << ' ' << fmt_g(sd) << ' '
          << vals.size() << '\n';
    }
  }

  std::ofstream out(dir + "/final_delays.dat", std::ios::binary);
  if (!out) throw std::runtime_error("emit_plot_data: cannot open " + dir + "/final_delays.dat");
  out << "# method sweep_param sweep_value mean_final_delay_s std_final_delay_s seeds\n";
  for (const auto& [key, seeds] : by_seed) {
    std::vector<double> finals;
    for (const auto& [seed, delays] : seeds) {
      const size_t tail = std::min<size_t>(10, delays.size());
      finals.push_back(mean_of(delays, delays.size() - tail, delays.size()));
    }
    double mean = 0.0;
    for (double v : finals) mean += v;
    mean /= static_cast<double>(finals.size());
    double var = 0.0;
    for (double v : finals) var += (v - mean) * (v - mean);
    const double sd = finals.size() > 1 ? std::sqrt(var / finals.size()) : 0.0;
    out << key.method << ' ' << key.param << ' ' << fmt_g(key.value) << ' '
        << fmt_g(mean) << ' ' << fmt_g(sd) << ' ' << finals.size() << '\n';
  }
}

}  // namespace ladts
