// Compares the serial reference batch kernels against the OpenMP ones on
// a synthetic replay batch: wall time per call plus a bitwise equality
// check of every loss and gradient (the kernels reduce per-sample slots
// in fixed order, so thread count must not change a single bit).

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#else
#include <chrono>
#endif

#include "ladts/sac.hpp"

using namespace ladts;

namespace {

double now_s() {
#ifdef _OPENMP
  return omp_get_wtime();
#else
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
#endif
}

std::vector<Transition> make_batch(int k, int nodes, Rng& rng) {
  std::vector<Transition> ts(k);
  const int obs_dim = nodes + 2;
  for (auto& t : ts) {
    t.s.normalized.resize(obs_dim);
    t.s_next.normalized.resize(obs_dim);
    for (auto& v : t.s.normalized) v = rng.uniform01();
    for (auto& v : t.s_next.normalized) v = rng.uniform01();
    t.latent.resize(nodes);
    t.latent_next.resize(nodes);
    for (auto& v : t.latent) v = rng.normal();
    for (auto& v : t.latent_next) v = rng.normal();
    t.a = Action{rng.uniform_int(0, nodes - 1), nodes};
    t.reward = -rng.uniform(0.01, 1.0);
    t.done = false;
  }
  return ts;
}

bool bits_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

bool bundles_equal(const GradientBundle& a, const GradientBundle& b) {
  if (a.gw.size() != b.gw.size()) return false;
  for (size_t l = 0; l < a.gw.size(); ++l)
    if (!bits_equal(a.gw[l], b.gw[l]) || !bits_equal(a.gb[l], b.gb[l])) return false;
  return bits_equal(a.ginput, b.ginput);
}

}  // namespace

int main(int argc, char** argv) {
  const int batch_size = argc > 1 ? std::atoi(argv[1]) : 64;
  const int reps = argc > 2 ? std::atoi(argv[2]) : 200;
  const int nodes = 5;
  const int obs_dim = nodes + 2;

  Rng rng(12345);
  Hyperparams hp;
  hp.batch = batch_size;
  const auto sched = build_schedule(5, 0.1, 10.0);
  SacNets nets = make_sac_nets(ActorModel::Kind::diffusion, obs_dim, nodes, 20,
                               16, sched, hp, rng);

  const auto transitions = make_batch(batch_size, nodes, rng);
  Batch batch(batch_size);
  for (int i = 0; i < batch_size; ++i) batch[i] = &transitions[i];

  std::vector<double> chain_noise(
      static_cast<size_t>(batch_size) * nets.actor.noise_len());
  for (auto& v : chain_noise) v = rng.normal();

#ifdef _OPENMP
  std::printf("threads: %d, batch: %d, reps: %d\n", omp_get_max_threads(),
              batch_size, reps);
#else
  std::printf("built without OpenMP; both modes run the serial loop\n");
#endif

  struct KernelRow {
    const char* name;
    double serial_s = 0.0;
    double omp_s = 0.0;
    bool equal = false;
  };
  std::vector<KernelRow> table;

  {
    KernelRow row{"q_target"};
    std::vector<double> ys, yp;
    double t0 = now_s();
    for (int r = 0; r < reps; ++r) {
      Rng step_rng(777);
      ys = q_target(batch, nets.actor, nets.target1, nets.target2, hp,
                    nets.alpha, step_rng, BatchMode::serial);
    }
    row.serial_s = now_s() - t0;
    t0 = now_s();
    for (int r = 0; r < reps; ++r) {
      Rng step_rng(777);
      yp = q_target(batch, nets.actor, nets.target1, nets.target2, hp,
                    nets.alpha, step_rng, BatchMode::openmp);
    }
    row.omp_s = now_s() - t0;
    row.equal = bits_equal(ys, yp);
    table.push_back(row);

    KernelRow crow{"critic_loss"};
    CriticResult cs, cp;
    t0 = now_s();
    for (int r = 0; r < reps; ++r)
      cs = critic_loss(batch, nets.critic1, ys, BatchMode::serial);
    crow.serial_s = now_s() - t0;
    t0 = now_s();
    for (int r = 0; r < reps; ++r)
      cp = critic_loss(batch, nets.critic1, ys, BatchMode::openmp);
    crow.omp_s = now_s() - t0;
    crow.equal = cs.loss == cp.loss && bundles_equal(cs.grads, cp.grads);
    table.push_back(crow);
  }

  {
    KernelRow row{"actor_loss"};
    ActorResult as, ap;
    double t0 = now_s();
    for (int r = 0; r < reps; ++r)
      as = actor_loss(batch, nets.actor, nets.critic1, nets.critic2, hp,
                      nets.alpha, chain_noise, BatchMode::serial);
    row.serial_s = now_s() - t0;
    t0 = now_s();
    for (int r = 0; r < reps; ++r)
      ap = actor_loss(batch, nets.actor, nets.critic1, nets.critic2, hp,
                      nets.alpha, chain_noise, BatchMode::openmp);
    row.omp_s = now_s() - t0;
    row.equal = as.loss == ap.loss && as.mean_entropy == ap.mean_entropy &&
                bundles_equal(as.grads, ap.grads);
    table.push_back(row);
  }

  std::printf("%-12s %12s %12s %9s %6s\n", "kernel", "serial ms", "openmp ms",
              "speedup", "equal");
  bool all_equal = true;
  for (const auto& row : table) {
    std::printf("%-12s %12.3f %12.3f %8.2fx %6s\n", row.name,
                1e3 * row.serial_s / reps, 1e3 * row.omp_s / reps,
                row.serial_s / row.omp_s, row.equal ? "yes" : "NO");
    all_equal = all_equal && row.equal;
  }
  if (!all_equal) {
    std::printf("FAIL: serial and OpenMP kernels disagree\n");
    return 1;
  }
  return 0;
}
