#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fd_util.hpp"
#include "ladts/sac.hpp"

using namespace ladts;

namespace {

Observation make_obs(std::vector<double> normalized) {
  Observation o;
  o.raw = normalized;
  o.normalized = std::move(normalized);
  return o;
}

Transition make_transition(int nodes, Rng& rng, bool done = false) {
  const int obs_dim = nodes + 2;
  Transition t;
  std::vector<double> s(obs_dim), sn(obs_dim);
  for (auto& v : s) v = rng.uniform01();
  for (auto& v : sn) v = rng.uniform01();
  t.s = make_obs(std::move(s));
  t.s_next = make_obs(std::move(sn));
  t.latent.resize(nodes);
  t.latent_next.resize(nodes);
  for (auto& v : t.latent) v = rng.normal();
  for (auto& v : t.latent_next) v = rng.normal();
  t.a = Action{rng.uniform_int(0, nodes - 1), nodes};
  t.reward = -rng.uniform(0.05, 0.5);
  t.done = done;
  return t;
}

void zero_out(Mlp& net) {
  for (auto& w : net.w)
    for (auto& v : w) v = 0.0;
  for (auto& b : net.b)
    for (auto& v : b) v = 0.0;
}

void set_constant_output(Mlp& net, double value) {
  zero_out(net);
  net.b.back().assign(net.b.back().size(), value);
}

SacNets tiny_nets(ActorModel::Kind kind, int nodes, const Hyperparams& hp,
                  uint64_t seed, int steps = 1) {
  Rng rng(seed);
  const auto sched = build_schedule(steps, 0.1, 10.0);
  return make_sac_nets(kind, nodes + 2, nodes, 20, 16, sched, hp, rng);
}

}  // namespace

TEST_CASE("replay buffer is a FIFO ring") {
  ReplayBuffer buf(1000);
  Rng rng(1);
  for (int i = 0; i < 1001; ++i) {
    Transition t = make_transition(2, rng);
    t.reward = -static_cast<double>(i);
    buf.push(std::move(t));
  }
  CHECK(buf.size() == 1000);
  CHECK(buf.total_pushed() == 1001);
  CHECK(buf.at(0).reward == -1.0);  // item 0 evicted
  CHECK(buf.at(999).reward == -1000.0);
}

TEST_CASE("push then sample from a single-item buffer returns it") {
  ReplayBuffer buf(10);
  Rng rng(2);
  Transition t = make_transition(2, rng);
  t.reward = -0.125;
  buf.push(std::move(t));
  Rng srng(3);
  const auto batch = buf.sample(1, srng);
  CHECK(batch[0]->reward == -0.125);
  CHECK_THROWS_AS(buf.sample(2, srng), std::runtime_error);
}

TEST_CASE("insertion counter grows monotonically") {
  ReplayBuffer buf(4);
  Rng rng(3);
  uint64_t last = 0;
  for (int i = 0; i < 12; ++i) {
    buf.push(make_transition(2, rng));
    CHECK(buf.total_pushed() == last + 1);
    last = buf.total_pushed();
  }
}

TEST_CASE("sampling is uniform and seed-reproducible") {
  ReplayBuffer buf(10);
  Rng rng(4);
  for (int i = 0; i < 10; ++i) {
    Transition t = make_transition(2, rng);
    t.reward = -static_cast<double>(i);
    buf.push(std::move(t));
  }
  Rng a(5), b(5);
  const auto ba = buf.sample(6, a);
  const auto bb = buf.sample(6, b);
  for (int i = 0; i < 6; ++i) CHECK(ba[i] == bb[i]);

  Rng big(6);
  std::vector<int> counts(10, 0);
  const int draws = 100000;
  for (int i = 0; i < draws / 10; ++i)
    for (const Transition* t : buf.sample(10, big))
      counts[static_cast<int>(-t->reward)]++;
  const double sigma = std::sqrt(0.1 * 0.9 / draws);
  for (int c : counts)
    CHECK(std::abs(static_cast<double>(c) / draws - 0.1) < 3.0 * sigma);
}

TEST_CASE("entropy values") {
  std::vector<double> uniform(20, 0.05);
  CHECK(entropy(uniform) == doctest::Approx(std::log(20.0)).epsilon(1e-12));
  std::vector<double> onehot = {0.0, 1.0, 0.0};
  CHECK(entropy(onehot) == 0.0);
  std::vector<double> half = {0.5, 0.5};
  CHECK(entropy(half) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("q_target short-circuits terminal samples") {
  Hyperparams hp;
  SacNets nets = tiny_nets(ActorModel::Kind::diffusion, 2, hp, 10);
  Rng rng(11);
  Transition t = make_transition(2, rng, /*done=*/true);
  t.reward = -2.0;
  const Batch batch = {&t};
  Rng qrng(12);
  const auto y = q_target(batch, nets.actor, nets.target1, nets.target2, hp,
                          nets.alpha, qrng, BatchMode::serial);
  CHECK(y[0] == -2.0);
}

TEST_CASE("gamma = 0 reduces the target to the reward") {
  Hyperparams hp;
  hp.gamma = 0.0;
  SacNets nets = tiny_nets(ActorModel::Kind::diffusion, 2, hp, 13);
  Rng rng(14);
  std::vector<Transition> ts;
  for (int i = 0; i < 8; ++i) ts.push_back(make_transition(2, rng));
  Batch batch;
  for (auto& t : ts) batch.push_back(&t);
  Rng qrng(15);
  const auto y = q_target(batch, nets.actor, nets.target1, nets.target2, hp,
                          nets.alpha, qrng, BatchMode::serial);
  for (int i = 0; i < 8; ++i) CHECK(y[i] == ts[i].reward);
}

TEST_CASE("q_target matches a hand-evaluated two-action instance") {
  // zero predictor + zero latent -> uniform next-action distribution;
  // constant target critics make the minimum independent of the sample
  Hyperparams hp;
  SacNets nets = tiny_nets(ActorModel::Kind::diffusion, 2, hp, 16);
  zero_out(nets.actor.diff.net);
  set_constant_output(nets.target1, 2.0);
  set_constant_output(nets.target2, 3.0);

  Rng rng(17);
  Transition t = make_transition(2, rng);
  t.reward = -1.0;
  t.latent_next = {0.0, 0.0};
  const Batch batch = {&t};
  Rng qrng(18);
  const auto y = q_target(batch, nets.actor, nets.target1, nets.target2, hp,
                          nets.alpha, qrng, BatchMode::serial);
  const double expected =
      -1.0 + hp.gamma * (0.5 * 2.0 + hp.alpha_init * std::log(2.0));
  CHECK(y[0] == doctest::Approx(expected).epsilon(1e-12));

  // the expectation variant sums over both actions instead of weighting
  // the one sampled action: sum_a pi(a) Qmin = 2, not 0.5 * 2
  Hyperparams hp2 = hp;
  hp2.target_style = TargetStyle::expectation;
  Rng qrng2(19);
  const auto y2 = q_target(batch, nets.actor, nets.target1, nets.target2, hp2,
                           nets.alpha, qrng2, BatchMode::serial);
  const double expected2 =
      -1.0 + hp.gamma * (2.0 + hp.alpha_init * std::log(2.0));
  CHECK(y2[0] == doctest::Approx(expected2).epsilon(1e-12));
}

TEST_CASE("perturbing target nets moves q_target (values only, no gradients)") {
  Hyperparams hp;
  SacNets nets = tiny_nets(ActorModel::Kind::diffusion, 3, hp, 20);
  Rng rng(21);
  Transition t = make_transition(3, rng);
  const Batch batch = {&t};

  Rng qa(22);
  const auto y0 = q_target(batch, nets.actor, nets.target1, nets.target2, hp,
                           nets.alpha, qa, BatchMode::serial);
  nets.target1.b.back()[0] += 0.5;
  nets.target2.b.back()[0] += 0.5;
  Rng qb(22);
  const auto y1 = q_target(batch, nets.actor, nets.target1, nets.target2, hp,
                           nets.alpha, qb, BatchMode::serial);
  CHECK(y0[0] != y1[0]);

  // critic gradients depend on targets only through the residual values
  const auto g0 = critic_loss(batch, nets.critic1, y0, BatchMode::serial);
  const auto g1 = critic_loss(batch, nets.critic1, y1, BatchMode::serial);
  CHECK(g0.loss != g1.loss);
}

TEST_CASE("critic loss: (1-3)^2 = 4 with matching bias gradient") {
  Hyperparams hp;
  SacNets nets = tiny_nets(ActorModel::Kind::dense, 2, hp, 23);
  set_constant_output(nets.critic1, 1.0);
  Rng rng(24);
  Transition t = make_transition(2, rng);
  const Batch batch = {&t};
  const std::vector<double> targets = {3.0};
  const auto r = critic_loss(batch, nets.critic1, targets, BatchMode::serial);
  CHECK(r.loss == 4.0);
  CHECK(r.grads.gb.back()[0] == -4.0);  // 2*(1-3)
}

TEST_CASE("critic at the target has zero loss and zero gradients") {
  Hyperparams hp;
  SacNets nets = tiny_nets(ActorModel::Kind::dense, 2, hp, 25);
  set_constant_output(nets.critic1, -0.75);
  Rng rng(26);
  Transition t = make_transition(2, rng);
  const Batch batch = {&t};
  const std::vector<double> targets = {-0.75};
  const auto r = critic_loss(batch, nets.critic1, targets, BatchMode::serial);
  CHECK(r.loss == 0.0);
  for (const auto& g : r.grads.gw)
    for (double v : g) CHECK(v == 0.0);
}

TEST_CASE("critic gradients match finite differences") {
  Hyperparams hp;
  SacNets nets = tiny_nets(ActorModel::Kind::dense, 3, hp, 27);
  Rng rng(28);
  std::vector<Transition> ts;
  for (int i = 0; i < 6; ++i) ts.push_back(make_transition(3, rng));
  Batch batch;
  for (auto& t : ts) batch.push_back(&t);
  std::vector<double> targets(6);
  for (auto& v : targets) v = rng.uniform(-1.0, 1.0);

  const auto r = critic_loss(batch, nets.critic1, targets, BatchMode::serial);
  auto loss = [&]() {
    return critic_loss(batch, nets.critic1, targets, BatchMode::serial).loss;
  };
  CHECK(testutil::param_grad_rel_error(nets.critic1, r.grads, loss) < 1e-4);
}

TEST_CASE("actor loss: direct substitution at alpha = 0") {
  Hyperparams hp;
  SacNets nets = tiny_nets(ActorModel::Kind::dense, 2, hp, 29);
  zero_out(nets.actor.dense);          // uniform policy: pi(a) = 0.5
  set_constant_output(nets.critic1, 2.0);
  set_constant_output(nets.critic2, 2.5);
  Rng rng(30);
  Transition t = make_transition(2, rng);
  t.a = Action{0, 2};
  const Batch batch = {&t};
  const auto r = actor_loss(batch, nets.actor, nets.critic1, nets.critic2, hp,
                            /*alpha=*/0.0, {}, BatchMode::serial);
  CHECK(r.loss == doctest::Approx(1.0).epsilon(1e-15));  // (0 - 0.5*2)^2
  CHECK(r.mean_entropy == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("actor loss vanishes when the residual is balanced") {
  Hyperparams hp;
  SacNets nets = tiny_nets(ActorModel::Kind::dense, 2, hp, 31);
  zero_out(nets.actor.dense);
  const double h = entropy(std::vector<double>{0.5, 0.5});
  const double alpha = 0.05;
  const double qconst = -(2.0 * alpha * h);  // pi(a)*q = -alpha*H
  set_constant_output(nets.critic1, qconst);
  set_constant_output(nets.critic2, qconst + 1.0);  // min picks qconst
  Rng rng(32);
  Transition t = make_transition(2, rng);
  const Batch batch = {&t};
  const auto r = actor_loss(batch, nets.actor, nets.critic1, nets.critic2, hp,
                            alpha, {}, BatchMode::serial);
  CHECK(r.loss <= 1e-24);
}

TEST_CASE("actor gradients match finite differences through the chain") {
  Hyperparams hp;
  hp.actor_style = ActorStyle::paper;
  SacNets nets = tiny_nets(ActorModel::Kind::diffusion, 3, hp, 33, /*steps=*/5);
  // keep the chain away from the latent clamp and its kink: finite
  // differences are only meaningful at differentiable points
  for (auto& w : nets.actor.diff.net.w)
    for (auto& v : w) v *= 0.5;
  Rng rng(34);
  std::vector<Transition> ts;
  for (int i = 0; i < 4; ++i) {
    Transition t = make_transition(3, rng);
    for (auto& v : t.latent) v *= 0.3;
    for (auto& v : t.latent_next) v *= 0.3;
    ts.push_back(std::move(t));
  }
  Batch batch;
  for (auto& t : ts) batch.push_back(&t);
  std::vector<double> noise(batch.size() * nets.actor.noise_len());
  for (auto& v : noise) v = 0.3 * rng.normal();

  for (const ActorStyle style : {ActorStyle::paper, ActorStyle::standard}) {
    hp.actor_style = style;
    const auto r = actor_loss(batch, nets.actor, nets.critic1, nets.critic2,
                              hp, nets.alpha, noise, BatchMode::serial);
    auto loss = [&]() {
      return actor_loss(batch, nets.actor, nets.critic1, nets.critic2, hp,
                        nets.alpha, noise, BatchMode::serial)
          .loss;
    };
    CHECK(testutil::param_grad_rel_error(nets.actor.params(), r.grads, loss) < 1e-4);
  }
}

TEST_CASE("alpha update arithmetic") {
  Hyperparams hp;
  // gradient (-H - target) vanishes at H = -target
  CHECK(alpha_update(0.05, 1.0, hp) == 0.05);
  // H = 0.5 -> gradient 0.5 -> alpha decreases by 0.5 * lr
  CHECK(alpha_update(0.05, 0.5, hp) ==
        doctest::Approx(0.05 - 0.5 * hp.lr_alpha).epsilon(1e-12));
}

TEST_CASE("repeated low-entropy batches drive alpha monotonically to the clamp") {
  Hyperparams hp;
  hp.lr_alpha = 3e-3;  // fewer steps to reach the clamp
  double alpha = hp.alpha_init;
  double prev = alpha;
  bool clamped = false;
  for (int i = 0; i < 100; ++i) {
    alpha = alpha_update(alpha, 0.1, hp);  // H < -target_entropy
    CHECK(alpha <= prev);
    prev = alpha;
    if (alpha == hp.alpha_min) clamped = true;
  }
  CHECK(clamped);
  CHECK(alpha == hp.alpha_min);
  // and high-entropy batches push it back up
  CHECK(alpha_update(alpha, 2.0, hp) > alpha);
}

namespace {

struct TrainerFixture {
  Hyperparams hp;
  SacNets nets;
  ReplayBuffer buffer{1000};
  Rng rng{4000};

  explicit TrainerFixture(int nodes, uint64_t seed, int fill,
                          ActorModel::Kind kind = ActorModel::Kind::diffusion,
                          int steps = 3)
      : nets(tiny_nets(kind, nodes, hp, seed, steps)) {
    Rng data(seed + 1);
    for (int i = 0; i < fill; ++i)
      buffer.push(make_transition(nodes, data, (i % 97) == 96));
  }
};

bool params_equal(const Mlp& a, const Mlp& b) { return a.w == b.w && a.b == b.b; }

}  // namespace

TEST_CASE("train_step is a strict no-op at exactly the threshold") {
  TrainerFixture f(2, 50, 300);
  const Mlp actor_before = f.nets.actor.params();
  const Mlp critic_before = f.nets.critic1;
  const auto m = train_step(f.buffer, f.nets, f.hp, f.rng, BatchMode::serial);
  CHECK_FALSE(m.trained);
  CHECK(params_equal(f.nets.actor.params(), actor_before));
  CHECK(params_equal(f.nets.critic1, critic_before));

  f.buffer.push(make_transition(2, f.rng));  // 301 > 300
  const auto m2 = train_step(f.buffer, f.nets, f.hp, f.rng, BatchMode::serial);
  CHECK(m2.trained);
  CHECK_FALSE(params_equal(f.nets.actor.params(), actor_before));
}

TEST_CASE("targets move toward critics by exactly tau") {
  TrainerFixture f(2, 51, 400);
  const Mlp t1_before = f.nets.target1;
  const auto m = train_step(f.buffer, f.nets, f.hp, f.rng, BatchMode::serial);
  REQUIRE(m.trained);
  for (size_t l = 0; l < f.nets.target1.w.size(); ++l)
    for (size_t i = 0; i < f.nets.target1.w[l].size(); ++i) {
      const double expect = f.hp.tau * f.nets.critic1.w[l][i] +
                            (1.0 - f.hp.tau) * t1_before.w[l][i];
      CHECK(f.nets.target1.w[l][i] == expect);
    }
}

TEST_CASE("the serving copy equals the trained actor after every step") {
  TrainerFixture f(3, 52, 400);
  for (int i = 0; i < 5; ++i) {
    train_step(f.buffer, f.nets, f.hp, f.rng, BatchMode::serial);
    CHECK(params_equal(f.nets.serving.params(), f.nets.actor.params()));
  }
}

TEST_CASE("training is deterministic end to end") {
  auto run = [](BatchMode mode) {
    TrainerFixture f(3, 53, 500);
    TrainMetrics last;
    for (int i = 0; i < 10; ++i)
      last = train_step(f.buffer, f.nets, f.hp, f.rng, mode);
    return std::tuple{last.critic_loss1, last.actor_loss, last.alpha,
                      f.nets.actor.params().w};
  };
  CHECK(run(BatchMode::serial) == run(BatchMode::serial));
}

TEST_CASE("openmp kernels reproduce the serial reference bit for bit") {
  TrainerFixture serial_f(3, 54, 500);
  TrainerFixture omp_f(3, 54, 500);
  for (int i = 0; i < 5; ++i) {
    const auto ms = train_step(serial_f.buffer, serial_f.nets, serial_f.hp,
                               serial_f.rng, BatchMode::serial);
    const auto mp = train_step(omp_f.buffer, omp_f.nets, omp_f.hp, omp_f.rng,
                               BatchMode::openmp);
    CHECK(ms.critic_loss1 == mp.critic_loss1);
    CHECK(ms.critic_loss2 == mp.critic_loss2);
    CHECK(ms.actor_loss == mp.actor_loss);
    CHECK(ms.alpha == mp.alpha);
    CHECK(params_equal(serial_f.nets.actor.params(), omp_f.nets.actor.params()));
    CHECK(params_equal(serial_f.nets.critic1, omp_f.nets.critic1));
    CHECK(params_equal(serial_f.nets.target2, omp_f.nets.target2));
  }
}

TEST_CASE("smoke: a thousand steps stay finite with bounded entropy") {
  TrainerFixture f(3, 55, 500);
  const double hmax = std::log(3.0);
  for (int i = 0; i < 1000; ++i) {
    const auto m = train_step(f.buffer, f.nets, f.hp, f.rng, BatchMode::serial);
    REQUIRE(m.trained);
    CHECK(std::isfinite(m.critic_loss1));
    CHECK(std::isfinite(m.critic_loss2));
    CHECK(std::isfinite(m.actor_loss));
    CHECK(m.alpha >= f.hp.alpha_min);
    CHECK(m.mean_entropy >= 0.0);
    CHECK(m.mean_entropy <= hmax + 1e-12);
  }
}
