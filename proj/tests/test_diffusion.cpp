#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fd_util.hpp"
#include "ladts/diffusion.hpp"

using namespace ladts;

namespace {

DiffusionActorNet small_actor(int obs_dim, int act_dim, uint64_t seed,
                              double weight_scale = 1.0) {
  Rng rng(seed);
  auto actor = make_diffusion_actor(obs_dim, act_dim, 16, 20, rng);
  if (weight_scale != 1.0)
    for (auto& w : actor.net.w)
      for (auto& v : w) v *= weight_scale;
  return actor;
}

}  // namespace

TEST_CASE("sinusoidal encoding basics") {
  const auto e0 = sinusoidal_encode(0, 8);
  for (int k = 0; k < 4; ++k) {
    CHECK(e0[2 * k] == 0.0);
    CHECK(e0[2 * k + 1] == 1.0);
  }
  const auto e = sinusoidal_encode(123, 16);
  for (double v : e) {
    CHECK(v <= 1.0);
    CHECK(v >= -1.0);
  }
  CHECK_THROWS_AS(sinusoidal_encode(1, 7), std::invalid_argument);
  CHECK_THROWS_AS(sinusoidal_encode(-1, 8), std::invalid_argument);
}

TEST_CASE("sinusoidal encoding matches an independent evaluation at i=3, dim=16") {
  // frozen from a separate evaluation of sin/cos(i * 10000^(-2k/16))
  const auto e = sinusoidal_encode(3, 16);
  CHECK(e[0] == doctest::Approx(0.14112000805986721).epsilon(1e-13));
  CHECK(e[1] == doctest::Approx(-0.98999249660044542).epsilon(1e-13));
  CHECK(e[2] == doctest::Approx(0.81264889664203677).epsilon(1e-13));
  CHECK(e[3] == doctest::Approx(0.58275361070222487).epsilon(1e-13));
  CHECK(e[14] == doctest::Approx(0.00094868315574802556).epsilon(1e-13));
  CHECK(e[15] == doctest::Approx(0.99999955000003371).epsilon(1e-13));
}

TEST_CASE("zero predictor and zero noise collapse the step to a rescale") {
  const auto sched = build_schedule(5, 0.1, 10.0);
  auto actor = small_actor(5, 3, 1, 0.0);
  for (auto& b : actor.net.b)
    for (auto& v : b) v = 0.0;
  const std::vector<double> obs(5, 0.2);
  const std::vector<double> x = {0.4, -0.8, 0.1};
  const std::vector<double> zero(3, 0.0);
  for (int i = 1; i <= 5; ++i) {
    const auto out = denoise_step(x, i, obs, actor, sched, zero);
    const double scale = 1.0 / std::sqrt(sched.lambda[i - 1]);
    for (int j = 0; j < 3; ++j)
      CHECK(out[j] == doctest::Approx(x[j] * scale).epsilon(1e-15));
  }
}

TEST_CASE("vanishing beta makes the step an identity") {
  const auto sched = build_schedule(5, 1e-12, 2e-12);
  const auto actor = small_actor(5, 3, 2);
  const std::vector<double> obs(5, 0.2);
  const std::vector<double> x = {0.4, -0.8, 0.1};
  const std::vector<double> zero(3, 0.0);
  const auto out = denoise_step(x, 3, obs, actor, sched, zero);
  for (int j = 0; j < 3; ++j) CHECK(out[j] == doctest::Approx(x[j]).epsilon(1e-5));
}

TEST_CASE("denoise step matches a term-by-term recomputation") {
  const auto sched = build_schedule(5, 0.1, 10.0);
  const auto actor = small_actor(4, 3, 5);
  Rng rng(17);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> obs(4), x(3), noise(3);
    for (auto& v : obs) v = rng.uniform01();
    for (auto& v : x) v = rng.normal();
    for (auto& v : noise) v = rng.normal();
    const int i = rng.uniform_int(1, 5);

    const auto got = denoise_step(x, i, obs, actor, sched, noise);

    // independent assembly of the update rule
    std::vector<double> input;
    input.insert(input.end(), obs.begin(), obs.end());
    input.insert(input.end(), x.begin(), x.end());
    const auto code = sinusoidal_encode(i, 16);
    input.insert(input.end(), code.begin(), code.end());
    const auto eps = mlp_forward(actor.net, input);
    for (int j = 0; j < 3; ++j) {
      double want = (x[j] - sched.beta[i - 1] / std::sqrt(1.0 - sched.lambda_bar[i - 1]) * eps[j]) /
                        std::sqrt(sched.lambda[i - 1]) +
                    sched.beta_tilde[i - 1] / 2.0 * noise[j];
      want = want > kLatentCore ? kLatentCore + kLatentLeak * (want - kLatentCore)
             : want < -kLatentCore ? -kLatentCore + kLatentLeak * (want + kLatentCore)
                                   : want;
      CHECK(std::abs(got[j] - want) < 1e-12);
    }
  }
}

TEST_CASE("sqrt_var mode swaps the noise coefficient") {
  const auto sched = build_schedule(5, 0.1, 10.0);
  const auto actor = small_actor(4, 2, 6);
  const std::vector<double> obs(4, 0.1);
  const std::vector<double> x = {0.2, -0.3};
  const std::vector<double> noise = {1.0, -1.0};
  const auto a = denoise_step(x, 3, obs, actor, sched, noise, NoiseCoeff::half_var);
  const auto b = denoise_step(x, 3, obs, actor, sched, noise, NoiseCoeff::sqrt_var);
  const double diff = std::sqrt(sched.beta_tilde[2]) - sched.beta_tilde[2] / 2.0;
  CHECK(b[0] - a[0] == doctest::Approx(diff).epsilon(1e-12));
  CHECK(b[1] - a[1] == doctest::Approx(-diff).epsilon(1e-12));
}

TEST_CASE("one-step chain is a single denoise step") {
  const auto sched = build_schedule(1, 0.1, 10.0);
  const auto actor = small_actor(4, 3, 7);
  const std::vector<double> obs(4, 0.3);
  const std::vector<double> x = {0.1, 0.2, -0.5};
  const std::vector<double> noise = {0.4, -0.2, 0.9};
  CHECK(reverse_chain(x, obs, actor, sched, noise) ==
        denoise_step(x, 1, obs, actor, sched, noise));
}

TEST_CASE("recorded noise replays the chain bit-identically") {
  const auto sched = build_schedule(5, 0.1, 10.0);
  const auto actor = small_actor(5, 4, 8);
  const std::vector<double> obs(5, 0.25);
  Rng rng(3);
  std::vector<double> x(4), noise(5 * 4);
  for (auto& v : x) v = rng.normal();
  for (auto& v : noise) v = rng.normal();
  CHECK(reverse_chain(x, obs, actor, sched, noise) ==
        reverse_chain(x, obs, actor, sched, noise));

  const std::vector<double> zero(5 * 4, 0.0);
  CHECK(reverse_chain(x, obs, actor, sched, zero) ==
        reverse_chain(x, obs, actor, sched, zero));
}

TEST_CASE("chain gradients match finite differences") {
  const auto sched = build_schedule(5, 0.1, 10.0);
  auto actor = small_actor(5, 3, 9, 0.5);
  Rng rng(31);
  std::vector<double> obs(5), x(3), c(3), noise(5 * 3);
  for (auto& v : obs) v = rng.uniform01();
  for (auto& v : x) v = rng.normal();
  for (auto& v : c) v = rng.normal();
  for (auto& v : noise) v = rng.normal();

  ChainTrace trace;
  reverse_chain(x, obs, actor, sched, noise, NoiseCoeff::half_var, &trace);
  GradientBundle g;
  std::vector<double> gx;
  chain_backward(trace, actor, sched, c, g, NoiseCoeff::half_var, &gx);

  auto loss = [&]() {
    const auto x0 = reverse_chain(x, obs, actor, sched, noise);
    double s = 0.0;
    for (int j = 0; j < 3; ++j) s += c[j] * x0[j];
    return s;
  };
  CHECK(testutil::param_grad_rel_error(actor.net, g, loss) < 1e-4);
  CHECK(testutil::input_grad_rel_error(x, gx, loss) < 1e-4);
}

TEST_CASE("softmax head") {
  const std::vector<double> zeros(4, 0.0);
  const auto uniform = action_probs(zeros);
  for (double p : uniform.probs) CHECK(p == doctest::Approx(0.25).epsilon(1e-15));

  Rng rng(5);
  std::vector<double> x(6);
  for (auto& v : x) v = rng.normal();
  const auto base = action_probs(x);
  double sum = 0.0;
  for (double p : base.probs) sum += p;
  CHECK(std::abs(sum - 1.0) < 1e-9);

  std::vector<double> shifted = x;
  for (auto& v : shifted) v += 3.7;
  const auto moved = action_probs(shifted);
  for (size_t j = 0; j < x.size(); ++j)
    CHECK(std::abs(moved.probs[j] - base.probs[j]) < 1e-12);

  std::vector<double> peaked(4, 0.0);
  peaked[2] = 50.0;
  CHECK(action_probs(peaked).probs[2] > 0.999999);

  std::vector<double> bad = {1.0, std::nan("")};
  CHECK_THROWS_AS(action_probs(bad), std::domain_error);
}

TEST_CASE("action selection") {
  Rng rng(7);
  ActionDistribution d;
  d.probs = {0.1, 0.7, 0.2};
  CHECK(select_action(d, SelectMode::argmax, rng).index == 1);

  ActionDistribution onehot;
  onehot.probs = {0.0, 0.0, 1.0, 0.0};
  for (int i = 0; i < 20; ++i)
    CHECK(select_action(onehot, SelectMode::sample, rng).index == 2);
}

TEST_CASE("sampling frequencies stay within binomial bounds") {
  Rng rng(2024);
  ActionDistribution d;
  d.probs = {0.3, 0.7};
  const int n = 100000;
  int ones = 0;
  for (int i = 0; i < n; ++i)
    ones += select_action(d, SelectMode::sample, rng).index;
  const double freq = static_cast<double>(ones) / n;
  const double sigma = std::sqrt(0.3 * 0.7 / n);
  CHECK(std::abs(freq - 0.7) < 3.0 * sigma);
}

TEST_CASE("argmax is invariant under strictly increasing transforms") {
  Rng rng(77);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> x(5);
    for (auto& v : x) v = rng.normal();
    const auto base = action_probs(x);
    std::vector<double> cubed(5), affine(5);
    for (int j = 0; j < 5; ++j) {
      cubed[j] = x[j] * x[j] * x[j];
      affine[j] = 2.0 * x[j] + 1.0;
    }
    const int i0 = select_action(base, SelectMode::argmax, rng).index;
    CHECK(select_action(action_probs(cubed), SelectMode::argmax, rng).index == i0);
    CHECK(select_action(action_probs(affine), SelectMode::argmax, rng).index == i0);
  }
}

TEST_CASE("latent store contract") {
  Rng rng(55);
  LatentStore store(2, 3, 4, rng);

  // fresh entries come from the Gaussian init
  Rng replay(55);
  const auto first = store.fetch(0, 0);
  for (int j = 0; j < 4; ++j) CHECK(first[j] == replay.normal());

  const std::vector<double> v = {1.0, 2.0, 3.0, 4.0};
  store.update(0, 1, v);
  const auto read = store.fetch(0, 1);
  CHECK(std::vector<double>(read.begin(), read.end()) == v);

  // neighbours and the other node are untouched
  Rng replay2(55);
  std::vector<double> all(2 * 3 * 4);
  for (auto& w : all) w = replay2.normal();
  const auto n2 = store.fetch(0, 2);
  for (int j = 0; j < 4; ++j) CHECK(n2[j] == all[2 * 4 + j]);
  const auto other = store.fetch(1, 1);
  for (int j = 0; j < 4; ++j) CHECK(other[j] == all[(3 + 1) * 4 + j]);

  const std::vector<double> v2 = {9.0, 8.0, 7.0, 6.0};
  store.update(0, 1, v2);
  const auto last = store.fetch(0, 1);
  CHECK(std::vector<double>(last.begin(), last.end()) == v2);

  CHECK_THROWS_AS(store.fetch(0, 3), std::out_of_range);
  CHECK_THROWS_AS(store.fetch(2, 0), std::out_of_range);
  CHECK_THROWS_AS(store.update(0, 3, v), std::out_of_range);
}
