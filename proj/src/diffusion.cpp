#include "ladts/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ladts {

void sinusoidal_encode(int i, int dim, std::span<double> out) {
  if (dim <= 0 || dim % 2 != 0)
    throw std::invalid_argument("sinusoidal_encode: dim must be positive and even");
  if (i < 0) throw std::invalid_argument("sinusoidal_encode: step must be >= 0");
  if (static_cast<int>(out.size()) != dim)
    throw std::invalid_argument("sinusoidal_encode: out size mismatch");
  for (int k = 0; k < dim / 2; ++k) {
    const double w = std::pow(10000.0, -2.0 * k / dim);
    out[2 * k] = std::sin(i * w);
    out[2 * k + 1] = std::cos(i * w);
  }
}

std::vector<double> sinusoidal_encode(int i, int dim) {
  std::vector<double> out(dim);
  sinusoidal_encode(i, dim, out);
  return out;
}

DiffusionActorNet make_diffusion_actor(int obs_dim, int act_dim, int embed_dim,
                                       int hidden, Rng& rng) {
  DiffusionActorNet actor;
  actor.obs_dim = obs_dim;
  actor.act_dim = act_dim;
  actor.embed_dim = embed_dim;
  const int dims[] = {obs_dim + act_dim + embed_dim, hidden, hidden, act_dim};
  actor.net = make_mlp(dims, rng);
  return actor;
}

namespace {

double noise_scale(const BetaSchedule& sched, int i, NoiseCoeff coeff) {
  const double bt = sched.beta_tilde[i - 1];
  return coeff == NoiseCoeff::half_var ? bt / 2.0 : std::sqrt(bt);
}

void build_actor_input(std::span<const double> obs_norm,
                       std::span<const double> x, int i, int embed_dim,
                       std::vector<double>& input) {
  input.resize(obs_norm.size() + x.size() + embed_dim);
  std::copy(obs_norm.begin(), obs_norm.end(), input.begin());
  std::copy(x.begin(), x.end(), input.begin() + obs_norm.size());
  sinusoidal_encode(i, embed_dim,
                    std::span<double>(input).subspan(obs_norm.size() + x.size()));
}

}  // namespace

std::vector<double> denoise_step(std::span<const double> x_i, int i,
                                 std::span<const double> obs_norm,
                                 const DiffusionActorNet& actor,
                                 const BetaSchedule& sched,
                                 std::span<const double> noise, NoiseCoeff coeff,
                                 ChainStep* record) {
  if (i < 1 || i > sched.steps)
    throw std::out_of_range("denoise_step: step index out of range");
  if (static_cast<int>(x_i.size()) != actor.act_dim ||
      static_cast<int>(obs_norm.size()) != actor.obs_dim ||
      noise.size() != x_i.size())
    throw std::invalid_argument("denoise_step: size mismatch");

  ChainStep local;
  ChainStep& step = record ? *record : local;
  step.i = i;
  step.x_in.assign(x_i.begin(), x_i.end());
  step.eps_pred.resize(actor.act_dim);

  std::vector<double> input;
  build_actor_input(obs_norm, x_i, i, actor.embed_dim, input);
  mlp_forward(actor.net, input, step.cache, step.eps_pred);

  const double inv_sqrt_lambda = 1.0 / std::sqrt(sched.lambda[i - 1]);
  const double eps_coef = sched.beta[i - 1] / std::sqrt(1.0 - sched.lambda_bar[i - 1]);
  const double ns = noise_scale(sched, i, coeff);

  step.preclamp.resize(actor.act_dim);
  std::vector<double> out(actor.act_dim);
  for (int j = 0; j < actor.act_dim; ++j) {
    const double u = inv_sqrt_lambda * (x_i[j] - eps_coef * step.eps_pred[j]) +
                     ns * noise[j];
    step.preclamp[j] = u;
    out[j] = bound_latent(u);
  }
  return out;
}

std::vector<double> reverse_chain(std::span<const double> x_init,
                                  std::span<const double> obs_norm,
                                  const DiffusionActorNet& actor,
                                  const BetaSchedule& sched,
                                  std::span<const double> noise,
                                  NoiseCoeff coeff, ChainTrace* trace) {
  if (static_cast<int>(x_init.size()) != actor.act_dim)
    throw std::invalid_argument("reverse_chain: latent size mismatch");
  if (noise.size() != static_cast<size_t>(sched.steps) * actor.act_dim)
    throw std::invalid_argument("reverse_chain: noise buffer size mismatch");

  if (trace) trace->steps.resize(sched.steps);
  std::vector<double> x(x_init.begin(), x_init.end());
  for (int i = sched.steps; i >= 1; --i) {
    const size_t slot = static_cast<size_t>(sched.steps - i);
    ChainStep* rec = trace ? &trace->steps[slot] : nullptr;
    x = denoise_step(x, i, obs_norm, actor, sched,
                     noise.subspan(slot * actor.act_dim, actor.act_dim), coeff,
                     rec);
  }
  if (trace) trace->x0 = x;
  return x;
}

std::vector<double> reverse_chain(std::span<const double> x_init,
                                  std::span<const double> obs_norm,
                                  const DiffusionActorNet& actor,
                                  const BetaSchedule& sched, Rng& rng,
                                  NoiseCoeff coeff, ChainTrace* trace) {
  std::vector<double> noise(static_cast<size_t>(sched.steps) * actor.act_dim);
  for (auto& n : noise) n = rng.normal();
  return reverse_chain(x_init, obs_norm, actor, sched, noise, coeff, trace);
}

void chain_backward(const ChainTrace& trace, const DiffusionActorNet& actor,
                    const BetaSchedule& sched, std::span<const double> dx0,
                    GradientBundle& grads, NoiseCoeff /*coeff*/,
                    std::vector<double>* dx_init) {
  const int dim = actor.act_dim;
  if (static_cast<int>(dx0.size()) != dim)
    throw std::invalid_argument("chain_backward: dx0 size mismatch");
  if (grads.gw.size() != actor.net.w.size() ||
      grads.ginput.size() != static_cast<size_t>(actor.net.input_dim()))
    grads.resize_like(actor.net);

  GradientBundle scratch;
  scratch.resize_like(actor.net);

  std::vector<double> g(dx0.begin(), dx0.end());
  std::vector<double> g_pre(dim), g_eps(dim);
  // steps are stored in generation order (i = I..1); walk them backwards
  for (auto it = trace.steps.rbegin(); it != trace.steps.rend(); ++it) {
    const ChainStep& step = *it;
    const int i = step.i;
    const double inv_sqrt_lambda = 1.0 / std::sqrt(sched.lambda[i - 1]);
    const double eps_coef = sched.beta[i - 1] / std::sqrt(1.0 - sched.lambda_bar[i - 1]);
    for (int j = 0; j < dim; ++j) {
      g_pre[j] = bound_latent_grad(step.preclamp[j]) * g[j];
      g_eps[j] = -inv_sqrt_lambda * eps_coef * g_pre[j];
    }
    mlp_backward(actor.net, step.cache, g_eps, scratch, false);
    for (size_t l = 0; l < grads.gw.size(); ++l) {
      for (size_t k = 0; k < grads.gw[l].size(); ++k) grads.gw[l][k] += scratch.gw[l][k];
      for (size_t k = 0; k < grads.gb[l].size(); ++k) grads.gb[l][k] += scratch.gb[l][k];
    }
    // gradient w.r.t. x_i: the direct pass-through plus the path through
    // the predictor's latent input slots
    for (int j = 0; j < dim; ++j)
      g[j] = inv_sqrt_lambda * g_pre[j] + scratch.ginput[actor.obs_dim + j];
  }
  if (dx_init) *dx_init = g;
}

ActionDistribution action_probs(std::span<const double> x0) {
  if (x0.empty()) throw std::invalid_argument("action_probs: empty input");
  double mx = x0[0];
  for (double v : x0) {
    if (!std::isfinite(v)) throw std::domain_error("action_probs: non-finite input");
    mx = std::max(mx, v);
  }
  ActionDistribution dist;
  dist.source_latent.assign(x0.begin(), x0.end());
  dist.probs.resize(x0.size());
  double sum = 0.0;
  for (size_t j = 0; j < x0.size(); ++j) {
    dist.probs[j] = std::exp(x0[j] - mx);
    sum += dist.probs[j];
  }
  for (auto& p : dist.probs) p /= sum;
  return dist;
}

void softmax_backward(std::span<const double> probs,
                      std::span<const double> dprobs,
                      std::span<double> dlogits) {
  double dot = 0.0;
  for (size_t j = 0; j < probs.size(); ++j) dot += dprobs[j] * probs[j];
  for (size_t j = 0; j < probs.size(); ++j)
    dlogits[j] = probs[j] * (dprobs[j] - dot);
}

int categorical_pick(std::span<const double> probs, double u) {
  double cum = 0.0;
  for (size_t j = 0; j < probs.size(); ++j) {
    cum += probs[j];
    if (u < cum) return static_cast<int>(j);
  }
  return static_cast<int>(probs.size()) - 1;
}

Action select_action(const ActionDistribution& dist, SelectMode mode, Rng& rng) {
  const int n = static_cast<int>(dist.probs.size());
  int idx = 0;
  if (mode == SelectMode::argmax) {
    for (int j = 1; j < n; ++j)
      if (dist.probs[j] > dist.probs[idx]) idx = j;
  } else {
    idx = categorical_pick(dist.probs, rng.uniform01());
  }
  return Action{idx, n};
}

LatentStore::LatentStore(int num_bs, int slots, int dim, Rng& rng)
    : num_bs_(num_bs), slots_(slots), dim_(dim),
      data_(static_cast<size_t>(num_bs) * slots * dim) {
  for (auto& v : data_) v = rng.normal();
}

size_t LatentStore::offset(int bs, int n) const {
  if (bs < 0 || bs >= num_bs_ || n < 0 || n >= slots_)
    throw std::out_of_range("LatentStore: index out of range");
  return (static_cast<size_t>(bs) * slots_ + n) * dim_;
}

std::span<const double> LatentStore::fetch(int bs, int n) const {
  return std::span<const double>(data_.data() + offset(bs, n), dim_);
}

void LatentStore::update(int bs, int n, std::span<const double> x0) {
  if (static_cast<int>(x0.size()) != dim_)
    throw std::invalid_argument("LatentStore::update: size mismatch");
  std::copy(x0.begin(), x0.end(), data_.begin() + offset(bs, n));
}

}  // namespace ladts
