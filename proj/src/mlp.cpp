#include "ladts/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>

namespace ladts {

Mlp make_mlp(std::span<const int> dims, Rng& rng) {
  if (dims.size() < 2) throw std::invalid_argument("mlp needs at least two dims");
  Mlp net;
  net.dims.assign(dims.begin(), dims.end());
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    const int in = dims[l];
    const int out = dims[l + 1];
    if (in <= 0 || out <= 0) throw std::invalid_argument("mlp dims must be positive");
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::vector<double> w(static_cast<size_t>(in) * out);
    for (auto& v : w) v = rng.uniform(-bound, bound);
    net.w.push_back(std::move(w));
    net.b.emplace_back(out, 0.0);
  }
  return net;
}

Mlp make_zero_mlp(std::span<const int> dims) {
  Rng rng(0);
  Mlp net = make_mlp(dims, rng);
  for (auto& w : net.w)
    for (auto& v : w) v = 0.0;
  return net;
}

void mlp_forward(const Mlp& net, std::span<const double> input, MlpCache& cache,
                 std::span<double> out) {
  if (static_cast<int>(input.size()) != net.input_dim())
    throw std::invalid_argument("mlp_forward: input size mismatch");
  if (static_cast<int>(out.size()) != net.output_dim())
    throw std::invalid_argument("mlp_forward: output size mismatch");

  const int layers = net.num_layers();
  cache.act.resize(layers + 1);
  cache.act[0].assign(input.begin(), input.end());

  for (int l = 0; l < layers; ++l) {
    const int in = net.dims[l];
    const int on = net.dims[l + 1];
    const double* wl = net.w[l].data();
    const double* bl = net.b[l].data();
    const double* x = cache.act[l].data();
    cache.act[l + 1].resize(on);
    double* y = cache.act[l + 1].data();
    const bool last = (l == layers - 1);
    for (int o = 0; o < on; ++o) {
      const double* row = wl + static_cast<size_t>(o) * in;
      double acc = bl[o];
      for (int i = 0; i < in; ++i) acc += row[i] * x[i];
      y[o] = (!last && acc < 0.0) ? 0.0 : acc;
    }
  }
  const auto& final_act = cache.act[layers];
  for (size_t i = 0; i < out.size(); ++i) out[i] = final_act[i];
}

std::vector<double> mlp_forward(const Mlp& net, std::span<const double> input) {
  MlpCache cache;
  std::vector<double> out(net.output_dim());
  mlp_forward(net, input, cache, out);
  return out;
}

void GradientBundle::resize_like(const Mlp& net) {
  gw.resize(net.w.size());
  gb.resize(net.b.size());
  for (size_t l = 0; l < net.w.size(); ++l) {
    gw[l].assign(net.w[l].size(), 0.0);
    gb[l].assign(net.b[l].size(), 0.0);
  }
  ginput.assign(net.input_dim(), 0.0);
}

void GradientBundle::set_zero() {
  for (auto& g : gw) std::fill(g.begin(), g.end(), 0.0);
  for (auto& g : gb) std::fill(g.begin(), g.end(), 0.0);
  std::fill(ginput.begin(), ginput.end(), 0.0);
}

void GradientBundle::add(const GradientBundle& other) {
  for (size_t l = 0; l < gw.size(); ++l) {
    for (size_t i = 0; i < gw[l].size(); ++i) gw[l][i] += other.gw[l][i];
    for (size_t i = 0; i < gb[l].size(); ++i) gb[l][i] += other.gb[l][i];
  }
  for (size_t i = 0; i < ginput.size(); ++i) ginput[i] += other.ginput[i];
}

void GradientBundle::scale(double s) {
  for (auto& g : gw)
    for (auto& v : g) v *= s;
  for (auto& g : gb)
    for (auto& v : g) v *= s;
  for (auto& v : ginput) v *= s;
}

void mlp_backward(const Mlp& net, const MlpCache& cache,
                  std::span<const double> output_grad, GradientBundle& grads,
                  bool accumulate) {
  const int layers = net.num_layers();
  if (static_cast<int>(cache.act.size()) != layers + 1)
    throw std::invalid_argument("mlp_backward: cache does not match net");
  if (static_cast<int>(output_grad.size()) != net.output_dim())
    throw std::invalid_argument("mlp_backward: output_grad size mismatch");

  if (grads.gw.size() != net.w.size() || grads.ginput.size() != static_cast<size_t>(net.input_dim())) {
    grads.resize_like(net);
  } else if (!accumulate) {
    grads.set_zero();
  }

  std::vector<double> delta(output_grad.begin(), output_grad.end());
  std::vector<double> prev;
  for (int l = layers - 1; l >= 0; --l) {
    const int in = net.dims[l];
    const int on = net.dims[l + 1];
    const double* x = cache.act[l].data();
    double* gwl = grads.gw[l].data();
    double* gbl = grads.gb[l].data();
    for (int o = 0; o < on; ++o) {
      const double d = delta[o];
      gbl[o] += d;
      double* row = gwl + static_cast<size_t>(o) * in;
      for (int i = 0; i < in; ++i) row[i] += d * x[i];
    }
    // propagate to the layer input
    prev.assign(in, 0.0);
    const double* wl = net.w[l].data();
    for (int o = 0; o < on; ++o) {
      const double d = delta[o];
      const double* row = wl + static_cast<size_t>(o) * in;
      for (int i = 0; i < in; ++i) prev[i] += row[i] * d;
    }
    if (l > 0) {
      // ReLU mask of the hidden activation feeding this layer
      const double* a = cache.act[l].data();
      for (int i = 0; i < in; ++i)
        if (a[i] <= 0.0) prev[i] = 0.0;
    }
    delta.swap(prev);
  }
  grads.ginput.assign(delta.begin(), delta.end());
}

AdamState make_adam(const Mlp& net, double lr) {
  AdamState s;
  s.lr = lr;
  s.mw.resize(net.w.size());
  s.vw.resize(net.w.size());
  s.mb.resize(net.b.size());
  s.vb.resize(net.b.size());
  for (size_t l = 0; l < net.w.size(); ++l) {
    s.mw[l].assign(net.w[l].size(), 0.0);
    s.vw[l].assign(net.w[l].size(), 0.0);
    s.mb[l].assign(net.b[l].size(), 0.0);
    s.vb[l].assign(net.b[l].size(), 0.0);
  }
  return s;
}

namespace {
void adam_update(std::vector<double>& p, const std::vector<double>& g,
                 std::vector<double>& m, std::vector<double>& v,
                 const AdamState& s, double bc1, double bc2) {
  for (size_t i = 0; i < p.size(); ++i) {
    m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g[i];
    v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g[i] * g[i];
    const double mh = m[i] / bc1;
    const double vh = v[i] / bc2;
    p[i] -= s.lr * mh / (std::sqrt(vh) + s.eps);
  }
}
}  // namespace

void adam_step(Mlp& net, const GradientBundle& grads, AdamState& state) {
  if (grads.gw.size() != net.w.size())
    throw std::invalid_argument("adam_step: gradient shape mismatch");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (size_t l = 0; l < net.w.size(); ++l) {
    adam_update(net.w[l], grads.gw[l], state.mw[l], state.vw[l], state, bc1, bc2);
    adam_update(net.b[l], grads.gb[l], state.mb[l], state.vb[l], state, bc1, bc2);
  }
}

void soft_update(Mlp& target, const Mlp& online, double tau) {
  if (target.dims != online.dims)
    throw std::invalid_argument("soft_update: shape mismatch");
  if (!(tau > 0.0 && tau <= 1.0))
    throw std::invalid_argument("soft_update: tau must be in (0, 1]");
  for (size_t l = 0; l < target.w.size(); ++l) {
    for (size_t i = 0; i < target.w[l].size(); ++i)
      target.w[l][i] = tau * online.w[l][i] + (1.0 - tau) * target.w[l][i];
    for (size_t i = 0; i < target.b[l].size(); ++i)
      target.b[l][i] = tau * online.b[l][i] + (1.0 - tau) * target.b[l][i];
  }
}

Mlp copy_params(const Mlp& src) { return src; }

void save_params(const Mlp& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_params: cannot open " + path);
  const uint32_t version = 1;
  const uint32_t layers = static_cast<uint32_t>(net.num_layers());
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  out.write(reinterpret_cast<const char*>(&layers), sizeof(layers));
  for (int d : net.dims) {
    const uint32_t v = static_cast<uint32_t>(d);
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
  }
  for (size_t l = 0; l < net.w.size(); ++l) {
    out.write(reinterpret_cast<const char*>(net.w[l].data()),
              static_cast<std::streamsize>(net.w[l].size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(net.b[l].data()),
              static_cast<std::streamsize>(net.b[l].size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("save_params: write failed for " + path);
}

Mlp load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_params: cannot open " + path);
  uint32_t version = 0, layers = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&layers), sizeof(layers));
  if (!in || version != 1) throw std::runtime_error("load_params: bad header in " + path);
  std::vector<int> dims(layers + 1);
  for (auto& d : dims) {
    uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    d = static_cast<int>(v);
  }
  if (!in) throw std::runtime_error("load_params: truncated header in " + path);
  Mlp net = make_zero_mlp(dims);
  for (size_t l = 0; l < net.w.size(); ++l) {
    in.read(reinterpret_cast<char*>(net.w[l].data()),
            static_cast<std::streamsize>(net.w[l].size() * sizeof(double)));
    in.read(reinterpret_cast<char*>(net.b[l].data()),
            static_cast<std::streamsize>(net.b[l].size() * sizeof(double)));
  }
  if (!in) throw std::runtime_error("load_params: truncated payload in " + path);
  return net;
}

}  // namespace ladts
