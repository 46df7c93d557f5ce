#pragma once

#include <algorithm>
#include <cmath>

#include "ladts/mlp.hpp"

namespace ladts::testutil {

// Aggregate relative L2 error between an analytic gradient and central
// finite differences.
struct FdStats {
  double num = 0.0;
  double den = 0.0;
  void accum(double analytic, double fd) {
    num += (analytic - fd) * (analytic - fd);
    den += fd * fd;
  }
  double rel() const { return std::sqrt(num) / std::max(std::sqrt(den), 1e-300); }
};

// Recomputes every parameter gradient of `net` by central differences of
// `loss` (a callable seeing `net` by reference) and compares against the
// analytic bundle.
template <class F>
double param_grad_rel_error(Mlp& net, const GradientBundle& analytic, F&& loss,
                            double h = 1e-5) {
  FdStats st;
  for (size_t l = 0; l < net.w.size(); ++l) {
    for (size_t i = 0; i < net.w[l].size(); ++i) {
      double& p = net.w[l][i];
      const double saved = p;
      p = saved + h;
      const double fp = loss();
      p = saved - h;
      const double fm = loss();
      p = saved;
      st.accum(analytic.gw[l][i], (fp - fm) / (2.0 * h));
    }
    for (size_t i = 0; i < net.b[l].size(); ++i) {
      double& p = net.b[l][i];
      const double saved = p;
      p = saved + h;
      const double fp = loss();
      p = saved - h;
      const double fm = loss();
      p = saved;
      st.accum(analytic.gb[l][i], (fp - fm) / (2.0 * h));
    }
  }
  return st.rel();
}

// Same for the gradient w.r.t. an input vector.
template <class F>
double input_grad_rel_error(std::vector<double>& input,
                            const std::vector<double>& analytic, F&& loss,
                            double h = 1e-5) {
  FdStats st;
  for (size_t i = 0; i < input.size(); ++i) {
    const double saved = input[i];
    input[i] = saved + h;
    const double fp = loss();
    input[i] = saved - h;
    const double fm = loss();
    input[i] = saved;
    st.accum(analytic[i], (fp - fm) / (2.0 * h));
  }
  return st.rel();
}

}  // namespace ladts::testutil
