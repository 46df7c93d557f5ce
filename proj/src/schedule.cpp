#include "ladts/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace ladts {

BetaSchedule build_schedule(int steps, double beta_min, double beta_max) {
  if (steps < 1) throw std::invalid_argument("build_schedule: steps must be >= 1");
  if (!(beta_min > 0.0) || !(beta_min < beta_max))
    throw std::invalid_argument("build_schedule: need 0 < beta_min < beta_max");

  BetaSchedule s;
  s.steps = steps;
  s.beta_min = beta_min;
  s.beta_max = beta_max;
  s.beta.resize(steps);
  s.lambda.resize(steps);
  s.lambda_bar.resize(steps);
  s.beta_tilde.resize(steps);

  const double n = static_cast<double>(steps);
  double cum = 1.0;
  double cum_prev = 1.0;
  for (int i = 1; i <= steps; ++i) {
    const double expo = beta_min / n +
                        (2.0 * i - 1.0) / (2.0 * n * n) * (beta_max - beta_min);
    const double beta = 1.0 - std::exp(-expo);
    const double lambda = 1.0 - beta;
    cum_prev = cum;
    cum *= lambda;
    s.beta[i - 1] = beta;
    s.lambda[i - 1] = lambda;
    s.lambda_bar[i - 1] = cum;
    s.beta_tilde[i - 1] = (1.0 - cum_prev) / (1.0 - cum) * beta;
  }
  return s;
}

std::vector<double> forward_diffuse(std::span<const double> x0, int i,
                                    const BetaSchedule& sched,
                                    std::span<const double> eps) {
  if (i < 1 || i > sched.steps)
    throw std::out_of_range("forward_diffuse: step index out of range");
  if (eps.size() != x0.size())
    throw std::invalid_argument("forward_diffuse: eps size mismatch");
  const double a = std::sqrt(sched.lambda_bar[i - 1]);
  const double b = std::sqrt(1.0 - sched.lambda_bar[i - 1]);
  std::vector<double> xi(x0.size());
  for (size_t k = 0; k < x0.size(); ++k) xi[k] = a * x0[k] + b * eps[k];
  return xi;
}

}  // namespace ladts
