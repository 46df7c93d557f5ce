#pragma once

#include <span>
#include <vector>

namespace ladts {

// Precomputed denoising constants for an I-step chain. Entry [i-1] holds
// the value for step i (steps are 1-based in the update rule).
//
//   beta_i       = 1 - exp(-beta_min/I - (2i-1)/(2 I^2) (beta_max - beta_min))
//   lambda_i     = 1 - beta_i
//   lambda_bar_i = prod_{m<=i} lambda_m
//   beta_tilde_i = (1 - lambda_bar_{i-1}) / (1 - lambda_bar_i) * beta_i
//
// with lambda_bar_0 = 1, which forces beta_tilde_1 = 0.
struct BetaSchedule {
  int steps = 0;
  double beta_min = 0.0;
  double beta_max = 0.0;
  std::vector<double> beta;
  std::vector<double> lambda;
  std::vector<double> lambda_bar;
  std::vector<double> beta_tilde;
};

BetaSchedule build_schedule(int steps, double beta_min, double beta_max);

// Closed-form corruption x_i = sqrt(lambda_bar_i) x0 + sqrt(1-lambda_bar_i) eps.
// Used only by schedule validation; the policy path runs the reverse chain.
std::vector<double> forward_diffuse(std::span<const double> x0, int i,
                                    const BetaSchedule& sched,
                                    std::span<const double> eps);

}  // namespace ladts
