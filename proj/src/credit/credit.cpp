// SPDX-License-Identifier: Apache-2.0

#include "memopt/credit.hpp"

#include <algorithm>
#include <string>

#include "memopt/error.hpp"

namespace memopt {

namespace {

void check_unit(double x, const char *what) {
  if (!(x >= 0 && x <= 1)) throw Error(ErrorCode::kConfig, std::string(what) + " must lie in [0, 1]");
}

}  // namespace

std::vector<double> td_errors(const std::vector<double> &rewards, const std::vector<double> &values,
                              double gamma) {
  if (values.size() != rewards.size() + 1) {
    throw Error(ErrorCode::kLengthMismatch, "expected " + std::to_string(rewards.size() + 1) + " values for " +
                                                std::to_string(rewards.size()) + " rewards, got " +
                                                std::to_string(values.size()));
  }
  check_unit(gamma, "gamma");
  std::vector<double> delta(rewards.size());
  for (std::size_t t = 0; t < rewards.size(); ++t) delta[t] = rewards[t] + gamma * values[t + 1] - values[t];
  return delta;
}

std::vector<double> gae(const std::vector<double> &rewards, const std::vector<double> &values, double gamma,
                        double lambda) {
  std::vector<double> adv = td_errors(rewards, values, gamma);
  check_unit(lambda, "lambda");
  const double decay = gamma * lambda;
  double next = 0;
  for (std::size_t t = adv.size(); t-- > 0;) {
    adv[t] += decay * next;
    next = adv[t];
  }
  return adv;
}

double ppo_clip_term(double ratio, double advantage, double eps) {
  const double clipped = std::clamp(ratio, 1 - eps, 1 + eps);
  return std::min(ratio * advantage, clipped * advantage);
}

}  // namespace memopt
