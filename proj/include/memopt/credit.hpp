// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

namespace memopt {

// Generalized advantage estimates by backward recursion. `values` carries
// one extra entry, the value of the state after the last reward. Throws
// kLengthMismatch when values.size() != rewards.size() + 1 and kConfig when
// gamma or lambda leaves [0, 1].
std::vector<double> gae(const std::vector<double> &rewards, const std::vector<double> &values, double gamma,
                        double lambda);

// One-step TD errors r_t + gamma·V_{t+1} − V_t. Same checks as gae().
std::vector<double> td_errors(const std::vector<double> &rewards, const std::vector<double> &values,
                              double gamma);

// min(ratio·adv, clip(ratio, 1−eps, 1+eps)·adv).
double ppo_clip_term(double ratio, double advantage, double eps);

}  // namespace memopt
