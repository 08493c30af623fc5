// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "memopt/credit.hpp"
#include "memopt/error.hpp"
#include "memopt/random.hpp"

namespace memopt {
namespace {

// Σ_k (γλ)^k δ_{t+k}, summed forward for every t.
std::vector<double> forward_sum(const std::vector<double> &r, const std::vector<double> &v, double g, double l) {
  const std::size_t n = r.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double w = 1;
    for (std::size_t k = t; k < n; ++k) {
      out[t] += w * (r[k] + g * v[k + 1] - v[k]);
      w *= g * l;
    }
  }
  return out;
}

TEST(Gae, SmallExamples) {
  EXPECT_EQ(gae({1}, {0, 0}, 0.3, 0.7), std::vector<double>{1.0});
  const auto a = gae({0, 1}, {0, 0, 0}, 0.99, 0.95);
  ASSERT_EQ(a.size(), 2u);
  EXPECT_NEAR(a[0], 0.9405, 1e-15);
  EXPECT_EQ(a[1], 1.0);
  EXPECT_TRUE(gae({}, {0.5}, 0.9, 0.9).empty());
}

TEST(Gae, MatchesForwardSum) {
  Rng rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 30);
    std::vector<double> r(n), v(n + 1);
    for (double &x : r) x = uniform_unit(rng) * 10 - 5;
    for (double &x : v) x = uniform_unit(rng) * 4 - 2;
    const double g = uniform_unit(rng), l = uniform_unit(rng);
    const auto got = gae(r, v, g, l);
    const auto want = forward_sum(r, v, g, l);
    for (std::size_t t = 0; t < n; ++t) EXPECT_NEAR(got[t], want[t], 1e-12);
  }
}

TEST(Gae, Reductions) {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> r(20), v(21);
    for (double &x : r) x = uniform_unit(rng) * 2 - 1;
    for (double &x : v) x = uniform_unit(rng);
    const double g = uniform_unit(rng);
    EXPECT_EQ(gae(r, v, g, 0.0), td_errors(r, v, g));

    const auto togo = gae(r, std::vector<double>(21, 0.0), 1.0, 1.0);
    double sum = 0;
    for (std::size_t t = r.size(); t-- > 0;) {
      sum += r[t];
      EXPECT_EQ(togo[t], sum);
    }
  }
}

TEST(Gae, Errors) {
  try {
    gae({1, 2}, {0, 0}, 0.9, 0.9);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kLengthMismatch);
  }
  EXPECT_THROW(gae({1}, {0, 0}, 1.1, 0.5), Error);
  EXPECT_THROW(gae({1}, {0, 0}, 0.5, -0.1), Error);
  EXPECT_THROW(gae({1}, {0, 0}, NAN, 0.5), Error);
}

TEST(PpoClip, Examples) {
  EXPECT_DOUBLE_EQ(ppo_clip_term(1.5, 1.0, 0.2), 1.2);
  EXPECT_DOUBLE_EQ(ppo_clip_term(0.5, -1.0, 0.2), -0.8);
  for (double adv : {-3.0, 0.0, 0.25, 7.0})
    for (double eps : {0.01, 0.2, 0.9}) EXPECT_EQ(ppo_clip_term(1.0, adv, eps), adv);
}

TEST(PpoClip, NeverExceedsUnclipped) {
  Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const double ratio = 1e-3 + uniform_unit(rng) * 3;
    const double adv = uniform_unit(rng) * 10 - 5;
    const double eps = 1e-3 + uniform_unit(rng) * 0.5;
    const double got = ppo_clip_term(ratio, adv, eps);
    EXPECT_LE(got, ratio * adv);
    const double clipped = std::max(1 - eps, std::min(ratio, 1 + eps));
    EXPECT_EQ(got, std::min(ratio * adv, clipped * adv));
  }
}

}  // namespace
}  // namespace memopt
