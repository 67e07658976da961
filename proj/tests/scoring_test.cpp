// Copyright 2026 The anomseg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "anomseg/metrics.hpp"
#include "anomseg/scoring.hpp"
#include "gtest/gtest.h"
#include "oracles.hpp"

namespace anomseg {
namespace {

// One pixel per column: pixel(values) builds a C x 1 x 1 map.
LogitsMap pixel(std::vector<float> z) {
  const std::size_t c = z.size();
  return LogitsMap(Tensor<float>({c, 1, 1}, std::move(z)));
}

LogitsMap random_logits(std::size_t c, std::size_t h, std::size_t w,
                        std::mt19937& rng, float sd = 2.0f) {
  std::normal_distribution<float> g(0.0f, sd);
  std::vector<float> v(c * h * w);
  for (auto& x : v) x = g(rng);
  return LogitsMap(Tensor<float>({c, h, w}, std::move(v)));
}

std::vector<double> pixel_logits(const LogitsMap& l, std::size_t p) {
  std::vector<double> z;
  for (std::size_t c = 0; c < l.classes(); ++c) z.push_back(l.channel(c)[p]);
  return z;
}

TEST(Mmras, OneMinusMax) {
  EXPECT_NEAR(mmras(pixel({0.2f, 0.7f, 0.1f})).at(0, 0), 0.3, 1e-7);
  for (float v : {-3.0f, 0.0f, 0.5f, 42.0f}) {
    EXPECT_EQ(mmras(pixel({v, v, v})).at(0, 0), 1.0 - v);
  }
}

TEST(Mmras, MatchesChannelLoop) {
  std::mt19937 rng(11);
  const LogitsMap l = random_logits(5, 8, 9, rng);
  const AnomalyScoreMap s = mmras(l);
  for (std::size_t p = 0; p < l.pixels(); ++p) {
    const auto z = pixel_logits(l, p);
    double best = z[0];
    for (double v : z) best = v > best ? v : best;
    EXPECT_EQ(s.values()[p], 1.0 - best);
  }
}

TEST(MaxLogits, SameFormulaAsMmras) {
  std::mt19937 rng(12);
  const LogitsMap l = random_logits(4, 6, 6, rng);
  EXPECT_EQ(max_logits(l), mmras(l));
  EXPECT_EQ(max_logits(pixel({-2.0f, 5.0f})).at(0, 0), -4.0);
}

TEST(MmrasPlus, Arithmetic) {
  // mmras(l) = 0.3, mmras(m) = 0.5.
  const LogitsMap l = pixel({0.7f, 0.0f});
  const LogitsMap m = pixel({0.5f, 0.0f});
  const double a = mmras(l).at(0, 0), b = mmras(m).at(0, 0);
  EXPECT_DOUBLE_EQ(mmras_plus(l, m, EnsembleConfig{0.7}).at(0, 0),
                   0.7 * a + 0.3 * b);
  EXPECT_NEAR(mmras_plus(l, m, EnsembleConfig{0.7}).at(0, 0), 0.36, 1e-7);
}

TEST(MmrasPlus, DegenerateWeightsCollapse) {
  std::mt19937 rng(13);
  const LogitsMap l = random_logits(7, 5, 5, rng);
  const LogitsMap m = random_logits(7, 5, 5, rng, 9.0f);
  EXPECT_EQ(mmras_plus(l, m, EnsembleConfig{1.0}), mmras(l));
  EXPECT_EQ(mmras_plus(l, m, EnsembleConfig{0.0}), mmras(m));
}

TEST(MmrasPlus, IsConvexCombination) {
  std::mt19937 rng(14);
  std::uniform_real_distribution<double> uw(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const LogitsMap l = random_logits(4, 6, 6, rng);
    const LogitsMap m = random_logits(4, 6, 6, rng, 5.0f);
    const AnomalyScoreMap s = mmras_plus(l, m, EnsembleConfig{uw(rng)});
    const AnomalyScoreMap a = mmras(l), b = mmras(m);
    for (std::size_t p = 0; p < s.size(); ++p) {
      const double lo = std::min(a.values()[p], b.values()[p]);
      const double hi = std::max(a.values()[p], b.values()[p]);
      EXPECT_GE(s.values()[p], lo - 1e-12);
      EXPECT_LE(s.values()[p], hi + 1e-12);
    }
  }
}

TEST(MmrasPlus, ShapeMismatchAndRange) {
  std::mt19937 rng(15);
  EXPECT_THROW(mmras_plus(random_logits(3, 4, 4, rng), random_logits(3, 4, 3, rng),
                          EnsembleConfig{}),
               ShapeError);
  EXPECT_THROW(EnsembleConfig{1.01}.validate(), ConfigError);
  EXPECT_THROW(OdinConfig{0.0}.validate(), ConfigError);
}

TEST(Msp, ConfidentAndUniformCases) {
  EXPECT_LT(msp(pixel({30.0f, 0.0f, 0.0f})).at(0, 0), 1e-12);
  EXPECT_LT(msp(pixel({0.0f, -40.0f, -35.0f})).at(0, 0), 1e-12);
  EXPECT_NEAR(msp(pixel({2.0f, 2.0f, 2.0f, 2.0f})).at(0, 0), 0.75, 1e-15);
}

TEST(Msp, MatchesNaiveSoftmax) {
  std::mt19937 rng(16);
  const LogitsMap l = random_logits(6, 10, 10, rng);
  const AnomalyScoreMap s = msp(l);
  for (std::size_t p = 0; p < l.pixels(); ++p) {
    const auto probs = oracle::naive_softmax(pixel_logits(l, p));
    const double expected = 1.0 - *std::max_element(probs.begin(), probs.end());
    EXPECT_NEAR(s.values()[p], expected, 1e-12);
  }
}

TEST(Msp, LargeLogitsStayFinite) {
  const AnomalyScoreMap s = msp(pixel({80.0f, 79.0f, -50.0f}));
  EXPECT_TRUE(std::isfinite(s.at(0, 0)));
  EXPECT_NEAR(s.at(0, 0), 1.0 - 1.0 / (1.0 + std::exp(-1.0)), 1e-12);
}

TEST(Entropy, UniformAndDelta) {
  EXPECT_NEAR(entropy(pixel({1.0f, 1.0f, 1.0f, 1.0f})).at(0, 0), std::log(4.0),
              1e-12);
  EXPECT_NEAR(entropy(pixel({1.0f, 1.0f, 1.0f, 1.0f})).at(0, 0), 1.386294, 1e-6);
  EXPECT_LT(entropy(pixel({60.0f, 0.0f, 0.0f})).at(0, 0), 1e-12);
}

TEST(Entropy, MatchesSummationOracle) {
  std::mt19937 rng(17);
  const LogitsMap l = random_logits(8, 10, 10, rng);
  const AnomalyScoreMap s = entropy(l);
  for (std::size_t p = 0; p < l.pixels(); ++p) {
    EXPECT_NEAR(s.values()[p], oracle::naive_entropy(pixel_logits(l, p)), 1e-10);
  }
}

TEST(Odin, TemperatureScaledSoftmax) {
  // softmax([1, 0, 0]) has top probability e / (e + 2).
  const double e = std::exp(1.0);
  EXPECT_NEAR(odin(pixel({3.0f, 0.0f, 0.0f}), OdinConfig{3.0}).at(0, 0),
              1.0 - e / (e + 2.0), 1e-12);
  EXPECT_NEAR(odin(pixel({3.0f, 0.0f, 0.0f}), OdinConfig{3.0}).at(0, 0), 0.423883,
              1e-6);
}

TEST(Odin, UnitTemperatureIsMsp) {
  std::mt19937 rng(18);
  const LogitsMap l = random_logits(19, 12, 12, rng, 6.0f);
  EXPECT_EQ(odin(l, OdinConfig{1.0}), msp(l));
}

TEST(Odin, HighTemperatureApproachesUniform) {
  const LogitsMap l = pixel({4.0f, -1.0f, 2.5f, 0.0f, 3.0f});
  EXPECT_NEAR(odin(l, OdinConfig{1e6}).at(0, 0), 1.0 - 1.0 / 5.0, 1e-5);
  EXPECT_LT(odin(l, OdinConfig{10.0}).at(0, 0), odin(l, OdinConfig{100.0}).at(0, 0));
}

TEST(ScoringProperties, RaisingTheArgmaxNeverRaisesTheScore) {
  std::mt19937 rng(19);
  const LogitsMap l = random_logits(5, 6, 6, rng);
  std::vector<float> bumped(l.values().begin(), l.values().end());
  const std::size_t P = l.pixels();
  for (std::size_t p = 0; p < P; ++p) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < l.classes(); ++c) {
      if (bumped[c * P + p] > bumped[best * P + p]) best = c;
    }
    bumped[best * P + p] += 1.5f;
  }
  const LogitsMap lb(Tensor<float>(l.shape(), bumped));
  for (auto fn : {+[](const LogitsMap& x) { return mmras(x); },
                  +[](const LogitsMap& x) { return msp(x); },
                  +[](const LogitsMap& x) { return odin(x, OdinConfig{}); }}) {
    const AnomalyScoreMap before = fn(l), after = fn(lb);
    for (std::size_t p = 0; p < P; ++p) {
      EXPECT_LE(after.values()[p], before.values()[p]);
    }
  }
}

TEST(ScoringProperties, ChannelPermutationInvariance) {
  std::mt19937 rng(20);
  const std::size_t C = 7;
  const LogitsMap l = random_logits(C, 5, 4, rng);
  const LogitsMap m = random_logits(C, 5, 4, rng);
  std::vector<std::size_t> perm(C);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto permute = [&](const LogitsMap& x) {
    std::vector<float> v;
    for (std::size_t c = 0; c < C; ++c) {
      const auto ch = x.channel(perm[c]);
      v.insert(v.end(), ch.begin(), ch.end());
    }
    return LogitsMap(Tensor<float>(x.shape(), v));
  };
  const LogitsMap lp = permute(l), mp = permute(m);
  EXPECT_EQ(mmras(lp), mmras(l));
  EXPECT_EQ(max_logits(lp), max_logits(l));
  EXPECT_EQ(mmras_plus(lp, mp, EnsembleConfig{}), mmras_plus(l, m, EnsembleConfig{}));
  // Softmax sums are order-dependent at the rounding level only.
  const auto near = [](const AnomalyScoreMap& a, const AnomalyScoreMap& b) {
    for (std::size_t p = 0; p < a.size(); ++p) {
      EXPECT_NEAR(a.values()[p], b.values()[p], 1e-12);
    }
  };
  near(msp(lp), msp(l));
  near(entropy(lp), entropy(l));
  near(odin(lp, OdinConfig{}), odin(l, OdinConfig{}));
}

TEST(ScoringProperties, ConstantShift) {
  std::mt19937 rng(21);
  // Logits on a 2^-10 grid so adding k is exact in float.
  std::vector<float> base(6 * 5 * 5);
  std::normal_distribution<float> g(0.0f, 2.0f);
  for (auto& v : base) v = std::round(g(rng) * 1024.0f) / 1024.0f;
  const LogitsMap l(Tensor<float>({6, 5, 5}, base));
  const float k = 4.0f;
  std::vector<float> shifted = base;
  for (auto& v : shifted) v += k;
  const LogitsMap ls(Tensor<float>(l.shape(), shifted));
  const auto check = [](const AnomalyScoreMap& a, const AnomalyScoreMap& b,
                        double offset, double tol) {
    for (std::size_t p = 0; p < a.size(); ++p) {
      EXPECT_NEAR(a.values()[p], b.values()[p] + offset, tol);
    }
  };
  check(mmras(ls), mmras(l), -k, 1e-5);
  check(max_logits(ls), max_logits(l), -k, 1e-5);
  check(msp(ls), msp(l), 0.0, 1e-10);
  check(entropy(ls), entropy(l), 0.0, 1e-10);
  check(odin(ls, OdinConfig{}), odin(l, OdinConfig{}), 0.0, 1e-10);
}

TEST(ScoringProperties, OffsetFormDoesNotChangeMetrics) {
  std::mt19937 rng(22);
  std::bernoulli_distribution anomalous(0.2);
  for (int trial = 0; trial < 10; ++trial) {
    const LogitsMap l = random_logits(5, 20, 20, rng);
    const AnomalyScoreMap one_minus = max_logits(l);
    std::vector<double> neg(one_minus.size());
    for (std::size_t p = 0; p < neg.size(); ++p) {
      const auto z = pixel_logits(l, p);
      neg[p] = -*std::max_element(z.begin(), z.end());
    }
    std::vector<std::uint8_t> y(neg.size());
    for (auto& v : y) v = anomalous(rng) ? 1 : 0;
    y[0] = 1;
    y[1] = 0;
    const MetricsReport a = exact_metrics(one_minus.values(), y);
    const MetricsReport b = exact_metrics(neg, y);
    EXPECT_EQ(a, b);
  }
}

TEST(ScoreMethod, NamesRoundTrip) {
  for (const char* name : {"mmras", "mmras_plus", "msp", "entropy", "odin",
                           "max_logits", "mask2anomaly_logits"}) {
    EXPECT_EQ(to_string(parse_score_method(name)), name);
  }
  EXPECT_THROW(parse_score_method("maxlogit"), ConfigError);
  EXPECT_TRUE(needs_text(ScoreMethod::kMmrasPlus));
  EXPECT_FALSE(needs_text(ScoreMethod::kMask2AnomalyLogits));
}

}  // namespace
}  // namespace anomseg
