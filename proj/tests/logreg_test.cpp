/*
 * Copyright 2026 The swagg Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "swagg/logreg.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "swagg/cubic_constants.hpp"
#include "swagg/error.hpp"
#include "swagg/fixedpoint.hpp"

namespace swagg {
namespace {

using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

cpp_int to_oracle(const BigInt& v) { return cpp_int(v.get_str()); }

cpp_rational dyadic(const cpp_int& v, unsigned shift) {
  return cpp_rational(v, cpp_int(1) << shift);
}

const PaillierKeypair& key512() {
  static const PaillierKeypair kp = [] {
    Csprng rng(5120);
    return generate_keypair(512, rng);
  }();
  return kp;
}

Dataset toy_dataset(Csprng& rng, std::size_t rows, std::size_t features) {
  Dataset d;
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<double> x(features);
    double score = -0.3;
    for (std::size_t k = 0; k < features; ++k) {
      x[k] = rng.uniform_real();
      score += (k % 2 ? -0.7 : 1.1) * x[k];
    }
    d.x.push_back(std::move(x));
    d.y.push_back(score + 0.3 * (rng.uniform_real() - 0.5) > 0 ? 1 : 0);
  }
  return d;
}

TEST(Sigmoid, Values) {
  EXPECT_EQ(sigmoid(0), 0.5);
  EXPECT_NEAR(sigmoid(2), 0.8807970779778823, 1e-15);
  for (double x : {-700.0, -30.0, -1.5, 0.25, 3.0, 40.0, 800.0}) {
    EXPECT_NEAR(sigmoid(x) + sigmoid(-x), 1.0, 1e-15) << x;
    EXPECT_GE(sigmoid(x), 0.0);
    EXPECT_LE(sigmoid(x), 1.0);
  }
}

TEST(Train, ZeroEpochsReturnsZeros) {
  Dataset d{{{0.1, 0.2}, {0.9, 0.4}}, {0, 1}};
  auto m = train(d, {0.5, 0, 0});
  EXPECT_EQ(m.theta, std::vector<double>(3, 0.0));
}

TEST(Train, SeparableTwoPoints) {
  Dataset d{{{0.0}, {1.0}}, {0, 1}};
  auto m = train(d, {0.5, 200, 0});
  EXPECT_EQ(accuracy(m, d), 1.0);
}

TEST(Train, SingleClass) {
  Dataset d{{{0.2, 0.1}, {0.7, 0.9}, {0.4, 0.3}}, {1, 1, 1}};
  auto m = train(d, {0.5, 50, 0});
  for (const auto& x : d.x) EXPECT_GE(predict_proba(m, x), 0.5);
}

TEST(Train, CostNonIncreasingFullBatch) {
  Csprng rng(21);
  const Dataset d = toy_dataset(rng, 80, 4);
  LogRegModel m;
  m.theta.assign(5, 0.0);
  double prev = cost(m, d);
  for (int epoch = 0; epoch < 100; ++epoch) {
    m = train_from(m, d, {0.5, 1, 0});
    const double now = cost(m, d);
    EXPECT_LE(now, prev + 1e-12) << "epoch " << epoch;
    prev = now;
  }
  EXPECT_GT(accuracy(m, d), 0.7);
}

TEST(Train, MiniBatchIsReplayable) {
  Csprng rng(22);
  const Dataset d = toy_dataset(rng, 40, 3);
  Csprng a(7), b(7);
  auto m1 = train(d, {0.5, 5, 8}, &a);
  auto m2 = train(d, {0.5, 5, 8}, &b);
  EXPECT_EQ(m1.theta, m2.theta);
}

TEST(Train, DimensionMismatch) {
  Dataset d{{{0.1, 0.2}, {0.3}}, {0, 1}};
  EXPECT_THROW(train(d, {}), Error);
  Dataset labels{{{0.1}}, {0, 1}};
  EXPECT_THROW(train(labels, {}), Error);
  LogRegModel m{{0.0, 1.0}};
  std::vector<double> x{1.0, 2.0};
  EXPECT_THROW(linear(m, x), Error);
}

TEST(Train, GradientMatchesFiniteDifferences) {
  Csprng rng(23);
  for (int trial = 0; trial < 5; ++trial) {
    const Dataset d = toy_dataset(rng, 12, 3);
    LogRegModel m;
    for (int k = 0; k < 4; ++k) m.theta.push_back(4 * rng.uniform_real() - 2);
    const auto g = gradient(m, d);
    for (std::size_t k = 0; k < m.theta.size(); ++k) {
      const double h = 1e-5;
      LogRegModel up = m, down = m;
      up.theta[k] += h;
      down.theta[k] -= h;
      const double fd = (cost(up, d) - cost(down, d)) / (2 * h);
      EXPECT_LE(std::fabs(fd - g[k]), 1e-5 * std::max(1.0, std::fabs(g[k]))) << k;
    }
  }
}

TEST(CubicFit, SigmoidSymmetry) {
  const auto p = fit_cubic(CubicTarget::kSigmoid, -6, 6);
  EXPECT_NEAR(p.s0, 0.5, 1e-6);
  EXPECT_EQ(p.s2, 0.0);
  EXPECT_GT(p.s1, 0.0);
  EXPECT_LT(p.s3, 0.0);
}

// No cubic gets within 0.05 of the sigmoid on [-6, 6]. Certificate: for any
// odd cubic q, max_i |e(x_i)| >= |h| where h solves
// s(x_i) - 1/2 - a x_i - b x_i^3 = (-1)^i h at three alternation points, and
// the odd part of any cubic approximates s - 1/2 at least as well as the cubic.
TEST(CubicFit, SigmoidBoundOfFiveHundredthsIsUnreachable) {
  const double xs[3] = {1.324, 4.328, 6.0};
  {
    // 3x3 system in (a, b, h), solved by Cramer's rule.
    double m[3][3], rhs[3];
    for (int i = 0; i < 3; ++i) {
      m[i][0] = xs[i];
      m[i][1] = xs[i] * xs[i] * xs[i];
      m[i][2] = (i % 2 == 0) ? 1.0 : -1.0;
      rhs[i] = sigmoid(xs[i]) - 0.5;
    }
    auto det = [](double a[3][3]) {
      return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
             a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
             a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    };
    double mh[3][3];
    for (int i = 0; i < 3; ++i) {
      mh[i][0] = m[i][0];
      mh[i][1] = m[i][1];
      mh[i][2] = rhs[i];
    }
    const double h = det(mh) / det(m);
    EXPECT_GT(std::fabs(h), 0.05);
  }
  const auto p = fit_cubic(CubicTarget::kSigmoid, -6, 6);
  EXPECT_GT(max_abs_error(p, CubicTarget::kSigmoid), 0.05);
}

TEST(CubicFit, SigmoidNarrowerIntervalMeetsFiveHundredths) {
  const auto p = fit_cubic(CubicTarget::kSigmoid, -4, 4);
  EXPECT_LE(max_abs_error(p, CubicTarget::kSigmoid), 0.05);
}

TEST(CubicFit, FrozenConstantsMatchFit) {
  for (auto t : {CubicTarget::kSigmoid, CubicTarget::kNegLogSigmoid,
                 CubicTarget::kNegLogOneMinusSigmoid}) {
    const auto fit = fit_cubic(t);
    const auto& frozen = default_cubic(t);
    const double q = std::ldexp(1.0, -27);
    EXPECT_LE(std::fabs(fit.s0 - frozen.s0), q) << to_string(t);
    EXPECT_LE(std::fabs(fit.s1 - frozen.s1), q) << to_string(t);
    EXPECT_LE(std::fabs(fit.s2 - frozen.s2), q) << to_string(t);
    EXPECT_LE(std::fabs(fit.s3 - frozen.s3), q) << to_string(t);
  }
}

TEST(CubicFit, DeclaredBoundsHoldOnGrid) {
  for (auto t : {CubicTarget::kSigmoid, CubicTarget::kNegLogSigmoid,
                 CubicTarget::kNegLogOneMinusSigmoid}) {
    const auto& p = default_cubic(t);
    EXPECT_GT(p.error_bound, 0.0);
    EXPECT_LE(max_abs_error(p, t, 10000), p.error_bound) << to_string(t);
  }
}

TEST(CubicFit, LogSigmoidMirror) {
  // -log(1 - s(x)) = -log s(-x), so the two fits are mirror images.
  const auto& a = default_cubic(CubicTarget::kNegLogSigmoid);
  const auto& b = default_cubic(CubicTarget::kNegLogOneMinusSigmoid);
  EXPECT_EQ(a.s0, b.s0);
  EXPECT_EQ(a.s1, -b.s1);
  EXPECT_EQ(a.s2, b.s2);
  EXPECT_EQ(a.s3, -b.s3);
}

TEST(CubicFit, DegenerateInterval) {
  EXPECT_THROW(fit_cubic(CubicTarget::kSigmoid, 1, 1), Error);
}

TEST(FixedCubic, EvaluateScaledMatchesOracle) {
  const auto f = default_fixed_cubic(CubicTarget::kSigmoid);
  Csprng rng(31);
  for (int i = 0; i < 50; ++i) {
    BigInt x = rng.random_bits(70) - power_of_two(69);
    const cpp_int ox = to_oracle(x);
    const cpp_int expect = (to_oracle(f.c0) << 162) + ((to_oracle(f.c1) * ox) << 108) +
                           ((to_oracle(f.c2) * ox * ox) << 54) + to_oracle(f.c3) * ox * ox * ox;
    EXPECT_EQ(to_oracle(f.evaluate_scaled(x, 54)), expect);
  }
}

// The identity behind the masked round, in exact rationals.
cpp_rational assembly(const cpp_rational s[4], const cpp_rational& l, const cpp_rational& r) {
  auto poly = [&](const cpp_rational& x) { return s[0] + s[1] * x + s[2] * x * x + s[3] * x * x * x; };
  const cpp_rational z = l + r;
  return poly(z) - poly(r) + s[0] + 3 * s[3] * r * r * r - 3 * s[3] * r * z * z +
         (3 * s[3] * r * r - 2 * s[2] * r) * l;
}

TEST(MaskedCubic, RealArithmeticIdentity) {
  const cpp_rational s[4] = {cpp_rational(1, 2), cpp_rational(197, 1000), 0,
                             cpp_rational(-4, 1000)};
  const cpp_rational one = 1, two = 2;
  const cpp_rational direct = s[0] + s[1] + s[3];
  EXPECT_EQ(assembly(s, one, two), direct);
  EXPECT_EQ(static_cast<double>(direct), 0.693);

  Csprng rng(32);
  const cpp_rational t[4] = {cpp_rational(3, 7), cpp_rational(-5, 11), cpp_rational(2, 13),
                             cpp_rational(1, 17)};
  for (int i = 0; i < 100; ++i) {
    const cpp_rational l(cpp_int(static_cast<long long>(rng.uniform(1u << 20))) - (1 << 19),
                         cpp_int(1) << 16);
    const cpp_rational r(cpp_int(to_oracle(rng.random_bits(90))), cpp_int(1) << 54);
    const cpp_rational expect = t[0] + t[1] * l + t[2] * l * l + t[3] * l * l * l;
    ASSERT_EQ(assembly(t, l, r), expect);
  }
}

MaskedCubicOracle honest_user(const PaillierKeypair& kp, const FixedCubic& f, Csprng& rng) {
  return [&kp, f, &rng](const Ciphertext& enc_z) {
    return answer_masked_cubic(kp.pub, kp.sec, enc_z, f, rng);
  };
}

TEST(MaskedCubic, WorkedExampleThroughPaillier) {
  const auto& kp = key512();
  CubicPoly p;
  p.s0 = 0.5;
  p.s1 = 0.197;
  p.s3 = -0.004;
  const auto f = FixedCubic::quantize(p, 27);
  Csprng rng(33), user_rng(34);
  const int s = 54;
  const auto enc_l = encrypt(kp.pub, power_of_two(s), rng, s);  // l = 1
  const BigInt r = 2 * power_of_two(s);                          // r = 2
  const auto out = masked_sigmoid_open(kp.pub, enc_l, r, f, rng, honest_user(kp, f, user_rng));
  EXPECT_EQ(out.scale_exp, 27 + 3 * s);
  const double y = scaled_to_double(centered(decrypt(kp.sec, kp.pub, out), kp.pub.n), out.scale_exp);
  EXPECT_NEAR(y, 0.693, std::ldexp(1.0, -20));
}

TEST(MaskedCubic, ZeroMaskHook) {
  const auto& kp = key512();
  const auto f = default_fixed_cubic(CubicTarget::kSigmoid);
  Csprng rng(35), user_rng(36);
  const auto enc_l = encrypt(kp.pub, 0, rng, 54);
  const auto out = masked_sigmoid_open(kp.pub, enc_l, 0, f, rng, honest_user(kp, f, user_rng));
  const double y = scaled_to_double(centered(decrypt(kp.sec, kp.pub, out), kp.pub.n), out.scale_exp);
  EXPECT_EQ(y, 0.5);
}

TEST(MaskedCubic, RandomPairsMatchDirectEvaluation) {
  const auto& kp = key512();
  Csprng rng(37), user_rng(38);
  const int s = 54;
  for (auto t : {CubicTarget::kSigmoid, CubicTarget::kNegLogSigmoid}) {
    const auto f = default_fixed_cubic(t);
    const auto& poly = default_cubic(t);
    for (int i = 0; i < 50; ++i) {
      const double l = 12 * rng.uniform_real() - 6;
      const BigInt big_l(static_cast<long>(std::nearbyint(std::ldexp(l, 30))));
      const BigInt scaled_l = big_l * power_of_two(s - 30);  // exact l at scale S
      const BigInt r = draw_cubic_mask(rng, 80, 27, s);
      const auto enc_l = encrypt(kp.pub, reduce(scaled_l, kp.pub.n), rng, s);
      const auto out =
          masked_sigmoid_open(kp.pub, enc_l, r, f, rng, honest_user(kp, f, user_rng));
      const BigInt plain = centered(decrypt(kp.sec, kp.pub, out), kp.pub.n);

      // Exact: same integer as evaluating the quantized cubic at l directly.
      const cpp_int ol = to_oracle(scaled_l);
      const cpp_int expect = (to_oracle(f.c0) << 162) + ((to_oracle(f.c1) * ol) << 108) +
                             ((to_oracle(f.c2) * ol * ol) << 54) +
                             to_oracle(f.c3) * ol * ol * ol;
      ASSERT_EQ(to_oracle(plain), expect);

      const double direct = poly(std::ldexp(big_l.get_d(), -30));
      EXPECT_NEAR(scaled_to_double(plain, out.scale_exp), direct, std::ldexp(1.0, -20));
      const cpp_rational exact = dyadic(expect, 27 + 3 * s);
      EXPECT_NEAR(static_cast<double>(exact), direct, std::ldexp(1.0, -20));
    }
  }
}

TEST(MaskedCubic, ReplyScaleChecked) {
  const auto& kp = key512();
  const auto f = default_fixed_cubic(CubicTarget::kSigmoid);
  Csprng rng(39), user_rng(40);
  const auto enc_l = encrypt(kp.pub, 5, rng, 54);
  auto reply = answer_masked_cubic(kp.pub, kp.sec, mask_linear_term(kp.pub, enc_l, 3, rng), f,
                                   user_rng);
  reply.enc_z_squared.scale_exp += 1;
  EXPECT_THROW(assemble_masked_cubic(kp.pub, enc_l, 3, f, reply), Error);
}

// With r uniform over [0, 2^16), z = l + r is uniform mod 2^16 for every l.
TEST(MaskedCubic, MaskHidesLinearTerm) {
  Csprng rng(41);
  const BigInt mod = power_of_two(16);
  for (long l : {0L, 12345L, -999L}) {
    std::vector<double> hist(256, 0);
    const int trials = 25600;
    for (int i = 0; i < trials; ++i) {
      const BigInt r = draw_cubic_mask(rng, 16, 0, 0);
      const BigInt z = reduce(BigInt(l) + r, mod);
      hist[z.get_ui() >> 8] += 1;
    }
    double chi2 = 0;
    const double expected = trials / 256.0;
    for (double h : hist) chi2 += (h - expected) * (h - expected) / expected;
    boost::math::chi_squared dist(255);
    EXPECT_GT(1.0 - boost::math::cdf(dist, chi2), 0.001) << l;
  }
}

TEST(MaskedLinear, Examples) {
  const auto& kp = key512();
  Csprng rng(42);
  auto open = [&](long y, long h, long r) {
    const auto enc_y = encrypt(kp.pub, reduce(BigInt(y), kp.pub.n), rng, 0);
    const auto enc_yr = encrypt(kp.pub, reduce(BigInt(y * r), kp.pub.n), rng, 0);
    const auto out = masked_linear_open(kp.pub, enc_y, BigInt(h + r), 0, enc_yr);
    return centered(decrypt(kp.sec, kp.pub, out), kp.pub.n);
  };
  EXPECT_EQ(open(1, 3, 5), 3);
  EXPECT_EQ(open(0, 3, 5), 0);
  EXPECT_EQ(open(0, -77, 1234), 0);
  EXPECT_EQ(open(4, -6, 0), -24);
}

TEST(MaskedLinear, ScaledPayload) {
  const auto& kp = key512();
  Csprng rng(43);
  const int f = 27, hs = 189;
  const BigInt y = power_of_two(f);                              // 1.0
  const BigInt h = BigInt(-3) * power_of_two(hs - 2);            // -0.75
  const BigInt r = rng.random_bits(80 + hs + 8);
  const auto enc_y = encrypt(kp.pub, y, rng, f);
  const auto enc_yr = encrypt(kp.pub, reduce(y * r, kp.pub.n), rng, f + hs);
  const auto out = masked_linear_open(kp.pub, enc_y, h + r, hs, enc_yr);
  EXPECT_EQ(out.scale_exp, f + hs);
  EXPECT_EQ(scaled_to_double(centered(decrypt(kp.sec, kp.pub, out), kp.pub.n), out.scale_exp),
            -0.75);
  EXPECT_THROW(masked_linear_open(kp.pub, enc_y, h + r, hs + 1, enc_yr), Error);
}

}  // namespace
}  // namespace swagg
