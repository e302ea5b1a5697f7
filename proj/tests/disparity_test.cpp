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

#include "swagg/disparity.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include <boost/multiprecision/cpp_int.hpp>

#include "swagg/error.hpp"
#include "swagg/fixedpoint.hpp"

namespace swagg {
namespace {

using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

const PaillierKeypair& key512() {
  static const PaillierKeypair kp = [] {
    Csprng rng(5121);
    return generate_keypair(512, rng);
  }();
  return kp;
}

double open(const Ciphertext& c) {
  const auto& kp = key512();
  return scaled_to_double(centered(decrypt(kp.sec, kp.pub, c), kp.pub.n), c.scale_exp);
}

Dataset random_dataset(Csprng& rng, std::size_t rows, std::size_t features) {
  Dataset d;
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<double> x(features);
    for (auto& v : x) v = rng.uniform_real();
    d.y.push_back(x[0] + 0.2 * rng.uniform_real() > 0.6 ? 1 : 0);
    d.x.push_back(std::move(x));
  }
  return d;
}

// Exact oracle: quantize like the protocol, evaluate the frozen integer cubic
// in rationals.
cpp_rational fixed(double v) {
  return cpp_rational(cpp_int(static_cast<long long>(std::nearbyint(std::ldexp(v, 27)))),
                      cpp_int(1) << 27);
}

cpp_rational rational_cubic(CubicTarget t, const cpp_rational& x) {
  const auto f = default_fixed_cubic(t, 27);
  auto c = [](const BigInt& v) { return cpp_rational(cpp_int(v.get_str()), cpp_int(1) << 27); };
  return c(f.c0) + c(f.c1) * x + c(f.c2) * x * x + c(f.c3) * x * x * x;
}

double oracle_loss(const LogRegModel& m, const Dataset& d, bool binary) {
  cpp_rational acc = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    cpp_rational l = fixed(m.theta[0]);
    for (std::size_t k = 0; k < d.x[i].size(); ++k) l += fixed(m.theta[k + 1]) * fixed(d.x[i][k]);
    if (d.y[i] == 1) acc += rational_cubic(CubicTarget::kNegLogSigmoid, l);
    else if (binary) acc += rational_cubic(CubicTarget::kNegLogOneMinusSigmoid, l);
  }
  return static_cast<double>(acc);
}

struct Client {
  Client(const Dataset& data, DisparityParams p, std::uint64_t seed)
      : rng(seed), peer(key512().pub, key512().sec, data.y, p, rng) {}
  Csprng rng;
  LocalEvaluationPeer peer;
};

constexpr double kTol = 1.0 / (1 << 18);

TEST(Fixed, ToFixedAndSnap) {
  DisparityParams p;
  EXPECT_EQ(to_fixed(1.5, p), BigInt(201326592));
  EXPECT_EQ(to_fixed(-1.0, p), -power_of_two(27));
  EXPECT_EQ(snap_to_grid(0.25, p), 0.25);
  EXPECT_THROW(to_fixed(std::ldexp(1.0, 17), p), Error);
  EXPECT_THROW(to_fixed(NAN, p), Error);
}

TEST(EncryptDataset, RoundTripAndWire) {
  const auto& kp = key512();
  DisparityParams p;
  Csprng rng(1);
  Dataset d{{{0.5, 0.25}, {1.0, 0.0}}, {1, 0}};
  auto enc = encrypt_dataset(kp.pub, d, p, rng);
  ASSERT_EQ(enc.x.size(), 2u);
  EXPECT_EQ(open(enc.x[0][0]), 0.5);
  EXPECT_EQ(open(enc.x[0][1]), 0.25);
  EXPECT_EQ(open(enc.y[0]), 1.0);
  EXPECT_EQ(open(enc.y[1]), 0.0);
  auto back = deserialize_encrypted_dataset(serialize(enc), p);
  ASSERT_EQ(back.x.size(), 2u);
  EXPECT_EQ(back.x[1][0].value, enc.x[1][0].value);
  EXPECT_EQ(back.y[1].value, enc.y[1].value);

  Dataset empty;
  auto e = encrypt_dataset(kp.pub, empty, p, rng);
  EXPECT_TRUE(e.x.empty());
  EXPECT_TRUE(deserialize_encrypted_dataset(serialize(e), p).y.empty());

  Dataset bad{{{0.1}}, {2}};
  EXPECT_THROW(encrypt_dataset(kp.pub, bad, p, rng), Error);
}

TEST(ComputeLS, EmptyAndNegativeLabels) {
  const auto& kp = key512();
  DisparityParams p;
  Csprng rng(2);
  LogRegModel m{{0.3, -1.2}};
  const auto enc_model = encrypt_model(kp.pub, m, p, rng);
  Dataset empty;
  Client c(empty, p, 3);
  auto ls = compute_LS(kp.pub, enc_model, empty, c.peer, p, rng);
  EXPECT_EQ(ls.scale_exp, 216);
  EXPECT_EQ(open(ls), 0.0);

  Dataset negatives{{{0.1}, {0.7}}, {0, 0}};
  EXPECT_EQ(open(compute_LS(kp.pub, enc_model, negatives, c.peer, p, rng)), 0.0);
}

TEST(ComputeLS, MatchesOracle) {
  const auto& kp = key512();
  Csprng rng(4);
  for (bool binary : {false, true}) {
    DisparityParams p;
    p.binary_ce = binary;
    Dataset bench{{{0.2, 0.9}, {0.8, 0.1}, {0.5, 0.5}}, {1, 0, 1}};
    LogRegModel m{{0.4, 2.5, -1.75}};
    Client c(bench, p, 5);
    auto ls = compute_LS(kp.pub, encrypt_model(kp.pub, m, p, rng), bench, c.peer, p, rng);
    const double expect = oracle_loss(m, bench, binary);
    EXPECT_NEAR(open(ls), expect, kTol) << binary;
    EXPECT_NEAR(plaintext_LS(m, bench, p), expect, 1e-12);
  }
}

TEST(ComputeLL, EmptyAndNegativeLabels) {
  const auto& kp = key512();
  DisparityParams p;
  Csprng rng(6);
  LogRegModel server{{0.1, 0.2}};
  Dataset empty;
  Client c(empty, p, 7);
  EXPECT_EQ(open(compute_LL(kp.pub, encrypt_dataset(kp.pub, empty, p, rng), server, c.peer, p, rng)),
            0.0);

  Dataset negatives{{{0.3}, {0.9}, {0.0}}, {0, 0, 0}};
  Client d(negatives, p, 8);
  auto ll = compute_LL(kp.pub, encrypt_dataset(kp.pub, negatives, p, rng), server, d.peer, p, rng);
  EXPECT_EQ(open(ll), 0.0);
}

TEST(ComputeLL, MatchesOracle) {
  const auto& kp = key512();
  Csprng rng(9);
  for (bool binary : {false, true}) {
    DisparityParams p;
    p.binary_ce = binary;
    Dataset local{{{0.3, 0.6}, {0.95, 0.05}, {0.0, 1.0}}, {0, 1, 1}};
    LogRegModel server{{-0.5, 1.5, 0.75}};
    Client c(local, p, 10);
    auto ll = compute_LL(kp.pub, encrypt_dataset(kp.pub, local, p, rng), server, c.peer, p, rng);
    const double expect = oracle_loss(server, local, binary);
    EXPECT_NEAR(open(ll), expect, kTol) << binary;
    EXPECT_NEAR(plaintext_LL(server, local, p), expect, 1e-12);
  }
}

// Lies about h + r in the LL round.
class LyingPeer : public LocalEvaluationPeer {
 public:
  using LocalEvaluationPeer::LocalEvaluationPeer;
  OpenReply masked_open(const OpenRequest& request) override {
    auto rep = LocalEvaluationPeer::masked_open(request);
    rep.h_plus_r[0] += power_of_two(189);  // claims h is 1.0 larger
    return rep;
  }
};

TEST(ComputeLL, FraudulentOpeningDetected) {
  const auto& kp = key512();
  Csprng rng(11), user(12);
  Dataset local{{{0.3}, {0.8}}, {1, 1}};
  LogRegModel server{{0.0, 1.0}};
  DisparityParams p;
  LyingPeer liar(kp.pub, kp.sec, local.y, p, user);
  const auto enc = encrypt_dataset(kp.pub, local, p, rng);
  try {
    compute_LL(kp.pub, enc, server, liar, p, rng);
    FAIL() << "expected a proof failure";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kProofFailure);
  }

  // Without verification the lie goes through and corrupts LL.
  p.verify_h = false;
  LyingPeer unchecked(kp.pub, kp.sec, local.y, p, user);
  auto ll = compute_LL(kp.pub, enc, server, unchecked, p, rng);
  EXPECT_NEAR(open(ll) - oracle_loss(server, local, false), 1.0, kTol);
}

TEST(ComputeE, Examples) {
  const auto& kp = key512();
  Csprng rng(13);
  auto at216 = [&](double v) {
    const BigInt m = BigInt(static_cast<long>(v * 4)) * power_of_two(214);  // quarters only
    return encrypt(kp.pub, reduce(m, kp.pub.n), rng, 216);
  };
  EXPECT_EQ(open(compute_E(kp.pub, at216(0), at216(0))), 0.0);
  const auto a = at216(1.25), b = at216(0.75);
  EXPECT_EQ(open(compute_E(kp.pub, a, b)), 2.0);
  EXPECT_EQ(open(compute_E(kp.pub, b, a)), open(compute_E(kp.pub, a, b)));
  auto off = b;
  off.scale_exp = 189;
  EXPECT_THROW(compute_E(kp.pub, a, off), Error);
}

TEST(ComputeE, ToyInstanceMatchesPlaintextPipeline) {
  const auto& kp = key512();
  Csprng data_rng(14), rng(15);
  DisparityParams p;
  const Dataset bench = random_dataset(data_rng, 10, 3);
  const LogRegModel server = train(bench, {0.5, 50, 0});
  std::vector<double> entropies;
  for (int i = 0; i < 3; ++i) {
    const Dataset local = random_dataset(data_rng, 10, 3);
    const LogRegModel model = train(local, {0.5, 50, 0});
    Client c(local, p, 100 + i);
    const auto ls = compute_LS(kp.pub, encrypt_model(kp.pub, model, p, rng), bench, c.peer, p, rng);
    const auto ll = compute_LL(kp.pub, encrypt_dataset(kp.pub, local, p, rng), server, c.peer, p, rng);
    const double e = open(compute_E(kp.pub, ls, ll));
    EXPECT_NEAR(e, plaintext_E(model, server, bench, local, p), kTol);
    EXPECT_NEAR(e, oracle_loss(model, bench, false) + oracle_loss(server, local, false), kTol);
    entropies.push_back(e);
  }
  std::vector<EntropyRecord> recs;
  for (std::uint32_t i = 0; i < 3; ++i) recs.push_back({i + 1, entropies[i], 10});
  const auto w = compute_weights(recs);
  double sum = 0;
  for (const auto& r : w) sum += r.weight;
  EXPECT_NEAR(sum, 1.0, 1e-9);
}

TEST(ComputeE, IdenticalClientsGetIdenticalEntropy) {
  const auto& kp = key512();
  Csprng data_rng(16), rng(17);
  DisparityParams p;
  const Dataset bench = random_dataset(data_rng, 6, 2);
  const Dataset local = random_dataset(data_rng, 6, 2);
  const LogRegModel server = train(bench, {});
  const LogRegModel model = train(local, {});
  double first = 0;
  for (int i = 0; i < 2; ++i) {
    Client c(local, p, 200 + i);
    const auto e = compute_E(
        kp.pub, compute_LS(kp.pub, encrypt_model(kp.pub, model, p, rng), bench, c.peer, p, rng),
        compute_LL(kp.pub, encrypt_dataset(kp.pub, local, p, rng), server, c.peer, p, rng));
    if (i == 0) first = open(e);
    else EXPECT_NEAR(open(e), first, kTol);
  }
}

TEST(Wire, RequestsAndRepliesRoundTrip) {
  const auto& kp = key512();
  DisparityParams p;
  Csprng rng(18);
  CubicRequest req{{encrypt(kp.pub, 5, rng, 54), encrypt(kp.pub, 6, rng, 54)},
                   {CubicTarget::kNegLogSigmoid, CubicTarget::kNegLogOneMinusSigmoid}};
  auto req2 = deserialize_cubic_request(serialize(req), p);
  EXPECT_EQ(req2.targets, req.targets);
  EXPECT_EQ(req2.enc_z[1].value, req.enc_z[1].value);
  EXPECT_EQ(req2.enc_z[1].scale_exp, 54);

  Dataset d{{{0.1}, {0.2}}, {1, 0}};
  LocalEvaluationPeer peer(kp.pub, kp.sec, d.y, p, rng);
  auto rep = peer.masked_cubic(req);
  auto rep2 = deserialize_cubic_reply(serialize(rep), p);
  EXPECT_EQ(rep2.f_of_z.size(), 2u);
  EXPECT_EQ(rep2.f_of_z[1][0].value, rep.f_of_z[1][0].value);
  EXPECT_EQ(rep2.f_of_z[1][0].scale_exp, 189);
  EXPECT_EQ(rep2.enc_z_squared[0].scale_exp, 108);

  OpenRequest open_req{{encrypt(kp.pub, 9, rng, 189), encrypt(kp.pub, 8, rng, 189)},
                       {{0, false}, {1, true}}};
  auto open2 = deserialize_open_request(serialize(open_req), p);
  EXPECT_TRUE(open2.slots[1].complement);
  EXPECT_EQ(open2.slots[1].sample, 1u);
  auto orep = peer.masked_open(open_req);
  auto orep2 = deserialize_open_reply(serialize(orep), p);
  EXPECT_EQ(orep2.h_plus_r, orep.h_plus_r);
  EXPECT_EQ(orep2.enc_factor_r[1].scale_exp, 216);

  auto bytes = serialize(req);
  bytes.push_back(0);
  EXPECT_THROW(deserialize_cubic_request(bytes, p), Error);
}

TEST(Weights, Examples) {
  std::vector<EntropyRecord> one{{7, 2.0, 10}};
  EXPECT_EQ(compute_weights(one)[0].weight, 1.0);

  std::vector<EntropyRecord> two{{1, 3.0, 5}, {2, 3.0, 5}};
  auto w2 = compute_weights(two);
  EXPECT_DOUBLE_EQ(w2[0].weight, 0.5);
  EXPECT_DOUBLE_EQ(w2[1].weight, 0.5);

  std::vector<EntropyRecord> worked{{1, 1.0, 1}, {2, 2.0, 1}};
  auto w = compute_weights(worked, {1.0});
  const double e = std::exp(1.0), sqrt_e = std::exp(0.5);
  EXPECT_NEAR(w[0].weight, e / (e + sqrt_e), 1e-12);
  EXPECT_NEAR(w[0].weight, 0.6225, 5e-5);
  EXPECT_DOUBLE_EQ(w[0].re, 1.0);
  EXPECT_DOUBLE_EQ(w[1].re, 0.5);
  EXPECT_NEAR(w[0].credibility, e / (e + sqrt_e), 1e-12);
  EXPECT_NEAR(w[0].omega, e, 1e-12);
  EXPECT_NEAR(w[1].omega, sqrt_e, 1e-12);
}

TEST(Weights, NormalizationAndMonotonicity) {
  Csprng rng(19);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<EntropyRecord> recs;
    const std::size_t n = 1 + rng.uniform(12);
    for (std::uint32_t i = 0; i < n; ++i) {
      recs.push_back({i, 0.05 + 20 * rng.uniform_real(), 1 + rng.uniform(500)});
    }
    const double alpha = 3 * rng.uniform_real();
    auto w = compute_weights(recs, {alpha});
    double sum = 0;
    for (const auto& r : w) {
      sum += r.weight;
      EXPECT_GT(r.weight, 0.0);
      EXPECT_LE(r.weight, 1.0);
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);

    // Scaling every n_i (hence omega_i) by one constant changes nothing.
    for (auto& r : recs) r.samples *= 3;
    auto scaled = compute_weights(recs, {alpha});
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(scaled[i].weight, w[i].weight, 1e-12);
  }
  std::vector<EntropyRecord> mono{{1, 0.5, 10}, {2, 1.0, 10}, {3, 4.0, 10}};
  auto w = compute_weights(mono, {0.7});
  EXPECT_GT(w[0].weight, w[1].weight);
  EXPECT_GT(w[1].weight, w[2].weight);
}

TEST(Weights, DegenerateEntropy) {
  std::vector<EntropyRecord> recs{{1, 0.0, 10}, {2, 1.0, 10}};
  auto w = compute_weights(recs);
  EXPECT_TRUE(w[0].clamped);
  EXPECT_EQ(w[0].re, 1e6);
  EXPECT_FALSE(w[1].clamped);
  EXPECT_NEAR(w[0].weight, 1.0, 1e-12);
  EXPECT_TRUE(std::isinf(w[0].omega));
  EXPECT_TRUE(std::isfinite(w[0].log_omega));

  WeightOptions strict;
  strict.strict = true;
  try {
    compute_weights(recs, strict);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateEntropy);
  }
  std::vector<EntropyRecord> none;
  EXPECT_THROW(compute_weights(none), Error);
}

TEST(Renormalize, Examples) {
  std::vector<EntropyRecord> recs{{1, 2.0, 4}, {2, 2.0, 4}, {3, 2.0, 4}};
  auto w = compute_weights(recs);
  std::vector<std::uint32_t> all{1, 2, 3};
  auto same = renormalize_for_dropout(w, all);
  for (const auto& r : w) EXPECT_NEAR(same[r.user], r.weight, 1e-15);

  std::vector<std::uint32_t> two{1, 2};
  auto half = renormalize_for_dropout(w, two);
  EXPECT_DOUBLE_EQ(half[1], 0.5);
  EXPECT_DOUBLE_EQ(half[2], 0.5);

  // alpha = 0 makes omega = n: (1, 2, 3) -> (1/3, 2/3) without user 3.
  std::vector<EntropyRecord> omegas{{1, 1.0, 1}, {2, 1.0, 2}, {3, 1.0, 3}};
  auto wo = compute_weights(omegas, {0.0});
  EXPECT_DOUBLE_EQ(wo[2].omega, 3.0);
  auto r = renormalize_for_dropout(wo, two);
  EXPECT_NEAR(r[1], 1.0 / 3, 1e-15);
  EXPECT_NEAR(r[2], 2.0 / 3, 1e-15);

  std::vector<std::uint32_t> none;
  EXPECT_THROW(renormalize_for_dropout(w, none), Error);
  std::vector<std::uint32_t> stranger{9};
  EXPECT_THROW(renormalize_for_dropout(w, stranger), Error);
}

// A user clamped to a huge omega drops; the rest renormalize normally.
TEST(Renormalize, SurvivesOverflowingOmega) {
  std::vector<EntropyRecord> recs{{1, 0.0, 10}, {2, 1.0, 10}, {3, 1.0, 30}};
  auto w = compute_weights(recs);
  std::vector<std::uint32_t> alive{2, 3};
  auto r = renormalize_for_dropout(w, alive);
  EXPECT_NEAR(r[2], 0.25, 1e-12);
  EXPECT_NEAR(r[3], 0.75, 1e-12);
}

}  // namespace
}  // namespace swagg
