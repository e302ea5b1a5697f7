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

#include "swagg/protocol.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "swagg/error.hpp"
#include "swagg/fixedpoint.hpp"

namespace swagg {
namespace {

const double kModelTol = std::ldexp(1.0, -20);
const double kEntropyTol = std::ldexp(1.0, -18);

Dataset synthetic(std::size_t rows, std::size_t features, Csprng& rng) {
  std::vector<double> w{1.5, -2.0, 0.75, 1.0};
  Dataset d;
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<double> x;
    double l = -0.25;
    for (std::size_t k = 0; k < features; ++k) {
      x.push_back(rng.uniform_real());
      l += w[k % w.size()] * x.back();
    }
    d.x.push_back(std::move(x));
    d.y.push_back(rng.uniform_real() < sigmoid(3 * l) ? 1 : 0);
  }
  return d;
}

struct Fixture {
  std::vector<Dataset> clients;
  Dataset benchmark;
};

Fixture make_data(std::size_t n, std::size_t per_client, std::size_t bench, std::uint64_t seed,
                  std::size_t features = 2) {
  Csprng rng(seed);
  Fixture f;
  for (std::size_t i = 0; i < n; ++i) f.clients.push_back(synthetic(per_client, features, rng));
  f.benchmark = synthetic(bench, features, rng);
  return f;
}

ProtocolConfig toy_config(std::size_t n) {
  ProtocolConfig c;
  c.n_clients = n;
  c.key_bits = 256;
  c.training.epochs = 20;
  c.seed = 11;
  return c;
}

bool is_subset(const IdList& a, const IdList& b) {
  return std::all_of(a.begin(), a.end(),
                     [&](PartyId x) { return std::find(b.begin(), b.end(), x) != b.end(); });
}

void expect_chain(const SetChain& s) {
  EXPECT_TRUE(is_subset(s.u1, s.u));
  EXPECT_TRUE(is_subset(s.u2, s.u1));
  EXPECT_TRUE(is_subset(s.u3, s.u2));
  EXPECT_TRUE(is_subset(s.u4, s.u3));
  EXPECT_TRUE(is_subset(s.u5, s.u4));
  EXPECT_TRUE(is_subset(s.u6, s.u5));
}

bool contains(const IdList& s, PartyId u) { return std::find(s.begin(), s.end(), u) != s.end(); }

// --- Tolerance --------------------------------------------------------------

TEST(Tolerance, Examples) {
  auto c = validate_tolerance(12, 9, 3);
  EXPECT_TRUE(c.ok);
  EXPECT_EQ(c.min_threshold, 9u);
  EXPECT_EQ(c.max_adversaries, 3u);

  c = validate_tolerance(3, 3, 0);
  EXPECT_TRUE(c.ok);
  EXPECT_EQ(c.min_threshold, 3u);
  EXPECT_EQ(c.max_adversaries, 0u);

  c = validate_tolerance(12, 8, 0);
  EXPECT_FALSE(c.ok);
  EXPECT_NE(c.violation.find("threshold"), std::string::npos);

  c = validate_tolerance(12, 9, 4);
  EXPECT_FALSE(c.ok);
  EXPECT_NE(c.violation.find("adversaries"), std::string::npos);

  EXPECT_FALSE(validate_tolerance(5, 6, 0).ok);
  EXPECT_THROW(validate_tolerance(0, 0, 0), Error);
  try {
    require_tolerance(12, 8, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kToleranceViolation);
  }
}

// Exhaustive against the integer definitions: t_min is the least t with
// 3t > 2n, and a_max the largest a with 3(a + 1) < n + 3.
TEST(Tolerance, MatchesIntegerCharacterization) {
  for (std::size_t n = 1; n <= 200; ++n) {
    std::size_t t_min = 1;
    while (3 * t_min <= 2 * n) ++t_min;
    std::size_t a_max = 0;
    while (3 * (a_max + 2) < n + 3) ++a_max;
    EXPECT_EQ(minimum_threshold(n), t_min) << n;
    EXPECT_EQ(max_adversaries(n), a_max) << n;
    EXPECT_LT(max_adversaries(n), minimum_threshold(n));
  }
}

TEST(Config, RejectsBadParameters) {
  auto f = make_data(4, 4, 4, 1);
  ProtocolConfig c = toy_config(4);
  c.key_bits = 128;
  EXPECT_THROW(ProtocolRun(c, f.clients, f.benchmark), Error);

  c = toy_config(4);
  c.adversaries.push_back({1, AdversaryBehavior::kFraudulentEntropy});
  c.adversaries.push_back({2, AdversaryBehavior::kFraudulentModel});
  try {
    ProtocolRun run(c, f.clients, f.benchmark);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kToleranceViolation);  // n = 4 allows one
  }

  c = toy_config(4);
  c.scripted_drops[9] = DropPoint::kBeforeReveal;
  EXPECT_THROW(ProtocolRun(c, f.clients, f.benchmark), Error);

  c = toy_config(4);
  EXPECT_THROW(ProtocolRun(c, {f.clients[0]}, f.benchmark), Error);
  EXPECT_EQ(parse_adversary_behavior("model"), AdversaryBehavior::kFraudulentModel);
  EXPECT_THROW(parse_adversary_behavior("bogus"), Error);
}

// --- Setup ------------------------------------------------------------------

TEST(Setup, StoresDecryptableDatasetsOnce) {
  auto f = make_data(2, 3, 4, 2);
  f.clients.push_back(Dataset{});  // third client with no data
  ProtocolConfig c = toy_config(3);
  ProtocolRun run(c, f.clients, f.benchmark);
  run.setup();
  EXPECT_EQ(run.stored_dataset_count(), 3u);
  for (PartyId id = 1; id <= 2; ++id) {
    const auto& keys = run.client_keys(id);
    const auto& enc = run.stored_dataset(id);
    const Dataset& d = f.clients[id - 1];
    ASSERT_EQ(enc.y.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
      EXPECT_EQ(decrypt(keys.sec, keys.pub, enc.y[i]),
                BigInt(d.y[i]) * power_of_two(c.disparity.fraction_bits));
      for (std::size_t k = 0; k < d.x[i].size(); ++k) {
        const BigInt v = centered(decrypt(keys.sec, keys.pub, enc.x[i][k]), keys.pub.n);
        EXPECT_EQ(v, to_fixed(d.x[i][k], c.disparity));
      }
    }
  }
  EXPECT_TRUE(run.stored_dataset(3).x.empty());
  EXPECT_TRUE(run.stored_dataset(3).y.empty());
  try {
    run.setup();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDuplicateSetup);
  }
  EXPECT_GT(run.transcript().user_bytes(Step::kSetup), 0u);
}

// --- Honest rounds ------------------------------------------------------------

TEST(Round, HonestRunMatchesOracles) {
  auto f = make_data(4, 6, 6, 3);
  ProtocolConfig c = toy_config(4);
  ProtocolRun run(c, f.clients, f.benchmark);
  const RoundResult r = run.run_round();
  ASSERT_TRUE(r.completed) << r.abort_reason;
  expect_chain(r.sets);
  EXPECT_EQ(r.sets.u6, r.sets.u);
  EXPECT_TRUE(r.excluded.empty());
  EXPECT_TRUE(r.dropped.empty());
  EXPECT_LT(r.max_oracle_error, kModelTol);

  // E against the plaintext pipeline, with the server model trained on the
  // benchmark.
  const LogRegModel server = train(f.benchmark, c.training);
  for (PartyId u = 1; u <= 4; ++u) {
    const double expect =
        plaintext_E(r.local_models.at(u), server, f.benchmark, f.clients[u - 1], c.disparity);
    EXPECT_NEAR(r.entropy.at(u), expect, kEntropyTol) << u;
    EXPECT_TRUE(r.beta_e.at(u));
    EXPECT_TRUE(r.beta_m.at(u));
  }

  // Independent weighted average with weights n_i e^{1/E_i}.
  double norm = 0;
  std::vector<double> avg(3, 0.0);
  for (PartyId u = 1; u <= 4; ++u) {
    const double w = 6.0 * std::exp(1.0 / r.entropy.at(u));
    norm += w;
    for (std::size_t k = 0; k < 3; ++k) avg[k] += w * r.local_models.at(u).theta[k];
  }
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(r.global_model.theta[k], avg[k] / norm, kModelTol);

  for (Step s : kRoundSteps) {
    EXPECT_GT(r.metrics.at(s).server_bytes + r.metrics.at(s).user_bytes, 0u) << to_string(s);
  }
}

TEST(Round, IdenticalClientsGetIdenticalEntropyAndTheMean) {
  auto f = make_data(1, 5, 5, 4);
  std::vector<Dataset> same(4, f.clients[0]);
  ProtocolConfig c = toy_config(4);
  const auto r = run_protocol(c, same, f.benchmark).at(0);
  ASSERT_TRUE(r.completed) << r.abort_reason;
  for (PartyId u = 2; u <= 4; ++u) EXPECT_NEAR(r.entropy.at(u), r.entropy.at(1), kEntropyTol);
  for (std::size_t k = 0; k < 3; ++k) {
    double mean = 0;
    for (PartyId u = 1; u <= 4; ++u) mean += r.local_models.at(u).theta[k] / 4;
    EXPECT_NEAR(r.global_model.theta[k], mean, kModelTol);
  }
}

TEST(Round, SingleClientGetsItsOwnModel) {
  auto f = make_data(1, 5, 5, 5);
  ProtocolConfig c = toy_config(1);
  const auto r = run_protocol(c, f.clients, f.benchmark).at(0);
  ASSERT_TRUE(r.completed) << r.abort_reason;
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_NEAR(r.global_model.theta[k], r.local_models.at(1).theta[k], kModelTol);
  }
}

TEST(Round, SecondRoundStartsFromTheGlobalModel) {
  auto f = make_data(3, 5, 5, 6);
  ProtocolConfig c = toy_config(3);
  ProtocolRun run(c, f.clients, f.benchmark);
  const auto r0 = run.run_round();
  const auto r1 = run.run_round();
  ASSERT_TRUE(r0.completed && r1.completed);
  EXPECT_EQ(run.rounds_run(), 2u);
  EXPECT_LT(r1.max_oracle_error, kModelTol);
  const LogRegModel expect = train_from(r0.global_model, f.clients[0], c.training);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_NEAR(r1.local_models.at(1).theta[k], expect.theta[k], 1e-12);
  }
  // Setup traffic is logged once.
  EXPECT_EQ(run.transcript().message_count(Step::kSetup), 3u * 3 + 3);
}

TEST(Round, LargeOmegasShareAPowerOfTwoShift) {
  auto f = make_data(3, 4, 4, 20);
  ProtocolConfig c = toy_config(3);
  c.weights.alpha = 40;
  const auto r = run_protocol(c, f.clients, f.benchmark).at(0);
  ASSERT_TRUE(r.completed) << r.abort_reason;
  EXPECT_GT(r.weight_shift, 0);
  for (const auto& [u, w] : r.integer_weights) {
    EXPECT_LT(w, power_of_two(kWeightIntegerBits + c.disparity.fraction_bits));
  }
  EXPECT_LT(r.max_oracle_error, kModelTol);
}

// --- Adversaries --------------------------------------------------------------

TEST(Adversary, FraudulentEntropyIsExcluded) {
  auto f = make_data(5, 4, 4, 7);
  ProtocolConfig c = toy_config(5);
  c.threshold = 4;
  c.adversaries.push_back({2, AdversaryBehavior::kFraudulentEntropy});
  const auto r = run_protocol(c, f.clients, f.benchmark).at(0);
  ASSERT_TRUE(r.completed) << r.abort_reason;
  EXPECT_FALSE(r.beta_e.at(2));
  EXPECT_EQ(r.excluded, IdList({2}));
  EXPECT_FALSE(contains(r.sets.u4, 2));
  EXPECT_EQ(r.sets.u6.size(), 4u);
  expect_chain(r.sets);
  EXPECT_LT(r.max_oracle_error, kModelTol);
}

TEST(Adversary, FraudulentModelIsExcluded) {
  auto f = make_data(5, 4, 4, 8);
  ProtocolConfig c = toy_config(5);
  c.threshold = 4;
  c.adversaries.push_back({5, AdversaryBehavior::kFraudulentModel});
  const auto r = run_protocol(c, f.clients, f.benchmark).at(0);
  ASSERT_TRUE(r.completed) << r.abort_reason;
  EXPECT_TRUE(r.beta_e.at(5));
  EXPECT_FALSE(r.beta_m.at(5));
  EXPECT_TRUE(contains(r.sets.u5, 5));
  EXPECT_FALSE(contains(r.sets.u6, 5));
  EXPECT_LT(r.max_oracle_error, kModelTol);
}

TEST(Adversary, ScriptOnlyFiresInItsRound) {
  auto f = make_data(5, 4, 4, 9);
  ProtocolConfig c = toy_config(5);
  c.threshold = 4;
  c.adversaries.push_back({3, AdversaryBehavior::kFraudulentEntropy, 1u});
  const auto rs = run_protocol(c, f.clients, f.benchmark, 2);
  EXPECT_TRUE(rs[0].excluded.empty());
  EXPECT_EQ(rs[1].excluded, IdList({3}));
}

TEST(Adversary, InconsistentViewAborts) {
  auto f = make_data(4, 3, 3, 10);
  for (auto strategy : {EquivocationStrategy::kForwardAll, EquivocationStrategy::kForwardMatchingOnly}) {
    ProtocolConfig c = toy_config(4);
    AdversaryScript a;
    a.target = 1;
    a.behavior = AdversaryBehavior::kInconsistentView;
    a.strategy = strategy;
    c.adversaries.push_back(a);
    const auto r = run_protocol(c, f.clients, f.benchmark).at(0);
    EXPECT_FALSE(r.completed);
    ASSERT_TRUE(r.abort_code.has_value());
    EXPECT_EQ(*r.abort_code, ErrorCode::kConsistencyAbort);
    EXPECT_EQ(*r.abort_step, Step::kWAgg);
    EXPECT_FALSE(r.consistency.at(1).pass);
    // Nothing was revealed: no reveal traffic.
    EXPECT_EQ(r.seeds_reconstructed, 0u);
  }
}

// --- Dropouts -----------------------------------------------------------------

TEST(Dropout, PhaseOneAtInitShrinksU2) {
  auto f = make_data(10, 2, 3, 11);
  ProtocolConfig c = toy_config(10);
  c.dropout_phase1 = 0.1;
  c.phase1_point = DropPoint::kBeforeMaskUpload;
  const auto r = run_protocol(c, f.clients, f.benchmark).at(0);
  ASSERT_TRUE(r.completed) << r.abort_reason;
  EXPECT_EQ(r.sets.u1.size(), 10u);
  EXPECT_EQ(r.sets.u2.size(), 9u);
  EXPECT_EQ(r.dropped.size(), 1u);
  EXPECT_LT(r.max_oracle_error, kModelTol);
}

TEST(Dropout, BelowThresholdAborts) {
  auto f = make_data(4, 2, 3, 12);
  ProtocolConfig c = toy_config(4);
  c.threshold = 3;  // n = 4 needs t >= 3
  c.scripted_drops[1] = DropPoint::kBeforeSharing;
  c.scripted_drops[2] = DropPoint::kBeforeSharing;
  const auto r = run_protocol(c, f.clients, f.benchmark).at(0);
  EXPECT_FALSE(r.completed);
  EXPECT_EQ(*r.abort_code, ErrorCode::kAbortThreshold);
  EXPECT_EQ(*r.abort_step, Step::kInit);
}

TEST(Dropout, DuringProofsMasksAreRecovered) {
  auto f = make_data(7, 3, 3, 13);
  ProtocolConfig c = toy_config(7);
  c.threshold = 5;
  c.scripted_drops[2] = DropPoint::kDuringPoKE;
  c.scripted_drops[6] = DropPoint::kDuringPoKM;
  const auto r = run_protocol(c, f.clients, f.benchmark).at(0);
  ASSERT_TRUE(r.completed) << r.abort_reason;
  expect_chain(r.sets);
  EXPECT_EQ(r.dropped, IdList({2, 6}));
  EXPECT_TRUE(contains(r.sets.u3, 2));
  EXPECT_FALSE(contains(r.sets.u4, 2));
  EXPECT_TRUE(contains(r.sets.u5, 6));
  EXPECT_FALSE(contains(r.sets.u6, 6));
  EXPECT_FALSE(r.beta_e.count(2));
  EXPECT_LT(r.max_oracle_error, kModelTol);
  // Five self seeds plus the pairs (2, v) and (6, v) for five survivors.
  EXPECT_EQ(r.seeds_reconstructed, 5u + 10u);
}

TEST(Dropout, BeforeRevealStillCompletesAboveThreshold) {
  auto f = make_data(5, 3, 3, 14);
  ProtocolConfig c = toy_config(5);
  c.threshold = 4;
  c.scripted_drops[3] = DropPoint::kBeforeReveal;
  const auto r = run_protocol(c, f.clients, f.benchmark).at(0);
  ASSERT_TRUE(r.completed) << r.abort_reason;
  EXPECT_TRUE(contains(r.sets.u6, 3));
  EXPECT_LT(r.max_oracle_error, kModelTol);

  c.scripted_drops[4] = DropPoint::kBeforeReveal;
  const auto r2 = run_protocol(c, f.clients, f.benchmark).at(0);
  EXPECT_FALSE(r2.completed);
  EXPECT_EQ(*r2.abort_code, ErrorCode::kInsufficientShares);
}

TEST(Dropout, FractionScheduleUsesFloorOfRn) {
  auto f = make_data(10, 2, 3, 15);
  ProtocolConfig c = toy_config(10);
  c.dropout_phase2 = 0.25;  // floor(2.5) = 2
  const auto r = run_protocol(c, f.clients, f.benchmark).at(0);
  ASSERT_TRUE(r.completed) << r.abort_reason;
  EXPECT_EQ(r.dropped.size(), 2u);
  EXPECT_EQ(r.sets.u6.size(), 8u);
  for (PartyId u : r.dropped) EXPECT_EQ(r.drop_points.at(u), DropPoint::kDuringPoKM);
}

// --- Baseline and replay --------------------------------------------------------

TEST(Baseline, UnweightedMeanWithoutDisparityTraffic) {
  auto f = make_data(4, 4, 4, 16);
  ProtocolConfig c = toy_config(4);
  c.baseline = true;
  const auto b = run_protocol(c, f.clients, f.benchmark).at(0);
  ASSERT_TRUE(b.completed) << b.abort_reason;
  EXPECT_EQ(b.metrics.at(Step::kCompE).server_bytes + b.metrics.at(Step::kCompE).user_bytes, 0u);
  EXPECT_EQ(b.metrics.at(Step::kPoKE).server_bytes + b.metrics.at(Step::kPoKE).user_bytes, 0u);
  for (std::size_t k = 0; k < 3; ++k) {
    double mean = 0;
    for (PartyId u = 1; u <= 4; ++u) mean += b.local_models.at(u).theta[k] / 4;
    EXPECT_NEAR(b.global_model.theta[k], mean, kModelTol);
  }
  // Same seeds, same local models as the full scheme.
  c.baseline = false;
  const auto full = run_protocol(c, f.clients, f.benchmark).at(0);
  for (PartyId u = 1; u <= 4; ++u) {
    EXPECT_EQ(full.local_models.at(u).theta, b.local_models.at(u).theta);
  }
}

TEST(Replay, SameSeedSameTranscript) {
  auto f = make_data(4, 3, 3, 17);
  ProtocolConfig c = toy_config(4);
  c.scripted_drops[2] = DropPoint::kDuringPoKM;
  ProtocolRun a(c, f.clients, f.benchmark);
  ProtocolRun b(c, f.clients, f.benchmark);
  a.run_round();
  b.run_round();
  EXPECT_EQ(a.transcript().digest(), b.transcript().digest());
  EXPECT_EQ(a.transcript().serialize(), b.transcript().serialize());

  c.seed = 18;
  ProtocolRun d(c, f.clients, f.benchmark);
  d.run_round();
  EXPECT_NE(a.transcript().digest(), d.transcript().digest());
}

TEST(Transcript, ByteCountsEqualPayloadSums) {
  auto f = make_data(3, 3, 3, 19);
  ProtocolConfig c = toy_config(3);
  ProtocolRun run(c, f.clients, f.benchmark);
  const auto r = run.run_round();
  ASSERT_TRUE(r.completed);
  const auto records = parse_transcript(run.transcript().serialize());
  for (Step s : kRoundSteps) {
    std::uint64_t server = 0, user = 0;
    for (const auto& m : records) {
      if (m.step != s) continue;
      (m.sender == kServerId ? server : user) += m.payload.size();
    }
    EXPECT_EQ(r.metrics.at(s).server_bytes, server);
    EXPECT_EQ(r.metrics.at(s).user_bytes, user);
  }
}

}  // namespace
}  // namespace swagg
