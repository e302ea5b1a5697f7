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

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "swagg/disparity.hpp"
#include "swagg/error.hpp"
#include "swagg/logreg.hpp"
#include "swagg/secagg.hpp"
#include "swagg/transcript.hpp"

namespace swagg {

// --- Tolerance ----------------------------------------------------------------

/// floor(2n/3) + 1.
std::size_t minimum_threshold(std::size_t n);
/// ceil(n/3) - 1.
std::size_t max_adversaries(std::size_t n);

struct ToleranceCheck {
  bool ok = true;
  std::size_t min_threshold = 0;
  std::size_t max_adversaries = 0;
  /// Names the violated bound when !ok.
  std::string violation;
};

ToleranceCheck validate_tolerance(std::size_t n, std::size_t t, std::size_t n_adversaries);
/// Throws kToleranceViolation when validate_tolerance() rejects.
void require_tolerance(std::size_t n, std::size_t t, std::size_t n_adversaries);

// --- Configuration --------------------------------------------------------------

/// Where in a round a client goes offline. A client dropping "during" a proof
/// has sent its claim and never answers the proof messages.
enum class DropPoint : std::uint8_t {
  kBeforeSharing,
  kBeforeMaskUpload,
  kBeforeModelUpload,
  kDuringPoKE,
  kBeforeMaskedUpload,
  kDuringPoKM,
  kBeforeReveal,
};

std::string_view to_string(DropPoint p);

enum class AdversaryBehavior : std::uint8_t {
  /// Publishes E - 1/2 instead of the decryption of Enc(E).
  kFraudulentEntropy,
  /// Adds 1.0 at scale 2F to the first coordinate of the masked weighted model.
  kFraudulentModel,
  /// The server hides an honest survivor from the view shown to `target`.
  kInconsistentView,
};

std::string_view to_string(AdversaryBehavior b);
/// Accepts the names printed by to_string(), plus the short forms
/// "entropy", "model" and "view". Throws kParse.
AdversaryBehavior parse_adversary_behavior(std::string_view s);

struct AdversaryScript {
  PartyId target = 0;
  AdversaryBehavior behavior = AdversaryBehavior::kFraudulentEntropy;
  /// Every round when empty.
  std::optional<std::uint32_t> round;
  /// kInconsistentView only: the survivor hidden from the target; 0 picks the
  /// lowest-id honest survivor other than the target.
  PartyId hidden = 0;
  EquivocationStrategy strategy = EquivocationStrategy::kForwardAll;
};

struct ProtocolConfig {
  std::size_t n_clients = 8;
  /// 0 means minimum_threshold(n_clients).
  std::size_t threshold = 0;
  std::size_t key_bits = 1024;
  DisparityParams disparity;
  WeightOptions weights;
  TrainConfig training;

  /// Fractions of clients that go offline in each phase; floor(R n) honest
  /// clients are drawn from the round's rng.
  double dropout_phase1 = 0;
  double dropout_phase2 = 0;
  DropPoint phase1_point = DropPoint::kDuringPoKE;
  DropPoint phase2_point = DropPoint::kDuringPoKM;
  /// Explicit drops; these override the fraction schedules for that client.
  std::map<PartyId, DropPoint> scripted_drops;

  std::vector<AdversaryScript> adversaries;
  std::uint64_t seed = 1;
  /// Mask-only aggregation: no disparity evaluation, no proofs, unweighted.
  bool baseline = false;

  std::size_t effective_threshold() const {
    return threshold == 0 ? minimum_threshold(n_clients) : threshold;
  }
};

/// Bits of the aggregation ring: weight, model and client-count headroom
/// plus kappa, rounded up to a multiple of 64.
std::size_t aggregation_ring_bits(const ProtocolConfig& config);
/// Smallest Paillier modulus that holds E and the lifted masked models.
std::size_t minimum_key_bits(const ProtocolConfig& config);

/// Throws kToleranceViolation or kInvalidArgument.
void validate_config(const ProtocolConfig& config);

/// Integer weights W = round(omega 2^F) stay below 2^(this + F); larger
/// omegas are all divided by a common power of two first.
inline constexpr int kWeightIntegerBits = 24;

// --- Results ------------------------------------------------------------------------

struct SetChain {
  IdList u, u1, u2, u3, u4, u5, u6;
};

struct StepMetrics {
  /// Server compute: the step's wall time minus the time spent in client code.
  double server_seconds = 0;
  /// Sum over clients, and the mean over clients that took part in the step.
  double user_seconds_total = 0;
  double user_seconds_mean = 0;
  std::uint64_t server_bytes = 0;
  std::uint64_t user_bytes = 0;
  std::size_t messages = 0;
};

struct RoundResult {
  std::uint32_t round = 0;
  bool completed = false;
  /// Set when !completed.
  std::optional<ErrorCode> abort_code;
  std::optional<Step> abort_step;
  std::string abort_reason;

  SetChain sets;
  std::map<PartyId, bool> beta_e;
  std::map<PartyId, bool> beta_m;
  /// Clients removed for failing a proof.
  IdList excluded;
  /// Clients that went offline.
  IdList dropped;
  std::map<PartyId, DropPoint> drop_points;

  std::map<PartyId, double> entropy;  // verified E
  std::vector<WeightRecord> weights;  // over U4
  /// W = round(omega 2^(F - weight_shift)); the shift is nonzero only when
  /// some omega reaches 2^24.
  std::map<PartyId, BigInt> integer_weights;
  int weight_shift = 0;
  std::map<PartyId, LogRegModel> local_models;
  /// Global model after the round; the previous one when aborted.
  LogRegModel global_model;
  /// Weighted average over U6 in double precision from the unquantized local
  /// models and renormalized weights.
  std::vector<double> oracle_model;
  double max_oracle_error = 0;

  std::map<PartyId, ConsistencyVerdict> consistency;
  std::size_t seeds_reconstructed = 0;

  std::map<Step, StepMetrics> metrics;
};

// --- Simulator -----------------------------------------------------------------------

class ProtocolRun {
 public:
  /// Client i + 1 holds client_data[i]. Throws on an invalid configuration.
  ProtocolRun(ProtocolConfig config, std::vector<Dataset> client_data, Dataset benchmark);
  ~ProtocolRun();
  ProtocolRun(const ProtocolRun&) = delete;
  ProtocolRun& operator=(const ProtocolRun&) = delete;

  /// Key generation and the one-time encrypted dataset upload. Throws
  /// kDuplicateSetup on a second call.
  void setup();
  bool is_setup() const;

  /// One FL round (Steps 0-4). Runs setup() first if needed. Protocol aborts
  /// are reported in the result; other failures throw.
  RoundResult run_round();

  const ProtocolConfig& config() const;
  const Transcript& transcript() const;
  const LogRegModel& global_model() const;
  std::uint32_t rounds_run() const;

  /// Test access: client i's key pair and what the server stored for it.
  const PaillierKeypair& client_keys(PartyId id) const;
  const EncryptedDataset& stored_dataset(PartyId id) const;
  std::size_t stored_dataset_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Convenience: setup plus `rounds` rounds.
std::vector<RoundResult> run_protocol(const ProtocolConfig& config,
                                      std::vector<Dataset> client_data, Dataset benchmark,
                                      std::size_t rounds = 1);

}  // namespace swagg
