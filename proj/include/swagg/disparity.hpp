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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "swagg/bigint.hpp"
#include "swagg/csprng.hpp"
#include "swagg/logreg.hpp"
#include "swagg/paillier.hpp"
#include "swagg/zkpopk.hpp"

namespace swagg {

struct DisparityParams {
  int integer_bits = 17;
  int fraction_bits = 27;
  int kappa = 80;
  /// Adds the (1 - y) log(1 - p) half of the cross-entropy.
  bool binary_ce = false;
  /// Proves each decrypted h in the LL round.
  bool verify_h = true;
  ProofOptions proof;

  int linear_scale() const { return 2 * fraction_bits; }
  int cubic_scale() const { return fraction_bits + 3 * linear_scale(); }
  int entropy_scale() const { return fraction_bits + cubic_scale(); }
};

/// round(x 2^F); throws kOverflow outside (-2^integer_bits, 2^integer_bits).
BigInt to_fixed(double x, const DisparityParams& p);
/// The real that to_fixed(x) represents.
double snap_to_grid(double x, const DisparityParams& p);

// --- Encrypted inputs ------------------------------------------------------

struct EncryptedDataset {
  std::vector<CiphertextVector> x;  // per sample, features at scale F
  CiphertextVector y;               // labels at scale F
};

EncryptedDataset encrypt_dataset(const PaillierPublicKey& pk, const Dataset& d,
                                 const DisparityParams& p, Csprng& rng);
/// theta at scale F.
CiphertextVector encrypt_model(const PaillierPublicKey& pk, const LogRegModel& m,
                               const DisparityParams& p, Csprng& rng);

Bytes serialize(const EncryptedDataset& d);
EncryptedDataset deserialize_encrypted_dataset(std::span<const std::uint8_t> bytes,
                                               const DisparityParams& p);

// --- The key holder's side of the evaluation rounds ------------------------

struct CubicRequest {
  CiphertextVector enc_z;            // scale 2F
  std::vector<CubicTarget> targets;  // one f(z) per target and sample
};

struct CubicReply {
  CiphertextVector enc_z_squared;           // scale 4F
  std::vector<CiphertextVector> f_of_z;     // [target][sample], scale 7F
};

struct OpenSlot {
  std::uint32_t sample = 0;
  /// Factor is 1 - y instead of y.
  bool complement = false;
};

struct OpenRequest {
  CiphertextVector enc_h;  // scale 7F
  std::vector<OpenSlot> slots;
};

struct OpenReply {
  std::vector<BigInt> h_plus_r;     // mod n, scale 7F
  CiphertextVector enc_r;           // scale 7F
  CiphertextVector enc_factor_r;    // scale 8F
};

Bytes serialize(const CubicRequest& r);
CubicRequest deserialize_cubic_request(std::span<const std::uint8_t> bytes, const DisparityParams& p);
Bytes serialize(const CubicReply& r);
CubicReply deserialize_cubic_reply(std::span<const std::uint8_t> bytes, const DisparityParams& p);
Bytes serialize(const OpenRequest& r);
OpenRequest deserialize_open_request(std::span<const std::uint8_t> bytes, const DisparityParams& p);
Bytes serialize(const OpenReply& r);
OpenReply deserialize_open_reply(std::span<const std::uint8_t> bytes, const DisparityParams& p);

class EvaluationPeer {
 public:
  virtual ~EvaluationPeer() = default;
  virtual CubicReply masked_cubic(const CubicRequest& request) = 0;
  virtual OpenReply masked_open(const OpenRequest& request) = 0;
  /// Proves the h + r values of the last masked_open().
  virtual ProofPeer& h_prover() = 0;
};

// Honest key holder, in-process.
class LocalEvaluationPeer : public EvaluationPeer {
 public:
  LocalEvaluationPeer(const PaillierPublicKey& pk, const PaillierSecretKey& sk,
                      std::vector<int> labels, DisparityParams params, Csprng& rng);

  CubicReply masked_cubic(const CubicRequest& request) override;
  OpenReply masked_open(const OpenRequest& request) override;
  ProofPeer& h_prover() override { return prover_; }

 private:
  class Prover : public ProofPeer {
   public:
    Prover(const PaillierPublicKey& pk, const PaillierSecretKey& sk, Csprng& rng,
           ProofOptions options);
    std::vector<BigInt> commit(std::span<const BigInt> blinded) override;
    std::vector<BigInt> respond(std::span<const BigInt> challenges) override;

   private:
    const PaillierPublicKey& pk_;
    const PaillierSecretKey& sk_;
    Csprng& rng_;
    ProofOptions options_;
    std::optional<PopkProver> current_;
  };

  const PaillierPublicKey& pk_;
  const PaillierSecretKey& sk_;
  std::vector<int> labels_;
  DisparityParams params_;
  Csprng& rng_;
  Prover prover_;
};

// --- Server side ------------------------------------------------------------

/// Enc(LS) at scale 8F: sum over the benchmark of y_s (-log p_s) with the
/// client model encrypted.
Ciphertext compute_LS(const PaillierPublicKey& pk, std::span<const Ciphertext> enc_model,
                      const Dataset& benchmark, EvaluationPeer& peer,
                      const DisparityParams& params, Csprng& rng);

/// Enc(LL) at scale 8F: sum over the encrypted local data of y_u (-log p_u)
/// under the plaintext server model. Throws kProofFailure if a decrypted h
/// fails verification.
Ciphertext compute_LL(const PaillierPublicKey& pk, const EncryptedDataset& data,
                      const LogRegModel& server_model, EvaluationPeer& peer,
                      const DisparityParams& params, Csprng& rng);

/// Enc(LS) + Enc(LL). Throws kScaleMismatch.
Ciphertext compute_E(const PaillierPublicKey& pk, const Ciphertext& enc_ls,
                     const Ciphertext& enc_ll);

// Plaintext pipeline with the same quantization and cubics.
double plaintext_LS(const LogRegModel& client_model, const Dataset& benchmark,
                    const DisparityParams& params);
double plaintext_LL(const LogRegModel& server_model, const Dataset& local,
                    const DisparityParams& params);
double plaintext_E(const LogRegModel& client_model, const LogRegModel& server_model,
                   const Dataset& benchmark, const Dataset& local, const DisparityParams& params);

// --- Weights ----------------------------------------------------------------

struct EntropyRecord {
  std::uint32_t user = 0;
  double entropy = 0;
  std::size_t samples = 0;
};

struct WeightRecord {
  std::uint32_t user = 0;
  double entropy = 0;
  double re = 0;
  double credibility = 0;
  double omega = 0;
  /// log(omega); finite even when omega overflows a double.
  double log_omega = 0;
  double weight = 0;
  std::size_t samples = 0;
  /// RE was clamped because E was at or below the guard.
  bool clamped = false;
  bool verified = true;
};

struct WeightOptions {
  double alpha = 1.0;
  double epsilon = 1e-6;
  /// Throw kDegenerateEntropy instead of clamping RE at 1/epsilon.
  bool strict = false;
};

std::vector<WeightRecord> compute_weights(std::span<const EntropyRecord> records,
                                          const WeightOptions& options = {});

/// omega_i / sum of omega over `alive`, keyed by user. Throws kEmptyAliveSet
/// and kInvalidArgument for ids without a record.
std::map<std::uint32_t, double> renormalize_for_dropout(std::span<const WeightRecord> records,
                                                        std::span<const std::uint32_t> alive);

}  // namespace swagg
