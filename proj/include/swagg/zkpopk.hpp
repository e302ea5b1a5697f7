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
#include <span>
#include <vector>

#include "swagg/bigint.hpp"
#include "swagg/csprng.hpp"
#include "swagg/paillier.hpp"

namespace swagg {

inline constexpr int kDefaultChallengeBits = 80;

enum class ProofPhase { kCommit, kChallenge, kRespond, kDone };

struct ProofOptions {
  int challenge_bits = kDefaultChallengeBits;
  /// Derive the challenge by hashing (n, u, a) instead of sampling it.
  bool fiat_shamir = false;
};

/// The verifier's acceptance test for a zero-knowledge proof that `u`
/// encrypts zero: u, a, z are units mod n and z^n = a * u^e (mod n^2).
bool zero_proof_accepts(const PaillierPublicKey& pk, const BigInt& u, const BigInt& a,
                        const BigInt& e, const BigInt& z);

BigInt fiat_shamir_challenge(const PaillierPublicKey& pk, const BigInt& u, const BigInt& a,
                             int challenge_bits);

// Prover of "u is an encryption of zero" holding the witness v with
// u = v^n mod n^2. Strict commit -> respond ordering.
class ZeroProofProver {
 public:
  ZeroProofProver(const PaillierPublicKey& pk, BigInt u, BigInt witness, Csprng& rng);

  /// a = Enc(0, r) for a fresh r.
  BigInt commit();
  /// z = r * v^e mod n.
  BigInt respond(const BigInt& e);

  ProofPhase phase() const { return phase_; }

 private:
  const PaillierPublicKey& pk_;
  BigInt u_;
  BigInt witness_;
  BigInt nonce_;
  Csprng& rng_;
  ProofPhase phase_ = ProofPhase::kCommit;
};

class ZeroProofVerifier {
 public:
  ZeroProofVerifier(const PaillierPublicKey& pk, BigInt u, Csprng& rng, ProofOptions options = {});

  /// Receives the commitment and answers with a challenge e in [0, 2^bits).
  BigInt challenge(const BigInt& a);
  /// Receives the response; true iff the proof accepts.
  bool verify(const BigInt& z);

  ProofPhase phase() const { return phase_; }
  const BigInt& last_challenge() const { return e_; }

 private:
  const PaillierPublicKey& pk_;
  BigInt u_;
  BigInt a_;
  BigInt e_;
  Csprng& rng_;
  ProofOptions options_;
  ProofPhase phase_ = ProofPhase::kCommit;
};

/// Runs prover and verifier in-process. Returns beta.
bool zkpopk_zero(const PaillierPublicKey& pk, const BigInt& u, const BigInt& witness,
                 Csprng& prover_rng, Csprng& verifier_rng, ProofOptions options = {});

struct ZeroProofTranscript {
  BigInt a;
  BigInt e;
  BigInt z;
};

/// Honest-verifier simulator: picks (e, z) first and solves a = z^n u^-e.
ZeroProofTranscript simulate_zero_transcript(const PaillierPublicKey& pk, const BigInt& u,
                                             Csprng& rng, int challenge_bits = kDefaultChallengeBits);

// --- Proof of plaintext knowledge -----------------------------------------
//
// The server checks a claimed decryption m of c by blinding the difference
// c' = c * Enc(m, r_s)^-1, which encrypts zero iff m is correct, and asking
// the key holder to prove knowledge of zero for c'. Vector claims are the
// AND of per-coordinate proofs, batched one message per round.

class PopkVerifier {
 public:
  PopkVerifier(const PaillierPublicKey& pk, std::vector<Ciphertext> c, std::vector<BigInt> claimed,
               Csprng& rng, ProofOptions options = {});

  /// Step 1: the blinded differences c'.
  std::vector<BigInt> blinded_differences();
  /// Receives the prover's commitments a; returns challenges e.
  std::vector<BigInt> challenge(std::span<const BigInt> commitments);
  /// Receives responses z; true iff every coordinate accepts.
  bool verify(std::span<const BigInt> responses);

  ProofPhase phase() const { return phase_; }
  std::size_t size() const { return claimed_.size(); }

 private:
  const PaillierPublicKey& pk_;
  std::vector<Ciphertext> c_;
  std::vector<BigInt> claimed_;
  std::vector<BigInt> c_prime_;
  std::vector<BigInt> a_;
  std::vector<BigInt> e_;
  Csprng& rng_;
  ProofOptions options_;
  ProofPhase phase_ = ProofPhase::kCommit;
};

// Key holder side. The witness r' = c'^d mod n is derived without first
// checking Dec(c') = 0; a wrong claim simply fails verification.
class PopkProver {
 public:
  PopkProver(const PaillierPublicKey& pk, const PaillierSecretKey& sk, Csprng& rng,
             ProofOptions options = {});

  /// Receives c'; returns commitments a.
  std::vector<BigInt> commit(std::span<const BigInt> blinded);
  /// Receives challenges e; returns responses z.
  std::vector<BigInt> respond(std::span<const BigInt> challenges);

  ProofPhase phase() const { return phase_; }

 private:
  const PaillierPublicKey& pk_;
  const PaillierSecretKey& sk_;
  Csprng& rng_;
  ProofOptions options_;
  std::vector<BigInt> c_prime_;
  std::vector<BigInt> witness_;
  std::vector<BigInt> nonce_;
  std::vector<BigInt> a_;
  ProofPhase phase_ = ProofPhase::kCommit;
};

/// r' = c'^d mod n.
BigInt zero_witness(const PaillierPublicKey& pk, const PaillierSecretKey& sk, const BigInt& c_prime);

/// The key holder's half of a proof run, as seen by the verifier's driver.
class ProofPeer {
 public:
  virtual ~ProofPeer() = default;
  virtual std::vector<BigInt> commit(std::span<const BigInt> blinded) = 0;
  virtual std::vector<BigInt> respond(std::span<const BigInt> challenges) = 0;
};

/// Drives verifier <-> peer through the three rounds.
bool run_popk(PopkVerifier& verifier, ProofPeer& peer);

bool ppopk(const Ciphertext& c, const BigInt& m, const PaillierPublicKey& pk,
           const PaillierSecretKey& sk, Csprng& server_rng, Csprng& user_rng,
           ProofOptions options = {});
bool ppopk_vector(std::span<const Ciphertext> c, std::span<const BigInt> m,
                  const PaillierPublicKey& pk, const PaillierSecretKey& sk, Csprng& server_rng,
                  Csprng& user_rng, ProofOptions options = {});

}  // namespace swagg
