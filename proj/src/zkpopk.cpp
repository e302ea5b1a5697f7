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

#include "swagg/zkpopk.hpp"

#include <string>

#include "swagg/error.hpp"

namespace swagg {
namespace {

void expect_phase(ProofPhase actual, ProofPhase expected, const char* what) {
  if (actual != expected) {
    throw Error(ErrorCode::kProtocolOrder, std::string(what) + " received out of phase");
  }
}

bool is_unit(const BigInt& x, const BigInt& n) { return x > 0 && gcd(x, n) == 1; }

BigInt draw_challenge(Csprng& rng, int bits) {
  return rng.random_bits(static_cast<std::size_t>(bits));
}

}  // namespace

bool zero_proof_accepts(const PaillierPublicKey& pk, const BigInt& u, const BigInt& a,
                        const BigInt& e, const BigInt& z) {
  if (!is_unit(u, pk.n) || !is_unit(a, pk.n) || !is_unit(z, pk.n)) return false;
  if (u >= pk.n_squared || a >= pk.n_squared || z >= pk.n || e < 0) return false;
  BigInt lhs = pow_mod(z, pk.n, pk.n_squared);  // Enc(0, z)
  BigInt rhs = a * pow_mod(u, e, pk.n_squared) % pk.n_squared;
  return lhs == rhs;
}

BigInt fiat_shamir_challenge(const PaillierPublicKey& pk, const BigInt& u, const BigInt& a,
                             int challenge_bits) {
  ByteWriter w;
  w.big(pk.n);
  w.big(u);
  w.big(a);
  auto digest = sha256({w.bytes()});
  BigInt e = from_bytes(digest);
  return e >> (256 - challenge_bits);
}

ZeroProofProver::ZeroProofProver(const PaillierPublicKey& pk, BigInt u, BigInt witness,
                                 Csprng& rng)
    : pk_(pk), u_(std::move(u)), witness_(std::move(witness)), rng_(rng) {}

BigInt ZeroProofProver::commit() {
  expect_phase(phase_, ProofPhase::kCommit, "commit request");
  nonce_ = rng_.unit_mod(pk_.n);
  phase_ = ProofPhase::kChallenge;
  return pow_mod(nonce_, pk_.n, pk_.n_squared);
}

BigInt ZeroProofProver::respond(const BigInt& e) {
  expect_phase(phase_, ProofPhase::kChallenge, "challenge");
  phase_ = ProofPhase::kDone;
  return nonce_ * pow_mod(witness_, e, pk_.n) % pk_.n;
}

ZeroProofVerifier::ZeroProofVerifier(const PaillierPublicKey& pk, BigInt u, Csprng& rng,
                                     ProofOptions options)
    : pk_(pk), u_(std::move(u)), rng_(rng), options_(options) {}

BigInt ZeroProofVerifier::challenge(const BigInt& a) {
  expect_phase(phase_, ProofPhase::kCommit, "commitment");
  a_ = a;
  e_ = options_.fiat_shamir ? fiat_shamir_challenge(pk_, u_, a_, options_.challenge_bits)
                            : draw_challenge(rng_, options_.challenge_bits);
  phase_ = ProofPhase::kRespond;
  return e_;
}

bool ZeroProofVerifier::verify(const BigInt& z) {
  expect_phase(phase_, ProofPhase::kRespond, "response");
  phase_ = ProofPhase::kDone;
  return zero_proof_accepts(pk_, u_, a_, e_, z);
}

bool zkpopk_zero(const PaillierPublicKey& pk, const BigInt& u, const BigInt& witness,
                 Csprng& prover_rng, Csprng& verifier_rng, ProofOptions options) {
  ZeroProofProver prover(pk, u, witness, prover_rng);
  ZeroProofVerifier verifier(pk, u, verifier_rng, options);
  BigInt e = verifier.challenge(prover.commit());
  return verifier.verify(prover.respond(e));
}

ZeroProofTranscript simulate_zero_transcript(const PaillierPublicKey& pk, const BigInt& u,
                                             Csprng& rng, int challenge_bits) {
  ZeroProofTranscript t;
  t.e = draw_challenge(rng, challenge_bits);
  t.z = rng.unit_mod(pk.n);
  BigInt u_inv_e = pow_mod(mod_inverse(u, pk.n_squared), t.e, pk.n_squared);
  t.a = pow_mod(t.z, pk.n, pk.n_squared) * u_inv_e % pk.n_squared;
  return t;
}

BigInt zero_witness(const PaillierPublicKey& pk, const PaillierSecretKey& sk,
                    const BigInt& c_prime) {
  return pow_mod(c_prime % pk.n, sk.d, pk.n);
}

PopkVerifier::PopkVerifier(const PaillierPublicKey& pk, std::vector<Ciphertext> c,
                           std::vector<BigInt> claimed, Csprng& rng, ProofOptions options)
    : pk_(pk), c_(std::move(c)), claimed_(std::move(claimed)), rng_(rng), options_(options) {
  if (c_.size() != claimed_.size()) {
    throw Error(ErrorCode::kLengthMismatch, "ppopk: ciphertext and claim lengths differ");
  }
  for (const auto& m : claimed_) {
    if (m < 0 || m >= pk_.n) {
      throw Error(ErrorCode::kInvalidArgument, "ppopk: claimed plaintext outside [0, n)");
    }
  }
}

std::vector<BigInt> PopkVerifier::blinded_differences() {
  expect_phase(phase_, ProofPhase::kCommit, "blinding request");
  c_prime_.clear();
  c_prime_.reserve(c_.size());
  for (std::size_t i = 0; i < c_.size(); ++i) {
    Ciphertext blind = encrypt(pk_, claimed_[i], rng_, c_[i].scale_exp);
    c_prime_.push_back(he_sub(pk_, c_[i], blind).value);
  }
  phase_ = ProofPhase::kChallenge;
  return c_prime_;
}

std::vector<BigInt> PopkVerifier::challenge(std::span<const BigInt> commitments) {
  expect_phase(phase_, ProofPhase::kChallenge, "commitments");
  if (commitments.size() != c_prime_.size()) {
    throw Error(ErrorCode::kLengthMismatch, "ppopk: wrong number of commitments");
  }
  a_.assign(commitments.begin(), commitments.end());
  e_.clear();
  for (std::size_t i = 0; i < a_.size(); ++i) {
    e_.push_back(options_.fiat_shamir
                     ? fiat_shamir_challenge(pk_, c_prime_[i], a_[i], options_.challenge_bits)
                     : draw_challenge(rng_, options_.challenge_bits));
  }
  phase_ = ProofPhase::kRespond;
  return e_;
}

bool PopkVerifier::verify(std::span<const BigInt> responses) {
  expect_phase(phase_, ProofPhase::kRespond, "responses");
  phase_ = ProofPhase::kDone;
  if (responses.size() != e_.size()) return false;
  bool accept = true;
  for (std::size_t i = 0; i < e_.size(); ++i) {
    accept = zero_proof_accepts(pk_, c_prime_[i], a_[i], e_[i], responses[i]) && accept;
  }
  return accept;
}

PopkProver::PopkProver(const PaillierPublicKey& pk, const PaillierSecretKey& sk, Csprng& rng,
                       ProofOptions options)
    : pk_(pk), sk_(sk), rng_(rng), options_(options) {}

std::vector<BigInt> PopkProver::commit(std::span<const BigInt> blinded) {
  expect_phase(phase_, ProofPhase::kCommit, "blinded difference");
  c_prime_.assign(blinded.begin(), blinded.end());
  witness_.clear();
  nonce_.clear();
  a_.clear();
  for (const auto& cp : c_prime_) {
    witness_.push_back(zero_witness(pk_, sk_, cp));
    nonce_.push_back(rng_.unit_mod(pk_.n));
    a_.push_back(pow_mod(nonce_.back(), pk_.n, pk_.n_squared));
  }
  phase_ = ProofPhase::kChallenge;
  return a_;
}

std::vector<BigInt> PopkProver::respond(std::span<const BigInt> challenges) {
  expect_phase(phase_, ProofPhase::kChallenge, "challenges");
  if (challenges.size() != witness_.size()) {
    throw Error(ErrorCode::kLengthMismatch, "ppopk: wrong number of challenges");
  }
  std::vector<BigInt> z;
  z.reserve(challenges.size());
  for (std::size_t i = 0; i < challenges.size(); ++i) {
    if (options_.fiat_shamir &&
        challenges[i] != fiat_shamir_challenge(pk_, c_prime_[i], a_[i], options_.challenge_bits)) {
      throw Error(ErrorCode::kProtocolOrder, "challenge does not match the transcript hash");
    }
    z.push_back(nonce_[i] * pow_mod(witness_[i], challenges[i], pk_.n) % pk_.n);
  }
  phase_ = ProofPhase::kDone;
  return z;
}

bool run_popk(PopkVerifier& verifier, ProofPeer& peer) {
  auto blinded = verifier.blinded_differences();
  auto commitments = peer.commit(blinded);
  auto challenges = verifier.challenge(commitments);
  auto responses = peer.respond(challenges);
  return verifier.verify(responses);
}

namespace {

class LocalProofPeer : public ProofPeer {
 public:
  explicit LocalProofPeer(PopkProver& prover) : prover_(prover) {}
  std::vector<BigInt> commit(std::span<const BigInt> blinded) override {
    return prover_.commit(blinded);
  }
  std::vector<BigInt> respond(std::span<const BigInt> challenges) override {
    return prover_.respond(challenges);
  }

 private:
  PopkProver& prover_;
};

}  // namespace

bool ppopk(const Ciphertext& c, const BigInt& m, const PaillierPublicKey& pk,
           const PaillierSecretKey& sk, Csprng& server_rng, Csprng& user_rng,
           ProofOptions options) {
  return ppopk_vector(std::span<const Ciphertext>(&c, 1), std::span<const BigInt>(&m, 1), pk, sk,
                      server_rng, user_rng, options);
}

bool ppopk_vector(std::span<const Ciphertext> c, std::span<const BigInt> m,
                  const PaillierPublicKey& pk, const PaillierSecretKey& sk, Csprng& server_rng,
                  Csprng& user_rng, ProofOptions options) {
  if (c.size() != m.size()) {
    throw Error(ErrorCode::kLengthMismatch, "ppopk_vector: lengths differ");
  }
  if (c.empty()) return true;
  PopkVerifier verifier(pk, {c.begin(), c.end()}, {m.begin(), m.end()}, server_rng, options);
  PopkProver prover(pk, sk, user_rng, options);
  LocalProofPeer peer(prover);
  return run_popk(verifier, peer);
}

}  // namespace swagg
