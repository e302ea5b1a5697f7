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

namespace swagg {

struct PaillierPublicKey {
  BigInt n;
  BigInt g;
  BigInt n_squared;

  /// g == n + 1, which turns g^m into the cheap 1 + m*n.
  bool standard_generator() const { return g == n + 1; }
};

struct PaillierSecretKey {
  BigInt p;
  BigInt q;
  BigInt lambda;  // lcm(p-1, q-1)
  BigInt mu;      // L(g^lambda mod n^2)^-1 mod n
  BigInt d;       // n^-1 mod phi(n); recovers r from an encryption of zero

  // CRT decryption precomputation.
  BigInt p_squared;
  BigInt q_squared;
  BigInt hp;  // L_p(g^(p-1) mod p^2)^-1 mod p
  BigInt hq;
  BigInt q_inv_p;  // q^-1 mod p
};

struct PaillierKeypair {
  PaillierPublicKey pub;
  PaillierSecretKey sec;
};

struct Ciphertext {
  BigInt value;
  int scale_exp = 0;

  friend bool operator==(const Ciphertext&, const Ciphertext&) = default;
};

using CiphertextVector = std::vector<Ciphertext>;

/// Miller-Rabin with `rounds` random bases drawn from rng.
bool is_probable_prime(const BigInt& n, Csprng& rng, int rounds = 64);

/// Random prime of exactly `bits` bits. With `safe`, (p-1)/2 is prime too.
BigInt generate_prime(std::size_t bits, Csprng& rng, bool safe = false);

/// Key pair from given primes with g = n + 1.
PaillierKeypair keygen(const BigInt& p, const BigInt& q);
/// Key pair with an explicit generator; throws kInvalidArgument if
/// gcd(n, L(g^lambda mod n^2)) != 1.
PaillierKeypair keygen(const BigInt& p, const BigInt& q, const BigInt& g);
/// Fresh primes of modulus_bits/2 bits each.
PaillierKeypair generate_keypair(std::size_t modulus_bits, Csprng& rng);

Ciphertext encrypt(const PaillierPublicKey& pk, const BigInt& m, const BigInt& r,
                   int scale_exp = 0);
Ciphertext encrypt(const PaillierPublicKey& pk, const BigInt& m, Csprng& rng,
                   int scale_exp = 0);

/// CRT decryption; always equal to decrypt_textbook().
BigInt decrypt(const PaillierSecretKey& sk, const PaillierPublicKey& pk, const Ciphertext& c);
/// L(c^lambda mod n^2) * mu mod n.
BigInt decrypt_textbook(const PaillierSecretKey& sk, const PaillierPublicKey& pk,
                        const Ciphertext& c);

Ciphertext he_add(const PaillierPublicKey& pk, const Ciphertext& a, const Ciphertext& b);
/// Decrypts to (m_a - m_b) mod n.
Ciphertext he_sub(const PaillierPublicKey& pk, const Ciphertext& a, const Ciphertext& b);
/// Decrypts to (k * m) mod n; the result scale is c.scale_exp + k_scale.
/// k in the upper half of Z_n is applied as a negative exponent, which keeps
/// the exponent short when k encodes a small negative number.
Ciphertext he_scalar_mul(const PaillierPublicKey& pk, const Ciphertext& c, const BigInt& k,
                         int k_scale = 0);

CiphertextVector encrypt_vector(const PaillierPublicKey& pk, std::span<const BigInt> m,
                                Csprng& rng, int scale_exp = 0);
std::vector<BigInt> decrypt_vector(const PaillierSecretKey& sk, const PaillierPublicKey& pk,
                                   std::span<const Ciphertext> c);
CiphertextVector he_add_vector(const PaillierPublicKey& pk, std::span<const Ciphertext> a,
                               std::span<const Ciphertext> b);
CiphertextVector he_scalar_mul_vector(const PaillierPublicKey& pk, std::span<const Ciphertext> c,
                                      const BigInt& k, int k_scale = 0);

/// Throws kInvalidCiphertext unless 0 < c < n^2 and gcd(c, n) = 1.
void check_ciphertext(const PaillierPublicKey& pk, const BigInt& c);

// Wire forms: length-prefixed big-endian magnitudes.
Bytes serialize(const PaillierPublicKey& pk);
PaillierPublicKey deserialize_public_key(std::span<const std::uint8_t> bytes);
Bytes serialize(const Ciphertext& c);
Ciphertext deserialize_ciphertext(std::span<const std::uint8_t> bytes, int scale_exp);
Bytes serialize(std::span<const Ciphertext> cs);
CiphertextVector deserialize_ciphertexts(std::span<const std::uint8_t> bytes, int scale_exp);

}  // namespace swagg
