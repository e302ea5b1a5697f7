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

#include "swagg/paillier.hpp"

#include <array>
#include <string>

#include "swagg/error.hpp"

namespace swagg {
namespace {

constexpr std::array<unsigned, 53> kSmallPrimes = {
    3,   5,   7,   11,  13,  17,  19,  23,  29,  31,  37,  41,  43,  47,
    53,  59,  61,  67,  71,  73,  79,  83,  89,  97,  101, 103, 107, 109,
    113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191,
    193, 197, 199, 211, 223, 227, 229, 233, 239, 241, 251};

bool divisible_by_small_prime(const BigInt& n) {
  for (unsigned p : kSmallPrimes) {
    if (n == p) return false;
    if (mpz_divisible_ui_p(n.get_mpz_t(), p) != 0) return true;
  }
  return false;
}

// L(x) = (x - 1) / d
BigInt l_function(const BigInt& x, const BigInt& d) { return (x - 1) / d; }

void require(bool ok, ErrorCode code, const char* what) {
  if (!ok) throw Error(code, what);
}

}  // namespace

bool is_probable_prime(const BigInt& n, Csprng& rng, int rounds) {
  if (n < 2) return false;
  if (n < 4) return true;
  if (mpz_even_p(n.get_mpz_t())) return false;
  if (divisible_by_small_prime(n)) return false;
  if (n < 256) return true;

  const BigInt n_minus_1 = n - 1;
  BigInt d = n_minus_1;
  std::size_t s = 0;
  while (mpz_even_p(d.get_mpz_t())) {
    d >>= 1;
    ++s;
  }
  for (int i = 0; i < rounds; ++i) {
    BigInt a = 2 + rng.uniform_below(n - 3);  // a in [2, n-2]
    BigInt x = pow_mod(a, d, n);
    if (x == 1 || x == n_minus_1) continue;
    bool witness = true;
    for (std::size_t r = 1; r < s; ++r) {
      x = x * x % n;
      if (x == n_minus_1) {
        witness = false;
        break;
      }
    }
    if (witness) return false;
  }
  return true;
}

BigInt generate_prime(std::size_t bits, Csprng& rng, bool safe) {
  require(bits >= (safe ? 3u : 2u), ErrorCode::kInvalidArgument, "prime size too small");
  for (;;) {
    BigInt c = rng.random_bits(bits);
    mpz_setbit(c.get_mpz_t(), bits - 1);
    mpz_setbit(c.get_mpz_t(), 0);
    if (!safe) {
      if (bits > 8 && divisible_by_small_prime(c)) continue;
      if (is_probable_prime(c, rng)) return c;
      continue;
    }
    // Safe prime p = 2q + 1: sieve both before spending Miller-Rabin rounds.
    BigInt q = c >> 1;
    if (bits > 9 && (divisible_by_small_prime(c) || divisible_by_small_prime(q))) continue;
    if (!is_probable_prime(q, rng, 16)) continue;
    if (!is_probable_prime(c, rng)) continue;
    if (is_probable_prime(q, rng)) return c;
  }
}

PaillierKeypair keygen(const BigInt& p, const BigInt& q) { return keygen(p, q, p * q + 1); }

PaillierKeypair keygen(const BigInt& p, const BigInt& q, const BigInt& g) {
  require(p != q, ErrorCode::kInvalidPrime, "keygen requires distinct primes");
  {
    Csprng check_rng(sha256({to_bytes(p), to_bytes(q)}));
    require(is_probable_prime(p, check_rng) && is_probable_prime(q, check_rng),
            ErrorCode::kInvalidPrime, "keygen inputs must be prime");
  }
  const BigInt n = p * q;
  const BigInt phi = (p - 1) * (q - 1);
  require(gcd(n, phi) == 1, ErrorCode::kInvalidPrime, "gcd(pq, (p-1)(q-1)) != 1");

  PaillierKeypair kp;
  kp.pub.n = n;
  kp.pub.n_squared = n * n;
  kp.pub.g = reduce(g, kp.pub.n_squared);
  require(kp.pub.g != 0 && gcd(kp.pub.g, n) == 1, ErrorCode::kInvalidArgument,
          "generator is not a unit mod n^2");

  auto& sk = kp.sec;
  sk.p = p;
  sk.q = q;
  sk.lambda = lcm(p - 1, q - 1);
  BigInt lg = l_function(pow_mod(kp.pub.g, sk.lambda, kp.pub.n_squared), n);
  require(gcd(lg, n) == 1, ErrorCode::kInvalidArgument,
          "generator fails gcd(n, L(g^lambda mod n^2)) = 1");
  sk.mu = mod_inverse(lg, n);
  sk.d = mod_inverse(n, phi);

  sk.p_squared = p * p;
  sk.q_squared = q * q;
  sk.hp = mod_inverse(l_function(pow_mod(kp.pub.g, p - 1, sk.p_squared), p), p);
  sk.hq = mod_inverse(l_function(pow_mod(kp.pub.g, q - 1, sk.q_squared), q), q);
  sk.q_inv_p = mod_inverse(q, p);
  return kp;
}

PaillierKeypair generate_keypair(std::size_t modulus_bits, Csprng& rng) {
  require(modulus_bits >= 16, ErrorCode::kInvalidArgument, "modulus too small");
  const std::size_t half = modulus_bits / 2;
  for (;;) {
    BigInt p = generate_prime(half, rng);
    BigInt q = generate_prime(modulus_bits - half, rng);
    if (p == q) continue;
    BigInt n = p * q;
    if (bit_length(n) != modulus_bits) continue;
    if (gcd(n, (p - 1) * (q - 1)) != 1) continue;
    return keygen(p, q);
  }
}

void check_ciphertext(const PaillierPublicKey& pk, const BigInt& c) {
  if (c <= 0 || c >= pk.n_squared || gcd(c, pk.n) != 1) {
    throw Error(ErrorCode::kInvalidCiphertext, "ciphertext is not a unit below n^2");
  }
}

Ciphertext encrypt(const PaillierPublicKey& pk, const BigInt& m, const BigInt& r, int scale_exp) {
  require(m >= 0 && m < pk.n, ErrorCode::kInvalidArgument, "plaintext outside [0, n)");
  require(r > 0 && r < pk.n && gcd(r, pk.n) == 1, ErrorCode::kRandomnessNotUnit,
          "encryption randomness must be a unit mod n");
  BigInt gm = pk.standard_generator() ? BigInt((1 + m * pk.n) % pk.n_squared)
                                      : pow_mod(pk.g, m, pk.n_squared);
  BigInt rn = pow_mod(r, pk.n, pk.n_squared);
  return {gm * rn % pk.n_squared, scale_exp};
}

Ciphertext encrypt(const PaillierPublicKey& pk, const BigInt& m, Csprng& rng, int scale_exp) {
  return encrypt(pk, m, rng.unit_mod(pk.n), scale_exp);
}

BigInt decrypt_textbook(const PaillierSecretKey& sk, const PaillierPublicKey& pk,
                        const Ciphertext& c) {
  check_ciphertext(pk, c.value);
  BigInt u = pow_mod(c.value, sk.lambda, pk.n_squared);
  return l_function(u, pk.n) * sk.mu % pk.n;
}

BigInt decrypt(const PaillierSecretKey& sk, const PaillierPublicKey& pk, const Ciphertext& c) {
  check_ciphertext(pk, c.value);
  BigInt mp = l_function(pow_mod(c.value % sk.p_squared, sk.p - 1, sk.p_squared), sk.p) *
              sk.hp % sk.p;
  BigInt mq = l_function(pow_mod(c.value % sk.q_squared, sk.q - 1, sk.q_squared), sk.q) *
              sk.hq % sk.q;
  BigInt h = reduce((mp - mq) * sk.q_inv_p, sk.p);
  return mq + h * sk.q;
}

Ciphertext he_add(const PaillierPublicKey& pk, const Ciphertext& a, const Ciphertext& b) {
  if (a.scale_exp != b.scale_exp) {
    throw Error(ErrorCode::kScaleMismatch, "he_add: operands at scales 2^" +
                                               std::to_string(a.scale_exp) + " and 2^" +
                                               std::to_string(b.scale_exp));
  }
  return {a.value * b.value % pk.n_squared, a.scale_exp};
}

Ciphertext he_sub(const PaillierPublicKey& pk, const Ciphertext& a, const Ciphertext& b) {
  Ciphertext neg{mod_inverse(b.value, pk.n_squared), b.scale_exp};
  return he_add(pk, a, neg);
}

Ciphertext he_scalar_mul(const PaillierPublicKey& pk, const Ciphertext& c, const BigInt& k,
                         int k_scale) {
  BigInt e = reduce(k, pk.n);
  BigInt v;
  if (2 * e > pk.n) {
    v = pow_mod(mod_inverse(c.value, pk.n_squared), pk.n - e, pk.n_squared);
  } else {
    v = pow_mod(c.value, e, pk.n_squared);
  }
  return {std::move(v), c.scale_exp + k_scale};
}

CiphertextVector encrypt_vector(const PaillierPublicKey& pk, std::span<const BigInt> m,
                                Csprng& rng, int scale_exp) {
  CiphertextVector out;
  out.reserve(m.size());
  for (const auto& x : m) out.push_back(encrypt(pk, x, rng, scale_exp));
  return out;
}

std::vector<BigInt> decrypt_vector(const PaillierSecretKey& sk, const PaillierPublicKey& pk,
                                   std::span<const Ciphertext> c) {
  std::vector<BigInt> out;
  out.reserve(c.size());
  for (const auto& x : c) out.push_back(decrypt(sk, pk, x));
  return out;
}

CiphertextVector he_add_vector(const PaillierPublicKey& pk, std::span<const Ciphertext> a,
                               std::span<const Ciphertext> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kLengthMismatch, "he_add_vector: lengths differ");
  }
  CiphertextVector out;
  out.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(he_add(pk, a[i], b[i]));
  return out;
}

CiphertextVector he_scalar_mul_vector(const PaillierPublicKey& pk, std::span<const Ciphertext> c,
                                      const BigInt& k, int k_scale) {
  CiphertextVector out;
  out.reserve(c.size());
  for (const auto& x : c) out.push_back(he_scalar_mul(pk, x, k, k_scale));
  return out;
}

Bytes serialize(const PaillierPublicKey& pk) {
  ByteWriter w;
  w.big(pk.n);
  w.big(pk.g);
  return std::move(w).take();
}

PaillierPublicKey deserialize_public_key(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  PaillierPublicKey pk;
  pk.n = r.big();
  pk.g = r.big();
  r.expect_done();
  pk.n_squared = pk.n * pk.n;
  return pk;
}

Bytes serialize(const Ciphertext& c) {
  ByteWriter w;
  w.big(c.value);
  return std::move(w).take();
}

Ciphertext deserialize_ciphertext(std::span<const std::uint8_t> bytes, int scale_exp) {
  ByteReader r(bytes);
  Ciphertext c{r.big(), scale_exp};
  r.expect_done();
  return c;
}

Bytes serialize(std::span<const Ciphertext> cs) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(cs.size()));
  for (const auto& c : cs) w.big(c.value);
  return std::move(w).take();
}

CiphertextVector deserialize_ciphertexts(std::span<const std::uint8_t> bytes, int scale_exp) {
  ByteReader r(bytes);
  std::uint32_t count = r.u32();
  CiphertextVector out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) out.push_back({r.big(), scale_exp});
  r.expect_done();
  return out;
}

}  // namespace swagg
