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

#include "swagg/shamir.hpp"

#include <set>
#include <string>

#include "swagg/error.hpp"

namespace swagg {

const BigInt& mersenne127() {
  static const BigInt p = power_of_two(127) - 1;
  return p;
}

namespace {

std::vector<ShamirShare> evaluate(const BigInt& secret, std::span<const BigInt> coefficients,
                                  std::span<const std::uint32_t> xs, const BigInt& prime) {
  const std::size_t t = coefficients.size() + 1;
  if (t > xs.size()) throw Error(ErrorCode::kInvalidArgument, "share: threshold exceeds share count");
  if (secret < 0 || secret >= prime) {
    throw Error(ErrorCode::kInvalidArgument, "share: secret is not a field element");
  }
  std::set<std::uint32_t> seen;
  std::vector<ShamirShare> out;
  out.reserve(xs.size());
  for (std::uint32_t x : xs) {
    if (x == 0 || x >= prime || !seen.insert(x).second) {
      throw Error(ErrorCode::kInvalidArgument, "share: x-coordinates must be distinct and nonzero");
    }
    // Horner from the top coefficient down.
    BigInt y = 0;
    for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) {
      y = (y + *it) * x % prime;
    }
    y = (y + secret) % prime;
    out.push_back({x, std::move(y), t, prime});
  }
  return out;
}

std::vector<BigInt> random_coefficients(std::size_t t, const BigInt& prime, Csprng& rng) {
  std::vector<BigInt> coeffs;
  coeffs.reserve(t - 1);
  for (std::size_t i = 1; i < t; ++i) coeffs.push_back(rng.uniform_below(prime));
  return coeffs;
}

}  // namespace

std::vector<ShamirShare> share_with_coefficients(const BigInt& secret,
                                                 std::span<const BigInt> coefficients,
                                                 std::size_t n, const BigInt& prime) {
  if (prime <= n) throw Error(ErrorCode::kInvalidArgument, "share: field too small for n shares");
  std::vector<std::uint32_t> xs(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = static_cast<std::uint32_t>(i + 1);
  return evaluate(secret, coefficients, xs, prime);
}

std::vector<ShamirShare> share(const BigInt& secret, std::size_t t, std::size_t n,
                               const BigInt& prime, Csprng& rng) {
  if (t < 1 || t > n) {
    throw Error(ErrorCode::kInvalidArgument,
                "share: need 1 <= t <= n, got t=" + std::to_string(t) + " n=" + std::to_string(n));
  }
  if (prime <= n) throw Error(ErrorCode::kInvalidArgument, "share: field too small for n shares");
  return share_with_coefficients(secret, random_coefficients(t, prime, rng), n, prime);
}

std::vector<ShamirShare> share_at(const BigInt& secret, std::size_t t,
                                  std::span<const std::uint32_t> xs, const BigInt& prime,
                                  Csprng& rng) {
  if (t < 1 || t > xs.size()) {
    throw Error(ErrorCode::kInvalidArgument, "share: need 1 <= t <= number of holders");
  }
  return evaluate(secret, random_coefficients(t, prime, rng), xs, prime);
}

LagrangeBasis::LagrangeBasis(std::span<const std::uint32_t> indices, const BigInt& prime)
    : indices_(indices.begin(), indices.end()), prime_(prime) {
  weights_.reserve(indices_.size());
  for (std::size_t j = 0; j < indices_.size(); ++j) {
    BigInt num = 1;
    BigInt den = 1;
    for (std::size_t m = 0; m < indices_.size(); ++m) {
      if (m == j) continue;
      num = num * indices_[m] % prime_;
      den = den * reduce(BigInt(indices_[m]) - indices_[j], prime_) % prime_;
    }
    weights_.push_back(num * mod_inverse(den, prime_) % prime_);
  }
}

BigInt LagrangeBasis::interpolate(std::span<const BigInt> values) const {
  if (values.size() != weights_.size()) {
    throw Error(ErrorCode::kLengthMismatch, "interpolate: value count differs from basis");
  }
  BigInt acc = 0;
  for (std::size_t j = 0; j < values.size(); ++j) acc += weights_[j] * values[j];
  return reduce(acc, prime_);
}

BigInt reconstruct(std::span<const ShamirShare> shares) {
  if (shares.empty()) throw Error(ErrorCode::kInsufficientShares, "reconstruct: no shares");
  const std::size_t t = shares.front().threshold;
  const BigInt& prime = shares.front().field_prime;

  std::vector<std::uint32_t> idx;
  std::vector<BigInt> vals;
  std::set<std::uint32_t> seen;
  for (const auto& s : shares) {
    if (s.index == 0) throw Error(ErrorCode::kInvalidArgument, "reconstruct: share index 0");
    if (!seen.insert(s.index).second) continue;
    idx.push_back(s.index);
    vals.push_back(s.value);
    if (idx.size() == t) break;
  }
  if (idx.size() < t) {
    throw Error(ErrorCode::kInsufficientShares,
                "reconstruct: " + std::to_string(idx.size()) + " distinct shares, threshold " +
                    std::to_string(t));
  }
  return LagrangeBasis(idx, prime).interpolate(vals);
}

std::size_t share_value_width(const BigInt& prime) { return (bit_length(prime - 1) + 7) / 8; }

Bytes serialize_share(const ShamirShare& s) {
  ByteWriter w;
  w.u32(s.index);
  w.raw(to_fixed_bytes(s.value, share_value_width(s.field_prime)));
  return std::move(w).take();
}

ShamirShare deserialize_share(std::span<const std::uint8_t> bytes, std::size_t threshold,
                              const BigInt& prime) {
  ByteReader r(bytes);
  ShamirShare s;
  s.index = r.u32();
  s.value = from_bytes(r.raw(share_value_width(prime)));
  r.expect_done();
  s.threshold = threshold;
  s.field_prime = prime;
  return s;
}

}  // namespace swagg
