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
#include <span>
#include <vector>

#include "swagg/bigint.hpp"
#include "swagg/csprng.hpp"

namespace swagg {

/// 2^127 - 1, the default sharing field.
const BigInt& mersenne127();

struct ShamirShare {
  std::uint32_t index = 0;  // x-coordinate, >= 1
  BigInt value;
  std::size_t threshold = 0;
  BigInt field_prime;

  friend bool operator==(const ShamirShare&, const ShamirShare&) = default;
};

/// t-out-of-n sharing of `secret` at x = 1..n.
std::vector<ShamirShare> share(const BigInt& secret, std::size_t t, std::size_t n,
                               const BigInt& prime, Csprng& rng);

/// Sharing with caller-chosen coefficients a_1..a_{t-1} (t = coeffs.size() + 1).
std::vector<ShamirShare> share_with_coefficients(const BigInt& secret,
                                                 std::span<const BigInt> coefficients,
                                                 std::size_t n, const BigInt& prime);

/// Sharing evaluated at the given nonzero, distinct x-coordinates.
std::vector<ShamirShare> share_at(const BigInt& secret, std::size_t t,
                                  std::span<const std::uint32_t> xs, const BigInt& prime,
                                  Csprng& rng);

/// Lagrange interpolation at 0 from the first `threshold` shares. Consistency
/// of surplus shares is not checked.
BigInt reconstruct(std::span<const ShamirShare> shares);

// Lagrange weights at x = 0 for a fixed index set, reusable across every
// secret shared over the same holders.
class LagrangeBasis {
 public:
  LagrangeBasis(std::span<const std::uint32_t> indices, const BigInt& prime);

  /// Interpolates the values given in the same order as the indices.
  BigInt interpolate(std::span<const BigInt> values) const;

  const std::vector<std::uint32_t>& indices() const { return indices_; }

 private:
  std::vector<std::uint32_t> indices_;
  std::vector<BigInt> weights_;
  BigInt prime_;
};

/// Wire form: 4-byte big-endian index then the value as fixed-width
/// big-endian bytes (16 for the default field).
Bytes serialize_share(const ShamirShare& s);
ShamirShare deserialize_share(std::span<const std::uint8_t> bytes, std::size_t threshold,
                              const BigInt& prime);
std::size_t share_value_width(const BigInt& prime);

}  // namespace swagg
