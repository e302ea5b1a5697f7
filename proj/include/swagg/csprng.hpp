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

#include <array>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

#include "swagg/bigint.hpp"

namespace swagg {

/// SHA-256 of the concatenated parts.
std::array<std::uint8_t, 32> sha256(std::initializer_list<std::span<const std::uint8_t>> parts);

// Deterministic cryptographic randomness: a ChaCha20 keystream under a
// 256-bit key. Every random choice in the library flows through one of
// these so whole protocol runs replay bit-for-bit from a single seed.
//
// Not thread-safe; give each execution context its own stream (see fork()).
class Csprng {
 public:
  using Key = std::array<std::uint8_t, 32>;

  explicit Csprng(std::uint64_t seed);
  explicit Csprng(const Key& key);

  /// Independent child stream. Depends only on this stream's key and the
  /// label, never on how much output has been consumed.
  Csprng fork(std::string_view label) const;
  Csprng fork(std::string_view label, std::uint64_t index) const;

  void fill(std::span<std::uint8_t> out);
  std::uint64_t next_u64();

  /// Uniform in [0, bound); bound > 0.
  std::uint64_t uniform(std::uint64_t bound);
  /// Uniform double in [0, 1).
  double uniform_real();

  /// Uniform in [0, 2^bits).
  BigInt random_bits(std::size_t bits);
  /// Uniform in [0, bound) by rejection sampling; bound > 0.
  BigInt uniform_below(const BigInt& bound);
  /// Uniform element of Z_n^*.
  BigInt unit_mod(const BigInt& n);

  const Key& key() const { return key_; }

 private:
  void refill();

  Key key_;
  std::uint64_t block_ = 0;
  std::array<std::uint8_t, 1024> buffer_{};
  std::size_t pos_ = sizeof(buffer_);
};

}  // namespace swagg
