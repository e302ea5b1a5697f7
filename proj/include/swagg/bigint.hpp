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

#include <gmpxx.h>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace swagg {

using BigInt = mpz_class;
using Bytes = std::vector<std::uint8_t>;

/// Number of significant bits; 0 for zero.
std::size_t bit_length(const BigInt& v);

/// Minimal big-endian magnitude (empty for zero). Sign is dropped.
Bytes to_bytes(const BigInt& v);
BigInt from_bytes(std::span<const std::uint8_t> bytes);

/// Big-endian magnitude left-padded to `width` bytes; throws if it does not fit.
Bytes to_fixed_bytes(const BigInt& v, std::size_t width);

BigInt pow_mod(const BigInt& base, const BigInt& exp, const BigInt& mod);
BigInt mod_inverse(const BigInt& a, const BigInt& mod);
BigInt gcd(const BigInt& a, const BigInt& b);
BigInt lcm(const BigInt& a, const BigInt& b);

/// Representative of `v` in [0, mod).
BigInt reduce(const BigInt& v, const BigInt& mod);

/// Interprets a residue in [0, mod) as signed: values above mod/2 are negative.
BigInt centered(const BigInt& residue, const BigInt& mod);

BigInt power_of_two(std::size_t exp);

/// Round-half-away-from-zero division by 2^shift.
BigInt round_shift_right(const BigInt& v, std::size_t shift);

// Append-only encoder for wire payloads. Integers are big-endian; big
// integers are a 4-byte length followed by the magnitude bytes.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v);
  void big(const BigInt& v);
  void raw(std::span<const std::uint8_t> data);
  void blob(std::span<const std::uint8_t> data);

  const Bytes& bytes() const& { return out_; }
  Bytes take() && { return std::move(out_); }

 private:
  Bytes out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint8_t u8();
  std::uint32_t u32();
  BigInt big();
  Bytes raw(std::size_t n);
  Bytes blob();

  bool done() const { return pos_ == data_.size(); }
  /// Throws unless every byte was consumed.
  void expect_done() const;

 private:
  void need(std::size_t n) const;

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace swagg
