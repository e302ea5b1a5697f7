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

#include "swagg/bigint.hpp"

namespace swagg {

/// A residue modulo the codec modulus carrying the power-of-two scale applied
/// to it. Residues in (modulus/2, modulus) stand for negative values.
struct ScaledResidue {
  BigInt value;
  int scale_exp = 0;

  friend bool operator==(const ScaledResidue&, const ScaledResidue&) = default;
};

struct FixedPointParams {
  int integer_bits = 17;
  int fraction_bits = 27;
  /// Statistical masking parameter; masks of this many bits must fit on top of
  /// the payload without wrapping.
  int kappa = 80;
  std::size_t max_clients = 1024;
};

/// Spare bits the ring must keep above the integer+fraction payload.
std::size_t required_slack_bits(const FixedPointParams& params);

// Maps reals to residues mod `modulus` and back with explicit scale tracking.
// Multiplying two encoded values doubles the scale; rescale() brings a
// decrypted plaintext back down.
class FixedPointCodec {
 public:
  /// Throws kInvalidArgument when the modulus is too small for the payload
  /// plus the slack from required_slack_bits().
  FixedPointCodec(BigInt modulus, FixedPointParams params = {});

  ScaledResidue encode(double x) const;
  double decode(const ScaledResidue& r) const;
  ScaledResidue rescale(const ScaledResidue& r, int target_scale) const;

  /// Residue for an already-scaled signed integer.
  ScaledResidue from_signed(const BigInt& v, int scale_exp) const;
  /// Signed integer behind a residue (upper half of the ring is negative).
  BigInt to_signed(const ScaledResidue& r) const;

  /// round(x * 2^fraction_bits) as a signed integer; overflow-checked.
  BigInt quantize(double x) const;

  const BigInt& modulus() const { return modulus_; }
  const FixedPointParams& params() const { return params_; }
  int fraction_bits() const { return params_.fraction_bits; }

 private:
  BigInt modulus_;
  FixedPointParams params_;
};

/// Signed scaled integer -> double, i.e. v / 2^scale_exp.
double scaled_to_double(const BigInt& v, int scale_exp);

}  // namespace swagg
