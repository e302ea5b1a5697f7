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

#include "swagg/fixedpoint.hpp"

#include <cmath>
#include <string>

#include "swagg/error.hpp"

namespace swagg {

std::size_t required_slack_bits(const FixedPointParams& params) {
  std::size_t client_bits = 0;
  while ((std::size_t{1} << client_bits) < params.max_clients) ++client_bits;
  return static_cast<std::size_t>(params.kappa) + client_bits +
         static_cast<std::size_t>(params.fraction_bits);
}

FixedPointCodec::FixedPointCodec(BigInt modulus, FixedPointParams params)
    : modulus_(std::move(modulus)), params_(params) {
  if (params_.integer_bits < 1 || params_.fraction_bits < 0 || params_.kappa < 0) {
    throw Error(ErrorCode::kInvalidArgument, "fixed-point widths must be non-negative");
  }
  const std::size_t payload =
      static_cast<std::size_t>(params_.integer_bits + params_.fraction_bits);
  if (payload + required_slack_bits(params_) > bit_length(modulus_)) {
    throw Error(ErrorCode::kInvalidArgument,
                "modulus of " + std::to_string(bit_length(modulus_)) +
                    " bits leaves no headroom for a " + std::to_string(payload) +
                    "-bit fixed-point payload");
  }
}

BigInt FixedPointCodec::quantize(double x) const {
  if (!std::isfinite(x) || std::fabs(x) >= std::ldexp(1.0, params_.integer_bits)) {
    throw Error(ErrorCode::kOverflow,
                "value " + std::to_string(x) + " exceeds the " +
                    std::to_string(params_.integer_bits) + "-bit integer range");
  }
  // Scaling by a power of two is exact in binary floating point.
  double scaled = std::nearbyint(std::ldexp(x, params_.fraction_bits));
  return BigInt(static_cast<long>(scaled));
}

ScaledResidue FixedPointCodec::encode(double x) const {
  return {reduce(quantize(x), modulus_), params_.fraction_bits};
}

ScaledResidue FixedPointCodec::from_signed(const BigInt& v, int scale_exp) const {
  return {reduce(v, modulus_), scale_exp};
}

BigInt FixedPointCodec::to_signed(const ScaledResidue& r) const {
  return centered(r.value, modulus_);
}

double FixedPointCodec::decode(const ScaledResidue& r) const {
  if (r.scale_exp < 0 || static_cast<std::size_t>(r.scale_exp) >= bit_length(modulus_)) {
    throw Error(ErrorCode::kScaleMismatch,
                "scale 2^" + std::to_string(r.scale_exp) + " outside the ring");
  }
  return scaled_to_double(to_signed(r), r.scale_exp);
}

ScaledResidue FixedPointCodec::rescale(const ScaledResidue& r, int target_scale) const {
  if (target_scale > r.scale_exp) {
    throw Error(ErrorCode::kScaleMismatch, "rescale can only lower the scale");
  }
  if (target_scale == r.scale_exp) return r;
  BigInt v = round_shift_right(to_signed(r), static_cast<std::size_t>(r.scale_exp - target_scale));
  return from_signed(v, target_scale);
}

double scaled_to_double(const BigInt& v, int scale_exp) {
  // mpz_get_d_2exp keeps the top 53 bits regardless of how large v is.
  long exp = 0;
  double mant = mpz_get_d_2exp(&exp, v.get_mpz_t());
  return std::ldexp(mant, static_cast<int>(exp) - scale_exp);
}

}  // namespace swagg
