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
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "swagg/bigint.hpp"
#include "swagg/csprng.hpp"
#include "swagg/paillier.hpp"

namespace swagg {

/// Feature rows (without the bias column) and 0/1 labels.
struct Dataset {
  std::vector<std::vector<double>> x;
  std::vector<int> y;

  std::size_t size() const { return y.size(); }
  std::size_t features() const { return x.empty() ? 0 : x.front().size(); }
};

/// theta[0] is the bias.
struct LogRegModel {
  std::vector<double> theta;
};

struct TrainConfig {
  double learning_rate = 0.5;
  std::size_t epochs = 50;
  /// 0 means full batch.
  std::size_t batch = 0;
};

double sigmoid(double x);

/// theta . (1, x)
double linear(const LogRegModel& m, std::span<const double> x);
double predict_proba(const LogRegModel& m, std::span<const double> x);
double accuracy(const LogRegModel& m, const Dataset& d);

/// Mean binary cross-entropy J(theta).
double cost(const LogRegModel& m, const Dataset& d);
std::vector<double> gradient(const LogRegModel& m, const Dataset& d);

/// Gradient descent from theta = 0. Throws kLengthMismatch on ragged rows.
LogRegModel train(const Dataset& d, const TrainConfig& config, Csprng* shuffle_rng = nullptr);
/// Continues from `start`.
LogRegModel train_from(LogRegModel start, const Dataset& d, const TrainConfig& config,
                       Csprng* shuffle_rng = nullptr);

// --- Cubic approximations -------------------------------------------------

enum class CubicTarget { kSigmoid, kNegLogSigmoid, kNegLogOneMinusSigmoid };

std::string_view to_string(CubicTarget t);
double evaluate_target(CubicTarget t, double x);

struct CubicPoly {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  double lo = -6, hi = 6;
  /// Declared bound on |poly - target| over [lo, hi].
  double error_bound = 0;

  double operator()(double x) const { return s0 + x * (s1 + x * (s2 + x * s3)); }
};

/// Least squares on 1000 uniform nodes. The sigmoid fit keeps s0 = 1/2 and
/// s2 = 0 and fits only the odd part.
CubicPoly fit_cubic(CubicTarget target, double lo = -6, double hi = 6, std::size_t nodes = 1000);

/// max |poly - target| over `points` uniform grid points on [lo, hi].
double max_abs_error(const CubicPoly& p, CubicTarget target, std::size_t points = 10000);

/// Coefficients rounded to multiples of 2^-fraction_bits, as integers c_k
/// with s_k ~ c_k / 2^fraction_bits.
struct FixedCubic {
  BigInt c0, c1, c2, c3;
  int fraction_bits = 27;

  static FixedCubic quantize(const CubicPoly& p, int fraction_bits);
  /// The real polynomial these integers represent exactly.
  CubicPoly as_real() const;

  /// c0 2^{3S} + c1 X 2^{2S} + c2 X^2 2^S + c3 X^3: the polynomial at the real
  /// X / 2^S, scaled by 2^{fraction_bits + 3S}.
  BigInt evaluate_scaled(const BigInt& x, int s) const;
  int output_scale(int s) const { return fraction_bits + 3 * s; }
};

/// The frozen cubic for a target (see cubic_constants.hpp).
const CubicPoly& default_cubic(CubicTarget target);
FixedCubic default_fixed_cubic(CubicTarget target, int fraction_bits = 27);

// --- Masked evaluation over Paillier --------------------------------------
//
// The server holds Enc(l) at scale S and wants Enc(f(l)) for a cubic f. It
// sends Enc(z) = Enc(l + r) to the key holder, who returns Enc(z^2) and
// Enc(f(z)); the server removes r homomorphically:
//   f(l) = f(z) - f(r) + c0 + 3 c3 r^3 - 3 c3 r z^2 + (3 c3 r^2 - 2 c2 r) l.

struct MaskedCubicReply {
  Ciphertext enc_z_squared;  // scale 2S
  Ciphertext enc_f_of_z;     // scale F + 3S
};

/// Server: Enc(z) = Enc(l) + Enc(r); r is an integer at the scale of Enc(l).
Ciphertext mask_linear_term(const PaillierPublicKey& pk, const Ciphertext& enc_l, const BigInt& r,
                            Csprng& rng);

/// Key holder: decrypt z (signed), return Enc(z^2) and Enc(f(z)).
MaskedCubicReply answer_masked_cubic(const PaillierPublicKey& pk, const PaillierSecretKey& sk,
                                     const Ciphertext& enc_z, const FixedCubic& f, Csprng& rng);

/// Server: assemble Enc(f(l)) at scale F + 3S.
Ciphertext assemble_masked_cubic(const PaillierPublicKey& pk, const Ciphertext& enc_l,
                                 const BigInt& r, const FixedCubic& f,
                                 const MaskedCubicReply& reply);

using MaskedCubicOracle = std::function<MaskedCubicReply(const Ciphertext& enc_z)>;

/// Full round with the key holder behind `user`.
Ciphertext masked_sigmoid_open(const PaillierPublicKey& pk, const Ciphertext& enc_l,
                               const BigInt& r, const FixedCubic& f, Csprng& rng,
                               const MaskedCubicOracle& user);

/// Draws the server mask: uniform in [0, 2^(kappa - F + S)), a real in
/// [0, 2^(kappa - F)) at scale S.
BigInt draw_cubic_mask(Csprng& rng, int kappa, int fraction_bits, int scale);

/// Enc(y h) = Enc(y) * (h + r) - Enc(y r), with h + r at scale `h_scale` and
/// Enc(y r) at scale scale(y) + h_scale.
Ciphertext masked_linear_open(const PaillierPublicKey& pk, const Ciphertext& enc_y,
                              const BigInt& h_plus_r, int h_scale, const Ciphertext& enc_y_r);

}  // namespace swagg
