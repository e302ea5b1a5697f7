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

#include "swagg/logreg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Dense>

#include "swagg/cubic_constants.hpp"
#include "swagg/error.hpp"

namespace swagg {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

// log(1 + e^x) without overflow.
double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

void check_shape(const LogRegModel& m, const Dataset& d) {
  if (d.x.size() != d.y.size()) {
    throw Error(ErrorCode::kLengthMismatch, "dataset: row and label counts differ");
  }
  for (const auto& row : d.x) {
    if (row.size() + 1 != m.theta.size()) {
      throw Error(ErrorCode::kLengthMismatch,
                  "dataset: row has " + std::to_string(row.size()) + " features, model expects " +
                      std::to_string(m.theta.size() - 1));
    }
  }
}

}  // namespace

double linear(const LogRegModel& m, std::span<const double> x) {
  if (x.size() + 1 != m.theta.size()) {
    throw Error(ErrorCode::kLengthMismatch, "linear: feature count differs from model");
  }
  double acc = m.theta[0];
  for (std::size_t k = 0; k < x.size(); ++k) acc += m.theta[k + 1] * x[k];
  return acc;
}

double predict_proba(const LogRegModel& m, std::span<const double> x) {
  return sigmoid(linear(m, x));
}

double accuracy(const LogRegModel& m, const Dataset& d) {
  check_shape(m, d);
  if (d.size() == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const int pred = predict_proba(m, d.x[i]) >= 0.5 ? 1 : 0;
    hits += pred == d.y[i];
  }
  return static_cast<double>(hits) / static_cast<double>(d.size());
}

double cost(const LogRegModel& m, const Dataset& d) {
  check_shape(m, d);
  if (d.size() == 0) return 0.0;
  double acc = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double l = linear(m, d.x[i]);
    // -log sigma(l) = softplus(-l), -log(1 - sigma(l)) = softplus(l)
    acc += d.y[i] ? softplus(-l) : softplus(l);
  }
  return acc / static_cast<double>(d.size());
}

namespace {

std::vector<double> batch_gradient(const LogRegModel& m, const Dataset& d,
                                   std::span<const std::size_t> rows) {
  std::vector<double> g(m.theta.size(), 0.0);
  for (std::size_t i : rows) {
    const double err = predict_proba(m, d.x[i]) - d.y[i];
    g[0] += err;
    for (std::size_t k = 0; k < d.x[i].size(); ++k) g[k + 1] += err * d.x[i][k];
  }
  if (!rows.empty()) {
    for (auto& v : g) v /= static_cast<double>(rows.size());
  }
  return g;
}

}  // namespace

std::vector<double> gradient(const LogRegModel& m, const Dataset& d) {
  check_shape(m, d);
  std::vector<std::size_t> rows(d.size());
  std::iota(rows.begin(), rows.end(), 0);
  return batch_gradient(m, d, rows);
}

LogRegModel train_from(LogRegModel m, const Dataset& d, const TrainConfig& config,
                       Csprng* shuffle_rng) {
  check_shape(m, d);
  if (!(config.learning_rate > 0)) {
    throw Error(ErrorCode::kInvalidArgument, "train: learning rate must be positive");
  }
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch = config.batch == 0 ? d.size() : std::min(config.batch, d.size());
  if (batch == 0) return m;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (shuffle_rng != nullptr && batch < d.size()) {
      // Fisher-Yates
      for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[shuffle_rng->uniform(i)]);
      }
    }
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const auto g =
          batch_gradient(m, d, std::span<const std::size_t>(order).subspan(start, end - start));
      for (std::size_t k = 0; k < g.size(); ++k) m.theta[k] -= config.learning_rate * g[k];
    }
  }
  return m;
}

LogRegModel train(const Dataset& d, const TrainConfig& config, Csprng* shuffle_rng) {
  LogRegModel m;
  m.theta.assign(d.features() + 1, 0.0);
  return train_from(std::move(m), d, config, shuffle_rng);
}

// --- Cubic approximations -------------------------------------------------

std::string_view to_string(CubicTarget t) {
  switch (t) {
    case CubicTarget::kSigmoid: return "sigmoid";
    case CubicTarget::kNegLogSigmoid: return "neg_log_sigmoid";
    case CubicTarget::kNegLogOneMinusSigmoid: return "neg_log_one_minus_sigmoid";
  }
  return "unknown";
}

double evaluate_target(CubicTarget t, double x) {
  switch (t) {
    case CubicTarget::kSigmoid: return sigmoid(x);
    case CubicTarget::kNegLogSigmoid: return softplus(-x);
    case CubicTarget::kNegLogOneMinusSigmoid: return softplus(x);
  }
  return 0.0;
}

CubicPoly fit_cubic(CubicTarget target, double lo, double hi, std::size_t nodes) {
  if (!(hi > lo) || nodes < 4) {
    throw Error(ErrorCode::kInvalidArgument, "fit_cubic: need hi > lo and at least 4 nodes");
  }
  const bool odd_only = target == CubicTarget::kSigmoid;
  const Eigen::Index cols = odd_only ? 2 : 4;
  Eigen::MatrixXd a(static_cast<Eigen::Index>(nodes), cols);
  Eigen::VectorXd b(static_cast<Eigen::Index>(nodes));
  for (std::size_t i = 0; i < nodes; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(nodes - 1);
    const auto r = static_cast<Eigen::Index>(i);
    if (odd_only) {
      a(r, 0) = x;
      a(r, 1) = x * x * x;
      b(r) = evaluate_target(target, x) - 0.5;
    } else {
      a(r, 0) = 1;
      a(r, 1) = x;
      a(r, 2) = x * x;
      a(r, 3) = x * x * x;
      b(r) = evaluate_target(target, x);
    }
  }
  const Eigen::VectorXd s = a.colPivHouseholderQr().solve(b);

  CubicPoly p;
  p.lo = lo;
  p.hi = hi;
  if (odd_only) {
    p.s0 = 0.5;
    p.s1 = s(0);
    p.s3 = s(1);
  } else {
    p.s0 = s(0);
    p.s1 = s(1);
    p.s2 = s(2);
    p.s3 = s(3);
  }
  p.error_bound = max_abs_error(p, target);
  return p;
}

double max_abs_error(const CubicPoly& p, CubicTarget target, std::size_t points) {
  if (points < 2) throw Error(ErrorCode::kInvalidArgument, "max_abs_error: need two points");
  double worst = 0;
  for (std::size_t i = 0; i < points; ++i) {
    const double x =
        p.lo + (p.hi - p.lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    worst = std::max(worst, std::fabs(p(x) - evaluate_target(target, x)));
  }
  return worst;
}

FixedCubic FixedCubic::quantize(const CubicPoly& p, int fraction_bits) {
  auto q = [&](double s) {
    if (!std::isfinite(s)) throw Error(ErrorCode::kOverflow, "cubic coefficient is not finite");
    return BigInt(static_cast<long>(std::nearbyint(std::ldexp(s, fraction_bits))));
  };
  return {q(p.s0), q(p.s1), q(p.s2), q(p.s3), fraction_bits};
}

CubicPoly FixedCubic::as_real() const {
  auto r = [&](const BigInt& c) { return std::ldexp(c.get_d(), -fraction_bits); };
  CubicPoly p;
  p.s0 = r(c0);
  p.s1 = r(c1);
  p.s2 = r(c2);
  p.s3 = r(c3);
  return p;
}

BigInt FixedCubic::evaluate_scaled(const BigInt& x, int s) const {
  const auto su = static_cast<std::size_t>(s);
  const BigInt x2 = x * x;
  return c0 * power_of_two(3 * su) + c1 * x * power_of_two(2 * su) + c2 * x2 * power_of_two(su) +
         c3 * x2 * x;
}

namespace {

CubicPoly from_frozen(const cubic_constants::Frozen& f) {
  CubicPoly p;
  p.s0 = std::ldexp(static_cast<double>(f.c0), -f.fraction_bits);
  p.s1 = std::ldexp(static_cast<double>(f.c1), -f.fraction_bits);
  p.s2 = std::ldexp(static_cast<double>(f.c2), -f.fraction_bits);
  p.s3 = std::ldexp(static_cast<double>(f.c3), -f.fraction_bits);
  p.lo = f.lo;
  p.hi = f.hi;
  p.error_bound = f.error_bound;
  return p;
}

}  // namespace

const CubicPoly& default_cubic(CubicTarget target) {
  static const CubicPoly sig = from_frozen(cubic_constants::kSigmoid);
  static const CubicPoly nls = from_frozen(cubic_constants::kNegLogSigmoid);
  static const CubicPoly nlom = from_frozen(cubic_constants::kNegLogOneMinusSigmoid);
  switch (target) {
    case CubicTarget::kSigmoid: return sig;
    case CubicTarget::kNegLogSigmoid: return nls;
    case CubicTarget::kNegLogOneMinusSigmoid: return nlom;
  }
  return sig;
}

FixedCubic default_fixed_cubic(CubicTarget target, int fraction_bits) {
  return FixedCubic::quantize(default_cubic(target), fraction_bits);
}

// --- Masked evaluation over Paillier --------------------------------------

Ciphertext mask_linear_term(const PaillierPublicKey& pk, const Ciphertext& enc_l, const BigInt& r,
                            Csprng& rng) {
  return he_add(pk, enc_l, encrypt(pk, reduce(r, pk.n), rng, enc_l.scale_exp));
}

MaskedCubicReply answer_masked_cubic(const PaillierPublicKey& pk, const PaillierSecretKey& sk,
                                     const Ciphertext& enc_z, const FixedCubic& f, Csprng& rng) {
  check_ciphertext(pk, enc_z.value);
  const int s = enc_z.scale_exp;
  const BigInt z = centered(decrypt(sk, pk, enc_z), pk.n);
  MaskedCubicReply reply;
  reply.enc_z_squared = encrypt(pk, reduce(z * z, pk.n), rng, 2 * s);
  reply.enc_f_of_z = encrypt(pk, reduce(f.evaluate_scaled(z, s), pk.n), rng, f.output_scale(s));
  return reply;
}

Ciphertext assemble_masked_cubic(const PaillierPublicKey& pk, const Ciphertext& enc_l,
                                 const BigInt& r, const FixedCubic& f,
                                 const MaskedCubicReply& reply) {
  const int s = enc_l.scale_exp;
  const auto su = static_cast<std::size_t>(s);
  if (reply.enc_z_squared.scale_exp != 2 * s || reply.enc_f_of_z.scale_exp != f.output_scale(s)) {
    throw Error(ErrorCode::kScaleMismatch, "masked cubic: reply scales do not match Enc(l)");
  }
  check_ciphertext(pk, reply.enc_z_squared.value);
  check_ciphertext(pk, reply.enc_f_of_z.value);

  // Constant part: -f(r) + c0 + 3 c3 r^3, all at scale F + 3S.
  const BigInt r3 = r * r * r;
  const BigInt constant = -f.evaluate_scaled(r, s) + f.c0 * power_of_two(3 * su) + 3 * f.c3 * r3;
  // Enc(z^2) at 2S times -3 c3 r at F + S.
  const BigInt k_z2 = -3 * f.c3 * r;
  // Enc(l) at S times (3 c3 r^2 - 2 c2 r 2^S) at F + 2S.
  const BigInt k_l = 3 * f.c3 * r * r - 2 * f.c2 * r * power_of_two(su);

  // The constant needs no fresh randomness: the reply is already randomized.
  Ciphertext acc = he_add(pk, reply.enc_f_of_z,
                          encrypt(pk, reduce(constant, pk.n), BigInt(1), f.output_scale(s)));
  acc = he_add(pk, acc, he_scalar_mul(pk, reply.enc_z_squared, k_z2, f.fraction_bits + s));
  acc = he_add(pk, acc, he_scalar_mul(pk, enc_l, k_l, f.fraction_bits + 2 * s));
  return acc;
}

Ciphertext masked_sigmoid_open(const PaillierPublicKey& pk, const Ciphertext& enc_l,
                               const BigInt& r, const FixedCubic& f, Csprng& rng,
                               const MaskedCubicOracle& user) {
  const Ciphertext enc_z = mask_linear_term(pk, enc_l, r, rng);
  return assemble_masked_cubic(pk, enc_l, r, f, user(enc_z));
}

BigInt draw_cubic_mask(Csprng& rng, int kappa, int fraction_bits, int scale) {
  const int bits = kappa - fraction_bits + scale;
  if (bits <= 0) throw Error(ErrorCode::kInvalidArgument, "cubic mask: non-positive width");
  return rng.random_bits(static_cast<std::size_t>(bits));
}

Ciphertext masked_linear_open(const PaillierPublicKey& pk, const Ciphertext& enc_y,
                              const BigInt& h_plus_r, int h_scale, const Ciphertext& enc_y_r) {
  if (enc_y_r.scale_exp != enc_y.scale_exp + h_scale) {
    throw Error(ErrorCode::kScaleMismatch, "masked linear: Enc(y r) scale mismatch");
  }
  check_ciphertext(pk, enc_y.value);
  check_ciphertext(pk, enc_y_r.value);
  return he_sub(pk, he_scalar_mul(pk, enc_y, reduce(h_plus_r, pk.n), h_scale), enc_y_r);
}

}  // namespace swagg
