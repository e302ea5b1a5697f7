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

#include "swagg/disparity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "swagg/error.hpp"

namespace swagg {

BigInt to_fixed(double x, const DisparityParams& p) {
  if (!std::isfinite(x) || std::fabs(x) >= std::ldexp(1.0, p.integer_bits)) {
    throw Error(ErrorCode::kOverflow, "value " + std::to_string(x) + " exceeds the " +
                                          std::to_string(p.integer_bits) + "-bit integer range");
  }
  return BigInt(static_cast<long>(std::nearbyint(std::ldexp(x, p.fraction_bits))));
}

double snap_to_grid(double x, const DisparityParams& p) {
  return std::ldexp(to_fixed(x, p).get_d(), -p.fraction_bits);
}

// --- Encrypted inputs ------------------------------------------------------

EncryptedDataset encrypt_dataset(const PaillierPublicKey& pk, const Dataset& d,
                                 const DisparityParams& p, Csprng& rng) {
  if (d.x.size() != d.y.size()) {
    throw Error(ErrorCode::kLengthMismatch, "encrypt_dataset: row and label counts differ");
  }
  EncryptedDataset out;
  out.x.reserve(d.size());
  out.y.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    CiphertextVector row;
    row.reserve(d.x[i].size());
    for (double v : d.x[i]) row.push_back(encrypt(pk, reduce(to_fixed(v, p), pk.n), rng, p.fraction_bits));
    out.x.push_back(std::move(row));
    if (d.y[i] != 0 && d.y[i] != 1) {
      throw Error(ErrorCode::kInvalidArgument, "encrypt_dataset: labels must be 0 or 1");
    }
    out.y.push_back(encrypt(pk, d.y[i] ? power_of_two(static_cast<std::size_t>(p.fraction_bits)) : BigInt(0),
                            rng, p.fraction_bits));
  }
  return out;
}

CiphertextVector encrypt_model(const PaillierPublicKey& pk, const LogRegModel& m,
                               const DisparityParams& p, Csprng& rng) {
  CiphertextVector out;
  out.reserve(m.theta.size());
  for (double v : m.theta) out.push_back(encrypt(pk, reduce(to_fixed(v, p), pk.n), rng, p.fraction_bits));
  return out;
}

namespace {

void write_ciphertexts(ByteWriter& w, std::span<const Ciphertext> cs) {
  w.u32(static_cast<std::uint32_t>(cs.size()));
  for (const auto& c : cs) w.big(c.value);
}

CiphertextVector read_ciphertexts(ByteReader& r, int scale) {
  const std::uint32_t count = r.u32();
  CiphertextVector out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) out.push_back({r.big(), scale});
  return out;
}

}  // namespace

Bytes serialize(const EncryptedDataset& d) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(d.x.size()));
  for (const auto& row : d.x) write_ciphertexts(w, row);
  write_ciphertexts(w, d.y);
  return std::move(w).take();
}

EncryptedDataset deserialize_encrypted_dataset(std::span<const std::uint8_t> bytes,
                                               const DisparityParams& p) {
  ByteReader r(bytes);
  EncryptedDataset d;
  const std::uint32_t rows = r.u32();
  for (std::uint32_t i = 0; i < rows; ++i) d.x.push_back(read_ciphertexts(r, p.fraction_bits));
  d.y = read_ciphertexts(r, p.fraction_bits);
  r.expect_done();
  if (d.y.size() != d.x.size()) {
    throw Error(ErrorCode::kSerialization, "encrypted dataset: row and label counts differ");
  }
  return d;
}

Bytes serialize(const CubicRequest& req) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(req.targets.size()));
  for (auto t : req.targets) w.u8(static_cast<std::uint8_t>(t));
  write_ciphertexts(w, req.enc_z);
  return std::move(w).take();
}

CubicRequest deserialize_cubic_request(std::span<const std::uint8_t> bytes, const DisparityParams& p) {
  ByteReader r(bytes);
  CubicRequest req;
  const std::uint8_t targets = r.u8();
  for (std::uint8_t i = 0; i < targets; ++i) {
    const std::uint8_t t = r.u8();
    if (t > static_cast<std::uint8_t>(CubicTarget::kNegLogOneMinusSigmoid)) {
      throw Error(ErrorCode::kSerialization, "cubic request: unknown target");
    }
    req.targets.push_back(static_cast<CubicTarget>(t));
  }
  req.enc_z = read_ciphertexts(r, p.linear_scale());
  r.expect_done();
  return req;
}

Bytes serialize(const CubicReply& rep) {
  ByteWriter w;
  write_ciphertexts(w, rep.enc_z_squared);
  w.u8(static_cast<std::uint8_t>(rep.f_of_z.size()));
  for (const auto& f : rep.f_of_z) write_ciphertexts(w, f);
  return std::move(w).take();
}

CubicReply deserialize_cubic_reply(std::span<const std::uint8_t> bytes, const DisparityParams& p) {
  ByteReader r(bytes);
  CubicReply rep;
  rep.enc_z_squared = read_ciphertexts(r, 2 * p.linear_scale());
  const std::uint8_t targets = r.u8();
  for (std::uint8_t i = 0; i < targets; ++i) rep.f_of_z.push_back(read_ciphertexts(r, p.cubic_scale()));
  r.expect_done();
  return rep;
}

Bytes serialize(const OpenRequest& req) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(req.slots.size()));
  for (const auto& s : req.slots) {
    w.u32(s.sample);
    w.u8(s.complement ? 1 : 0);
  }
  write_ciphertexts(w, req.enc_h);
  return std::move(w).take();
}

OpenRequest deserialize_open_request(std::span<const std::uint8_t> bytes, const DisparityParams& p) {
  ByteReader r(bytes);
  OpenRequest req;
  const std::uint32_t slots = r.u32();
  for (std::uint32_t i = 0; i < slots; ++i) {
    OpenSlot s;
    s.sample = r.u32();
    s.complement = r.u8() != 0;
    req.slots.push_back(s);
  }
  req.enc_h = read_ciphertexts(r, p.cubic_scale());
  r.expect_done();
  return req;
}

Bytes serialize(const OpenReply& rep) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(rep.h_plus_r.size()));
  for (const auto& v : rep.h_plus_r) w.big(v);
  write_ciphertexts(w, rep.enc_r);
  write_ciphertexts(w, rep.enc_factor_r);
  return std::move(w).take();
}

OpenReply deserialize_open_reply(std::span<const std::uint8_t> bytes, const DisparityParams& p) {
  ByteReader r(bytes);
  OpenReply rep;
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) rep.h_plus_r.push_back(r.big());
  rep.enc_r = read_ciphertexts(r, p.cubic_scale());
  rep.enc_factor_r = read_ciphertexts(r, p.entropy_scale());
  r.expect_done();
  return rep;
}

// --- Honest key holder -----------------------------------------------------

LocalEvaluationPeer::Prover::Prover(const PaillierPublicKey& pk, const PaillierSecretKey& sk,
                                    Csprng& rng, ProofOptions options)
    : pk_(pk), sk_(sk), rng_(rng), options_(options) {}

std::vector<BigInt> LocalEvaluationPeer::Prover::commit(std::span<const BigInt> blinded) {
  current_.emplace(pk_, sk_, rng_, options_);
  return current_->commit(blinded);
}

std::vector<BigInt> LocalEvaluationPeer::Prover::respond(std::span<const BigInt> challenges) {
  if (!current_) throw Error(ErrorCode::kProtocolOrder, "h prover: respond before commit");
  auto z = current_->respond(challenges);
  current_.reset();
  return z;
}

LocalEvaluationPeer::LocalEvaluationPeer(const PaillierPublicKey& pk, const PaillierSecretKey& sk,
                                         std::vector<int> labels, DisparityParams params,
                                         Csprng& rng)
    : pk_(pk),
      sk_(sk),
      labels_(std::move(labels)),
      params_(params),
      rng_(rng),
      prover_(pk, sk, rng, params.proof) {}

CubicReply LocalEvaluationPeer::masked_cubic(const CubicRequest& request) {
  const int s = params_.linear_scale();
  std::vector<FixedCubic> cubics;
  for (auto t : request.targets) cubics.push_back(default_fixed_cubic(t, params_.fraction_bits));

  CubicReply reply;
  reply.f_of_z.resize(cubics.size());
  for (const auto& enc_z : request.enc_z) {
    check_ciphertext(pk_, enc_z.value);
    const BigInt z = centered(decrypt(sk_, pk_, enc_z), pk_.n);
    reply.enc_z_squared.push_back(encrypt(pk_, reduce(z * z, pk_.n), rng_, 2 * s));
    for (std::size_t k = 0; k < cubics.size(); ++k) {
      reply.f_of_z[k].push_back(encrypt(pk_, reduce(cubics[k].evaluate_scaled(z, s), pk_.n), rng_,
                                        cubics[k].output_scale(s)));
    }
  }
  return reply;
}

OpenReply LocalEvaluationPeer::masked_open(const OpenRequest& request) {
  if (request.slots.size() != request.enc_h.size()) {
    throw Error(ErrorCode::kLengthMismatch, "masked open: slot and ciphertext counts differ");
  }
  const BigInt one = power_of_two(static_cast<std::size_t>(params_.fraction_bits));
  OpenReply reply;
  for (std::size_t j = 0; j < request.slots.size(); ++j) {
    const OpenSlot& slot = request.slots[j];
    if (slot.sample >= labels_.size()) {
      throw Error(ErrorCode::kInvalidArgument, "masked open: sample index out of range");
    }
    check_ciphertext(pk_, request.enc_h[j].value);
    const BigInt h = decrypt(sk_, pk_, request.enc_h[j]);
    const BigInt r = rng_.uniform_below(pk_.n);
    const int y = labels_[slot.sample];
    const BigInt factor = (slot.complement ? 1 - y : y) * one;
    reply.h_plus_r.push_back(reduce(h + r, pk_.n));
    reply.enc_r.push_back(encrypt(pk_, r, rng_, params_.cubic_scale()));
    reply.enc_factor_r.push_back(
        encrypt(pk_, reduce(factor * r, pk_.n), rng_, params_.entropy_scale()));
  }
  return reply;
}

// --- Server side ------------------------------------------------------------

namespace {

std::vector<BigInt> quantized_row(std::span<const double> x, const DisparityParams& p) {
  std::vector<BigInt> out;
  out.reserve(x.size() + 1);
  out.push_back(power_of_two(static_cast<std::size_t>(p.fraction_bits)));  // bias feature
  for (double v : x) out.push_back(to_fixed(v, p));
  return out;
}

Ciphertext zero_at(const PaillierPublicKey& pk, int scale, Csprng& rng) {
  return encrypt(pk, 0, rng, scale);
}

struct CubicBatch {
  std::vector<Ciphertext> enc_l;
  std::vector<BigInt> masks;
};

// One masked round for every Enc(l) in the batch; returns [target][sample].
std::vector<CiphertextVector> run_masked_cubic(const PaillierPublicKey& pk, const CubicBatch& batch,
                                               const std::vector<CubicTarget>& targets,
                                               EvaluationPeer& peer, const DisparityParams& p,
                                               Csprng& rng) {
  const int s = p.linear_scale();
  CubicRequest req;
  req.targets = targets;
  for (std::size_t i = 0; i < batch.enc_l.size(); ++i) {
    req.enc_z.push_back(mask_linear_term(pk, batch.enc_l[i], batch.masks[i], rng));
  }
  const CubicReply rep = peer.masked_cubic(req);
  if (rep.enc_z_squared.size() != batch.enc_l.size() || rep.f_of_z.size() != targets.size()) {
    throw Error(ErrorCode::kLengthMismatch, "masked cubic: reply shape differs from request");
  }
  std::vector<CiphertextVector> out(targets.size());
  for (std::size_t k = 0; k < targets.size(); ++k) {
    if (rep.f_of_z[k].size() != batch.enc_l.size()) {
      throw Error(ErrorCode::kLengthMismatch, "masked cubic: reply shape differs from request");
    }
    const FixedCubic f = default_fixed_cubic(targets[k], p.fraction_bits);
    for (std::size_t i = 0; i < batch.enc_l.size(); ++i) {
      MaskedCubicReply one{rep.enc_z_squared[i], rep.f_of_z[k][i]};
      if (one.enc_f_of_z.scale_exp != f.output_scale(s)) {
        throw Error(ErrorCode::kScaleMismatch, "masked cubic: reply scale");
      }
      out[k].push_back(assemble_masked_cubic(pk, batch.enc_l[i], batch.masks[i], f, one));
    }
  }
  return out;
}

}  // namespace

Ciphertext compute_LS(const PaillierPublicKey& pk, std::span<const Ciphertext> enc_model,
                      const Dataset& benchmark, EvaluationPeer& peer,
                      const DisparityParams& params, Csprng& rng) {
  if (benchmark.x.size() != benchmark.y.size()) {
    throw Error(ErrorCode::kLengthMismatch, "compute_LS: row and label counts differ");
  }
  const int s = params.linear_scale();
  const BigInt one = power_of_two(static_cast<std::size_t>(params.fraction_bits));

  // The server knows the benchmark labels: positives need -log p, negatives
  // need -log(1 - p) and only in binary mode.
  CubicBatch positives, negatives;
  for (std::size_t i = 0; i < benchmark.size(); ++i) {
    const bool positive = benchmark.y[i] == 1;
    if (!positive && !params.binary_ce) continue;
    const auto xq = quantized_row(benchmark.x[i], params);
    if (xq.size() != enc_model.size()) {
      throw Error(ErrorCode::kLengthMismatch, "compute_LS: feature count differs from model");
    }
    Ciphertext l = he_scalar_mul(pk, enc_model[0], xq[0], params.fraction_bits);
    for (std::size_t k = 1; k < xq.size(); ++k) {
      l = he_add(pk, l, he_scalar_mul(pk, enc_model[k], xq[k], params.fraction_bits));
    }
    CubicBatch& b = positive ? positives : negatives;
    b.enc_l.push_back(std::move(l));
    b.masks.push_back(draw_cubic_mask(rng, params.kappa, params.fraction_bits, s));
  }

  Ciphertext acc = zero_at(pk, params.entropy_scale(), rng);
  auto fold = [&](const CubicBatch& b, CubicTarget target) {
    if (b.enc_l.empty()) return;
    const auto terms = run_masked_cubic(pk, b, {target}, peer, params, rng);
    for (const auto& t : terms[0]) acc = he_add(pk, acc, he_scalar_mul(pk, t, one, params.fraction_bits));
  };
  fold(positives, CubicTarget::kNegLogSigmoid);
  fold(negatives, CubicTarget::kNegLogOneMinusSigmoid);
  return acc;
}

Ciphertext compute_LL(const PaillierPublicKey& pk, const EncryptedDataset& data,
                      const LogRegModel& server_model, EvaluationPeer& peer,
                      const DisparityParams& params, Csprng& rng) {
  if (data.x.size() != data.y.size()) {
    throw Error(ErrorCode::kLengthMismatch, "compute_LL: row and label counts differ");
  }
  const int s = params.linear_scale();
  const std::size_t fb = static_cast<std::size_t>(params.fraction_bits);
  Ciphertext acc = zero_at(pk, params.entropy_scale(), rng);
  if (data.x.empty()) return acc;

  std::vector<BigInt> theta;
  for (double v : server_model.theta) theta.push_back(to_fixed(v, params));
  // theta_0 * 1 needs no secrecy; a trivial encryption of it at scale 2F.
  const Ciphertext bias = encrypt(pk, reduce(theta.at(0) * power_of_two(fb), pk.n), BigInt(1), s);

  CubicBatch batch;
  for (const auto& row : data.x) {
    if (row.size() + 1 != theta.size()) {
      throw Error(ErrorCode::kLengthMismatch, "compute_LL: feature count differs from model");
    }
    Ciphertext l = bias;
    for (std::size_t k = 0; k < row.size(); ++k) {
      l = he_add(pk, l, he_scalar_mul(pk, row[k], theta[k + 1], params.fraction_bits));
    }
    batch.enc_l.push_back(std::move(l));
    batch.masks.push_back(draw_cubic_mask(rng, params.kappa, params.fraction_bits, s));
  }

  std::vector<CubicTarget> targets{CubicTarget::kNegLogSigmoid};
  if (params.binary_ce) targets.push_back(CubicTarget::kNegLogOneMinusSigmoid);
  const auto h = run_masked_cubic(pk, batch, targets, peer, params, rng);

  OpenRequest open;
  for (std::size_t u = 0; u < data.x.size(); ++u) {
    for (std::size_t k = 0; k < targets.size(); ++k) {
      open.slots.push_back({static_cast<std::uint32_t>(u), k == 1});
      open.enc_h.push_back(h[k][u]);
    }
  }
  const OpenReply rep = peer.masked_open(open);
  const std::size_t m = open.slots.size();
  if (rep.h_plus_r.size() != m || rep.enc_r.size() != m || rep.enc_factor_r.size() != m) {
    throw Error(ErrorCode::kLengthMismatch, "masked open: reply shape differs from request");
  }

  if (params.verify_h) {
    std::vector<Ciphertext> c;
    std::vector<BigInt> claimed;
    for (std::size_t j = 0; j < m; ++j) {
      if (rep.enc_r[j].scale_exp != params.cubic_scale()) {
        throw Error(ErrorCode::kScaleMismatch, "masked open: Enc(r) scale");
      }
      check_ciphertext(pk, rep.enc_r[j].value);
      c.push_back(he_add(pk, open.enc_h[j], rep.enc_r[j]));
      claimed.push_back(reduce(rep.h_plus_r[j], pk.n));
    }
    PopkVerifier verifier(pk, std::move(c), std::move(claimed), rng, params.proof);
    if (!run_popk(verifier, peer.h_prover())) {
      throw Error(ErrorCode::kProofFailure, "masked open: decrypted h failed verification");
    }
  }

  const Ciphertext one = encrypt(pk, power_of_two(fb), BigInt(1), params.fraction_bits);
  for (std::size_t j = 0; j < m; ++j) {
    const OpenSlot& slot = open.slots[j];
    const Ciphertext& y = data.y[slot.sample];
    const Ciphertext factor = slot.complement ? he_sub(pk, one, y) : y;
    acc = he_add(pk, acc, masked_linear_open(pk, factor, rep.h_plus_r[j], params.cubic_scale(),
                                             rep.enc_factor_r[j]));
  }
  return acc;
}

Ciphertext compute_E(const PaillierPublicKey& pk, const Ciphertext& enc_ls,
                     const Ciphertext& enc_ll) {
  if (enc_ls.scale_exp != enc_ll.scale_exp) {
    throw Error(ErrorCode::kScaleMismatch, "compute_E: LS and LL scales differ");
  }
  return he_add(pk, enc_ls, enc_ll);
}

namespace {

long double snapped_linear(const LogRegModel& m, std::span<const double> x,
                           const DisparityParams& p) {
  if (x.size() + 1 != m.theta.size()) {
    throw Error(ErrorCode::kLengthMismatch, "plaintext entropy: feature count differs from model");
  }
  long double acc = snap_to_grid(m.theta[0], p);
  for (std::size_t k = 0; k < x.size(); ++k) {
    acc += static_cast<long double>(snap_to_grid(m.theta[k + 1], p)) * snap_to_grid(x[k], p);
  }
  return acc;
}

long double eval_cubic(const CubicPoly& c, long double x) {
  return c.s0 + x * (c.s1 + x * (c.s2 + x * c.s3));
}

double plaintext_loss(const LogRegModel& m, const Dataset& d, const DisparityParams& p) {
  if (d.x.size() != d.y.size()) {
    throw Error(ErrorCode::kLengthMismatch, "plaintext entropy: row and label counts differ");
  }
  const CubicPoly pos =
      FixedCubic::quantize(default_cubic(CubicTarget::kNegLogSigmoid), p.fraction_bits).as_real();
  const CubicPoly neg =
      FixedCubic::quantize(default_cubic(CubicTarget::kNegLogOneMinusSigmoid), p.fraction_bits)
          .as_real();
  long double acc = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const long double l = snapped_linear(m, d.x[i], p);
    if (d.y[i] == 1) {
      acc += eval_cubic(pos, l);
    } else if (p.binary_ce) {
      acc += eval_cubic(neg, l);
    }
  }
  return static_cast<double>(acc);
}

}  // namespace

double plaintext_LS(const LogRegModel& client_model, const Dataset& benchmark,
                    const DisparityParams& params) {
  return plaintext_loss(client_model, benchmark, params);
}

double plaintext_LL(const LogRegModel& server_model, const Dataset& local,
                    const DisparityParams& params) {
  return plaintext_loss(server_model, local, params);
}

double plaintext_E(const LogRegModel& client_model, const LogRegModel& server_model,
                   const Dataset& benchmark, const Dataset& local, const DisparityParams& params) {
  return plaintext_LS(client_model, benchmark, params) + plaintext_LL(server_model, local, params);
}

// --- Weights ----------------------------------------------------------------

std::vector<WeightRecord> compute_weights(std::span<const EntropyRecord> records,
                                          const WeightOptions& options) {
  if (records.empty()) throw Error(ErrorCode::kEmptyAliveSet, "compute_weights: no records");
  std::vector<WeightRecord> out;
  out.reserve(records.size());
  std::set<std::uint32_t> seen;
  for (const auto& r : records) {
    if (!seen.insert(r.user).second) {
      throw Error(ErrorCode::kInvalidArgument, "compute_weights: duplicate user " + std::to_string(r.user));
    }
    if (!std::isfinite(r.entropy)) {
      throw Error(ErrorCode::kDegenerateEntropy, "compute_weights: non-finite entropy");
    }
    WeightRecord w;
    w.user = r.user;
    w.entropy = r.entropy;
    w.samples = r.samples;
    if (r.entropy <= options.epsilon) {
      if (options.strict) {
        throw Error(ErrorCode::kDegenerateEntropy,
                    "compute_weights: entropy " + std::to_string(r.entropy) + " of user " +
                        std::to_string(r.user) + " is at or below the guard");
      }
      w.re = 1.0 / options.epsilon;
      w.clamped = true;
    } else {
      w.re = 1.0 / r.entropy;
    }
    out.push_back(w);
  }

  // Log domain: a_i = alpha RE_i can be far beyond exp()'s range.
  double a_max = -std::numeric_limits<double>::infinity();
  double b_max = -std::numeric_limits<double>::infinity();
  for (const auto& w : out) {
    a_max = std::max(a_max, options.alpha * w.re);
    if (w.samples > 0) b_max = std::max(b_max, std::log(static_cast<double>(w.samples)) + options.alpha * w.re);
  }
  if (!std::isfinite(b_max)) {
    throw Error(ErrorCode::kInvalidArgument, "compute_weights: every user has zero samples");
  }
  double c_sum = 0, w_sum = 0;
  for (const auto& w : out) {
    c_sum += std::exp(options.alpha * w.re - a_max);
    if (w.samples > 0) w_sum += std::exp(std::log(static_cast<double>(w.samples)) + options.alpha * w.re - b_max);
  }
  for (auto& w : out) {
    w.credibility = std::exp(options.alpha * w.re - a_max) / c_sum;
    w.omega = static_cast<double>(w.samples) * std::exp(options.alpha * w.re);
    w.log_omega = w.samples == 0 ? -std::numeric_limits<double>::infinity()
                                 : std::log(static_cast<double>(w.samples)) + options.alpha * w.re;
    w.weight = w.samples == 0
                   ? 0.0
                   : std::exp(std::log(static_cast<double>(w.samples)) + options.alpha * w.re - b_max) / w_sum;
  }
  return out;
}

std::map<std::uint32_t, double> renormalize_for_dropout(std::span<const WeightRecord> records,
                                                        std::span<const std::uint32_t> alive) {
  if (alive.empty()) throw Error(ErrorCode::kEmptyAliveSet, "renormalize: empty alive set");
  std::map<std::uint32_t, const WeightRecord*> by_user;
  for (const auto& r : records) by_user[r.user] = &r;
  double top = -std::numeric_limits<double>::infinity();
  for (std::uint32_t u : alive) {
    auto it = by_user.find(u);
    if (it == by_user.end()) {
      throw Error(ErrorCode::kInvalidArgument, "renormalize: no weight record for user " + std::to_string(u));
    }
    top = std::max(top, it->second->log_omega);
  }
  if (!std::isfinite(top)) throw Error(ErrorCode::kEmptyAliveSet, "renormalize: alive users carry no weight");
  double sum = 0;
  std::map<std::uint32_t, double> out;
  for (std::uint32_t u : alive) {
    const double v = std::exp(by_user[u]->log_omega - top);
    out[u] = v;
    sum += v;
  }
  for (auto& [u, w] : out) w /= sum;
  return out;
}

}  // namespace swagg
