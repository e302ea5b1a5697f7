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

#include "swagg/secagg.hpp"

#include <sodium.h>

#include <algorithm>
#include <string>

#include "swagg/error.hpp"

namespace swagg {
namespace {

constexpr std::string_view kPrgTag = "swagg/prg/v1";
constexpr std::string_view kViewTag = "swagg/alive-view/v1";

std::span<const std::uint8_t> as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

bool contains(const IdList& sorted, PartyId id) {
  return std::binary_search(sorted.begin(), sorted.end(), id);
}

IdList sorted_unique(std::span<const PartyId> ids) {
  IdList out(ids.begin(), ids.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void add_into(std::vector<BigInt>& acc, const std::vector<BigInt>& v, const BigInt& mod) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = reduce(acc[i] + v[i], mod);
}

void sub_into(std::vector<BigInt>& acc, const std::vector<BigInt>& v, const BigInt& mod) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = reduce(acc[i] - v[i], mod);
}

}  // namespace

BigInt draw_seed(Csprng& rng) { return rng.uniform_below(mersenne127()); }

std::vector<BigInt> prg_expand(const BigInt& seed, std::size_t length, const BigInt& modulus) {
  std::vector<BigInt> out;
  if (length == 0) return out;
  Bytes seed_bytes = to_fixed_bytes(seed, kSeedBytes);
  Csprng stream(sha256({as_bytes(kPrgTag), seed_bytes}));
  out.reserve(length);
  for (std::size_t i = 0; i < length; ++i) out.push_back(stream.uniform_below(modulus));
  return out;
}

Bytes serialize_seed_share(const SeedShare& s) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(s.kind));
  w.u32(s.owner.lo);
  w.u32(s.owner.hi);
  w.raw(serialize_share(s.share));
  return std::move(w).take();
}

SeedShare deserialize_seed_share(std::span<const std::uint8_t> bytes, std::size_t threshold) {
  ByteReader r(bytes);
  SeedShare s;
  std::uint8_t kind = r.u8();
  if (kind != 1 && kind != 2) throw Error(ErrorCode::kSerialization, "unknown seed-share kind");
  s.kind = static_cast<SeedKind>(kind);
  s.owner.lo = r.u32();
  s.owner.hi = r.u32();
  Bytes rest = r.raw(4 + share_value_width(mersenne127()));
  r.expect_done();
  s.share = deserialize_share(rest, threshold, mersenne127());
  return s;
}

Bytes serialize(const RevealRequest& req) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(req.self_seeds.size()));
  for (auto id : req.self_seeds) w.u32(id);
  w.u32(static_cast<std::uint32_t>(req.pairs.size()));
  for (const auto& p : req.pairs) {
    w.u32(p.lo);
    w.u32(p.hi);
  }
  w.u32(static_cast<std::uint32_t>(req.dropped.size()));
  for (auto id : req.dropped) w.u32(id);
  return std::move(w).take();
}

RevealRequest deserialize_reveal_request(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  RevealRequest req;
  for (std::uint32_t i = 0, n = r.u32(); i < n; ++i) req.self_seeds.push_back(r.u32());
  for (std::uint32_t i = 0, n = r.u32(); i < n; ++i) {
    PairKey p;
    p.lo = r.u32();
    p.hi = r.u32();
    req.pairs.push_back(p);
  }
  for (std::uint32_t i = 0, n = r.u32(); i < n; ++i) req.dropped.push_back(r.u32());
  r.expect_done();
  return req;
}

Bytes serialize(const RevealResponse& resp) {
  ByteWriter w;
  w.u32(resp.holder);
  w.u8(resp.refused ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(resp.shares.size()));
  for (const auto& s : resp.shares) w.raw(serialize_seed_share(s));
  return std::move(w).take();
}

RevealResponse deserialize_reveal_response(std::span<const std::uint8_t> bytes,
                                           std::size_t threshold) {
  ByteReader r(bytes);
  RevealResponse resp;
  resp.holder = r.u32();
  resp.refused = r.u8() != 0;
  const std::size_t width = 9 + 4 + share_value_width(mersenne127());
  for (std::uint32_t i = 0, n = r.u32(); i < n; ++i) {
    resp.shares.push_back(deserialize_seed_share(r.raw(width), threshold));
  }
  r.expect_done();
  return resp;
}

// --- SecAggUser -------------------------------------------------------------

SecAggUser::SecAggUser(PartyId id, std::size_t threshold, BigInt modulus, std::size_t length,
                       MaskOptions options)
    : id_(id),
      threshold_(threshold),
      modulus_(std::move(modulus)),
      length_(length),
      options_(options) {
  if (id_ == 0) throw Error(ErrorCode::kInvalidArgument, "user ids start at 1");
  if (threshold_ < 1) throw Error(ErrorCode::kInvalidArgument, "threshold must be positive");
  state_.user = id_;
}

Dealing SecAggUser::deal(std::span<const PartyId> u1, Csprng& rng) {
  const IdList holders = sorted_unique(u1);
  if (!contains(holders, id_)) {
    throw Error(ErrorCode::kProtocolOrder, "dealer is not among the share holders");
  }
  Dealing out;
  state_.self_seed = draw_seed(rng);
  auto add_shares = [&](SeedKind kind, PairKey owner, const BigInt& secret) {
    for (auto& s : share_at(secret, threshold_, holders, mersenne127(), rng)) {
      PartyId holder = s.index;
      out.shares[holder].push_back({kind, owner, std::move(s)});
    }
  };
  add_shares(SeedKind::kSelf, {id_, id_}, state_.self_seed);
  for (PartyId peer : holders) {
    if (peer <= id_) continue;
    BigInt seed = draw_seed(rng);
    state_.pairwise_seeds[peer] = seed;
    out.pair_seeds[peer] = seed;
    add_shares(SeedKind::kPair, {id_, peer}, seed);
  }
  return out;
}

void SecAggUser::accept_pair_seed(PartyId from, const BigInt& seed) {
  if (from >= id_) throw Error(ErrorCode::kProtocolOrder, "pair seeds come from the lower id");
  state_.pairwise_seeds[from] = seed;
}

void SecAggUser::accept_share(const SeedShare& s) {
  if (s.share.index != id_) {
    throw Error(ErrorCode::kInvalidArgument, "share addressed to another holder");
  }
  if (s.kind == SeedKind::kSelf) {
    self_shares_[s.owner.lo] = s.share.value;
  } else {
    pair_shares_[s.owner] = s.share.value;
  }
}

const MaskState& SecAggUser::build_masks() {
  const std::vector<BigInt> zeros(length_, BigInt(0));
  if (options_.zero_masks) {
    state_.self_mask = zeros;
    state_.pairwise_mask = zeros;
    state_.combined = zeros;
    built_ = true;
    return state_;
  }
  state_.self_mask = prg_expand(state_.self_seed, length_, modulus_);
  state_.pairwise_mask = zeros;
  for (const auto& [peer, seed] : state_.pairwise_seeds) {
    auto stream = prg_expand(seed, length_, modulus_);
    if (id_ < peer) {
      add_into(state_.pairwise_mask, stream, modulus_);
    } else {
      sub_into(state_.pairwise_mask, stream, modulus_);
    }
  }
  state_.combined = state_.self_mask;
  add_into(state_.combined, state_.pairwise_mask, modulus_);
  built_ = true;
  return state_;
}

std::vector<BigInt> SecAggUser::mask(std::span<const BigInt> model) const {
  if (!built_) throw Error(ErrorCode::kProtocolOrder, "masks not built");
  if (model.size() != length_) throw Error(ErrorCode::kLengthMismatch, "model length");
  std::vector<BigInt> y(model.begin(), model.end());
  for (std::size_t i = 0; i < length_; ++i) y[i] = reduce(y[i] + state_.combined[i], modulus_);
  return y;
}

RevealResponse SecAggUser::reveal(const RevealRequest& request) const {
  RevealResponse resp;
  resp.holder = id_;
  const IdList self = sorted_unique(request.self_seeds);
  const IdList dropped = sorted_unique(request.dropped);
  for (PartyId d : dropped) {
    if (contains(self, d)) {
      resp.refused = true;
      return resp;
    }
  }
  for (const auto& p : request.pairs) {
    if (!contains(dropped, p.lo) && !contains(dropped, p.hi)) {
      resp.refused = true;
      return resp;
    }
  }
  const std::size_t t = threshold_;
  for (PartyId u : self) {
    auto it = self_shares_.find(u);
    if (it == self_shares_.end()) continue;
    resp.shares.push_back({SeedKind::kSelf, {u, u}, {id_, it->second, t, mersenne127()}});
  }
  for (const auto& p : request.pairs) {
    auto it = pair_shares_.find(p);
    if (it == pair_shares_.end()) continue;
    resp.shares.push_back({SeedKind::kPair, p, {id_, it->second, t, mersenne127()}});
  }
  return resp;
}

// --- SecAggServer -----------------------------------------------------------

SecAggServer::SecAggServer(std::size_t threshold, BigInt modulus, std::size_t length,
                           MaskOptions options)
    : threshold_(threshold), modulus_(std::move(modulus)), length_(length), options_(options) {}

void SecAggServer::set_mask_holders(IdList u1) { u1_ = sorted_unique(u1); }

void SecAggServer::receive_masked(PartyId user, std::vector<BigInt> y) {
  if (closed_) throw Error(ErrorCode::kProtocolOrder, "upload after the round closed");
  if (!contains(u1_, user)) {
    throw Error(ErrorCode::kProtocolOrder, "upload from a user without masks");
  }
  if (y.size() != length_) throw Error(ErrorCode::kLengthMismatch, "masked model length");
  uploads_[user] = std::move(y);
}

IdList SecAggServer::close_uploads() {
  closed_ = true;
  u2_.clear();
  for (const auto& [id, _] : uploads_) u2_.push_back(id);
  if (u2_.size() < threshold_) {
    throw Error(ErrorCode::kAbortThreshold, std::to_string(u2_.size()) +
                                                " masked models received, threshold " +
                                                std::to_string(threshold_));
  }
  return u2_;
}

std::vector<BigInt> SecAggServer::masked_sum() const {
  std::vector<BigInt> y(length_, BigInt(0));
  for (PartyId u : u2_) add_into(y, uploads_.at(u), modulus_);
  return y;
}

RevealRequest SecAggServer::reveal_request() const {
  RevealRequest req;
  req.self_seeds = u2_;
  for (PartyId d : u1_) {
    if (contains(u2_, d)) continue;
    req.dropped.push_back(d);
    for (PartyId v : u2_) req.pairs.push_back(PairKey::of(d, v));
  }
  return req;
}

void SecAggServer::receive_reveal(const RevealResponse& r) { reveals_[r.holder] = r; }

const LagrangeBasis& SecAggServer::basis_for(const IdList& holders) {
  auto it = bases_.find(holders);
  if (it == bases_.end()) {
    it = bases_.emplace(holders, std::make_unique<LagrangeBasis>(holders, mersenne127())).first;
  }
  return *it->second;
}

std::vector<BigInt> SecAggServer::recover() {
  if (!closed_) throw Error(ErrorCode::kProtocolOrder, "recover before uploads closed");
  std::vector<BigInt> z = masked_sum();
  if (options_.zero_masks) return z;

  // Pool the answers: secret -> (holder -> share value), holders ascending.
  std::map<std::pair<SeedKind, PairKey>, std::map<PartyId, BigInt>> pool;
  std::size_t answering = 0;
  for (const auto& [holder, resp] : reveals_) {
    if (resp.refused) continue;
    ++answering;
    for (const auto& s : resp.shares) pool[{s.kind, s.owner}][s.share.index] = s.share.value;
  }
  const RevealRequest req = reveal_request();
  if (req.self_seeds.empty() && req.pairs.empty()) return z;
  if (answering < threshold_) {
    throw Error(ErrorCode::kInsufficientShares,
                std::to_string(answering) + " holders answered, threshold " +
                    std::to_string(threshold_));
  }
  auto reconstruct_seed = [&](SeedKind kind, PairKey owner) {
    const auto& shares = pool[{kind, owner}];
    if (shares.size() < threshold_) {
      throw Error(ErrorCode::kInsufficientShares,
                  "not enough shares for the seed of user " + std::to_string(owner.lo));
    }
    IdList holders;
    std::vector<BigInt> values;
    for (const auto& [holder, value] : shares) {
      holders.push_back(holder);
      values.push_back(value);
      if (holders.size() == threshold_) break;
    }
    ++seeds_reconstructed_;
    return basis_for(holders).interpolate(values);
  };

  for (PartyId u : req.self_seeds) {
    sub_into(z, prg_expand(reconstruct_seed(SeedKind::kSelf, {u, u}), length_, modulus_), modulus_);
  }
  // A survivor v added +PRG(s) for a higher-id dropped peer and -PRG(s) for a
  // lower-id one; undo whichever it did.
  for (PartyId d : req.dropped) {
    for (PartyId v : u2_) {
      PairKey key = PairKey::of(d, v);
      auto stream = prg_expand(reconstruct_seed(SeedKind::kPair, key), length_, modulus_);
      if (v < d) {
        sub_into(z, stream, modulus_);
      } else {
        add_into(z, stream, modulus_);
      }
    }
  }
  return z;
}

// --- In-process drivers -------------------------------------------------------

MaskGeneration mask_generation(std::span<const PartyId> users, std::size_t t,
                               const BigInt& modulus, std::size_t length, Csprng& rng,
                               std::span<const PartyId> drop_before_sharing, MaskOptions options) {
  const IdList all = sorted_unique(users);
  const IdList dropped = sorted_unique(drop_before_sharing);
  if (all.size() < t) {
    throw Error(ErrorCode::kAbortThreshold, "fewer users than the threshold");
  }
  MaskGeneration g;
  g.threshold = t;
  g.modulus = modulus;
  g.length = length;
  g.options = options;
  for (PartyId u : all) {
    if (!contains(dropped, u)) g.u1.push_back(u);
  }
  if (g.u1.size() < t) {
    throw Error(ErrorCode::kAbortThreshold, std::to_string(g.u1.size()) +
                                                " users completed sharing, threshold " +
                                                std::to_string(t));
  }
  for (PartyId u : g.u1) g.users.emplace(u, SecAggUser(u, t, modulus, length, options));
  for (PartyId u : g.u1) {
    Csprng user_rng = rng.fork("mask-generation", u);
    Dealing d = g.users.at(u).deal(g.u1, user_rng);
    for (const auto& [peer, seed] : d.pair_seeds) g.users.at(peer).accept_pair_seed(u, seed);
    for (const auto& [holder, shares] : d.shares) {
      for (const auto& s : shares) g.users.at(holder).accept_share(s);
    }
  }
  for (auto& [_, user] : g.users) user.build_masks();
  return g;
}

namespace {

SecAggServer server_with_uploads(const MaskGeneration& masks,
                                 const std::map<PartyId, std::vector<BigInt>>& models) {
  SecAggServer server(masks.threshold, masks.modulus, masks.length, masks.options);
  server.set_mask_holders(masks.u1);
  for (const auto& [id, model] : models) {
    auto it = masks.users.find(id);
    if (it == masks.users.end()) continue;
    server.receive_masked(id, it->second.mask(model));
  }
  return server;
}

}  // namespace

MaskedAggregate masked_model_aggregation(const std::map<PartyId, std::vector<BigInt>>& models,
                                         const MaskGeneration& masks) {
  SecAggServer server = server_with_uploads(masks, models);
  MaskedAggregate out;
  out.u2 = server.close_uploads();
  out.y = server.masked_sum();
  return out;
}

std::vector<BigInt> model_aggregation_recovery(const MaskedAggregate& aggregate,
                                               const MaskGeneration& masks,
                                               std::span<const PartyId> responders) {
  // Rebuild the server-side view from the aggregate: a single synthetic
  // upload carrying y keeps the sum identical.
  SecAggServer server(masks.threshold, masks.modulus, masks.length, masks.options);
  server.set_mask_holders(masks.u1);
  std::vector<BigInt> zero(masks.length, BigInt(0));
  for (std::size_t i = 0; i < aggregate.u2.size(); ++i) {
    server.receive_masked(aggregate.u2[i], i == 0 ? aggregate.y : zero);
  }
  if (!aggregate.u2.empty()) server.close_uploads();
  if (aggregate.u2.empty()) return zero;
  const RevealRequest req = server.reveal_request();
  for (PartyId h : sorted_unique(responders)) {
    auto it = masks.users.find(h);
    if (it == masks.users.end()) continue;
    server.receive_reveal(it->second.reveal(req));
  }
  return server.recover();
}

// --- Signatures ---------------------------------------------------------------

SigningKeypair Ed25519Signatures::keygen(Csprng& rng) {
  std::array<std::uint8_t, crypto_sign_SEEDBYTES> seed{};
  rng.fill(seed);
  SigningKeypair kp;
  kp.public_key.resize(crypto_sign_PUBLICKEYBYTES);
  kp.secret_key.resize(crypto_sign_SECRETKEYBYTES);
  crypto_sign_seed_keypair(kp.public_key.data(), kp.secret_key.data(), seed.data());
  sodium_memzero(seed.data(), seed.size());
  return kp;
}

Bytes Ed25519Signatures::sign(std::span<const std::uint8_t> message,
                              std::span<const std::uint8_t> secret_key) {
  if (secret_key.size() != crypto_sign_SECRETKEYBYTES) {
    throw Error(ErrorCode::kInvalidArgument, "ed25519 secret key size");
  }
  Bytes sig(crypto_sign_BYTES);
  crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(), secret_key.data());
  return sig;
}

bool Ed25519Signatures::verify(std::span<const std::uint8_t> message,
                               std::span<const std::uint8_t> public_key,
                               std::span<const std::uint8_t> signature) const {
  if (public_key.size() != crypto_sign_PUBLICKEYBYTES || signature.size() != crypto_sign_BYTES) {
    return false;
  }
  return crypto_sign_verify_detached(signature.data(), message.data(), message.size(),
                                     public_key.data()) == 0;
}

namespace {

Bytes transparent_public_key(std::span<const std::uint8_t> secret_key) {
  auto h = sha256({as_bytes("swagg/transparent-pk"), secret_key});
  return Bytes(h.begin(), h.begin() + 16);
}

Bytes transparent_tag(std::span<const std::uint8_t> public_key,
                      std::span<const std::uint8_t> message) {
  auto h = sha256({as_bytes("swagg/transparent-sig"), public_key, message});
  return Bytes(h.begin(), h.end());
}

}  // namespace

SigningKeypair TransparentSignatures::keygen(Csprng& rng) {
  SigningKeypair kp;
  kp.secret_key.resize(16);
  rng.fill(kp.secret_key);
  kp.public_key = transparent_public_key(kp.secret_key);
  return kp;
}

Bytes TransparentSignatures::sign(std::span<const std::uint8_t> message,
                                  std::span<const std::uint8_t> secret_key) {
  Bytes pk = transparent_public_key(secret_key);
  issued_.emplace(pk, Bytes(message.begin(), message.end()));
  return transparent_tag(pk, message);
}

bool TransparentSignatures::verify(std::span<const std::uint8_t> message,
                                   std::span<const std::uint8_t> public_key,
                                   std::span<const std::uint8_t> signature) const {
  Bytes pk(public_key.begin(), public_key.end());
  Bytes msg(message.begin(), message.end());
  if (!issued_.contains({pk, msg})) return false;
  Bytes tag = transparent_tag(public_key, message);
  return std::equal(tag.begin(), tag.end(), signature.begin(), signature.end());
}

// --- Consistency check --------------------------------------------------------

Bytes view_message(std::uint64_t round, std::span<const PartyId> view) {
  IdList ids = sorted_unique(view);
  ByteWriter w;
  w.raw(as_bytes(kViewTag));
  w.u32(static_cast<std::uint32_t>(round >> 32));
  w.u32(static_cast<std::uint32_t>(round));
  w.u32(static_cast<std::uint32_t>(ids.size()));
  for (auto id : ids) w.u32(id);
  return std::move(w).take();
}

Bytes serialize_ids(std::span<const PartyId> ids) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(ids.size()));
  for (auto id : ids) w.u32(id);
  return std::move(w).take();
}

namespace {

IdList read_ids(ByteReader& r) {
  IdList ids;
  for (std::uint32_t i = 0, n = r.u32(); i < n; ++i) ids.push_back(r.u32());
  return ids;
}

void write_view(ByteWriter& w, const SignedView& v) {
  w.u32(v.signer);
  w.raw(serialize_ids(v.view));
  w.blob(v.signature);
}

SignedView read_view(ByteReader& r) {
  SignedView v;
  v.signer = r.u32();
  v.view = read_ids(r);
  v.signature = r.blob();
  return v;
}

}  // namespace

IdList deserialize_ids(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  IdList ids = read_ids(r);
  r.expect_done();
  return ids;
}

Bytes serialize(const SignedView& v) {
  ByteWriter w;
  write_view(w, v);
  return std::move(w).take();
}

SignedView deserialize_signed_view(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  SignedView v = read_view(r);
  r.expect_done();
  return v;
}

Bytes serialize_bundle(std::span<const SignedView> bundle) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(bundle.size()));
  for (const auto& v : bundle) write_view(w, v);
  return std::move(w).take();
}

std::vector<SignedView> deserialize_bundle(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  std::vector<SignedView> out;
  for (std::uint32_t i = 0, n = r.u32(); i < n; ++i) out.push_back(read_view(r));
  r.expect_done();
  return out;
}

std::string_view to_string(ConsistencyFailure f) {
  switch (f) {
    case ConsistencyFailure::kNone: return "none";
    case ConsistencyFailure::kBadSignature: return "bad signature";
    case ConsistencyFailure::kViewMismatch: return "signed view differs from own view";
    case ConsistencyFailure::kTooFewSignatures: return "fewer than t signatures";
    case ConsistencyFailure::kNotSubset: return "signers outside own view";
  }
  return "unknown";
}

ConsistencyVerdict verify_signed_bundle(std::span<const PartyId> own_view,
                                        std::span<const SignedView> bundle, std::size_t t,
                                        const SignatureScheme& scheme,
                                        const std::map<PartyId, Bytes>& public_keys,
                                        std::uint64_t round) {
  const IdList own = sorted_unique(own_view);
  auto fail = [](ConsistencyFailure why) { return ConsistencyVerdict{false, why}; };
  std::set<PartyId> signers;
  for (const auto& sv : bundle) {
    auto pk = public_keys.find(sv.signer);
    if (pk == public_keys.end() ||
        !scheme.verify(view_message(round, sv.view), pk->second, sv.signature)) {
      return fail(ConsistencyFailure::kBadSignature);
    }
    if (sorted_unique(sv.view) != own) return fail(ConsistencyFailure::kViewMismatch);
    signers.insert(sv.signer);
  }
  if (signers.size() < t) return fail(ConsistencyFailure::kTooFewSignatures);
  for (PartyId s : signers) {
    if (!contains(own, s)) return fail(ConsistencyFailure::kNotSubset);
  }
  return {};
}

IdList view_shown_to(PartyId user, const IdList& alive, const Equivocation* eq) {
  IdList view = sorted_unique(alive);
  if (eq == nullptr) return view;
  if (!std::count(eq->victims.begin(), eq->victims.end(), user)) return view;
  view.erase(std::remove(view.begin(), view.end(), eq->hidden), view.end());
  return view;
}

std::vector<SignedView> bundle_for(std::span<const SignedView> collected,
                                   const IdList& shown_to_user, const Equivocation* eq) {
  if (eq == nullptr || eq->strategy == EquivocationStrategy::kForwardAll) {
    return {collected.begin(), collected.end()};
  }
  std::vector<SignedView> out;
  for (const auto& sv : collected) {
    if (sorted_unique(sv.view) == shown_to_user) out.push_back(sv);
  }
  return out;
}

ConsistencyOutcome consistency_check(const IdList& alive_list,
                                     const std::map<PartyId, SigningKeypair>& keys, std::size_t t,
                                     SignatureScheme& scheme, std::uint64_t round,
                                     const Equivocation* equivocation) {
  const IdList alive = sorted_unique(alive_list);
  std::map<PartyId, Bytes> public_keys;
  for (const auto& [id, kp] : keys) public_keys[id] = kp.public_key;

  std::map<PartyId, IdList> shown;
  std::vector<SignedView> collected;
  for (PartyId u : alive) {
    shown[u] = view_shown_to(u, alive, equivocation);
    collected.push_back({u, shown[u], scheme.sign(view_message(round, shown[u]), keys.at(u).secret_key)});
  }

  ConsistencyOutcome out;
  for (PartyId u : alive) {
    auto bundle = bundle_for(collected, shown[u], equivocation);
    auto verdict = verify_signed_bundle(shown[u], bundle, t, scheme, public_keys, round);
    out.pass = out.pass && verdict.pass;
    out.verdicts[u] = verdict;
  }
  if (alive.size() < t) out.pass = false;
  return out;
}

}  // namespace swagg
