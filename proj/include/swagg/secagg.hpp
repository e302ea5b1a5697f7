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

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "swagg/bigint.hpp"
#include "swagg/csprng.hpp"
#include "swagg/shamir.hpp"

namespace swagg {

using PartyId = std::uint32_t;
using IdList = std::vector<PartyId>;

/// Seeds are field elements of GF(2^127 - 1), serialized as 16 bytes.
inline constexpr std::size_t kSeedBytes = 16;

BigInt draw_seed(Csprng& rng);

/// Counter-mode expansion of a seed into `length` residues in [0, modulus).
std::vector<BigInt> prg_expand(const BigInt& seed, std::size_t length, const BigInt& modulus);

/// Unordered user pair, stored as (lo, hi).
struct PairKey {
  PartyId lo = 0;
  PartyId hi = 0;

  static PairKey of(PartyId a, PartyId b) { return a < b ? PairKey{a, b} : PairKey{b, a}; }
  auto operator<=>(const PairKey&) const = default;
};

enum class SeedKind : std::uint8_t { kSelf = 1, kPair = 2 };

// One holder's Shamir share of a self-mask seed b_u (owner.lo == owner.hi)
// or of a pairwise seed s_{lo,hi}.
struct SeedShare {
  SeedKind kind = SeedKind::kSelf;
  PairKey owner;
  ShamirShare share;
};

/// 1-byte kind, two 4-byte ids, then the 20-byte share.
Bytes serialize_seed_share(const SeedShare& s);
SeedShare deserialize_seed_share(std::span<const std::uint8_t> bytes, std::size_t threshold);

struct MaskState {
  PartyId user = 0;
  BigInt self_seed;
  std::map<PartyId, BigInt> pairwise_seeds;  // peer -> s_{min,max}
  std::vector<BigInt> self_mask;
  std::vector<BigInt> pairwise_mask;
  std::vector<BigInt> combined;
};

struct Dealing {
  /// Shares addressed to each holder, including the dealer itself.
  std::map<PartyId, std::vector<SeedShare>> shares;
  /// Pairwise seeds for every higher-id peer, sent to that peer directly.
  std::map<PartyId, BigInt> pair_seeds;
};

// What the server asks each surviving holder for during recovery.
struct RevealRequest {
  IdList self_seeds;          // b_u for every u whose masked model is in the sum
  std::vector<PairKey> pairs;  // s_{u,v} for dropped u and surviving v
  IdList dropped;             // users the pairs are requested on behalf of
};

struct RevealResponse {
  PartyId holder = 0;
  bool refused = false;
  std::vector<SeedShare> shares;
};

Bytes serialize(const RevealRequest& r);
RevealRequest deserialize_reveal_request(std::span<const std::uint8_t> bytes);
Bytes serialize(const RevealResponse& r);
RevealResponse deserialize_reveal_response(std::span<const std::uint8_t> bytes,
                                           std::size_t threshold);

struct MaskOptions {
  /// Test hook: every mask is the zero vector.
  bool zero_masks = false;
};

// Client side of mask generation, masked upload and share reveal.
class SecAggUser {
 public:
  SecAggUser(PartyId id, std::size_t threshold, BigInt modulus, std::size_t length,
             MaskOptions options = {});

  /// Draws b_u and s_{u,v} for each higher-id peer in `u1`, and shares every
  /// seed t-out-of-|u1| at x = holder id.
  Dealing deal(std::span<const PartyId> u1, Csprng& rng);

  void accept_pair_seed(PartyId from, const BigInt& seed);
  void accept_share(const SeedShare& s);

  /// R = PRG(b_u) + sum_{v>u} PRG(s_uv) - sum_{v<u} PRG(s_vu) over the peers
  /// whose seeds were agreed.
  const MaskState& build_masks();
  const MaskState& masks() const { return state_; }

  /// (model + R) mod modulus.
  std::vector<BigInt> mask(std::span<const BigInt> model) const;

  /// Refuses when asked for both the self seed and pair seeds of the same user.
  RevealResponse reveal(const RevealRequest& request) const;

  PartyId id() const { return id_; }
  std::size_t threshold() const { return threshold_; }
  const BigInt& modulus() const { return modulus_; }
  std::size_t length() const { return length_; }

 private:
  PartyId id_;
  std::size_t threshold_;
  BigInt modulus_;
  std::size_t length_;
  MaskOptions options_;
  MaskState state_;
  bool built_ = false;
  std::map<PartyId, BigInt> self_shares_;  // owner -> my share value
  std::map<PairKey, BigInt> pair_shares_;
};

// Server side of masked aggregation and recovery.
class SecAggServer {
 public:
  SecAggServer(std::size_t threshold, BigInt modulus, std::size_t length,
               MaskOptions options = {});

  /// Users that completed mask generation.
  void set_mask_holders(IdList u1);
  void receive_masked(PartyId user, std::vector<BigInt> y);

  /// Users whose masked model arrived. Throws kAbortThreshold below t.
  IdList close_uploads();
  /// Sum of the received masked models mod the modulus.
  std::vector<BigInt> masked_sum() const;

  RevealRequest reveal_request() const;
  void receive_reveal(const RevealResponse& r);

  /// z = y - sum PRG(b_u) -/+ PRG(s) of dropped pairs. Throws
  /// kInsufficientShares when fewer than t holders answered.
  std::vector<BigInt> recover();

  const IdList& mask_holders() const { return u1_; }
  const IdList& uploaders() const { return u2_; }
  std::size_t seeds_reconstructed() const { return seeds_reconstructed_; }

 private:
  const LagrangeBasis& basis_for(const IdList& holders);

  std::size_t threshold_;
  BigInt modulus_;
  std::size_t length_;
  MaskOptions options_;
  IdList u1_;
  IdList u2_;
  bool closed_ = false;
  std::map<PartyId, std::vector<BigInt>> uploads_;
  std::map<PartyId, RevealResponse> reveals_;
  std::map<IdList, std::unique_ptr<LagrangeBasis>> bases_;
  std::size_t seeds_reconstructed_ = 0;
};

// In-process drivers for the three sub-protocols.

struct MaskGeneration {
  std::map<PartyId, SecAggUser> users;  // every user that completed sharing
  IdList u1;
  std::size_t threshold = 0;
  BigInt modulus;
  std::size_t length = 0;
  MaskOptions options;
};

/// Users in `drop_before_sharing` vanish before dealing. Throws
/// kAbortThreshold if fewer than t remain.
MaskGeneration mask_generation(std::span<const PartyId> users, std::size_t t,
                               const BigInt& modulus, std::size_t length, Csprng& rng,
                               std::span<const PartyId> drop_before_sharing = {},
                               MaskOptions options = {});

struct MaskedAggregate {
  std::vector<BigInt> y;
  IdList u2;
};

/// Every user of u1 with an entry in `models` uploads. Throws
/// kAbortThreshold if fewer than t uploads arrive.
MaskedAggregate masked_model_aggregation(const std::map<PartyId, std::vector<BigInt>>& models,
                                         const MaskGeneration& masks);

/// Holders in `responders` answer the reveal request.
std::vector<BigInt> model_aggregation_recovery(const MaskedAggregate& aggregate,
                                               const MaskGeneration& masks,
                                               std::span<const PartyId> responders);

// --- Signatures and the alive-list consistency check -----------------------

struct SigningKeypair {
  Bytes public_key;
  Bytes secret_key;
};

class SignatureScheme {
 public:
  virtual ~SignatureScheme() = default;
  virtual SigningKeypair keygen(Csprng& rng) = 0;
  virtual Bytes sign(std::span<const std::uint8_t> message,
                     std::span<const std::uint8_t> secret_key) = 0;
  virtual bool verify(std::span<const std::uint8_t> message,
                      std::span<const std::uint8_t> public_key,
                      std::span<const std::uint8_t> signature) const = 0;
  virtual std::string name() const = 0;
};

/// Ed25519 via libsodium; keys are derived from the rng for replayability.
class Ed25519Signatures : public SignatureScheme {
 public:
  SigningKeypair keygen(Csprng& rng) override;
  Bytes sign(std::span<const std::uint8_t> message,
             std::span<const std::uint8_t> secret_key) override;
  bool verify(std::span<const std::uint8_t> message, std::span<const std::uint8_t> public_key,
              std::span<const std::uint8_t> signature) const override;
  std::string name() const override { return "ed25519"; }
};

// Test double: a signature is valid only if sign() was called with the
// matching secret key on that exact message. Everything is inspectable.
class TransparentSignatures : public SignatureScheme {
 public:
  SigningKeypair keygen(Csprng& rng) override;
  Bytes sign(std::span<const std::uint8_t> message,
             std::span<const std::uint8_t> secret_key) override;
  bool verify(std::span<const std::uint8_t> message, std::span<const std::uint8_t> public_key,
              std::span<const std::uint8_t> signature) const override;
  std::string name() const override { return "transparent"; }

  std::size_t signatures_issued() const { return issued_.size(); }

 private:
  std::set<std::pair<Bytes, Bytes>> issued_;  // (public key, message)
};

struct SignedView {
  PartyId signer = 0;
  IdList view;
  Bytes signature;
};

/// Canonical bytes a user signs: context tag, round, sorted ids.
Bytes view_message(std::uint64_t round, std::span<const PartyId> view);

Bytes serialize(const SignedView& v);
SignedView deserialize_signed_view(std::span<const std::uint8_t> bytes);
Bytes serialize_bundle(std::span<const SignedView> bundle);
std::vector<SignedView> deserialize_bundle(std::span<const std::uint8_t> bytes);
Bytes serialize_ids(std::span<const PartyId> ids);
IdList deserialize_ids(std::span<const std::uint8_t> bytes);

enum class ConsistencyFailure {
  kNone,
  kBadSignature,
  kViewMismatch,
  kTooFewSignatures,
  kNotSubset,
};

std::string_view to_string(ConsistencyFailure f);

struct ConsistencyVerdict {
  bool pass = true;
  ConsistencyFailure reason = ConsistencyFailure::kNone;
};

/// A user's check of the bundle the server forwarded: every signature valid
/// and on the user's own view, at least t signers, signers within the view.
ConsistencyVerdict verify_signed_bundle(std::span<const PartyId> own_view,
                                        std::span<const SignedView> bundle, std::size_t t,
                                        const SignatureScheme& scheme,
                                        const std::map<PartyId, Bytes>& public_keys,
                                        std::uint64_t round);

enum class EquivocationStrategy {
  kForwardAll,           // forward every signed view to everyone
  kForwardMatchingOnly,  // forward each user only signatures on its own view
};

// A scripted server that hides `hidden` from the views shown to `victims`.
struct Equivocation {
  IdList victims;
  PartyId hidden = 0;
  EquivocationStrategy strategy = EquivocationStrategy::kForwardAll;
};

/// The view a possibly equivocating server shows `user`.
IdList view_shown_to(PartyId user, const IdList& alive, const Equivocation* eq);

/// The bundle a possibly equivocating server forwards to `user`.
std::vector<SignedView> bundle_for(std::span<const SignedView> collected,
                                   const IdList& shown_to_user, const Equivocation* eq);

struct ConsistencyOutcome {
  bool pass = true;
  std::map<PartyId, ConsistencyVerdict> verdicts;
};

/// Runs the whole check in-process for the users of `alive_list`.
ConsistencyOutcome consistency_check(const IdList& alive_list,
                                     const std::map<PartyId, SigningKeypair>& keys, std::size_t t,
                                     SignatureScheme& scheme, std::uint64_t round = 0,
                                     const Equivocation* equivocation = nullptr);

}  // namespace swagg
