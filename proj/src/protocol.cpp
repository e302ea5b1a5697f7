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

#include "swagg/protocol.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "swagg/fixedpoint.hpp"
#include "swagg/shamir.hpp"

namespace swagg {

// --- Tolerance ----------------------------------------------------------------

std::size_t minimum_threshold(std::size_t n) { return 2 * n / 3 + 1; }

std::size_t max_adversaries(std::size_t n) { return n == 0 ? 0 : (n + 2) / 3 - 1; }

ToleranceCheck validate_tolerance(std::size_t n, std::size_t t, std::size_t n_adversaries) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "validate_tolerance: n must be positive");
  ToleranceCheck c;
  c.min_threshold = minimum_threshold(n);
  c.max_adversaries = max_adversaries(n);
  if (n_adversaries > c.max_adversaries) {
    c.ok = false;
    c.violation = std::to_string(n_adversaries) + " adversaries exceed ceil(n/3)-1 = " +
                  std::to_string(c.max_adversaries);
  } else if (t < c.min_threshold) {
    c.ok = false;
    c.violation = "threshold " + std::to_string(t) + " is below floor(2n/3)+1 = " +
                  std::to_string(c.min_threshold);
  } else if (t > n) {
    c.ok = false;
    c.violation = "threshold " + std::to_string(t) + " exceeds n = " + std::to_string(n);
  }
  return c;
}

void require_tolerance(std::size_t n, std::size_t t, std::size_t n_adversaries) {
  const ToleranceCheck c = validate_tolerance(n, t, n_adversaries);
  if (!c.ok) throw Error(ErrorCode::kToleranceViolation, c.violation);
}

// --- Names --------------------------------------------------------------------

std::string_view to_string(DropPoint p) {
  switch (p) {
    case DropPoint::kBeforeSharing: return "before_sharing";
    case DropPoint::kBeforeMaskUpload: return "before_mask_upload";
    case DropPoint::kBeforeModelUpload: return "before_model_upload";
    case DropPoint::kDuringPoKE: return "during_poke";
    case DropPoint::kBeforeMaskedUpload: return "before_masked_upload";
    case DropPoint::kDuringPoKM: return "during_pokm";
    case DropPoint::kBeforeReveal: return "before_reveal";
  }
  return "?";
}

std::string_view to_string(AdversaryBehavior b) {
  switch (b) {
    case AdversaryBehavior::kFraudulentEntropy: return "fraudulent_E_decryption";
    case AdversaryBehavior::kFraudulentModel: return "fraudulent_weighted_model";
    case AdversaryBehavior::kInconsistentView: return "inconsistent_dropout_view";
  }
  return "?";
}

AdversaryBehavior parse_adversary_behavior(std::string_view s) {
  if (s == "fraudulent_E_decryption" || s == "entropy") return AdversaryBehavior::kFraudulentEntropy;
  if (s == "fraudulent_weighted_model" || s == "model") return AdversaryBehavior::kFraudulentModel;
  if (s == "inconsistent_dropout_view" || s == "view") return AdversaryBehavior::kInconsistentView;
  throw Error(ErrorCode::kParse, "unknown adversary behavior '" + std::string(s) + "'");
}

// --- Sizing -------------------------------------------------------------------

std::size_t aggregation_ring_bits(const ProtocolConfig& c) {
  const auto& p = c.disparity;
  std::size_t client_bits = 0;
  while ((std::size_t{1} << client_bits) < std::max<std::size_t>(c.n_clients, 2)) ++client_bits;
  const std::size_t payload = static_cast<std::size_t>(kWeightIntegerBits + p.fraction_bits +
                                                       p.integer_bits + p.fraction_bits);
  const std::size_t bits = payload + client_bits + static_cast<std::size_t>(p.kappa) + 1;
  return (bits + 63) / 64 * 64;
}

std::size_t minimum_key_bits(const ProtocolConfig& c) {
  const auto& p = c.disparity;
  // E carries the loss sums at scale 8F; the lifted masked model must stay
  // below n/2.
  const std::size_t entropy = static_cast<std::size_t>(p.entropy_scale() + p.integer_bits) + 12;
  const std::size_t lift = aggregation_ring_bits(c) + 2;
  return std::max(entropy, lift);
}

namespace {

bool is_client_behavior(AdversaryBehavior b) {
  return b == AdversaryBehavior::kFraudulentEntropy || b == AdversaryBehavior::kFraudulentModel;
}

std::size_t count_client_adversaries(const ProtocolConfig& c) {
  std::set<PartyId> ids;
  for (const auto& a : c.adversaries) {
    if (is_client_behavior(a.behavior)) ids.insert(a.target);
  }
  return ids.size();
}

}  // namespace

void validate_config(const ProtocolConfig& c) {
  if (c.n_clients == 0) throw Error(ErrorCode::kInvalidArgument, "protocol: no clients");
  require_tolerance(c.n_clients, c.effective_threshold(), count_client_adversaries(c));
  if (c.key_bits < minimum_key_bits(c)) {
    throw Error(ErrorCode::kInvalidArgument,
                "protocol: key_bits " + std::to_string(c.key_bits) + " below the minimum " +
                    std::to_string(minimum_key_bits(c)));
  }
  for (double r : {c.dropout_phase1, c.dropout_phase2}) {
    if (!(r >= 0.0 && r <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "protocol: dropout fraction outside [0, 1]");
    }
  }
  auto check_id = [&](PartyId id, const char* what) {
    if (id < 1 || id > c.n_clients) {
      throw Error(ErrorCode::kInvalidArgument,
                  std::string("protocol: ") + what + " names unknown client " + std::to_string(id));
    }
  };
  for (const auto& [id, _] : c.scripted_drops) check_id(id, "dropout schedule");
  for (const auto& a : c.adversaries) {
    check_id(a.target, "adversary script");
    if (a.hidden != 0) check_id(a.hidden, "adversary script");
  }
  if (c.weights.alpha < 0 || !std::isfinite(c.weights.alpha)) {
    throw Error(ErrorCode::kInvalidArgument, "protocol: alpha must be finite and non-negative");
  }
}

// --- Wire helpers ---------------------------------------------------------------

namespace {

Bytes serialize_bigints(std::span<const BigInt> v) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(v.size()));
  for (const auto& x : v) w.big(x);
  return std::move(w).take();
}

std::vector<BigInt> deserialize_bigints(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const std::uint32_t n = r.u32();
  std::vector<BigInt> out;
  for (std::uint32_t i = 0; i < n; ++i) out.push_back(r.big());
  r.expect_done();
  return out;
}

void write_signed(ByteWriter& w, const BigInt& v) {
  w.u8(v < 0 ? 1 : 0);
  w.big(abs(v));
}

BigInt read_signed(ByteReader& r) {
  const std::uint8_t neg = r.u8();
  BigInt v = r.big();
  return neg ? BigInt(-v) : v;
}

struct TableEntry {
  PartyId user = 0;
  BigInt entropy;  // signed, scale 8F
  std::uint32_t samples = 0;
};

Bytes serialize_table(const std::vector<TableEntry>& t) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(t.size()));
  for (const auto& e : t) {
    w.u32(e.user);
    write_signed(w, e.entropy);
    w.u32(e.samples);
  }
  return std::move(w).take();
}

std::vector<TableEntry> deserialize_table(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const std::uint32_t n = r.u32();
  std::vector<TableEntry> out(n);
  for (auto& e : out) {
    e.user = r.u32();
    e.entropy = read_signed(r);
    e.samples = r.u32();
  }
  r.expect_done();
  return out;
}

Bytes serialize_share_list(const std::vector<SeedShare>& shares) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(shares.size()));
  for (const auto& s : shares) w.blob(serialize_seed_share(s));
  return std::move(w).take();
}

std::vector<SeedShare> deserialize_share_list(std::span<const std::uint8_t> bytes, std::size_t t) {
  ByteReader r(bytes);
  const std::uint32_t n = r.u32();
  std::vector<SeedShare> out;
  for (std::uint32_t i = 0; i < n; ++i) out.push_back(deserialize_seed_share(r.blob(), t));
  r.expect_done();
  return out;
}

Bytes serialize_key_table(const std::map<PartyId, Bytes>& keys) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(keys.size()));
  for (const auto& [id, k] : keys) {
    w.u32(id);
    w.blob(k);
  }
  return std::move(w).take();
}

std::map<PartyId, Bytes> deserialize_key_table(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const std::uint32_t n = r.u32();
  std::map<PartyId, Bytes> out;
  for (std::uint32_t i = 0; i < n; ++i) {
    const PartyId id = r.u32();
    out[id] = r.blob();
  }
  r.expect_done();
  return out;
}

/// Common power-of-two divisor that keeps every W below 2^(24 + F). Zero
/// unless some omega reaches 2^24; it cancels in the final division.
int weight_shift(std::span<const WeightRecord> records) {
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& w : records) top = std::max(top, w.log_omega);
  if (!std::isfinite(top)) return 0;
  const double bits = top / std::log(2.0);
  if (bits < kWeightIntegerBits - 1) return 0;
  return static_cast<int>(std::ceil(bits)) - (kWeightIntegerBits - 1);
}

/// round(omega 2^(F - shift)) from the log-domain weight.
BigInt integer_weight(const WeightRecord& w, int fraction_bits, int shift) {
  if (!std::isfinite(w.log_omega)) return BigInt(0);
  const double log2_omega = w.log_omega / std::log(2.0) - shift;
  if (log2_omega >= kWeightIntegerBits) {
    throw Error(ErrorCode::kOverflow, "weight of user " + std::to_string(w.user) +
                                          " exceeds 2^" + std::to_string(kWeightIntegerBits));
  }
  const double scaled = std::exp2(log2_omega + fraction_bits);
  return BigInt(std::round(scaled));
}

// A client went offline in the middle of an exchange.
struct ClientOffline {
  PartyId id;
};

}  // namespace

// --- Parties --------------------------------------------------------------------

namespace {

struct Client {
  PartyId id = 0;
  Dataset data;
  DisparityParams params;
  Csprng base_rng{std::uint64_t{0}};
  PaillierKeypair keys;
  SigningKeypair signing;
  std::map<PartyId, Bytes> peer_keys;
  LogRegModel global;

  // Per-round state.
  Csprng rng{std::uint64_t{0}};
  std::optional<SecAggUser> secagg;
  IdList u1;
  LogRegModel local;
  std::vector<BigInt> model_fixed;  // theta at scale F, signed
  std::unique_ptr<LocalEvaluationPeer> eval;
  std::optional<PopkProver> prover;
  BigInt weight;
  bool cheat_entropy = false;
  bool cheat_model = false;
  IdList view;
  std::uint32_t round = 0;
  std::optional<ConsistencyVerdict> verdict;
};

}  // namespace

struct ProtocolRun::Impl {
  ProtocolConfig config;
  std::size_t t = 0;
  std::size_t dim = 0;
  BigInt ring;  // aggregation modulus Q
  Dataset benchmark;
  Csprng master;
  Transcript transcript;
  MessageBus bus;
  StepClock clock;
  Ed25519Signatures signatures;
  std::map<PartyId, std::unique_ptr<Client>> clients;

  // Server state.
  bool setup_done = false;
  std::map<PartyId, PaillierPublicKey> client_pk;
  std::map<PartyId, Bytes> client_sign_keys;
  std::map<PartyId, EncryptedDataset> stored;
  LogRegModel global;
  bool have_global = false;
  std::uint32_t rounds = 0;

  // Per-round state.
  std::set<PartyId> offline;
  std::map<PartyId, DropPoint> drops;
  RoundResult* result = nullptr;
  std::map<Step, std::set<PartyId>> active_users;

  Impl(ProtocolConfig c, std::vector<Dataset> data, Dataset bench)
      : config(std::move(c)),
        benchmark(std::move(bench)),
        master(config.seed),
        bus(transcript, master.fork("bus").key()) {
    validate_config(config);
    if (data.size() != config.n_clients) {
      throw Error(ErrorCode::kInvalidArgument, "protocol: expected " +
                                                   std::to_string(config.n_clients) +
                                                   " client datasets, got " +
                                                   std::to_string(data.size()));
    }
    if (benchmark.size() == 0) {
      throw Error(ErrorCode::kInvalidArgument, "protocol: empty benchmark dataset");
    }
    dim = benchmark.features() + 1;
    for (const auto& d : data) {
      if (d.size() > 0 && d.features() + 1 != dim) {
        throw Error(ErrorCode::kLengthMismatch, "protocol: client feature count differs from benchmark");
      }
    }
    t = config.effective_threshold();
    ring = power_of_two(aggregation_ring_bits(config));
    global.theta.assign(dim, 0.0);
    for (std::size_t i = 0; i < data.size(); ++i) {
      auto c = std::make_unique<Client>();
      c->id = static_cast<PartyId>(i + 1);
      c->data = std::move(data[i]);
      c->params = config.disparity;
      c->base_rng = master.fork("client", c->id);
      c->global = global;
      clients.emplace(c->id, std::move(c));
    }
  }

  Client& client(PartyId id) { return *clients.at(id); }
  bool online(PartyId id) const { return !offline.count(id); }

  // --- Messaging ---

  void send_to_client(Step step, PartyId to, MessageType type, Bytes payload) {
    bus.send(step, kServerId, to, type, std::move(payload));
    if (!online(to)) return;
    active_users[step].insert(to);
    ScopedTimer timer(clock, step, true);
    Bytes got = bus.receive(kServerId, to, type);
    handle(client(to), step, type, got);
  }

  std::optional<Bytes> from_client(PartyId from, MessageType type) {
    return bus.try_receive(from, kServerId, type);
  }

  Bytes expect_from_client(PartyId from, MessageType type) {
    auto got = from_client(from, type);
    if (!got) throw ClientOffline{from};
    return std::move(*got);
  }

  void client_send(Step step, Client& c, PartyId to, MessageType type, Bytes payload) {
    bus.send(step, c.id, to, type, std::move(payload));
  }

  /// Marks `id` offline if its schedule says so at `point`.
  bool drops_at(PartyId id, DropPoint point) {
    auto it = drops.find(id);
    if (it == drops.end() || it->second != point || !online(id)) return false;
    offline.insert(id);
    bus.purge(id);
    result->dropped.push_back(id);
    return true;
  }

  // --- Client message handling ---

  void handle(Client& c, Step step, MessageType type, const Bytes& payload) {
    const auto& pk = c.keys.pub;
    const auto& sk = c.keys.sec;
    switch (type) {
      case MessageType::kSigningKey:
        c.peer_keys = deserialize_key_table(payload);
        return;
      case MessageType::kAliveList:
        if (step == Step::kInit) {
          client_deal(c, deserialize_ids(payload));
        } else {
          client_sign_view(c, deserialize_ids(payload));
        }
        return;
      case MessageType::kEncZ: {
        const auto reply = c.eval->masked_cubic(deserialize_cubic_request(payload, c.params));
        client_send(step, c, kServerId, MessageType::kEncZ2Sigma, serialize(reply));
        return;
      }
      case MessageType::kEncH: {
        const auto reply = c.eval->masked_open(deserialize_open_request(payload, c.params));
        client_send(step, c, kServerId, MessageType::kHPlusR, serialize(reply));
        return;
      }
      case MessageType::kProofBlinded: {
        const auto blinded = deserialize_bigints(payload);
        std::vector<BigInt> a;
        if (step == Step::kCompE) {
          a = c.eval->h_prover().commit(blinded);
        } else {
          c.prover.emplace(pk, sk, c.rng, c.params.proof);
          a = c.prover->commit(blinded);
        }
        client_send(step, c, kServerId, MessageType::kProofCommit, serialize_bigints(a));
        return;
      }
      case MessageType::kProofChallenge: {
        const auto e = deserialize_bigints(payload);
        std::vector<BigInt> z;
        if (step == Step::kCompE) {
          z = c.eval->h_prover().respond(e);
        } else {
          if (!c.prover) throw Error(ErrorCode::kProtocolOrder, "client: challenge before commit");
          z = c.prover->respond(e);
          c.prover.reset();
        }
        client_send(step, c, kServerId, MessageType::kProofResponse, serialize_bigints(z));
        return;
      }
      case MessageType::kEncE: {
        const Ciphertext enc_e = deserialize_ciphertext(payload, c.params.entropy_scale());
        check_ciphertext(pk, enc_e.value);
        BigInt e = decrypt(sk, pk, enc_e);
        if (c.cheat_entropy) {
          e = reduce(e - power_of_two(static_cast<std::size_t>(c.params.entropy_scale() - 1)), pk.n);
        }
        client_send(step, c, kServerId, MessageType::kEntropyClaim, serialize_bigints({{e}}));
        return;
      }
      case MessageType::kEntropyTable: {
        std::vector<EntropyRecord> records;
        for (const auto& e : deserialize_table(payload)) {
          records.push_back({e.user, scaled_to_double(e.entropy, c.params.entropy_scale()), e.samples});
        }
        const auto weights = compute_weights(records, config.weights);
        const int shift = weight_shift(weights);
        for (const auto& w : weights) {
          if (w.user == c.id) c.weight = integer_weight(w, c.params.fraction_bits, shift);
        }
        return;
      }
      case MessageType::kViewBundle: {
        const auto bundle = deserialize_bundle(payload);
        c.verdict = verify_signed_bundle(c.view, bundle, t, signatures, c.peer_keys, c.round);
        return;
      }
      case MessageType::kRevealRequest: {
        const auto req = deserialize_reveal_request(payload);
        if (c.verdict && !c.verdict->pass) return;
        client_send(step, c, kServerId, MessageType::kRevealResponse, serialize(c.secagg->reveal(req)));
        return;
      }
      case MessageType::kFinalModel: {
        const auto v = deserialize_bigints(payload);
        c.global.theta.clear();
        for (const auto& x : v) {
          c.global.theta.push_back(scaled_to_double(centered(x, ring), c.params.fraction_bits));
        }
        return;
      }
      default:
        throw Error(ErrorCode::kProtocolOrder,
                    "client: unexpected " + std::string(to_string(type)) + " from the server");
    }
  }

  void client_deal(Client& c, IdList u1) {
    c.u1 = u1;
    c.secagg.emplace(c.id, t, ring, dim);
    Csprng deal_rng = c.rng.fork("deal");
    Dealing d = c.secagg->deal(u1, deal_rng);
    for (auto& [holder, shares] : d.shares) {
      if (holder == c.id) {
        for (const auto& s : shares) c.secagg->accept_share(s);
      } else {
        client_send(Step::kInit, c, holder, MessageType::kSeedShares, serialize_share_list(shares));
      }
    }
    for (const auto& [peer, seed] : d.pair_seeds) {
      client_send(Step::kInit, c, peer, MessageType::kPairSeed, serialize_bigints({{seed}}));
    }
  }

  void client_collect_shares(Client& c) {
    for (PartyId dealer : c.u1) {
      if (dealer == c.id) continue;
      for (const auto& s :
           deserialize_share_list(bus.receive(dealer, c.id, MessageType::kSeedShares), t)) {
        c.secagg->accept_share(s);
      }
      if (dealer < c.id) {
        const auto seed = deserialize_bigints(bus.receive(dealer, c.id, MessageType::kPairSeed));
        c.secagg->accept_pair_seed(dealer, seed.at(0));
      }
    }
    c.secagg->build_masks();
  }

  void client_sign_view(Client& c, IdList view) {
    c.view = std::move(view);
    const Bytes msg = view_message(c.round, c.view);
    SignedView sv{c.id, c.view, signatures.sign(msg, c.signing.secret_key)};
    client_send(Step::kWAgg, c, kServerId, MessageType::kSignedView, serialize(sv));
  }

  void client_train(Client& c) {
    if (c.data.size() == 0) {
      c.local = c.global;
    } else {
      Csprng shuffle = c.rng.fork("train");
      c.local = train_from(c.global, c.data, config.training, &shuffle);
    }
    c.model_fixed.clear();
    for (double v : c.local.theta) c.model_fixed.push_back(to_fixed(v, c.params));
  }

  // --- Setup ---

  void setup() {
    if (setup_done) throw Error(ErrorCode::kDuplicateSetup, "setup already ran");
    timed(Step::kSetup, [&] { setup_body(); });
    setup_done = true;
  }

  void setup_body() {
    for (auto& [id, cp] : clients) {
      Client& c = *cp;
      ScopedTimer timer(clock, Step::kSetup, true);
      active_users[Step::kSetup].insert(id);
      Csprng key_rng = c.base_rng.fork("paillier");
      c.keys = generate_keypair(config.key_bits, key_rng);
      Csprng sign_rng = c.base_rng.fork("signing");
      c.signing = signatures.keygen(sign_rng);
      Csprng enc_rng = c.base_rng.fork("dataset");
      const EncryptedDataset enc = encrypt_dataset(c.keys.pub, c.data, c.params, enc_rng);
      client_send(Step::kSetup, c, kServerId, MessageType::kPublicKey, serialize(c.keys.pub));
      client_send(Step::kSetup, c, kServerId, MessageType::kSigningKey, c.signing.public_key);
      client_send(Step::kSetup, c, kServerId, MessageType::kEncDataset, serialize(enc));
    }
    for (auto& [id, _] : clients) {
      client_pk[id] = deserialize_public_key(bus.receive(id, kServerId, MessageType::kPublicKey));
      client_sign_keys[id] = bus.receive(id, kServerId, MessageType::kSigningKey);
      stored[id] = deserialize_encrypted_dataset(
          bus.receive(id, kServerId, MessageType::kEncDataset), config.disparity);
    }
    const Bytes table = serialize_key_table(client_sign_keys);
    for (auto& [id, _] : clients) send_to_client(Step::kSetup, id, MessageType::kSigningKey, table);
  }

  // --- Round ---

  std::map<Step, double> user_before_;
  std::map<Step, double> server_before_;
  std::map<Step, std::uint64_t> bytes_s_before_, bytes_u_before_;
  std::map<Step, std::size_t> msgs_before_;

  void snapshot_metrics() {
    for (Step s : kRoundSteps) {
      user_before_[s] = clock.user(s);
      server_before_[s] = clock.server(s);
      bytes_s_before_[s] = transcript.server_bytes(s);
      bytes_u_before_[s] = transcript.user_bytes(s);
      msgs_before_[s] = transcript.message_count(s);
    }
    active_users.clear();
  }

  void collect_metrics(RoundResult& r) {
    for (Step s : kRoundSteps) {
      StepMetrics m;
      m.server_seconds = clock.server(s) - server_before_[s];
      m.user_seconds_total = clock.user(s) - user_before_[s];
      const std::size_t k = active_users[s].size();
      m.user_seconds_mean = k == 0 ? 0.0 : m.user_seconds_total / static_cast<double>(k);
      m.server_bytes = transcript.server_bytes(s) - bytes_s_before_[s];
      m.user_bytes = transcript.user_bytes(s) - bytes_u_before_[s];
      m.messages = transcript.message_count(s) - msgs_before_[s];
      r.metrics[s] = m;
    }
  }

  // Step wrapper: times the body and attributes client time separately.
  template <typename F>
  void timed(Step s, F&& body) {
    const auto t0 = StepClock::Clock::now();
    const double user0 = clock.user(s);
    try {
      body();
    } catch (...) {
      const double wall = std::chrono::duration<double>(StepClock::Clock::now() - t0).count();
      clock.add_server(s, std::max(0.0, wall - (clock.user(s) - user0)));
      throw;
    }
    const double wall = std::chrono::duration<double>(StepClock::Clock::now() - t0).count();
    clock.add_server(s, std::max(0.0, wall - (clock.user(s) - user0)));
  }

  void schedule_drops(Csprng& rng) {
    drops = {};
    std::set<PartyId> adversarial;
    for (const auto& a : config.adversaries) {
      if (is_client_behavior(a.behavior) && active_in_round(a)) adversarial.insert(a.target);
    }
    IdList pool;
    for (const auto& [id, _] : clients) {
      if (!adversarial.count(id) && !config.scripted_drops.count(id)) pool.push_back(id);
    }
    auto take = [&](double fraction, DropPoint point) {
      auto k = static_cast<std::size_t>(
          std::floor(fraction * static_cast<double>(config.n_clients) + 1e-9));
      k = std::min(k, pool.size());
      for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + rng.uniform(pool.size() - i);
        std::swap(pool[i], pool[j]);
        drops[pool[i]] = point;
      }
      pool.erase(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
    };
    take(config.dropout_phase1, config.phase1_point);
    take(config.dropout_phase2, config.phase2_point);
    for (const auto& [id, p] : config.scripted_drops) drops[id] = p;
  }

  bool active_in_round(const AdversaryScript& a) const {
    return !a.round || *a.round == rounds;
  }

  void require_quorum(const IdList& set, const char* name) {
    if (set.size() < t) {
      throw Error(ErrorCode::kAbortThreshold, std::string(name) + " has " +
                                                  std::to_string(set.size()) +
                                                  " users, threshold " + std::to_string(t));
    }
  }

  RoundResult run_round() {
    if (!setup_done) setup();
    RoundResult r;
    r.round = rounds;
    result = &r;
    offline.clear();
    snapshot_metrics();
    Csprng round_rng = master.fork("round", rounds);
    Csprng server_rng = round_rng.fork("server");
    Csprng drop_rng = round_rng.fork("dropout");
    schedule_drops(drop_rng);
    r.drop_points = drops;

    for (auto& [id, c] : clients) {
      c->rng = c->base_rng.fork("round", rounds);
      c->secagg.reset();
      c->eval.reset();
      c->prover.reset();
      c->verdict.reset();
      c->view.clear();
      c->weight = 0;
      c->round = rounds;
      c->global = global;
      c->cheat_entropy = c->cheat_model = false;
      r.sets.u.push_back(id);
    }
    for (const auto& a : config.adversaries) {
      if (!active_in_round(a)) continue;
      if (a.behavior == AdversaryBehavior::kFraudulentEntropy) client(a.target).cheat_entropy = true;
      if (a.behavior == AdversaryBehavior::kFraudulentModel) client(a.target).cheat_model = true;
    }

    Step current = Step::kInit;
    try {
      current = Step::kInit;
      timed(Step::kInit, [&] { step0_init(r); });
      current = Step::kCompE;
      timed(Step::kCompE, [&] { step1_compe(r, server_rng); });
      current = Step::kPoKE;
      timed(Step::kPoKE, [&] { step2_poke(r, server_rng); });
      current = Step::kPoKM;
      timed(Step::kPoKM, [&] { step3_pokm(r, server_rng); });
      current = Step::kWAgg;
      timed(Step::kWAgg, [&] { step4_wagg(r); });
      oracle(r);
      r.completed = true;
    } catch (const Error& e) {
      switch (e.code()) {
        case ErrorCode::kAbortThreshold:
        case ErrorCode::kConsistencyAbort:
        case ErrorCode::kInsufficientShares:
        case ErrorCode::kOverflow:
        case ErrorCode::kDegenerateEntropy:
        case ErrorCode::kEmptyAliveSet:
          r.completed = false;
          r.abort_code = e.code();
          r.abort_step = current;
          r.abort_reason = e.what();
          break;
        default:
          result = nullptr;
          throw;
      }
    }
    std::sort(r.dropped.begin(), r.dropped.end());
    std::sort(r.excluded.begin(), r.excluded.end());
    r.global_model = global;
    collect_metrics(r);
    result = nullptr;
    ++rounds;
    return r;
  }

  // --- Step 0 ---

  struct RoundScratch {
    std::map<PartyId, CiphertextVector> enc_mask;
    std::map<PartyId, CiphertextVector> enc_model;
    std::map<PartyId, Ciphertext> enc_e;
    std::optional<SecAggServer> secagg;
  } scratch;

  void step0_init(RoundResult& r) {
    scratch = {};
    for (PartyId u : r.sets.u) {
      if (!drops_at(u, DropPoint::kBeforeSharing)) r.sets.u1.push_back(u);
    }
    require_quorum(r.sets.u1, "U1");
    const Bytes u1_bytes = serialize_ids(r.sets.u1);
    for (PartyId u : r.sets.u1) send_to_client(Step::kInit, u, MessageType::kAliveList, u1_bytes);
    for (PartyId u : r.sets.u1) {
      Client& c = client(u);
      active_users[Step::kInit].insert(u);
      ScopedTimer timer(clock, Step::kInit, true);
      client_collect_shares(c);
    }
    for (PartyId u : r.sets.u1) {
      if (drops_at(u, DropPoint::kBeforeMaskUpload)) continue;
      Client& c = client(u);
      if (!config.baseline) {
        ScopedTimer timer(clock, Step::kInit, true);
        Csprng enc_rng = c.rng.fork("mask-encryption");
        const auto& mask = c.secagg->masks().combined;
        const int scale = 2 * c.params.fraction_bits;
        const auto enc = encrypt_vector(c.keys.pub, mask, enc_rng, scale);
        client_send(Step::kInit, c, kServerId, MessageType::kEncMask, serialize(enc));
      }
      r.sets.u2.push_back(u);
    }
    if (!config.baseline) {
      IdList got;
      for (PartyId u : r.sets.u2) {
        auto bytes = from_client(u, MessageType::kEncMask);
        if (!bytes) continue;
        auto enc = deserialize_ciphertexts(*bytes, 2 * config.disparity.fraction_bits);
        if (enc.size() != dim) throw Error(ErrorCode::kLengthMismatch, "Enc(R) length");
        scratch.enc_mask[u] = std::move(enc);
        got.push_back(u);
      }
      r.sets.u2 = got;
    }
    require_quorum(r.sets.u2, "U2");
  }

  // --- Step 1 ---

  class BusProofPeer : public ProofPeer {
   public:
    BusProofPeer(Impl& impl, Step step, PartyId user) : impl_(impl), step_(step), user_(user) {}
    std::vector<BigInt> commit(std::span<const BigInt> blinded) override {
      impl_.send_to_client(step_, user_, MessageType::kProofBlinded, serialize_bigints(blinded));
      return deserialize_bigints(impl_.expect_from_client(user_, MessageType::kProofCommit));
    }
    std::vector<BigInt> respond(std::span<const BigInt> challenges) override {
      impl_.send_to_client(step_, user_, MessageType::kProofChallenge, serialize_bigints(challenges));
      return deserialize_bigints(impl_.expect_from_client(user_, MessageType::kProofResponse));
    }

   private:
    Impl& impl_;
    Step step_;
    PartyId user_;
  };

  class BusEvaluationPeer : public EvaluationPeer {
   public:
    BusEvaluationPeer(Impl& impl, PartyId user)
        : impl_(impl), user_(user), prover_(impl, Step::kCompE, user) {}
    CubicReply masked_cubic(const CubicRequest& request) override {
      impl_.send_to_client(Step::kCompE, user_, MessageType::kEncZ, serialize(request));
      return deserialize_cubic_reply(impl_.expect_from_client(user_, MessageType::kEncZ2Sigma),
                                     impl_.config.disparity);
    }
    OpenReply masked_open(const OpenRequest& request) override {
      impl_.send_to_client(Step::kCompE, user_, MessageType::kEncH, serialize(request));
      return deserialize_open_reply(impl_.expect_from_client(user_, MessageType::kHPlusR),
                                    impl_.config.disparity);
    }
    ProofPeer& h_prover() override { return prover_; }

   private:
    Impl& impl_;
    PartyId user_;
    BusProofPeer prover_;
  };

  void step1_compe(RoundResult& r, Csprng& server_rng) {
    for (PartyId u : r.sets.u2) {
      Client& c = client(u);
      {
        active_users[Step::kCompE].insert(u);
        ScopedTimer timer(clock, Step::kCompE, true);
        client_train(c);
      }
      r.local_models[u] = c.local;
      if (drops_at(u, DropPoint::kBeforeModelUpload)) continue;
      if (!config.baseline) {
        ScopedTimer timer(clock, Step::kCompE, true);
        Csprng enc_rng = c.rng.fork("model-encryption");
        client_send(Step::kCompE, c, kServerId, MessageType::kEncModel,
                    serialize(encrypt_model(c.keys.pub, c.local, c.params, enc_rng)));
      }
      r.sets.u3.push_back(u);
    }
    if (config.baseline) return;

    IdList got;
    for (PartyId u : r.sets.u3) {
      auto bytes = from_client(u, MessageType::kEncModel);
      if (!bytes) continue;
      auto enc = deserialize_ciphertexts(*bytes, config.disparity.fraction_bits);
      if (enc.size() != dim) throw Error(ErrorCode::kLengthMismatch, "Enc(M) length");
      scratch.enc_model[u] = std::move(enc);
      got.push_back(u);
    }
    r.sets.u3 = got;

    // The model the server scores local data with.
    LogRegModel reference;
    if (have_global) {
      reference = global;
    } else {
      Csprng shuffle = server_rng.fork("benchmark-training");
      reference = train(benchmark, config.training, &shuffle);
    }

    for (PartyId u : r.sets.u3) {
      Client& c = client(u);
      {
        ScopedTimer timer(clock, Step::kCompE, true);
        c.eval = std::make_unique<LocalEvaluationPeer>(c.keys.pub, c.keys.sec, c.data.y, c.params,
                                                       c.rng);
      }
      const PaillierPublicKey& pk = client_pk.at(u);
      BusEvaluationPeer peer(*this, u);
      Csprng rng = server_rng.fork("compE", u);
      const Ciphertext ls =
          compute_LS(pk, scratch.enc_model.at(u), benchmark, peer, config.disparity, rng);
      const Ciphertext ll = compute_LL(pk, stored.at(u), reference, peer, config.disparity, rng);
      const Ciphertext e = compute_E(pk, ls, ll);
      scratch.enc_e[u] = e;
      send_to_client(Step::kCompE, u, MessageType::kEncE, serialize(e));
    }
  }

  // --- Step 2 ---

  void step2_poke(RoundResult& r, Csprng& server_rng) {
    if (config.baseline) {
      for (PartyId u : r.sets.u3) {
        if (!drops_at(u, DropPoint::kDuringPoKE)) r.sets.u4.push_back(u);
      }
      require_quorum(r.sets.u4, "U4");
      for (PartyId u : r.sets.u4) client(u).weight = 1;
      return;
    }
    // The claims arrived with the Enc(E) delivery; a client scheduled to drop
    // during the proof has already sent its claim.
    std::map<PartyId, BigInt> claims;
    for (PartyId u : r.sets.u3) {
      auto bytes = from_client(u, MessageType::kEntropyClaim);
      if (!bytes) continue;
      claims[u] = deserialize_bigints(*bytes).at(0);
    }
    for (PartyId u : r.sets.u3) drops_at(u, DropPoint::kDuringPoKE);

    std::vector<TableEntry> table;
    for (PartyId u : r.sets.u3) {
      if (!claims.count(u)) continue;
      const PaillierPublicKey& pk = client_pk.at(u);
      Csprng rng = server_rng.fork("poke", u);
      PopkVerifier verifier(pk, {scratch.enc_e.at(u)}, {reduce(claims[u], pk.n)}, rng,
                            config.disparity.proof);
      BusProofPeer peer(*this, Step::kPoKE, u);
      bool ok = false;
      try {
        ok = run_popk(verifier, peer);
      } catch (const ClientOffline&) {
        continue;
      }
      r.beta_e[u] = ok;
      if (!ok) {
        r.excluded.push_back(u);
        continue;
      }
      r.sets.u4.push_back(u);
      const BigInt e = centered(reduce(claims[u], pk.n), pk.n);
      r.entropy[u] = scaled_to_double(e, config.disparity.entropy_scale());
      table.push_back({u, e, static_cast<std::uint32_t>(stored.at(u).y.size())});
    }
    require_quorum(r.sets.u4, "U4");

    std::vector<EntropyRecord> records;
    for (const auto& e : table) records.push_back({e.user, r.entropy.at(e.user), e.samples});
    r.weights = compute_weights(records, config.weights);
    r.weight_shift = weight_shift(r.weights);
    for (const auto& w : r.weights) {
      r.integer_weights[w.user] = integer_weight(w, config.disparity.fraction_bits, r.weight_shift);
    }
    const Bytes table_bytes = serialize_table(table);
    for (PartyId u : r.sets.u4) send_to_client(Step::kPoKE, u, MessageType::kEntropyTable, table_bytes);
  }

  // --- Step 3 ---

  void step3_pokm(RoundResult& r, Csprng& server_rng) {
    for (PartyId u : r.sets.u4) {
      if (drops_at(u, DropPoint::kBeforeMaskedUpload)) continue;
      Client& c = client(u);
      active_users[Step::kPoKM].insert(u);
      ScopedTimer timer(clock, Step::kPoKM, true);
      std::vector<BigInt> y;
      if (config.baseline) {
        std::vector<BigInt> m;
        for (const auto& v : c.model_fixed) m.push_back(reduce(v, ring));
        y = c.secagg->mask(m);
      } else {
        const BigInt& n = c.keys.pub.n;
        const auto& mask = c.secagg->masks().combined;
        for (std::size_t k = 0; k < dim; ++k) {
          y.push_back(reduce(c.weight * c.model_fixed[k] + mask[k], n));
        }
        if (c.cheat_model) {
          y[0] = reduce(y[0] + power_of_two(static_cast<std::size_t>(2 * c.params.fraction_bits)), n);
        }
      }
      client_send(Step::kPoKM, c, kServerId, MessageType::kMaskedModel, serialize_bigints(y));
      r.sets.u5.push_back(u);
    }

    scratch.secagg.emplace(t, ring, dim);
    scratch.secagg->set_mask_holders(r.sets.u1);
    std::map<PartyId, std::vector<BigInt>> uploads;
    for (PartyId u : r.sets.u5) {
      auto bytes = from_client(u, MessageType::kMaskedModel);
      if (!bytes) continue;
      auto y = deserialize_bigints(*bytes);
      if (y.size() != dim) throw Error(ErrorCode::kLengthMismatch, "masked model length");
      uploads[u] = std::move(y);
    }
    for (PartyId u : r.sets.u5) drops_at(u, DropPoint::kDuringPoKM);

    for (const auto& [u, y] : uploads) {
      if (config.baseline) {
        if (!online(u)) continue;
        r.sets.u6.push_back(u);
        scratch.secagg->receive_masked(u, y);
        continue;
      }
      const PaillierPublicKey& pk = client_pk.at(u);
      const BigInt& w = r.integer_weights.at(u);
      CiphertextVector reference;
      for (std::size_t k = 0; k < dim; ++k) {
        reference.push_back(he_add(pk,
                                   he_scalar_mul(pk, scratch.enc_model.at(u)[k], w,
                                                 config.disparity.fraction_bits),
                                   scratch.enc_mask.at(u)[k]));
      }
      std::vector<BigInt> claimed;
      for (const auto& v : y) claimed.push_back(reduce(v, pk.n));
      Csprng rng = server_rng.fork("pokm", u);
      PopkVerifier verifier(pk, std::move(reference), claimed, rng, config.disparity.proof);
      BusProofPeer peer(*this, Step::kPoKM, u);
      bool ok = false;
      try {
        ok = run_popk(verifier, peer);
      } catch (const ClientOffline&) {
        continue;
      }
      r.beta_m[u] = ok;
      if (!ok) {
        r.excluded.push_back(u);
        continue;
      }
      r.sets.u6.push_back(u);
      std::vector<BigInt> lifted;
      for (const auto& v : claimed) lifted.push_back(reduce(centered(v, pk.n), ring));
      scratch.secagg->receive_masked(u, std::move(lifted));
    }
    scratch.secagg->close_uploads();
  }

  // --- Step 4 ---

  void step4_wagg(RoundResult& r) {
    const IdList& u6 = r.sets.u6;
    std::optional<Equivocation> eq;
    for (const auto& a : config.adversaries) {
      if (a.behavior != AdversaryBehavior::kInconsistentView || !active_in_round(a)) continue;
      if (std::find(u6.begin(), u6.end(), a.target) == u6.end()) continue;
      PartyId hidden = a.hidden;
      if (hidden == 0) {
        for (PartyId v : u6) {
          if (v != a.target && !client(v).cheat_entropy && !client(v).cheat_model) {
            hidden = v;
            break;
          }
        }
      }
      if (hidden == 0 || hidden == a.target ||
          std::find(u6.begin(), u6.end(), hidden) == u6.end()) {
        continue;
      }
      eq = Equivocation{{a.target}, hidden, a.strategy};
      break;
    }
    const Equivocation* eqp = eq ? &*eq : nullptr;

    // Consistency check.
    std::map<PartyId, IdList> shown;
    for (PartyId u : u6) {
      shown[u] = view_shown_to(u, u6, eqp);
      send_to_client(Step::kWAgg, u, MessageType::kAliveList, serialize_ids(shown[u]));
    }
    std::vector<SignedView> collected;
    for (PartyId u : u6) {
      auto bytes = from_client(u, MessageType::kSignedView);
      if (!bytes) continue;
      SignedView sv = deserialize_signed_view(*bytes);
      if (sv.signer != u) throw Error(ErrorCode::kProtocolOrder, "signed view from the wrong user");
      collected.push_back(std::move(sv));
    }
    bool pass = true;
    for (PartyId u : u6) {
      send_to_client(Step::kWAgg, u, MessageType::kViewBundle,
                     serialize_bundle(bundle_for(collected, shown[u], eqp)));
      const auto& v = client(u).verdict;
      if (v) {
        r.consistency[u] = *v;
        pass = pass && v->pass;
      }
    }
    if (!pass) {
      throw Error(ErrorCode::kConsistencyAbort, "consistency check failed for the alive set");
    }

    // Recovery.
    SecAggServer& agg = *scratch.secagg;
    const Bytes req = serialize(agg.reveal_request());
    for (PartyId u : u6) {
      if (drops_at(u, DropPoint::kBeforeReveal)) continue;
      send_to_client(Step::kWAgg, u, MessageType::kRevealRequest, req);
    }
    for (PartyId u : u6) {
      auto bytes = from_client(u, MessageType::kRevealResponse);
      if (!bytes) continue;
      agg.receive_reveal(deserialize_reveal_response(*bytes, t));
    }
    const std::vector<BigInt> z = agg.recover();
    r.seeds_reconstructed = agg.seeds_reconstructed();

    BigInt weight_sum = 0;
    for (PartyId u : u6) weight_sum += client(u).weight;
    if (weight_sum == 0) throw Error(ErrorCode::kEmptyAliveSet, "alive users carry no weight");
    const BigInt denom = weight_sum * power_of_two(static_cast<std::size_t>(config.disparity.fraction_bits));
    LogRegModel m;
    std::vector<BigInt> model_residues;
    const std::size_t fb = static_cast<std::size_t>(config.disparity.fraction_bits);
    for (const auto& zk : z) {
      const BigInt signed_sum = centered(zk, ring);
      m.theta.push_back(mpq_class(signed_sum, denom).get_d());
      // Rounded back to scale F for distribution.
      BigInt q = signed_sum * power_of_two(fb);
      mpz_class rounded;
      mpz_fdiv_q(rounded.get_mpz_t(), BigInt(2 * q + denom).get_mpz_t(), BigInt(2 * denom).get_mpz_t());
      model_residues.push_back(reduce(rounded, ring));
    }
    global = m;
    have_global = true;
    const Bytes final_bytes = serialize_bigints(model_residues);
    for (PartyId u : u6) send_to_client(Step::kWAgg, u, MessageType::kFinalModel, final_bytes);

  }

  // Double-precision reference over U6; not part of the timed protocol work.
  void oracle(RoundResult& r) {
    const IdList& u6 = r.sets.u6;
    const LogRegModel& m = global;
    std::map<PartyId, double> w;
    if (config.baseline) {
      for (PartyId u : u6) w[u] = 1.0 / static_cast<double>(u6.size());
    } else {
      w = renormalize_for_dropout(r.weights, u6);
    }
    r.oracle_model.assign(dim, 0.0);
    for (PartyId u : u6) {
      for (std::size_t k = 0; k < dim; ++k) r.oracle_model[k] += w[u] * r.local_models.at(u).theta[k];
    }
    r.max_oracle_error = 0;
    for (std::size_t k = 0; k < dim; ++k) {
      r.max_oracle_error = std::max(r.max_oracle_error, std::abs(m.theta[k] - r.oracle_model[k]));
    }
  }
};

// --- ProtocolRun ------------------------------------------------------------------

ProtocolRun::ProtocolRun(ProtocolConfig config, std::vector<Dataset> client_data, Dataset benchmark)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(client_data), std::move(benchmark))) {}

ProtocolRun::~ProtocolRun() = default;

void ProtocolRun::setup() { impl_->setup(); }
bool ProtocolRun::is_setup() const { return impl_->setup_done; }
RoundResult ProtocolRun::run_round() { return impl_->run_round(); }
const ProtocolConfig& ProtocolRun::config() const { return impl_->config; }
const Transcript& ProtocolRun::transcript() const { return impl_->transcript; }
const LogRegModel& ProtocolRun::global_model() const { return impl_->global; }
std::uint32_t ProtocolRun::rounds_run() const { return impl_->rounds; }

const PaillierKeypair& ProtocolRun::client_keys(PartyId id) const {
  auto it = impl_->clients.find(id);
  if (it == impl_->clients.end()) throw Error(ErrorCode::kInvalidArgument, "unknown client");
  return it->second->keys;
}

const EncryptedDataset& ProtocolRun::stored_dataset(PartyId id) const {
  auto it = impl_->stored.find(id);
  if (it == impl_->stored.end()) throw Error(ErrorCode::kInvalidArgument, "no dataset stored for client");
  return it->second;
}

std::size_t ProtocolRun::stored_dataset_count() const { return impl_->stored.size(); }

std::vector<RoundResult> run_protocol(const ProtocolConfig& config, std::vector<Dataset> client_data,
                                      Dataset benchmark, std::size_t rounds) {
  ProtocolRun run(config, std::move(client_data), std::move(benchmark));
  run.setup();
  std::vector<RoundResult> out;
  for (std::size_t i = 0; i < rounds; ++i) out.push_back(run.run_round());
  return out;
}

}  // namespace swagg
