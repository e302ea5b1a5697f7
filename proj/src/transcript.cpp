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

#include "swagg/transcript.hpp"

#include <sodium.h>

#include <string>

#include "swagg/error.hpp"

namespace swagg {

std::string_view to_string(Step s) {
  switch (s) {
    case Step::kSetup: return "Setup";
    case Step::kInit: return "Init";
    case Step::kCompE: return "ComE";
    case Step::kPoKE: return "PoKE";
    case Step::kPoKM: return "PoKM";
    case Step::kWAgg: return "WAgg";
  }
  return "?";
}

std::string_view to_string(MessageType t) {
  switch (t) {
    case MessageType::kPublicKey: return "PUBLIC_KEY";
    case MessageType::kSigningKey: return "SIGNING_KEY";
    case MessageType::kEncDataset: return "ENC_DATASET";
    case MessageType::kSeedShares: return "SEED_SHARES";
    case MessageType::kPairSeed: return "PAIR_SEED";
    case MessageType::kEncMask: return "ENC_MASK";
    case MessageType::kAliveList: return "ALIVE_LIST";
    case MessageType::kEncModel: return "ENC_MODEL";
    case MessageType::kEncZ: return "ENC_Z";
    case MessageType::kEncZ2Sigma: return "ENC_Z2_SIGMA";
    case MessageType::kEncH: return "ENC_H";
    case MessageType::kHPlusR: return "H_PLUS_R";
    case MessageType::kEncE: return "ENC_E";
    case MessageType::kEntropyClaim: return "ENTROPY_CLAIM";
    case MessageType::kProofBlinded: return "PROOF_BLINDED";
    case MessageType::kProofCommit: return "PROOF_COMMIT";
    case MessageType::kProofChallenge: return "PROOF_CHALLENGE";
    case MessageType::kProofResponse: return "PROOF_RESPONSE";
    case MessageType::kEntropyTable: return "ENTROPY_TABLE";
    case MessageType::kMaskedModel: return "MASKED_MODEL";
    case MessageType::kSignedView: return "SIGNED_VIEW";
    case MessageType::kViewBundle: return "VIEW_BUNDLE";
    case MessageType::kRevealRequest: return "REVEAL_REQUEST";
    case MessageType::kRevealResponse: return "REVEAL_RESPONSE";
    case MessageType::kFinalModel: return "FINAL_MODEL";
  }
  return "?";
}

// --- Transcript --------------------------------------------------------------

void Transcript::append(MessageRecord r) { records_.push_back(std::move(r)); }

std::uint64_t Transcript::server_bytes(Step step) const {
  std::uint64_t total = 0;
  for (const auto& r : records_) {
    if (r.step == step && r.sender == kServerId) total += r.payload.size();
  }
  return total;
}

std::uint64_t Transcript::user_bytes(Step step) const {
  std::uint64_t total = 0;
  for (const auto& r : records_) {
    if (r.step == step && r.sender != kServerId) total += r.payload.size();
  }
  return total;
}

std::uint64_t Transcript::user_bytes(Step step, PartyId user) const {
  std::uint64_t total = 0;
  for (const auto& r : records_) {
    if (r.step == step && r.sender == user) total += r.payload.size();
  }
  return total;
}

std::size_t Transcript::message_count(Step step) const {
  std::size_t n = 0;
  for (const auto& r : records_) n += r.step == step;
  return n;
}

namespace {

Bytes record_header(Step step, PartyId from, PartyId to, MessageType type, std::size_t length) {
  if (length > 0xffffffffu) throw Error(ErrorCode::kSerialization, "message payload exceeds 4 GiB");
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(step));
  w.u32(from);
  w.u32(to);
  w.u8(static_cast<std::uint8_t>(type));
  w.u32(static_cast<std::uint32_t>(length));
  return std::move(w).take();
}

}  // namespace

Bytes Transcript::serialize() const {
  Bytes out;
  for (const auto& r : records_) {
    const Bytes h = record_header(r.step, r.sender, r.receiver, r.type, r.payload.size());
    out.insert(out.end(), h.begin(), h.end());
    out.insert(out.end(), r.payload.begin(), r.payload.end());
  }
  return out;
}

std::array<std::uint8_t, 32> Transcript::digest() const {
  const Bytes all = serialize();
  return sha256({all});
}

std::vector<MessageRecord> parse_transcript(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  std::vector<MessageRecord> out;
  while (!r.done()) {
    MessageRecord m;
    const std::uint8_t step = r.u8();
    if (step > static_cast<std::uint8_t>(Step::kWAgg)) {
      throw Error(ErrorCode::kSerialization, "transcript: unknown step tag");
    }
    m.step = static_cast<Step>(step);
    m.sender = r.u32();
    m.receiver = r.u32();
    const std::uint8_t type = r.u8();
    if (type < 1 || type > static_cast<std::uint8_t>(MessageType::kFinalModel)) {
      throw Error(ErrorCode::kSerialization, "transcript: unknown message type");
    }
    m.type = static_cast<MessageType>(type);
    const std::uint32_t len = r.u32();
    const auto payload = r.raw(len);
    m.payload.assign(payload.begin(), payload.end());
    out.push_back(std::move(m));
  }
  return out;
}

// --- Bus ---------------------------------------------------------------------

MessageBus::MessageBus(Transcript& transcript, const Csprng::Key& master_key)
    : transcript_(transcript), master_(master_key) {
  if (sodium_init() < 0) throw Error(ErrorCode::kInvalidArgument, "libsodium failed to initialize");
}

std::array<std::uint8_t, 32> MessageBus::edge_key(PartyId from, PartyId to) const {
  ByteWriter w;
  w.u32(from);
  w.u32(to);
  static constexpr std::string_view kTag = "swagg/bus-edge/v1";
  const std::span<const std::uint8_t> tag(reinterpret_cast<const std::uint8_t*>(kTag.data()),
                                          kTag.size());
  return sha256({tag, master_, w.bytes()});
}

void MessageBus::send(Step step, PartyId from, PartyId to, MessageType type, Bytes payload) {
  Envelope env;
  env.type = type;
  env.header = record_header(step, from, to, type, payload.size());
  const auto key = edge_key(from, to);
  Bytes authed = env.header;
  authed.insert(authed.end(), payload.begin(), payload.end());
  crypto_auth_hmacsha256(env.tag.data(), authed.data(), authed.size(), key.data());

  transcript_.append({step, from, to, type, payload});
  env.payload = std::move(payload);
  auto edge = std::make_pair(from, to);
  if (tamper_[edge]) {
    tamper_[edge] = false;
    if (!env.payload.empty()) env.payload[0] ^= 1;
    else env.header.back() ^= 1;
  }
  queues_[edge].push_back(std::move(env));
}

std::optional<Bytes> MessageBus::try_receive(PartyId from, PartyId to, MessageType type) {
  auto it = queues_.find({from, to});
  if (it == queues_.end() || it->second.empty()) return std::nullopt;
  Envelope env = std::move(it->second.front());
  it->second.pop_front();
  if (env.type != type) {
    throw Error(ErrorCode::kProtocolOrder,
                "bus: expected " + std::string(to_string(type)) + " from party " +
                    std::to_string(from) + ", got " + std::string(to_string(env.type)));
  }
  const auto key = edge_key(from, to);
  Bytes authed = env.header;
  authed.insert(authed.end(), env.payload.begin(), env.payload.end());
  if (crypto_auth_hmacsha256_verify(env.tag.data(), authed.data(), authed.size(), key.data()) != 0) {
    throw Error(ErrorCode::kSerialization,
                "bus: authentication failed on message from party " + std::to_string(from));
  }
  return std::move(env.payload);
}

Bytes MessageBus::receive(PartyId from, PartyId to, MessageType type) {
  auto got = try_receive(from, to, type);
  if (!got) {
    throw Error(ErrorCode::kProtocolOrder, "bus: no " + std::string(to_string(type)) +
                                               " queued from party " + std::to_string(from));
  }
  return std::move(*got);
}

std::size_t MessageBus::pending(PartyId from, PartyId to) const {
  auto it = queues_.find({from, to});
  return it == queues_.end() ? 0 : it->second.size();
}

void MessageBus::purge(PartyId party) {
  for (auto& [edge, q] : queues_) {
    if (edge.first == party || edge.second == party) q.clear();
  }
}

void MessageBus::tamper_next(PartyId from, PartyId to) { tamper_[{from, to}] = true; }

// --- Clock -------------------------------------------------------------------

double StepClock::server(Step s) const {
  auto it = server_.find(s);
  return it == server_.end() ? 0.0 : it->second;
}

double StepClock::user(Step s) const {
  auto it = user_.find(s);
  return it == user_.end() ? 0.0 : it->second;
}

ScopedTimer::~ScopedTimer() {
  const double secs = std::chrono::duration<double>(StepClock::Clock::now() - start_).count();
  if (user_) clock_.add_user(step_, secs);
  else clock_.add_server(step_, secs);
}

}  // namespace swagg
