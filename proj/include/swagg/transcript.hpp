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

#include <array>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "swagg/bigint.hpp"
#include "swagg/csprng.hpp"

namespace swagg {

using PartyId = std::uint32_t;
inline constexpr PartyId kServerId = 0;

enum class Step : std::uint8_t { kSetup = 0, kInit = 1, kCompE = 2, kPoKE = 3, kPoKM = 4, kWAgg = 5 };
inline constexpr std::array<Step, 5> kRoundSteps{Step::kInit, Step::kCompE, Step::kPoKE,
                                                 Step::kPoKM, Step::kWAgg};

std::string_view to_string(Step s);

enum class MessageType : std::uint8_t {
  kPublicKey = 1,
  kSigningKey = 2,
  kEncDataset = 3,
  kSeedShares = 4,
  kPairSeed = 5,
  kEncMask = 6,
  kAliveList = 7,
  kEncModel = 8,
  kEncZ = 9,
  kEncZ2Sigma = 10,
  kEncH = 11,
  kHPlusR = 12,
  kEncE = 13,
  kEntropyClaim = 14,
  kProofBlinded = 15,
  kProofCommit = 16,
  kProofChallenge = 17,
  kProofResponse = 18,
  kEntropyTable = 19,
  kMaskedModel = 20,
  kSignedView = 21,
  kViewBundle = 22,
  kRevealRequest = 23,
  kRevealResponse = 24,
  kFinalModel = 25,
};

std::string_view to_string(MessageType t);

struct MessageRecord {
  Step step = Step::kSetup;
  PartyId sender = 0;
  PartyId receiver = 0;
  MessageType type = MessageType::kPublicKey;
  Bytes payload;
};

/// 1-byte step, 4-byte sender, 4-byte receiver, 1-byte type, 4-byte length.
inline constexpr std::size_t kRecordHeaderBytes = 14;

// Append-only log of every message that crossed the bus.
class Transcript {
 public:
  void append(MessageRecord r);
  const std::vector<MessageRecord>& records() const { return records_; }

  /// Payload bytes sent in `step`, split by whether the server sent them.
  std::uint64_t server_bytes(Step step) const;
  std::uint64_t user_bytes(Step step) const;
  std::uint64_t user_bytes(Step step, PartyId user) const;
  std::size_t message_count(Step step) const;

  /// Concatenated records in the binary record format.
  Bytes serialize() const;
  std::array<std::uint8_t, 32> digest() const;

 private:
  std::vector<MessageRecord> records_;
};

std::vector<MessageRecord> parse_transcript(std::span<const std::uint8_t> bytes);

// In-process authenticated channel between every pair of parties. Messages
// on one edge are delivered in order; each carries a MAC under a per-edge key
// that is checked on delivery. Payloads are logged to the transcript.
class MessageBus {
 public:
  MessageBus(Transcript& transcript, const Csprng::Key& master_key);

  void send(Step step, PartyId from, PartyId to, MessageType type, Bytes payload);
  /// Throws kProtocolOrder if nothing is queued or the type differs, and
  /// kSerialization if the MAC check fails.
  Bytes receive(PartyId from, PartyId to, MessageType type);
  /// nullopt when the edge is empty.
  std::optional<Bytes> try_receive(PartyId from, PartyId to, MessageType type);

  std::size_t pending(PartyId from, PartyId to) const;
  /// Drops every undelivered message addressed to or sent by `party`.
  void purge(PartyId party);

  /// Test hook: flips one payload bit of the next message queued on the edge.
  void tamper_next(PartyId from, PartyId to);

 private:
  struct Envelope {
    MessageType type;
    Bytes header;
    Bytes payload;
    std::array<std::uint8_t, 32> tag;
  };

  std::array<std::uint8_t, 32> edge_key(PartyId from, PartyId to) const;

  Transcript& transcript_;
  Csprng::Key master_;
  std::map<std::pair<PartyId, PartyId>, std::deque<Envelope>> queues_;
  std::map<std::pair<PartyId, PartyId>, bool> tamper_;
};

// Wall-clock accounting per step, split between the server and users.
class StepClock {
 public:
  using Clock = std::chrono::steady_clock;

  void add_server(Step s, double seconds) { server_[s] += seconds; }
  void add_user(Step s, double seconds) { user_[s] += seconds; }
  double server(Step s) const;
  double user(Step s) const;

 private:
  std::map<Step, double> server_;
  std::map<Step, double> user_;
};

// Adds the elapsed time to a StepClock bucket on destruction.
class ScopedTimer {
 public:
  ScopedTimer(StepClock& clock, Step step, bool user)
      : clock_(clock), step_(step), user_(user), start_(StepClock::Clock::now()) {}
  ~ScopedTimer();
  ScopedTimer(const ScopedTimer&) = delete;
  ScopedTimer& operator=(const ScopedTimer&) = delete;

 private:
  StepClock& clock_;
  Step step_;
  bool user_;
  StepClock::Clock::time_point start_;
};

}  // namespace swagg
