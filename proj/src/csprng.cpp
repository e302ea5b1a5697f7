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

#include "swagg/csprng.hpp"

#include <sodium.h>

#include <cstring>

#include "swagg/error.hpp"

namespace swagg {
namespace {

void ensure_sodium() {
  static const bool ready = [] { return sodium_init() >= 0; }();
  if (!ready) throw Error(ErrorCode::kInvalidArgument, "libsodium failed to initialise");
}

std::array<std::uint8_t, 8> le64(std::uint64_t v) {
  std::array<std::uint8_t, 8> out{};
  for (int i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>(v >> (8 * i));
  return out;
}

std::span<const std::uint8_t> as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

}  // namespace

std::array<std::uint8_t, 32> sha256(
    std::initializer_list<std::span<const std::uint8_t>> parts) {
  ensure_sodium();
  crypto_hash_sha256_state st;
  crypto_hash_sha256_init(&st);
  for (auto p : parts) crypto_hash_sha256_update(&st, p.data(), p.size());
  std::array<std::uint8_t, 32> out{};
  crypto_hash_sha256_final(&st, out.data());
  return out;
}

Csprng::Csprng(std::uint64_t seed) {
  auto s = le64(seed);
  key_ = sha256({as_bytes("swagg/seed"), s});
}

Csprng::Csprng(const Key& key) : key_(key) { ensure_sodium(); }

Csprng Csprng::fork(std::string_view label) const {
  return Csprng(sha256({key_, as_bytes("/"), as_bytes(label)}));
}

Csprng Csprng::fork(std::string_view label, std::uint64_t index) const {
  auto idx = le64(index);
  return Csprng(sha256({key_, as_bytes("/"), as_bytes(label), as_bytes("#"), idx}));
}

void Csprng::refill() {
  static constexpr std::array<std::uint8_t, crypto_stream_chacha20_NONCEBYTES> kNonce{};
  std::memset(buffer_.data(), 0, buffer_.size());
  crypto_stream_chacha20_xor_ic(buffer_.data(), buffer_.data(), buffer_.size(),
                                kNonce.data(), block_, key_.data());
  block_ += buffer_.size() / 64;
  pos_ = 0;
}

void Csprng::fill(std::span<std::uint8_t> out) {
  std::size_t done = 0;
  while (done < out.size()) {
    if (pos_ == buffer_.size()) refill();
    std::size_t n = std::min(out.size() - done, buffer_.size() - pos_);
    std::memcpy(out.data() + done, buffer_.data() + pos_, n);
    pos_ += n;
    done += n;
  }
}

std::uint64_t Csprng::next_u64() {
  std::array<std::uint8_t, 8> b{};
  fill(b);
  std::uint64_t v = 0;
  for (auto x : b) v = (v << 8) | x;
  return v;
}

std::uint64_t Csprng::uniform(std::uint64_t bound) {
  if (bound == 0) throw Error(ErrorCode::kInvalidArgument, "uniform(): zero bound");
  // Rejection keeps the result exactly uniform.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  for (;;) {
    std::uint64_t v = next_u64();
    if (v < limit) return v % bound;
  }
}

double Csprng::uniform_real() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

BigInt Csprng::random_bits(std::size_t bits) {
  if (bits == 0) return 0;
  Bytes b((bits + 7) / 8);
  fill(b);
  std::size_t excess = b.size() * 8 - bits;
  b[0] &= static_cast<std::uint8_t>(0xFFu >> excess);
  return from_bytes(b);
}

BigInt Csprng::uniform_below(const BigInt& bound) {
  if (bound <= 0) throw Error(ErrorCode::kInvalidArgument, "uniform_below(): bound must be positive");
  const std::size_t bits = bit_length(bound - 1);
  for (;;) {
    BigInt v = random_bits(bits);
    if (v < bound) return v;
  }
}

BigInt Csprng::unit_mod(const BigInt& n) {
  for (;;) {
    BigInt r = uniform_below(n);
    if (r != 0 && gcd(r, n) == 1) return r;
  }
}

}  // namespace swagg
