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

#include "swagg/bigint.hpp"

#include "swagg/error.hpp"

namespace swagg {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kOverflow: return "overflow";
    case ErrorCode::kScaleMismatch: return "scale mismatch";
    case ErrorCode::kInvalidPrime: return "invalid prime";
    case ErrorCode::kRandomnessNotUnit: return "randomness not a unit";
    case ErrorCode::kInvalidCiphertext: return "invalid ciphertext";
    case ErrorCode::kLengthMismatch: return "length mismatch";
    case ErrorCode::kProtocolOrder: return "protocol order";
    case ErrorCode::kInsufficientShares: return "insufficient shares";
    case ErrorCode::kAbortThreshold: return "below threshold";
    case ErrorCode::kConsistencyAbort: return "consistency check failed";
    case ErrorCode::kDegenerateEntropy: return "degenerate entropy";
    case ErrorCode::kEmptyAliveSet: return "empty alive set";
    case ErrorCode::kDuplicateSetup: return "duplicate setup";
    case ErrorCode::kProofFailure: return "proof failure";
    case ErrorCode::kToleranceViolation: return "tolerance violation";
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kInsufficientRows: return "insufficient rows";
    case ErrorCode::kSerialization: return "serialization error";
    case ErrorCode::kIo: return "i/o error";
  }
  return "unknown";
}

std::size_t bit_length(const BigInt& v) {
  if (v == 0) return 0;
  return mpz_sizeinbase(v.get_mpz_t(), 2);
}

Bytes to_bytes(const BigInt& v) {
  if (v == 0) return {};
  std::size_t count = (bit_length(v) + 7) / 8;
  Bytes out(count);
  std::size_t written = 0;
  mpz_export(out.data(), &written, 1, 1, 1, 0, v.get_mpz_t());
  out.resize(written);
  return out;
}

BigInt from_bytes(std::span<const std::uint8_t> bytes) {
  BigInt v;
  if (!bytes.empty()) {
    mpz_import(v.get_mpz_t(), bytes.size(), 1, 1, 1, 0, bytes.data());
  }
  return v;
}

Bytes to_fixed_bytes(const BigInt& v, std::size_t width) {
  Bytes mag = to_bytes(v);
  if (mag.size() > width) {
    throw Error(ErrorCode::kSerialization,
                "value needs " + std::to_string(mag.size()) +
                    " bytes, field holds " + std::to_string(width));
  }
  Bytes out(width - mag.size(), 0);
  out.insert(out.end(), mag.begin(), mag.end());
  return out;
}

BigInt pow_mod(const BigInt& base, const BigInt& exp, const BigInt& mod) {
  BigInt r;
  if (exp < 0) {
    BigInt inv = mod_inverse(base, mod);
    BigInt e = -exp;
    mpz_powm(r.get_mpz_t(), inv.get_mpz_t(), e.get_mpz_t(), mod.get_mpz_t());
    return r;
  }
  mpz_powm(r.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(), mod.get_mpz_t());
  return r;
}

BigInt mod_inverse(const BigInt& a, const BigInt& mod) {
  BigInt r;
  if (mpz_invert(r.get_mpz_t(), a.get_mpz_t(), mod.get_mpz_t()) == 0) {
    throw Error(ErrorCode::kInvalidArgument, "element has no modular inverse");
  }
  return r;
}

BigInt gcd(const BigInt& a, const BigInt& b) {
  BigInt r;
  mpz_gcd(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return r;
}

BigInt lcm(const BigInt& a, const BigInt& b) {
  BigInt r;
  mpz_lcm(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return r;
}

BigInt reduce(const BigInt& v, const BigInt& mod) {
  BigInt r;
  mpz_mod(r.get_mpz_t(), v.get_mpz_t(), mod.get_mpz_t());
  return r;
}

BigInt centered(const BigInt& residue, const BigInt& mod) {
  BigInt r = reduce(residue, mod);
  if (2 * r > mod) r -= mod;
  return r;
}

BigInt power_of_two(std::size_t exp) {
  BigInt r;
  mpz_setbit(r.get_mpz_t(), exp);
  return r;
}

BigInt round_shift_right(const BigInt& v, std::size_t shift) {
  if (shift == 0) return v;
  BigInt mag = abs(v);
  BigInt half = power_of_two(shift - 1);
  BigInt q = (mag + half) >> shift;
  return v < 0 ? BigInt(-q) : q;
}

void ByteWriter::u32(std::uint32_t v) {
  out_.push_back(static_cast<std::uint8_t>(v >> 24));
  out_.push_back(static_cast<std::uint8_t>(v >> 16));
  out_.push_back(static_cast<std::uint8_t>(v >> 8));
  out_.push_back(static_cast<std::uint8_t>(v));
}

void ByteWriter::big(const BigInt& v) {
  if (v < 0) throw Error(ErrorCode::kSerialization, "negative big integer on the wire");
  blob(to_bytes(v));
}

void ByteWriter::raw(std::span<const std::uint8_t> data) {
  out_.insert(out_.end(), data.begin(), data.end());
}

void ByteWriter::blob(std::span<const std::uint8_t> data) {
  u32(static_cast<std::uint32_t>(data.size()));
  raw(data);
}

void ByteReader::need(std::size_t n) const {
  if (data_.size() - pos_ < n) {
    throw Error(ErrorCode::kSerialization, "truncated payload");
  }
}

std::uint8_t ByteReader::u8() {
  need(1);
  return data_[pos_++];
}

std::uint32_t ByteReader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v = (v << 8) | data_[pos_++];
  return v;
}

BigInt ByteReader::big() {
  Bytes b = blob();
  return from_bytes(b);
}

Bytes ByteReader::raw(std::size_t n) {
  need(n);
  Bytes out(data_.begin() + static_cast<std::ptrdiff_t>(pos_),
            data_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
  pos_ += n;
  return out;
}

Bytes ByteReader::blob() {
  std::uint32_t n = u32();
  return raw(n);
}

void ByteReader::expect_done() const {
  if (!done()) throw Error(ErrorCode::kSerialization, "trailing bytes in payload");
}

}  // namespace swagg
