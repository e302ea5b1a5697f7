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

#include "swagg/shamir.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <map>

#include "swagg/error.hpp"

namespace swagg {
namespace {

std::vector<std::vector<std::size_t>> subsets_of_size(std::size_t n, std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + static_cast<long>(k), true);
  do {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < n; ++i)
      if (pick[i]) s.push_back(i);
    out.push_back(s);
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return out;
}

std::vector<ShamirShare> pick(const std::vector<ShamirShare>& all,
                              const std::vector<std::size_t>& idx) {
  std::vector<ShamirShare> out;
  for (auto i : idx) out.push_back(all[i]);
  return out;
}

TEST(Shamir, HandExampleGf97) {
  std::vector<BigInt> coeffs{3};
  auto shares = share_with_coefficients(5, coeffs, 3, 97);
  ASSERT_EQ(shares.size(), 3u);
  EXPECT_EQ(shares[0].index, 1u);
  EXPECT_EQ(shares[0].value, 8);
  EXPECT_EQ(shares[1].value, 11);
  EXPECT_EQ(shares[2].value, 14);
  EXPECT_EQ(shares[0].threshold, 2u);

  // Lagrange by hand at x = 0 from (1, 8), (3, 14): 8 * 3/2 + 14 * (-1/2) = 5.
  std::vector<ShamirShare> two{shares[0], shares[2]};
  EXPECT_EQ(reconstruct(two), 5);
}

TEST(Shamir, ThresholdOneIsConstant) {
  Csprng rng(1);
  auto shares = share(1234, 1, 3, mersenne127(), rng);
  for (const auto& s : shares) EXPECT_EQ(s.value, 1234);
}

TEST(Shamir, ZeroSecret) {
  Csprng rng(2);
  auto shares = share(0, 3, 5, mersenne127(), rng);
  for (const auto& sub : subsets_of_size(5, 3)) EXPECT_EQ(reconstruct(pick(shares, sub)), 0);
}

TEST(Shamir, ParameterErrors) {
  Csprng rng(3);
  EXPECT_THROW(share(1, 4, 3, mersenne127(), rng), Error);
  EXPECT_THROW(share(1, 0, 3, mersenne127(), rng), Error);
  EXPECT_THROW(share(1, 2, 7, 7, rng), Error);
  EXPECT_THROW(share(97, 2, 3, 97, rng), Error);
}

TEST(Shamir, ExhaustiveSubsetsUpToSix) {
  Csprng rng(4);
  for (std::size_t n = 1; n <= 6; ++n) {
    for (std::size_t t = 1; t <= n; ++t) {
      BigInt secret = rng.uniform_below(mersenne127());
      auto shares = share(secret, t, n, mersenne127(), rng);
      for (std::size_t k = t; k <= n; ++k) {
        for (const auto& sub : subsets_of_size(n, k)) {
          EXPECT_EQ(reconstruct(pick(shares, sub)), secret) << n << " " << t << " " << k;
        }
      }
      if (t > 1) {
        for (const auto& sub : subsets_of_size(n, t - 1)) {
          try {
            reconstruct(pick(shares, sub));
            FAIL();
          } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::kInsufficientShares);
          }
        }
      }
    }
  }
}

TEST(Shamir, DuplicateIndicesDoNotCount) {
  Csprng rng(5);
  auto shares = share(42, 3, 5, mersenne127(), rng);
  std::vector<ShamirShare> dup{shares[0], shares[0], shares[1]};
  EXPECT_THROW(reconstruct(dup), Error);
}

TEST(Shamir, OrderInvariant) {
  Csprng rng(6);
  auto shares = share(999, 4, 6, mersenne127(), rng);
  auto sub = pick(shares, {5, 1, 3, 0});
  BigInt a = reconstruct(sub);
  std::reverse(sub.begin(), sub.end());
  EXPECT_EQ(reconstruct(sub), a);
  EXPECT_EQ(a, 999);
}

// For t = 3, n = 4 over GF(251): for every pair of holders, the joint
// distribution of their two shares over all 251^2 polynomials is the same for
// any secret (each pair appears exactly once).
TEST(Shamir, MarginalEqualityGf251) {
  const BigInt p = 251;
  for (const auto& holders : subsets_of_size(4, 2)) {
    std::map<std::pair<long, long>, int> hist0, hist1;
    for (long a1 = 0; a1 < 251; ++a1) {
      for (long a2 = 0; a2 < 251; ++a2) {
        std::vector<BigInt> coeffs{a1, a2};
        auto s0 = share_with_coefficients(17, coeffs, 4, p);
        auto s1 = share_with_coefficients(200, coeffs, 4, p);
        ++hist0[{s0[holders[0]].value.get_si(), s0[holders[1]].value.get_si()}];
        ++hist1[{s1[holders[0]].value.get_si(), s1[holders[1]].value.get_si()}];
      }
    }
    EXPECT_EQ(hist0, hist1);
    EXPECT_EQ(hist0.size(), 251u * 251u);
  }
}

TEST(Shamir, LagrangeBasisReuse) {
  Csprng rng(7);
  std::vector<std::uint32_t> idx{2, 4, 5};
  LagrangeBasis basis(idx, mersenne127());
  for (int i = 0; i < 10; ++i) {
    BigInt secret = rng.uniform_below(mersenne127());
    auto shares = share(secret, 3, 5, mersenne127(), rng);
    std::vector<BigInt> vals{shares[1].value, shares[3].value, shares[4].value};
    EXPECT_EQ(basis.interpolate(vals), secret);
  }
}

TEST(Shamir, Serialization) {
  Csprng rng(8);
  auto shares = share(power_of_two(126) + 5, 2, 3, mersenne127(), rng);
  Bytes b = serialize_share(shares[2]);
  ASSERT_EQ(b.size(), 20u);
  EXPECT_EQ(b[0], 0);
  EXPECT_EQ(b[3], 3);
  EXPECT_EQ(deserialize_share(b, 2, mersenne127()), shares[2]);
  Bytes longer = b;
  longer.push_back(0);
  EXPECT_THROW(deserialize_share(longer, 2, mersenne127()), Error);
}

}  // namespace
}  // namespace swagg
