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

// Generated by tools/fit_cubics. Least-squares cubics on 1000 nodes over
// [-6, 6], coefficients c_k / 2^27.

namespace swagg::cubic_constants {

struct Frozen {
  long long c0, c1, c2, c3;
  int fraction_bits;
  double lo, hi;
  double error_bound;
};

// sigmoid: measured max error 0.0809647
inline constexpr Frozen kSigmoid{67108864, 24226957, 0, -414128, 27, -6.0, 6.0, 0.081};
// neg_log_sigmoid: measured max error 0.22762
inline constexpr Frozen kNegLogSigmoid{112690131, -67108864, 8912388, 0, 27, -6.0, 6.0, 0.228};
// neg_log_one_minus_sigmoid: measured max error 0.22762
inline constexpr Frozen kNegLogOneMinusSigmoid{112690131, 67108864, 8912388, 0, 27, -6.0, 6.0, 0.228};

}  // namespace swagg::cubic_constants
