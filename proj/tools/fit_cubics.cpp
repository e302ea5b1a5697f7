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

// Regenerates include/swagg/cubic_constants.hpp:
//   fit_cubics > include/swagg/cubic_constants.hpp

#include <cmath>
#include <cstdio>
#include <string>

#include "swagg/logreg.hpp"

namespace {

constexpr const char* kLicense =
    "/*\n"
    " * Copyright 2026 The swagg Authors\n"
    " *\n"
    " * Licensed under the Apache License, Version 2.0 (the \"License\");\n"
    " * you may not use this file except in compliance with the License.\n"
    " * You may obtain a copy of the License at\n"
    " *\n"
    " *     https://www.apache.org/licenses/LICENSE-2.0\n"
    " *\n"
    " * Unless required by applicable law or agreed to in writing, software\n"
    " * distributed under the License is distributed on an \"AS IS\" BASIS,\n"
    " * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.\n"
    " * See the License for the specific language governing permissions and\n"
    " * limitations under the License.\n"
    " */\n";

constexpr int kFractionBits = 27;
constexpr std::size_t kGrid = 1000000;

// Round up to three significant digits.
double round_up(double v) {
  if (v <= 0) return 0;
  const double e = std::pow(10.0, std::floor(std::log10(v)) - 2);
  return std::ceil(v / e) * e;
}

// Largest |poly' - target'| on the grid by finite differences; bounds how far
// the error can move between grid points.
double slope_bound(const swagg::CubicPoly& p, swagg::CubicTarget t) {
  const double h = (p.hi - p.lo) / static_cast<double>(kGrid - 1);
  double worst = 0;
  double prev = p(p.lo) - swagg::evaluate_target(t, p.lo);
  for (std::size_t i = 1; i < kGrid; ++i) {
    const double x = p.lo + h * static_cast<double>(i);
    const double cur = p(x) - swagg::evaluate_target(t, x);
    worst = std::max(worst, std::fabs(cur - prev) / h);
    prev = cur;
  }
  return worst;
}

void emit(const char* name, swagg::CubicTarget t) {
  const swagg::CubicPoly fit = swagg::fit_cubic(t);
  const swagg::FixedCubic q = swagg::FixedCubic::quantize(fit, kFractionBits);
  swagg::CubicPoly frozen = q.as_real();
  frozen.lo = fit.lo;
  frozen.hi = fit.hi;
  const double h = (frozen.hi - frozen.lo) / static_cast<double>(kGrid - 1);
  const double measured = swagg::max_abs_error(frozen, t, kGrid);
  const double bound = round_up(measured + 2 * slope_bound(frozen, t) * h);
  std::printf("// %s: measured max error %.6g\n", std::string(swagg::to_string(t)).c_str(),
              measured);
  std::printf("inline constexpr Frozen %s{%s, %s, %s, %s, %d, %.1f, %.1f, %.3g};\n", name,
              q.c0.get_str().c_str(), q.c1.get_str().c_str(), q.c2.get_str().c_str(),
              q.c3.get_str().c_str(), kFractionBits, frozen.lo, frozen.hi, bound);
}

}  // namespace

int main() {
  std::printf(
      "%s\n"
      "#pragma once\n\n"
      "// Generated by tools/fit_cubics. Least-squares cubics on 1000 nodes over\n"
      "// [-6, 6], coefficients c_k / 2^27.\n\n"
      "namespace swagg::cubic_constants {\n\n"
      "struct Frozen {\n"
      "  long long c0, c1, c2, c3;\n"
      "  int fraction_bits;\n"
      "  double lo, hi;\n"
      "  double error_bound;\n"
      "};\n\n",
      kLicense);
  emit("kSigmoid", swagg::CubicTarget::kSigmoid);
  emit("kNegLogSigmoid", swagg::CubicTarget::kNegLogSigmoid);
  emit("kNegLogOneMinusSigmoid", swagg::CubicTarget::kNegLogOneMinusSigmoid);
  std::printf("\n}  // namespace swagg::cubic_constants\n");
  return 0;
}
