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

// Runs simulated federated rounds and prints the per-step cost report.
//
//   swagg --clients 8 --key-bits 512 --dropout-phase2 0.1 --adversary entropy:3
//   swagg --dataset data.csv --per-client 100 --rounds 3 --format json --out run.json

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "swagg/error.hpp"
#include "swagg/harness.hpp"

namespace {

// behavior:target[:round]
swagg::AdversaryScript parse_adversary(const std::string& s) {
  const auto a = s.find(':');
  if (a == std::string::npos) {
    throw swagg::Error(swagg::ErrorCode::kParse, "adversary '" + s + "': want behavior:target[:round]");
  }
  swagg::AdversaryScript script;
  script.behavior = swagg::parse_adversary_behavior(s.substr(0, a));
  const auto b = s.find(':', a + 1);
  try {
    script.target = static_cast<swagg::PartyId>(std::stoul(s.substr(a + 1, b - a - 1)));
    if (b != std::string::npos) script.round = static_cast<std::uint32_t>(std::stoul(s.substr(b + 1)));
  } catch (const std::logic_error&) {
    throw swagg::Error(swagg::ErrorCode::kParse, "adversary '" + s + "': bad number");
  }
  return script;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Secure weighted aggregation simulator"};
  swagg::ExperimentSpec spec;
  auto& p = spec.protocol;
  p.key_bits = 512;
  std::vector<std::string> adversaries;
  std::string out;
  std::string format = "markdown";
  bool fiat_shamir = false;

  app.add_option("--clients", p.n_clients, "Number of clients")->check(CLI::PositiveNumber);
  app.add_option("--threshold", p.threshold, "Shamir threshold (0 = floor(2n/3)+1)");
  app.add_option("--key-bits", p.key_bits, "Paillier modulus bits");
  app.add_option("--kappa", p.disparity.kappa, "Statistical masking parameter");
  app.add_option("--alpha", p.weights.alpha, "Weight exponent on credibility");
  app.add_option("--epochs", p.training.epochs, "Local training epochs");
  app.add_option("--dataset", spec.dataset_path, "CSV dataset (synthetic when omitted)");
  app.add_option("--features", spec.synthetic_features, "Synthetic feature count");
  app.add_option("--per-client", spec.per_client, "Rows per client");
  app.add_option("--benchmark-size", spec.benchmark_size, "Benchmark rows held by the server");
  app.add_option("--dropout-phase1", p.dropout_phase1, "Fraction dropping before the weights")
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--dropout-phase2", p.dropout_phase2, "Fraction dropping after the weights")
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--adversary", adversaries,
                 "behavior:target[:round], behavior one of entropy, model, view");
  app.add_option("--seed", p.seed, "Master seed");
  app.add_option("--rounds", spec.rounds, "FL rounds")->check(CLI::PositiveNumber);
  app.add_flag("--baseline", p.baseline, "Mask-only aggregation");
  app.add_flag("--compare-baseline", spec.compare_baseline, "Also run the baseline and report ratios");
  app.add_flag("--binary-ce", p.disparity.binary_ce, "Both halves of the cross-entropy");
  app.add_flag("--fiat-shamir", fiat_shamir, "Non-interactive proof challenges");
  app.add_flag("--strict-entropy", p.weights.strict, "Abort on E near zero instead of clamping");
  app.add_option("--out", out, "Write the report here instead of stdout");
  app.add_option("--format", format, "json, csv or markdown");
  CLI11_PARSE(app, argc, argv);

  try {
    p.disparity.proof.fiat_shamir = fiat_shamir;
    for (const auto& a : adversaries) p.adversaries.push_back(parse_adversary(a));
    const swagg::ReportFormat fmt = swagg::parse_report_format(format);
    const swagg::ExperimentResult r = swagg::run_experiment(spec);
    if (out.empty()) {
      std::cout << swagg::render_report(r.report, fmt);
    } else {
      swagg::emit_report(r.report, fmt, out);
    }
    std::fprintf(stderr, "transcript sha256 %s\n", r.transcript_sha256.c_str());
    for (const auto& round : r.report.rounds) {
      if (!round.completed) return 2;
    }
    return 0;
  } catch (const swagg::Error& e) {
    std::fprintf(stderr, "swagg: %s: %s\n", std::string(swagg::to_string(e.code())).c_str(), e.what());
    return 1;
  }
}
