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

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "swagg/logreg.hpp"
#include "swagg/protocol.hpp"

namespace swagg {

// --- Datasets ---------------------------------------------------------------------

/// Numeric CSV: feature columns then a 0/1 label column. A first row that does
/// not parse as numbers is taken as a header. Throws kParse naming the line.
Dataset parse_csv(std::string_view text);
Dataset read_csv(const std::string& path);
void write_csv(const std::string& path, const Dataset& d);

/// Maps every feature column onto [0, 1]; constant columns become 0.
void min_max_normalize(Dataset& d);

struct FederatedData {
  std::vector<Dataset> clients;
  Dataset benchmark;
};

/// Normalizes, holds out a random benchmark of `benchmark` rows, and gives
/// each client `per_client` rows drawn with replacement from the rest.
/// Throws kInsufficientRows.
FederatedData split_dataset(Dataset all, std::size_t per_client, std::size_t n_clients,
                            std::size_t benchmark, Csprng& rng);
FederatedData load_dataset(const std::string& path, std::size_t per_client, std::size_t n_clients,
                           std::size_t benchmark, Csprng& rng);

/// Labels from a fixed logistic model with noise; features uniform in [0, 1).
Dataset synthetic_dataset(std::size_t rows, std::size_t features, Csprng& rng);

// --- Experiments --------------------------------------------------------------------

struct ExperimentSpec {
  ProtocolConfig protocol;
  /// Synthetic data when empty.
  std::string dataset_path;
  std::size_t synthetic_features = 4;
  std::size_t per_client = 20;
  std::size_t benchmark_size = 500;
  std::size_t rounds = 1;
  /// Also run the mask-only baseline on the same seeds.
  bool compare_baseline = false;
};

struct StepRow {
  std::string step;
  double user_seconds = 0;    // mean per participating client
  double server_seconds = 0;
  std::uint64_t user_bytes = 0;
  std::uint64_t server_bytes = 0;

  friend bool operator==(const StepRow&, const StepRow&) = default;
};

struct RoundReport {
  std::uint32_t round = 0;
  bool completed = false;
  std::string abort_code;
  std::string abort_step;
  std::string abort_reason;
  double r1 = 0;           // configured
  double r2 = 0;
  double r1_realized = 0;  // (|U| - |U4|) / n
  double r2_realized = 0;  // (|U4| - |U6|) / n
  std::vector<StepRow> steps;  // Init, ComE, PoKE, PoKM, WAgg
  StepRow total;
  std::vector<std::uint32_t> excluded;
  std::vector<std::uint32_t> dropped;
  std::size_t survivors = 0;
  double max_oracle_error = 0;
  /// CompE and PoKE payload bytes exchanged with each client.
  std::map<std::uint32_t, std::uint64_t> disparity_bytes;

  friend bool operator==(const RoundReport&, const RoundReport&) = default;
};

struct BaselineComparison {
  double time_ratio = 0;   // server seconds, full / baseline
  double bytes_ratio = 0;  // all bytes, full / baseline
  StepRow baseline_total;

  friend bool operator==(const BaselineComparison&, const BaselineComparison&) = default;
};

struct MetricsReport {
  std::size_t clients = 0;
  std::size_t threshold = 0;
  std::size_t key_bits = 0;
  int kappa = 0;
  double alpha = 0;
  std::uint64_t seed = 0;
  bool baseline = false;
  std::size_t per_client = 0;
  std::size_t benchmark_size = 0;
  std::vector<RoundReport> rounds;
  std::optional<BaselineComparison> comparison;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

/// Digest of the transcript of the (full) run, hex.
struct ExperimentResult {
  MetricsReport report;
  std::string transcript_sha256;
  Transcript transcript;
};

ExperimentResult run_experiment(const ExperimentSpec& spec);
/// Same, on data the caller already split.
ExperimentResult run_experiment(const ExperimentSpec& spec, const FederatedData& data);

enum class ReportFormat { kJson, kCsv, kMarkdown };

ReportFormat parse_report_format(std::string_view s);
std::string render_report(const MetricsReport& report, ReportFormat format);
/// Inverse of the JSON rendering.
MetricsReport parse_report_json(std::string_view text);
/// Writes render_report() to `path`; throws kIo.
void emit_report(const MetricsReport& report, ReportFormat format, const std::string& path);

}  // namespace swagg
