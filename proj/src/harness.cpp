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

#include "swagg/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "swagg/error.hpp"

namespace swagg {

// --- CSV ----------------------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                          : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::optional<double> parse_number(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

Error parse_error(std::size_t line, const std::string& what) {
  return Error(ErrorCode::kParse, "line " + std::to_string(line) + ": " + what);
}

}  // namespace

Dataset parse_csv(std::string_view text) {
  Dataset d;
  std::size_t line_no = 0;
  std::size_t columns = 0;
  bool first = true;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    std::vector<double> values;
    bool numeric = true;
    for (auto f : fields) {
      auto v = parse_number(f);
      if (!v) {
        numeric = false;
        break;
      }
      values.push_back(*v);
    }
    if (first) {
      first = false;
      columns = fields.size();
      if (!numeric) continue;  // header
    }
    if (fields.size() != columns) {
      throw parse_error(line_no, "expected " + std::to_string(columns) + " fields, found " +
                                     std::to_string(fields.size()));
    }
    if (!numeric) throw parse_error(line_no, "non-numeric field");
    if (columns < 2) throw parse_error(line_no, "need at least one feature and a label");
    const double label = values.back();
    if (label != 0.0 && label != 1.0) throw parse_error(line_no, "label must be 0 or 1");
    values.pop_back();
    d.x.push_back(std::move(values));
    d.y.push_back(static_cast<int>(label));
  }
  return d;
}

Dataset read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

void write_csv(const std::string& path, const Dataset& d) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  for (std::size_t k = 0; k < d.features(); ++k) out << "x" << k << ",";
  out << "label\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (double v : d.x[i]) out << v << ",";
    out << d.y[i] << "\n";
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path);
}

void min_max_normalize(Dataset& d) {
  const std::size_t f = d.features();
  for (std::size_t k = 0; k < f; ++k) {
    double lo = d.x[0][k], hi = d.x[0][k];
    for (const auto& row : d.x) {
      lo = std::min(lo, row[k]);
      hi = std::max(hi, row[k]);
    }
    for (auto& row : d.x) row[k] = hi > lo ? (row[k] - lo) / (hi - lo) : 0.0;
  }
}

FederatedData split_dataset(Dataset all, std::size_t per_client, std::size_t n_clients,
                            std::size_t benchmark, Csprng& rng) {
  const std::size_t need = benchmark + (per_client > 0 && n_clients > 0 ? 1 : 0);
  if (all.size() < need || all.size() == 0) {
    throw Error(ErrorCode::kInsufficientRows,
                std::to_string(all.size()) + " rows cannot hold a benchmark of " +
                    std::to_string(benchmark) + " plus client samples");
  }
  min_max_normalize(all);
  std::vector<std::size_t> order(all.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = 0; i + 1 < order.size(); ++i) {
    const std::size_t j = i + rng.uniform(order.size() - i);
    std::swap(order[i], order[j]);
  }
  FederatedData out;
  for (std::size_t i = 0; i < benchmark; ++i) {
    out.benchmark.x.push_back(all.x[order[i]]);
    out.benchmark.y.push_back(all.y[order[i]]);
  }
  const std::size_t rest = order.size() - benchmark;
  for (std::size_t c = 0; c < n_clients; ++c) {
    Dataset d;
    for (std::size_t i = 0; i < per_client; ++i) {
      const std::size_t pick = order[benchmark + rng.uniform(rest)];
      d.x.push_back(all.x[pick]);
      d.y.push_back(all.y[pick]);
    }
    out.clients.push_back(std::move(d));
  }
  return out;
}

FederatedData load_dataset(const std::string& path, std::size_t per_client, std::size_t n_clients,
                           std::size_t benchmark, Csprng& rng) {
  return split_dataset(read_csv(path), per_client, n_clients, benchmark, rng);
}

Dataset synthetic_dataset(std::size_t rows, std::size_t features, Csprng& rng) {
  static const double kWeights[] = {2.0, -1.5, 1.0, -0.5, 0.75, -1.25};
  Dataset d;
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<double> x(features);
    double l = 0;
    for (std::size_t k = 0; k < features; ++k) {
      x[k] = rng.uniform_real();
      l += kWeights[k % 6] * (x[k] - 0.5);
    }
    d.x.push_back(std::move(x));
    d.y.push_back(rng.uniform_real() < sigmoid(2.5 * l) ? 1 : 0);
  }
  return d;
}

// --- Experiments ----------------------------------------------------------------------

namespace {

std::vector<std::uint32_t> ids_of(const IdList& v) { return {v.begin(), v.end()}; }

RoundReport summarize(const RoundResult& r, const ProtocolConfig& c,
                      std::span<const MessageRecord> records) {
  RoundReport out;
  out.round = r.round;
  out.completed = r.completed;
  if (r.abort_code) out.abort_code = std::string(to_string(*r.abort_code));
  if (r.abort_step) out.abort_step = std::string(to_string(*r.abort_step));
  out.abort_reason = r.abort_reason;
  out.r1 = c.dropout_phase1;
  out.r2 = c.dropout_phase2;
  const double n = static_cast<double>(c.n_clients);
  if (r.completed) {
    out.r1_realized = static_cast<double>(r.sets.u.size() - r.sets.u4.size()) / n;
    out.r2_realized = static_cast<double>(r.sets.u4.size() - r.sets.u6.size()) / n;
  }
  for (Step s : kRoundSteps) {
    const StepMetrics& m = r.metrics.at(s);
    StepRow row{std::string(to_string(s)), m.user_seconds_mean, m.server_seconds, m.user_bytes,
                m.server_bytes};
    out.total.user_seconds += row.user_seconds;
    out.total.server_seconds += row.server_seconds;
    out.total.user_bytes += row.user_bytes;
    out.total.server_bytes += row.server_bytes;
    out.steps.push_back(std::move(row));
  }
  out.total.step = "Total";
  out.excluded = ids_of(r.excluded);
  out.dropped = ids_of(r.dropped);
  out.survivors = r.sets.u6.size();
  out.max_oracle_error = r.max_oracle_error;
  for (const auto& m : records) {
    if (m.step != Step::kCompE && m.step != Step::kPoKE) continue;
    const PartyId client = m.sender == kServerId ? m.receiver : m.sender;
    out.disparity_bytes[client] += m.payload.size();
  }
  return out;
}

struct RunOutput {
  std::vector<RoundReport> rounds;
  Transcript transcript;
};

RunOutput execute(const ProtocolConfig& config, const FederatedData& data, std::size_t rounds) {
  RunOutput out;
  ProtocolRun run(config, data.clients, data.benchmark);
  try {
    run.setup();
  } catch (const Error& e) {
    RoundReport failed;
    failed.abort_code = std::string(to_string(e.code()));
    failed.abort_step = "Setup";
    failed.abort_reason = e.what();
    out.rounds.push_back(failed);
    out.transcript = run.transcript();
    return out;
  }
  for (std::size_t i = 0; i < rounds; ++i) {
    const std::size_t before = run.transcript().records().size();
    try {
      const RoundResult r = run.run_round();
      const auto& all = run.transcript().records();
      out.rounds.push_back(summarize(r, config, std::span(all).subspan(before)));
    } catch (const Error& e) {
      RoundReport failed;
      failed.round = static_cast<std::uint32_t>(i);
      failed.abort_code = std::string(to_string(e.code()));
      failed.abort_reason = e.what();
      failed.r1 = config.dropout_phase1;
      failed.r2 = config.dropout_phase2;
      out.rounds.push_back(failed);
      break;
    }
  }
  out.transcript = run.transcript();
  return out;
}

std::string hex(std::span<const std::uint8_t> b) {
  static const char* d = "0123456789abcdef";
  std::string s;
  for (auto v : b) {
    s.push_back(d[v >> 4]);
    s.push_back(d[v & 15]);
  }
  return s;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, const FederatedData& data) {
  validate_config(spec.protocol);
  ExperimentResult res;
  MetricsReport& rep = res.report;
  rep.clients = spec.protocol.n_clients;
  rep.threshold = spec.protocol.effective_threshold();
  rep.key_bits = spec.protocol.key_bits;
  rep.kappa = spec.protocol.disparity.kappa;
  rep.alpha = spec.protocol.weights.alpha;
  rep.seed = spec.protocol.seed;
  rep.baseline = spec.protocol.baseline;
  rep.per_client = data.clients.empty() ? 0 : data.clients.front().size();
  rep.benchmark_size = data.benchmark.size();

  RunOutput full = execute(spec.protocol, data, spec.rounds);
  rep.rounds = std::move(full.rounds);
  res.transcript = std::move(full.transcript);
  res.transcript_sha256 = hex(res.transcript.digest());

  if (spec.compare_baseline && !spec.protocol.baseline) {
    ProtocolConfig base = spec.protocol;
    base.baseline = true;
    RunOutput b = execute(base, data, spec.rounds);
    StepRow full_total, base_total;
    for (const auto& r : rep.rounds) {
      full_total.server_seconds += r.total.server_seconds;
      full_total.user_bytes += r.total.user_bytes;
      full_total.server_bytes += r.total.server_bytes;
    }
    for (const auto& r : b.rounds) {
      base_total.server_seconds += r.total.server_seconds;
      base_total.user_seconds += r.total.user_seconds;
      base_total.user_bytes += r.total.user_bytes;
      base_total.server_bytes += r.total.server_bytes;
    }
    base_total.step = "Total";
    BaselineComparison cmp;
    cmp.baseline_total = base_total;
    const double base_bytes = static_cast<double>(base_total.user_bytes + base_total.server_bytes);
    cmp.bytes_ratio = base_bytes > 0
                          ? static_cast<double>(full_total.user_bytes + full_total.server_bytes) / base_bytes
                          : 0.0;
    cmp.time_ratio = base_total.server_seconds > 0
                         ? full_total.server_seconds / base_total.server_seconds
                         : 0.0;
    rep.comparison = cmp;
  }
  return res;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  Csprng rng = Csprng(spec.protocol.seed).fork("dataset");
  FederatedData data;
  if (spec.dataset_path.empty()) {
    const std::size_t rows =
        spec.benchmark_size + std::max<std::size_t>(spec.per_client * spec.protocol.n_clients, 1);
    Dataset all = synthetic_dataset(rows, spec.synthetic_features, rng);
    data = split_dataset(std::move(all), spec.per_client, spec.protocol.n_clients,
                         spec.benchmark_size, rng);
  } else {
    data = load_dataset(spec.dataset_path, spec.per_client, spec.protocol.n_clients,
                        spec.benchmark_size, rng);
  }
  return run_experiment(spec, data);
}

// --- Reports ------------------------------------------------------------------------------

namespace {

using nlohmann::json;

json to_json(const StepRow& r) {
  return {{"step", r.step},
          {"user_seconds", r.user_seconds},
          {"server_seconds", r.server_seconds},
          {"user_bytes", r.user_bytes},
          {"server_bytes", r.server_bytes}};
}

StepRow step_from_json(const json& j) {
  return {j.at("step").get<std::string>(), j.at("user_seconds").get<double>(),
          j.at("server_seconds").get<double>(), j.at("user_bytes").get<std::uint64_t>(),
          j.at("server_bytes").get<std::uint64_t>()};
}

json to_json(const RoundReport& r) {
  json steps = json::array();
  for (const auto& s : r.steps) steps.push_back(to_json(s));
  json disparity = json::object();
  for (const auto& [id, b] : r.disparity_bytes) disparity[std::to_string(id)] = b;
  return {{"round", r.round},
          {"completed", r.completed},
          {"abort_code", r.abort_code},
          {"abort_step", r.abort_step},
          {"abort_reason", r.abort_reason},
          {"R1", r.r1},
          {"R2", r.r2},
          {"R1_realized", r.r1_realized},
          {"R2_realized", r.r2_realized},
          {"steps", steps},
          {"total", to_json(r.total)},
          {"excluded", r.excluded},
          {"dropped", r.dropped},
          {"survivors", r.survivors},
          {"max_oracle_error", r.max_oracle_error},
          {"disparity_bytes", disparity}};
}

RoundReport round_from_json(const json& j) {
  RoundReport r;
  r.round = j.at("round").get<std::uint32_t>();
  r.completed = j.at("completed").get<bool>();
  r.abort_code = j.at("abort_code").get<std::string>();
  r.abort_step = j.at("abort_step").get<std::string>();
  r.abort_reason = j.at("abort_reason").get<std::string>();
  r.r1 = j.at("R1").get<double>();
  r.r2 = j.at("R2").get<double>();
  r.r1_realized = j.at("R1_realized").get<double>();
  r.r2_realized = j.at("R2_realized").get<double>();
  for (const auto& s : j.at("steps")) r.steps.push_back(step_from_json(s));
  r.total = step_from_json(j.at("total"));
  r.excluded = j.at("excluded").get<std::vector<std::uint32_t>>();
  r.dropped = j.at("dropped").get<std::vector<std::uint32_t>>();
  r.survivors = j.at("survivors").get<std::size_t>();
  r.max_oracle_error = j.at("max_oracle_error").get<double>();
  for (const auto& [k, v] : j.at("disparity_bytes").items()) {
    r.disparity_bytes[static_cast<std::uint32_t>(std::stoul(k))] = v.get<std::uint64_t>();
  }
  return r;
}

json to_json(const MetricsReport& m) {
  json rounds = json::array();
  for (const auto& r : m.rounds) rounds.push_back(to_json(r));
  json j = {{"clients", m.clients},     {"threshold", m.threshold},
            {"key_bits", m.key_bits},   {"kappa", m.kappa},
            {"alpha", m.alpha},         {"seed", m.seed},
            {"baseline", m.baseline},   {"per_client", m.per_client},
            {"benchmark_size", m.benchmark_size}, {"rounds", rounds}};
  if (m.comparison) {
    j["comparison"] = {{"time_ratio", m.comparison->time_ratio},
                       {"bytes_ratio", m.comparison->bytes_ratio},
                       {"baseline_total", to_json(m.comparison->baseline_total)}};
  } else {
    j["comparison"] = nullptr;
  }
  return j;
}

std::string percent(double f) {
  std::ostringstream os;
  os << std::setprecision(4) << f * 100 << "%";
  return os.str();
}

std::string cell(double seconds, std::uint64_t bytes) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << seconds << "/" << std::setprecision(4)
     << static_cast<double>(bytes) / 1e6;
  return os.str();
}

}  // namespace

ReportFormat parse_report_format(std::string_view s) {
  if (s == "json") return ReportFormat::kJson;
  if (s == "csv") return ReportFormat::kCsv;
  if (s == "markdown" || s == "md") return ReportFormat::kMarkdown;
  throw Error(ErrorCode::kParse, "unknown report format '" + std::string(s) + "'");
}

std::string render_report(const MetricsReport& report, ReportFormat format) {
  std::ostringstream os;
  switch (format) {
    case ReportFormat::kJson:
      os << to_json(report).dump(2) << "\n";
      break;
    case ReportFormat::kCsv:
      os << "round,R1,R2,step,user_seconds,server_seconds,user_bytes,server_bytes\n";
      os << std::setprecision(17);
      for (const auto& r : report.rounds) {
        auto row = [&](const StepRow& s) {
          os << r.round << "," << r.r1 << "," << r.r2 << "," << s.step << "," << s.user_seconds
             << "," << s.server_seconds << "," << s.user_bytes << "," << s.server_bytes << "\n";
        };
        for (const auto& s : r.steps) row(s);
        row(r.total);
      }
      break;
    case ReportFormat::kMarkdown:
      os << "Run time (s) / communication (MB) per step; n = " << report.clients
         << ", t = " << report.threshold << ", " << report.key_bits << "-bit keys"
         << (report.baseline ? ", mask-only baseline" : "") << ".\n\n";
      os << "| Party | R1 | R2 | Init | ComE | PoKE | PoKM | WAgg | Total |\n";
      os << "|---|---|---|---|---|---|---|---|---|\n";
      for (const auto& r : report.rounds) {
        for (int server = 0; server < 2; ++server) {
          os << "| " << (server ? "Server" : "User") << " | " << percent(r.r1) << " | "
             << percent(r.r2) << " |";
          if (r.steps.empty()) {
            os << " - | - | - | - | - | - |\n";
            continue;
          }
          for (const auto& s : r.steps) {
            os << " " << (server ? cell(s.server_seconds, s.server_bytes)
                                 : cell(s.user_seconds, s.user_bytes))
               << " |";
          }
          os << " "
             << (server ? cell(r.total.server_seconds, r.total.server_bytes)
                        : cell(r.total.user_seconds, r.total.user_bytes))
             << " |\n";
        }
      }
      for (const auto& r : report.rounds) {
        if (!r.completed) {
          os << "\nRound " << r.round << " aborted";
          if (!r.abort_step.empty()) os << " in " << r.abort_step;
          os << ": " << r.abort_code << " (" << r.abort_reason << ")\n";
        } else if (!r.excluded.empty()) {
          os << "\nRound " << r.round << " excluded clients:";
          for (auto id : r.excluded) os << " " << id;
          os << "\n";
        }
      }
      if (report.comparison) {
        os << "\nVersus mask-only baseline: " << std::setprecision(4)
           << report.comparison->time_ratio << "x server time, "
           << report.comparison->bytes_ratio << "x bytes.\n";
      }
      break;
  }
  return os.str();
}

MetricsReport parse_report_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("report json: ") + e.what());
  }
  try {
    MetricsReport m;
    m.clients = j.at("clients").get<std::size_t>();
    m.threshold = j.at("threshold").get<std::size_t>();
    m.key_bits = j.at("key_bits").get<std::size_t>();
    m.kappa = j.at("kappa").get<int>();
    m.alpha = j.at("alpha").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.baseline = j.at("baseline").get<bool>();
    m.per_client = j.at("per_client").get<std::size_t>();
    m.benchmark_size = j.at("benchmark_size").get<std::size_t>();
    for (const auto& r : j.at("rounds")) m.rounds.push_back(round_from_json(r));
    if (!j.at("comparison").is_null()) {
      const auto& c = j.at("comparison");
      BaselineComparison cmp;
      cmp.time_ratio = c.at("time_ratio").get<double>();
      cmp.bytes_ratio = c.at("bytes_ratio").get<double>();
      cmp.baseline_total = step_from_json(c.at("baseline_total"));
      m.comparison = cmp;
    }
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("report json: ") + e.what());
  }
}

void emit_report(const MetricsReport& report, ReportFormat format, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << render_report(report, format);
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path);
}

}  // namespace swagg
