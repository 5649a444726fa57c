#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_set>
#include <variant>
#include <vector>

#include "mol/approx.hpp"
#include "mol/bounds.hpp"
#include "mol/common.hpp"
#include "mol/core.hpp"
#include "mol/exact.hpp"
#include "mol/io.hpp"
#include "mol/metrics.hpp"
#include "mol/oracle.hpp"
#include "mol/workload.hpp"

namespace mol {

// One retrieval strategy to benchmark; k is swept separately.
struct MethodSpec {
  MethodTag::Kind kind = MethodTag::Kind::BruteForce;
  std::int64_t n = 0;
  std::int64_t n1 = 0;
  std::int64_t n2 = 0;

  std::string name() const {
    MethodTag t;
    t.kind = kind;
    return t.name();
  }
  std::string params() const {
    MethodTag t;
    t.kind = kind;
    t.n = n;
    t.n1 = n1;
    t.n2 = n2;
    return t.params();
  }
  std::string describe() const {
    auto p = params();
    return p.empty() ? name() : name() + "(" + p + ")";
  }
};

struct FileWorkload {
  std::string index_path;
  std::string queries_path;
};

struct OutputSpec {
  std::string path;         // empty: stdout only
  std::string format = "csv";  // csv | json
};

struct ExperimentConfig {
  std::variant<WorkloadSpec, FileWorkload> workload = WorkloadSpec{};
  GatingFunction gate = UniformGate{};
  std::vector<std::int64_t> k_values = {1, 5, 10, 50, 100};
  std::vector<MethodSpec> methods;
  std::int64_t batch_size = 32;
  std::int64_t warm_runs = 20;
  std::int64_t measured_runs = 20;
  int threads = 1;
  OutputSpec output;

  void validate() const {
    if (k_values.empty()) throw ArgumentError("config field 'k_values' must be non-empty");
    if (!std::is_sorted(k_values.begin(), k_values.end()) ||
        std::adjacent_find(k_values.begin(), k_values.end()) != k_values.end()) {
      throw ArgumentError("config field 'k_values' must be strictly ascending");
    }
    if (k_values.front() < 1) throw ArgumentError("config field 'k_values' entries must be >= 1");
    if (batch_size < 1) throw ArgumentError("config field 'batch_size' must be >= 1");
    if (warm_runs < 0 || measured_runs < 1) {
      throw ArgumentError("config fields 'warm_runs'/'measured_runs' must be >= 0 / >= 1");
    }
    if (threads < 1) throw ArgumentError("config field 'threads' must be >= 1");
    if (methods.empty()) throw ArgumentError("config field 'methods' must be non-empty");
    if (output.format != "csv" && output.format != "json") {
      throw ArgumentError("config field 'output.format' must be 'csv' or 'json'");
    }
  }
};

// The sweep the reports default to when a config lists no methods.
inline std::vector<MethodSpec> default_method_sweep() {
  std::vector<MethodSpec> methods;
  methods.push_back({MethodTag::Kind::BruteForce, 0, 0, 0});
  methods.push_back({MethodTag::Kind::Exact, 0, 0, 0});
  for (std::int64_t n : {5, 10, 50, 100}) {
    methods.push_back({MethodTag::Kind::PerEmbedding, n, 0, 0});
  }
  for (std::int64_t n : {200, 500, 1000, 2000, 4000}) {
    methods.push_back({MethodTag::Kind::Average, n, 0, 0});
  }
  methods.push_back({MethodTag::Kind::Combined, 0, 5, 200});
  methods.push_back({MethodTag::Kind::Combined, 0, 50, 500});
  methods.push_back({MethodTag::Kind::Combined, 0, 100, 1000});
  return methods;
}

struct ReportRow {
  std::string method;
  std::string params;
  std::int64_t k = 0;
  double relative_hr = 0.0;
  double latency_ms_mean = 0.0;
  double latency_ms_std = 0.0;
  double candidates_scored_mean = 0.0;
  std::optional<double> gap_bound_mean;
};

struct ExperimentReport {
  std::vector<ReportRow> rows;

  void write_csv(std::ostream& out) const {
    out << "method,params,k,relative_hr,latency_ms_mean,latency_ms_std,"
           "candidates_scored_mean,gap_bound_mean\n";
    for (const auto& r : rows) {
      out << r.method << ",\"" << r.params << "\"," << r.k << ','
          << r.relative_hr << ',' << r.latency_ms_mean << ','
          << r.latency_ms_std << ',' << r.candidates_scored_mean << ',';
      if (r.gap_bound_mean) out << *r.gap_bound_mean;
      out << '\n';
    }
  }
};

namespace detail {

// Runs one method for one query. Kept in one place so the metric pass and
// the timing pass execute the identical code path.
inline RetrievalResult run_method(const MethodSpec& method,
                                  const QueryEmbeddings& query,
                                  const ItemIndex& index,
                                  const GatingFunction& gate, std::int64_t k) {
  switch (method.kind) {
    case MethodTag::Kind::BruteForce:
      return brute_force_topk(query, index, gate, k);
    case MethodTag::Kind::Exact:
      return exact_topk(query, index, gate, k).first;
    case MethodTag::Kind::PerEmbedding:
      return approx_topk(query, index, gate,
                         ApproxParams::per_embedding(method.n, k));
    case MethodTag::Kind::Average:
      return approx_topk(query, index, gate, ApproxParams::average(method.n, k));
    case MethodTag::Kind::Combined:
      return approx_topk(query, index, gate,
                         ApproxParams::combined(method.n1, method.n2, k));
  }
  throw ArgumentError("unknown method");
}

inline ApproxParams method_params(const MethodSpec& method, std::int64_t k) {
  switch (method.kind) {
    case MethodTag::Kind::PerEmbedding:
      return ApproxParams::per_embedding(method.n, k);
    case MethodTag::Kind::Average:
      return ApproxParams::average(method.n, k);
    case MethodTag::Kind::Combined:
      return ApproxParams::combined(method.n1, method.n2, k);
    default:
      throw ArgumentError("method has no approximate parameters");
  }
}

// Evaluates the batch once, splitting queries across threads when asked.
// Approximate methods go through the batch entry point so average scans are
// shared across the batch.
inline void run_batch(const MethodSpec& method,
                      const std::vector<QueryEmbeddings>& queries,
                      const ItemIndex& index, const GatingFunction& gate,
                      std::int64_t k, std::int64_t batch_size, int threads) {
  const std::int64_t n = std::min<std::int64_t>(batch_size,
                                                std::int64_t(queries.size()));
  const bool approx = method.kind == MethodTag::Kind::PerEmbedding ||
                      method.kind == MethodTag::Kind::Average ||
                      method.kind == MethodTag::Kind::Combined;
  std::vector<QueryEmbeddings> batch;
  if (approx) {
    batch.reserve(size_t(batch_size));
    for (std::int64_t i = 0; i < batch_size; ++i) {
      batch.push_back(queries[size_t(i % n)]);
    }
  }
  auto run_span = [&](std::int64_t begin, std::int64_t end) {
    if (approx) {
      approx_topk_batch(
          std::span<const QueryEmbeddings>(batch.data() + begin,
                                           size_t(end - begin)),
          index, gate, method_params(method, k));
    } else {
      for (std::int64_t i = begin; i < end; ++i) {
        run_method(method, queries[size_t(i % n)], index, gate, k);
      }
    }
  };
  if (threads <= 1) {
    run_span(0, batch_size);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(size_t(threads));
  std::int64_t chunk = (batch_size + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const std::int64_t begin = t * chunk;
    const std::int64_t end = std::min(batch_size, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] { run_span(begin, end); });
  }
  for (auto& th : pool) th.join();
}

struct LatencyStats {
  double mean_ms = 0.0;
  double std_ms = 0.0;
};

inline LatencyStats time_batches(const MethodSpec& method,
                                 const std::vector<QueryEmbeddings>& queries,
                                 const ItemIndex& index,
                                 const GatingFunction& gate, std::int64_t k,
                                 const ExperimentConfig& config) {
  using clock = std::chrono::steady_clock;
  for (std::int64_t r = 0; r < config.warm_runs; ++r) {
    run_batch(method, queries, index, gate, k, config.batch_size,
              config.threads);
  }
  std::vector<double> samples;
  samples.reserve(size_t(config.measured_runs));
  for (std::int64_t r = 0; r < config.measured_runs; ++r) {
    const auto start = clock::now();
    run_batch(method, queries, index, gate, k, config.batch_size,
              config.threads);
    const auto stop = clock::now();
    samples.push_back(
        std::chrono::duration<double, std::milli>(stop - start).count());
  }
  LatencyStats stats;
  for (double s : samples) stats.mean_ms += s;
  stats.mean_ms /= double(samples.size());
  if (samples.size() > 1) {
    double ss = 0.0;
    for (double s : samples) ss += (s - stats.mean_ms) * (s - stats.mean_ms);
    stats.std_ms = std::sqrt(ss / double(samples.size() - 1));
  }
  return stats;
}

}  // namespace detail

// Runs the full experiment grid: every (method, k) pair gets hit-rate and
// candidate counts averaged over all queries, certificate bounds where the
// method has one, and batch latency with warm runs discarded. Rows come back
// sorted by (method, k). Invalid (method, k) pairs (budget cannot cover k)
// are skipped with a note on stderr rather than failing the sweep.
inline ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();

  Workload workload;
  if (const auto* spec = std::get_if<WorkloadSpec>(&config.workload)) {
    workload = generate(*spec);
  } else {
    const auto& files = std::get<FileWorkload>(config.workload);
    if (files.index_path.empty()) {
      throw ArgumentError("config field 'workload.index_path' is required");
    }
    if (files.queries_path.empty()) {
      throw ArgumentError("config field 'workload.queries_path' is required");
    }
    auto loaded = load_workload(files.index_path, files.queries_path);
    workload.index = std::move(loaded.index);
    workload.queries = std::move(loaded.queries);
  }
  if (workload.queries.empty()) {
    throw ArgumentError("experiment requires at least one query");
  }

  const ItemIndex& index = workload.index;
  const auto& queries = workload.queries;
  const std::int64_t k_max = config.k_values.back();

  // Oracle once per query at the largest k; smaller ks are prefixes of the
  // same ranking.
  std::vector<RetrievalResult> oracle_full;
  oracle_full.reserve(queries.size());
  for (const auto& q : queries) {
    oracle_full.push_back(brute_force_topk(q, index, config.gate, k_max));
  }
  auto oracle_prefix = [&](size_t qi, std::int64_t k) {
    RetrievalResult r = oracle_full[qi];
    const size_t keep = std::min(r.item_ids.size(), size_t(k));
    r.item_ids.resize(keep);
    r.scores.resize(keep);
    r.method.k = k;
    return r;
  };

  ExperimentReport report;
  for (const auto& method : config.methods) {
    for (std::int64_t k : config.k_values) {
      // Probe validity of the (method, k) combination first.
      try {
        detail::run_method(method, queries.front(), index, config.gate, k);
      } catch (const ArgumentError& e) {
        std::cerr << "skipping " << method.describe() << " at k=" << k << ": "
                  << e.what() << "\n";
        continue;
      }

      ReportRow row;
      row.method = method.name();
      row.params = method.params();
      row.k = k;

      double hr_sum = 0.0;
      double cand_sum = 0.0;
      double gap_sum = 0.0;
      const bool certified = method.kind == MethodTag::Kind::PerEmbedding ||
                             method.kind == MethodTag::Kind::Combined;
      for (size_t qi = 0; qi < queries.size(); ++qi) {
        auto result =
            detail::run_method(method, queries[qi], index, config.gate, k);
        auto oracle_result = oracle_prefix(qi, k);
        hr_sum += relative_hit_rate(result, oracle_result);
        cand_sum += double(result.candidates_scored);
        if (certified) {
          GapCertificate cert =
              method.kind == MethodTag::Kind::PerEmbedding
                  ? gap_certificate_per_embedding(queries[qi], index,
                                                  config.gate, method.n, k)
                  : gap_certificate_combined(queries[qi], index, config.gate,
                                             method.n1, method.n2, k);
          gap_sum += cert.bound;
        }
      }
      row.relative_hr = hr_sum / double(queries.size());
      row.candidates_scored_mean = cand_sum / double(queries.size());
      if (certified) row.gap_bound_mean = gap_sum / double(queries.size());

      auto latency = detail::time_batches(method, queries, index, config.gate,
                                          k, config);
      row.latency_ms_mean = latency.mean_ms;
      row.latency_ms_std = latency.std_ms;
      report.rows.push_back(std::move(row));
    }
  }

  std::sort(report.rows.begin(), report.rows.end(),
            [](const ReportRow& a, const ReportRow& b) {
              if (a.method != b.method) return a.method < b.method;
              if (a.params != b.params) return a.params < b.params;
              return a.k < b.k;
            });
  return report;
}

}  // namespace mol
