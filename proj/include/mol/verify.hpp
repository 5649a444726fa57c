#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "mol/approx.hpp"
#include "mol/bounds.hpp"
#include "mol/common.hpp"
#include "mol/core.hpp"
#include "mol/decompose.hpp"
#include "mol/exact.hpp"
#include "mol/metrics.hpp"
#include "mol/oracle.hpp"
#include "mol/workload.hpp"

namespace mol {

// Self-check battery: one seed drives a small randomized workload through
// every cross-cutting invariant the engine promises. The CLI `verify`
// subcommand runs this over a seed range; the test suite reuses it.

struct VerifyOutcome {
  int checks = 0;
  int failures = 0;
  std::vector<std::string> messages;

  bool ok() const { return failures == 0; }
};

namespace detail {

inline void record(VerifyOutcome& outcome, bool pass, const std::string& what) {
  ++outcome.checks;
  if (!pass) {
    ++outcome.failures;
    outcome.messages.push_back(what);
  }
}

inline double rel_diff(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-12});
  return std::abs(a - b) / scale;
}

inline bool same_ranking(const RetrievalResult& a, const RetrievalResult& b) {
  return a.item_ids == b.item_ids;
}

}  // namespace detail

inline VerifyOutcome verify_seed(std::uint64_t seed) {
  VerifyOutcome outcome;
  SplitMix64 pick(seed * 0x9E3779B97F4A7C15ULL + 1);

  const std::vector<GatingFunction> gates = {
      UniformGate{}, SoftmaxDotsGate{0.2}, ArgmaxOneHotGate{}};

  for (bool normalized : {false, true}) {
    WorkloadSpec spec;
    spec.seed = seed * 2 + (normalized ? 1 : 0);
    spec.n_items = 400;
    spec.n_queries = 3;
    spec.config = {2, 2, 8, normalized};
    spec.distribution = GaussianDistribution{0.0, 1.0};
    Workload w = generate(spec);
    const std::int64_t k = 10;
    const int total = spec.config.total();

    for (const auto& gate : gates) {
      const std::string ctx = " [seed " + std::to_string(seed) + ", " +
                              gate_name(gate) +
                              (normalized ? ", normalized]" : "]");
      for (const auto& query : w.queries) {
        auto oracle = brute_force_topk(query, w.index, gate, k);

        // Exact two-pass answers match brute force, ids and order.
        auto [exact, stats] = exact_topk(query, w.index, gate, k);
        detail::record(outcome,
                       exact.item_ids == oracle.item_ids &&
                           exact.scores == oracle.scores,
                       "exact != brute force" + ctx);
        detail::record(outcome, stats.second_pass_candidates >= k,
                       "exact second pass smaller than k" + ctx);

        // Convex-combination bound per item, on a sample of rows.
        MolScorer<float> scorer(query, w.index, gate);
        bool convex_ok = true;
        for (int probe = 0; probe < 64; ++probe) {
          const std::int64_t row = std::int64_t(pick.below(std::uint64_t(spec.n_items)));
          const double score = scorer.score(row);
          auto dots = scorer.last_dots();
          double lo = dots[0], hi = dots[0];
          for (double d : dots) {
            lo = std::min(lo, d);
            hi = std::max(hi, d);
          }
          convex_ok = convex_ok && score >= lo && score <= hi;
        }
        detail::record(outcome, convex_ok, "score outside [min,max] dot" + ctx);

        // Certificates dominate the realized gap.
        for (std::int64_t n : {3LL, 8LL}) {
          auto approx = approx_topk(query, w.index, gate,
                                    ApproxParams::per_embedding(n, k));
          auto cert =
              gap_certificate_per_embedding(query, w.index, gate, n, k);
          const double gap = observed_gap(approx, oracle);
          detail::record(outcome, gap <= cert.bound + 1e-12,
                         "per-embedding gap above bound" + ctx);

          auto approx_c = approx_topk(query, w.index, gate,
                                      ApproxParams::combined(n, 4 * n, k));
          auto cert_c = gap_certificate_combined(query, w.index, gate, n,
                                                 4 * n, k);
          const double gap_c = observed_gap(approx_c, oracle);
          detail::record(outcome, gap_c <= cert_c.bound + 1e-12,
                         "combined gap above bound" + ctx);
        }
      }
    }

    // Uniform gating: average(n=k) recovers the exact answer.
    for (const auto& query : w.queries) {
      auto oracle = brute_force_topk(query, w.index, UniformGate{}, k);
      auto avg = approx_topk(query, w.index, UniformGate{},
                             ApproxParams::average(k, k));
      detail::record(outcome, relative_hit_rate(avg, oracle) == 1.0,
                     "average(n=k) not exact under uniform gate [seed " +
                         std::to_string(seed) + "]");
      auto argmax_oracle = brute_force_topk(query, w.index, ArgmaxOneHotGate{}, k);
      auto per = approx_topk(query, w.index, ArgmaxOneHotGate{},
                             ApproxParams::per_embedding(k, k));
      detail::record(outcome, relative_hit_rate(per, argmax_oracle) == 1.0,
                     "per_embedding(n=k) not exact under argmax gate [seed " +
                         std::to_string(seed) + "]");
    }

    // Materialization identity: explicit average of all component dots
    // equals one dot against the materialized vector.
    bool identity_ok = true;
    for (const auto& query : w.queries) {
      for (int probe = 0; probe < 256; ++probe) {
        const std::int64_t row = std::int64_t(pick.below(std::uint64_t(spec.n_items)));
        auto dots = component_dots(query, w.index, row);
        double explicit_avg = 0.0;
        for (double d : dots) explicit_avg += d;
        explicit_avg /= double(total);
        double materialized = 0.0;
        const double* avg_row = w.index.avg_row(row);
        for (int t = 0; t < spec.config.dim; ++t) {
          materialized += query.sum_vector[size_t(t)] * avg_row[t];
        }
        identity_ok =
            identity_ok && detail::rel_diff(explicit_avg, materialized) <= 1e-5;
      }
    }
    detail::record(outcome, identity_ok,
                   "materialized average diverged from explicit average [seed " +
                       std::to_string(seed) + "]");
  }

  // Decomposition round trip on a random full-rank matrix.
  {
    SplitMix64 rng(seed ^ 0xD1B54A32D192ED03ULL);
    const std::int64_t rows = 6 + std::int64_t(rng.below(10));
    const std::int64_t cols = rows + 1 + std::int64_t(rng.below(12));
    Eigen::MatrixXd a(rows, cols);
    for (std::int64_t i = 0; i < rows; ++i) {
      for (std::int64_t j = 0; j < cols; ++j) a(i, j) = rng.gaussian();
    }
    auto dec = decompose(a, 2);
    bool pi_ok = (dec.pi.array() >= 0.0).all() && (dec.pi.array() <= 1.0).all();
    detail::record(outcome, pi_ok,
                   "decomposition pi outside [0,1] [seed " + std::to_string(seed) + "]");

    auto instance = to_mol_instance(dec);
    const double scale = std::max(a.cwiseAbs().maxCoeff(), 1e-30);
    double max_err = 0.0;
    for (std::int64_t i = 0; i < rows; ++i) {
      for (std::int64_t j = 0; j < cols; ++j) {
        const double s =
            mol_score(instance.queries[size_t(i)], instance.index, j,
                      instance.gate);
        max_err = std::max(max_err, std::abs(s - a(i, j)) / scale);
      }
    }
    detail::record(outcome,
                   dec.degenerate_entries.empty() && max_err <= 1e-6,
                   "decomposition round trip error " + std::to_string(max_err) +
                       " [seed " + std::to_string(seed) + "]");
  }

  return outcome;
}

inline VerifyOutcome verify_seed_range(std::uint64_t first, std::uint64_t last,
                                       std::ostream& out) {
  VerifyOutcome total;
  for (std::uint64_t seed = first; seed <= last; ++seed) {
    VerifyOutcome one = verify_seed(seed);
    total.checks += one.checks;
    total.failures += one.failures;
    for (auto& m : one.messages) total.messages.push_back(std::move(m));
    out << "seed " << seed << ": " << (one.ok() ? "ok" : "FAIL") << " ("
        << one.checks - one.failures << "/" << one.checks << " checks)\n";
  }
  for (const auto& m : total.messages) out << "  failed: " << m << "\n";
  return total;
}

}  // namespace mol
