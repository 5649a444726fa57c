#pragma once

#include <algorithm>
#include <cstdint>
#include <unordered_set>
#include <vector>

#include "mol/approx.hpp"
#include "mol/common.hpp"
#include "mol/core.hpp"
#include "mol/topk.hpp"

namespace mol {

// Computable certificate for an approximate answer: no unretrieved item can
// score above s_prime_upper, and s_min is the k-th best score the candidate
// pool already holds, so the score gap to the exact answer is at most
// `bound`. A zero bound certifies the answer is score-equivalent to exact.
struct GapCertificate {
  double s_min = 0.0;
  double s_prime_upper = 0.0;
  double bound = 0.0;
};

namespace detail {

inline GapCertificate make_certificate(double s_min, double s_prime_upper) {
  GapCertificate cert;
  cert.s_min = s_min;
  cert.s_prime_upper = s_prime_upper;
  cert.bound = std::max(0.0, s_prime_upper - s_min);
  return cert;
}

// k-th highest mixture score within the pool; lowest score if the pool holds
// fewer than k rows (degenerate certificate).
template <class Scalar>
double kth_pool_score(MolScorer<Scalar>& scorer,
                      const std::vector<std::int64_t>& pool, std::int64_t k) {
  std::vector<double> scores;
  scores.reserve(pool.size());
  for (std::int64_t row : pool) scores.push_back(scorer.score(row));
  std::sort(scores.begin(), scores.end(), std::greater<double>());
  const size_t idx = std::min(scores.size(), size_t(k)) - 1;
  return scores[idx];
}

}  // namespace detail

// Certificate for the per-embedding heuristic. Every item outside the pool
// missed every component's top-n, so each of its dots is at most that
// component's n-th best dot, and the mixture score never exceeds the best
// component dot.
template <class Scalar>
GapCertificate gap_certificate_per_embedding(
    const QueryEmbeddingsT<Scalar>& query, const ItemIndexT<Scalar>& index,
    const GatingFunction& gate, std::int64_t n, std::int64_t k) {
  if (n < 1) throw ArgumentError("gap certificate requires n >= 1");
  if (k < 1) throw ArgumentError("gap certificate requires k >= 1");
  const auto& cfg = index.config;
  detail::RowUnion pool_builder(index.n_items);
  double nth_dot_max = -std::numeric_limits<double>::infinity();
  for (int qc = 0; qc < cfg.query_components; ++qc) {
    for (int ic = 0; ic < cfg.item_components; ++ic) {
      auto top = component_topk(query, index, qc, ic, n);
      nth_dot_max = std::max(nth_dot_max, top.dots.back());
      pool_builder.add(top.rows);
    }
  }
  auto pool = pool_builder.take_sorted();
  MolScorer<Scalar> scorer(query, index, gate);
  return detail::make_certificate(detail::kth_pool_score(scorer, pool, k),
                                  nth_dot_max);
}

// Certificate for the combined heuristic. The per-embedding bound from the
// n1 leg still dominates every item the union leaves out; with n1 = 0 there
// is no per-component pruning information, so fall back to the global best
// dot per component.
template <class Scalar>
GapCertificate gap_certificate_combined(const QueryEmbeddingsT<Scalar>& query,
                                        const ItemIndexT<Scalar>& index,
                                        const GatingFunction& gate,
                                        std::int64_t n1, std::int64_t n2,
                                        std::int64_t k) {
  if (n1 < 0 || n2 < 0 || n1 + n2 < 1) {
    throw ArgumentError("gap certificate requires n1, n2 >= 0 and n1 + n2 >= 1");
  }
  if (k < 1) throw ArgumentError("gap certificate requires k >= 1");
  const auto& cfg = index.config;
  const std::int64_t probe = n1 > 0 ? n1 : 1;
  double nth_dot_max = -std::numeric_limits<double>::infinity();
  detail::RowUnion pool_builder(index.n_items);
  for (int qc = 0; qc < cfg.query_components; ++qc) {
    for (int ic = 0; ic < cfg.item_components; ++ic) {
      auto top = component_topk(query, index, qc, ic, probe);
      nth_dot_max = std::max(nth_dot_max, n1 > 0 ? top.dots.back() : top.dots.front());
      if (n1 > 0) pool_builder.add(top.rows);
    }
  }
  if (n2 > 0) pool_builder.add(candidates_average(query, index, n2));
  auto pool = pool_builder.take_sorted();
  MolScorer<Scalar> scorer(query, index, gate);
  return detail::make_certificate(detail::kth_pool_score(scorer, pool, k),
                                  nth_dot_max);
}

// Realized gap between an approximate answer and the oracle answer for the
// same (query, index, gate, k): best oracle score the approximation missed
// minus its own worst kept score, clamped at zero.
inline double observed_gap(const RetrievalResult& approx,
                           const RetrievalResult& oracle_result) {
  if (approx.method.k != oracle_result.method.k) {
    throw ArgumentError("observed_gap requires results computed for the same k");
  }
  if (approx.item_ids.empty() || oracle_result.item_ids.empty()) {
    throw ArgumentError("observed_gap requires non-empty results");
  }
  std::unordered_set<std::uint64_t> kept(approx.item_ids.begin(),
                                         approx.item_ids.end());
  double best_missing = -std::numeric_limits<double>::infinity();
  bool missing = false;
  for (size_t i = 0; i < oracle_result.item_ids.size(); ++i) {
    if (!kept.count(oracle_result.item_ids[i])) {
      missing = true;
      best_missing = std::max(best_missing, oracle_result.scores[i]);
    }
  }
  if (!missing) return 0.0;
  const double worst_kept = approx.scores.back();
  return std::max(0.0, best_missing - worst_kept);
}

}  // namespace mol
