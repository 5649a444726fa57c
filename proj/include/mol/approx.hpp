#pragma once

#include <cstdint>
#include <vector>

#include "mol/common.hpp"
#include "mol/core.hpp"
#include "mol/exact.hpp"
#include "mol/oracle.hpp"
#include "mol/topk.hpp"

namespace mol {

// Candidate budget for the approximate strategies.
struct ApproxParams {
  enum class Method { PerEmbedding, Average, Combined };

  Method method = Method::Average;
  std::int64_t n = 0;   // PerEmbedding / Average
  std::int64_t n1 = 0;  // Combined: per-embedding leg
  std::int64_t n2 = 0;  // Combined: average leg
  std::int64_t k = 1;

  static ApproxParams per_embedding(std::int64_t n, std::int64_t k) {
    return {Method::PerEmbedding, n, 0, 0, k};
  }
  static ApproxParams average(std::int64_t n, std::int64_t k) {
    return {Method::Average, n, 0, 0, k};
  }
  static ApproxParams combined(std::int64_t n1, std::int64_t n2,
                               std::int64_t k) {
    return {Method::Combined, 0, n1, n2, k};
  }

  // The candidate pool must be able to cover k.
  void validate(int total_components) const {
    if (k < 1) throw ArgumentError("approximate retrieval requires k >= 1");
    switch (method) {
      case Method::PerEmbedding:
        if (n < 1) throw ArgumentError("per-embedding budget n must be >= 1");
        if (n * total_components < k) {
          throw ArgumentError("per-embedding budget too small: n * P < k");
        }
        break;
      case Method::Average:
        if (n < 1) throw ArgumentError("average budget n must be >= 1");
        if (n < k) throw ArgumentError("average budget too small: n < k");
        break;
      case Method::Combined:
        if (n1 < 0 || n2 < 0 || n1 + n2 < 1) {
          throw ArgumentError("combined budgets must be non-negative and not both zero");
        }
        if (n1 * total_components + n2 < k) {
          throw ArgumentError("combined budget too small: n1 * P + n2 < k");
        }
        break;
    }
  }

  MethodTag tag() const {
    MethodTag t;
    switch (method) {
      case Method::PerEmbedding: t.kind = MethodTag::Kind::PerEmbedding; break;
      case Method::Average:      t.kind = MethodTag::Kind::Average; break;
      case Method::Combined:     t.kind = MethodTag::Kind::Combined; break;
    }
    t.n = n;
    t.n1 = n1;
    t.n2 = n2;
    t.k = k;
    return t;
  }
};

// Union over all component pairs of the top-n rows by dot product.
// Ascending row order; size in [min(n, n_items), n * P].
template <class Scalar>
std::vector<std::int64_t> candidates_per_embedding(
    const QueryEmbeddingsT<Scalar>& query, const ItemIndexT<Scalar>& index,
    std::int64_t n, ReadCounter* counter = nullptr) {
  if (n < 1) throw ArgumentError("candidates_per_embedding requires n >= 1");
  detail::check_compatible(query, index);
  const auto& cfg = index.config;
  detail::RowUnion pool(index.n_items);
  for (int qc = 0; qc < cfg.query_components; ++qc) {
    for (int ic = 0; ic < cfg.item_components; ++ic) {
      pool.add(component_topk(query, index, qc, ic, n, counter).rows);
    }
  }
  return pool.take_sorted();
}

// Top-n rows by average component dot, served by the materialized average
// vectors: one dot of `dim` scalars per item, whatever P is.
template <class Scalar>
std::vector<std::int64_t> candidates_average(
    const QueryEmbeddingsT<Scalar>& query, const ItemIndexT<Scalar>& index,
    std::int64_t n, ReadCounter* counter = nullptr) {
  if (n < 1) throw ArgumentError("candidates_average requires n >= 1");
  detail::check_compatible(query, index);
  if (!index.materialized()) {
    throw NotMaterializedError(
        "index has no materialized average vectors; rebuild with "
        "materialize_avg enabled");
  }
  auto top = topk_dot_product(std::span<const double>(query.sum_vector),
                              index.avg_vectors.data(), index.n_items,
                              index.config.dim, n, counter);
  std::sort(top.rows.begin(), top.rows.end());
  return top.rows;
}

// Batched form of candidates_average: one pass over the materialized
// vectors serves every query, so a block of rows is loaded once per batch
// instead of once per query. Row sets are identical to the per-query path.
template <class Scalar>
std::vector<std::vector<std::int64_t>> candidates_average_batch(
    std::span<const QueryEmbeddingsT<Scalar>> queries,
    const ItemIndexT<Scalar>& index, std::int64_t n,
    ReadCounter* counter = nullptr) {
  if (n < 1) throw ArgumentError("candidates_average requires n >= 1");
  if (!index.materialized()) {
    throw NotMaterializedError(
        "index has no materialized average vectors; rebuild with "
        "materialize_avg enabled");
  }
  const size_t n_queries = queries.size();
  const int dim = index.config.dim;
  std::vector<ThresholdReservoir> reservoirs;
  reservoirs.reserve(n_queries);
  for (size_t q = 0; q < n_queries; ++q) {
    detail::check_compatible(queries[q], index);
    reservoirs.emplace_back(std::min<std::int64_t>(n, index.n_items));
  }

  double block[detail::kScanBlockRows];
  for (std::int64_t base = 0; base < index.n_items;
       base += detail::kScanBlockRows) {
    const std::int64_t rows =
        std::min(detail::kScanBlockRows, index.n_items - base);
    const double* data = index.avg_vectors.data() + base * std::int64_t(dim);
    for (size_t q = 0; q < n_queries; ++q) {
      detail::dot_rows_block(queries[q].sum_vector.data(), data, rows, dim,
                             block);
      auto& reservoir = reservoirs[q];
      double cut = reservoir.threshold();
      for (std::int64_t r = 0; r < rows; ++r) {
        if (block[r] < cut) continue;
        reservoir.offer(block[r], std::uint64_t(base + r));
        cut = reservoir.threshold();
      }
    }
  }
  if (counter) {
    counter->scalars += std::uint64_t(index.n_items) * std::uint64_t(dim) *
                        std::uint64_t(n_queries);
  }

  std::vector<std::vector<std::int64_t>> out(n_queries);
  for (size_t q = 0; q < n_queries; ++q) {
    auto sorted = reservoirs[q].take_sorted();
    out[q].reserve(sorted.size());
    for (const auto& e : sorted) out[q].push_back(std::int64_t(e.key));
    std::sort(out[q].begin(), out[q].end());
  }
  return out;
}

// Union of the two candidate generators. Each candidate is scored once
// downstream no matter how many legs produced it.
template <class Scalar>
std::vector<std::int64_t> candidates_combined(
    const QueryEmbeddingsT<Scalar>& query, const ItemIndexT<Scalar>& index,
    std::int64_t n1, std::int64_t n2, ReadCounter* counter = nullptr) {
  if (n1 < 0 || n2 < 0 || n1 + n2 < 1) {
    throw ArgumentError("candidates_combined requires n1, n2 >= 0 and n1 + n2 >= 1");
  }
  if (n1 == 0) return candidates_average(query, index, n2, counter);
  if (n2 == 0) return candidates_per_embedding(query, index, n1, counter);
  detail::RowUnion pool(index.n_items);
  pool.add(candidates_per_embedding(query, index, n1, counter));
  pool.add(candidates_average(query, index, n2, counter));
  return pool.take_sorted();
}

// Two-stage approximate top-k: cheap dot-product candidate generation, then
// full mixture scoring over the deduplicated pool.
template <class Scalar>
RetrievalResult approx_topk(const QueryEmbeddingsT<Scalar>& query,
                            const ItemIndexT<Scalar>& index,
                            const GatingFunction& gate,
                            const ApproxParams& params,
                            ReadCounter* counter = nullptr) {
  params.validate(index.config.total());
  std::vector<std::int64_t> pool;
  switch (params.method) {
    case ApproxParams::Method::PerEmbedding:
      pool = candidates_per_embedding(query, index, params.n, counter);
      break;
    case ApproxParams::Method::Average:
      pool = candidates_average(query, index, params.n, counter);
      break;
    case ApproxParams::Method::Combined:
      pool = candidates_combined(query, index, params.n1, params.n2, counter);
      break;
  }
  MolScorer<Scalar> scorer(query, index, gate);
  return detail::rank_rows(scorer, std::span<const std::int64_t>(pool),
                           params.k, params.tag(),
                           std::int64_t(pool.size()));
}

// Batch entry point used by the benchmark's batched-latency protocol.
// Average-method batches share one scan over the materialized vectors;
// everything else evaluates per query. Results are identical to mapping
// approx_topk over the batch.
template <class Scalar>
std::vector<RetrievalResult> approx_topk_batch(
    std::span<const QueryEmbeddingsT<Scalar>> queries,
    const ItemIndexT<Scalar>& index, const GatingFunction& gate,
    const ApproxParams& params) {
  params.validate(index.config.total());
  std::vector<RetrievalResult> results;
  results.reserve(queries.size());
  if (params.method == ApproxParams::Method::Average) {
    auto pools = candidates_average_batch(queries, index, params.n);
    for (size_t q = 0; q < queries.size(); ++q) {
      MolScorer<Scalar> scorer(queries[q], index, gate);
      results.push_back(detail::rank_rows(
          scorer, std::span<const std::int64_t>(pools[q]), params.k,
          params.tag(), std::int64_t(pools[q].size())));
    }
    return results;
  }
  for (const auto& query : queries) {
    results.push_back(approx_topk(query, index, gate, params));
  }
  return results;
}

}  // namespace mol
