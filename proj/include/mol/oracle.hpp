#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mol/common.hpp"
#include "mol/core.hpp"
#include "mol/topk.hpp"

namespace mol {

namespace detail {

// Final ranking shared by every strategy: best k of `rows` under
// (score desc, item id asc).
template <class Scalar>
RetrievalResult rank_rows(MolScorer<Scalar>& scorer,
                          std::span<const std::int64_t> rows, std::int64_t k,
                          MethodTag tag, std::int64_t candidates_scored) {
  const auto& ids = scorer.index().item_ids;
  TopKSelector selector(std::min<std::int64_t>(k, std::int64_t(rows.size())));
  for (std::int64_t row : rows) selector.offer(scorer.score(row), ids[row]);
  auto sorted = selector.take_sorted();
  RetrievalResult result;
  result.method = tag;
  result.candidates_scored = candidates_scored;
  result.item_ids.reserve(sorted.size());
  result.scores.reserve(sorted.size());
  for (const auto& e : sorted) {
    result.item_ids.push_back(e.key);
    result.scores.push_back(e.score);
  }
  return result;
}

}  // namespace detail

// Ground truth: evaluate the mixture score for every item and keep the top k.
template <class Scalar>
RetrievalResult brute_force_topk(const QueryEmbeddingsT<Scalar>& query,
                                 const ItemIndexT<Scalar>& index,
                                 const GatingFunction& gate, std::int64_t k) {
  if (k < 1) throw ArgumentError("brute_force_topk requires k >= 1");
  MolScorer<Scalar> scorer(query, index, gate);
  TopKSelector selector(std::min<std::int64_t>(k, index.n_items));
  for (std::int64_t row = 0; row < index.n_items; ++row) {
    selector.offer(scorer.score(row), index.item_ids[row]);
  }
  auto sorted = selector.take_sorted();
  MethodTag tag;
  tag.kind = MethodTag::Kind::BruteForce;
  tag.k = k;
  RetrievalResult result;
  result.method = tag;
  result.candidates_scored = index.n_items;
  result.item_ids.reserve(sorted.size());
  result.scores.reserve(sorted.size());
  for (const auto& e : sorted) {
    result.item_ids.push_back(e.key);
    result.scores.push_back(e.score);
  }
  return result;
}

}  // namespace mol
