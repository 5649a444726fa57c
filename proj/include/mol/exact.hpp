#pragma once

#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "mol/common.hpp"
#include "mol/core.hpp"
#include "mol/oracle.hpp"
#include "mol/topk.hpp"

namespace mol {

// Per-query accounting for the two-pass exact algorithm. Second-pass size is
// the honest cost signal: a loose threshold can pull in most of the corpus.
struct ExactRunStats {
  double s_min = 0.0;
  std::int64_t first_pass_candidates = 0;
  std::int64_t second_pass_candidates = 0;
};

namespace detail {

// Deduplicates row lists into one ascending row set using a membership mask.
class RowUnion {
 public:
  explicit RowUnion(std::int64_t n_items) : member_(size_t(n_items), 0) {}

  void add(const std::vector<std::int64_t>& rows) {
    for (std::int64_t r : rows) {
      if (!member_[size_t(r)]) {
        member_[size_t(r)] = 1;
        rows_.push_back(r);
      }
    }
  }

  std::vector<std::int64_t> take_sorted() {
    std::sort(rows_.begin(), rows_.end());
    return std::move(rows_);
  }

 private:
  std::vector<char> member_;
  std::vector<std::int64_t> rows_;
};

}  // namespace detail

// Two-pass exact top-k. First pass: union of per-component-pair top-k rows
// by dot product (G). The threshold is the minimum mixture score over G —
// the k-th highest would also be sound and tighter, but the minimum is the
// shipped rule. Second pass: every row whose dot reaches the threshold in
// any component pair (G'), re-ranked by mixture score.
//
// Any true top-k item x satisfies phi(x) >= s_min (G holds at least k items
// when the corpus does), and phi never exceeds the item's best component
// dot, so x survives the range filter: the result matches brute force.
template <class Scalar>
std::pair<RetrievalResult, ExactRunStats> exact_topk(
    const QueryEmbeddingsT<Scalar>& query, const ItemIndexT<Scalar>& index,
    const GatingFunction& gate, std::int64_t k) {
  if (k < 1) throw ArgumentError("exact_topk requires k >= 1");
  const auto& cfg = index.config;

  detail::RowUnion first_pass(index.n_items);
  for (int qc = 0; qc < cfg.query_components; ++qc) {
    for (int ic = 0; ic < cfg.item_components; ++ic) {
      first_pass.add(component_topk(query, index, qc, ic, k).rows);
    }
  }
  const std::vector<std::int64_t> g = first_pass.take_sorted();

  MolScorer<Scalar> scorer(query, index, gate);
  double s_min = std::numeric_limits<double>::infinity();
  for (std::int64_t row : g) s_min = std::min(s_min, scorer.score(row));

  detail::RowUnion second_pass(index.n_items);
  for (int qc = 0; qc < cfg.query_components; ++qc) {
    for (int ic = 0; ic < cfg.item_components; ++ic) {
      second_pass.add(component_range(query, index, qc, ic, s_min));
    }
  }
  const std::vector<std::int64_t> g_prime = second_pass.take_sorted();

  MethodTag tag;
  tag.kind = MethodTag::Kind::Exact;
  tag.k = k;
  RetrievalResult result = detail::rank_rows(
      scorer, g_prime, k, tag,
      std::int64_t(g.size()) + std::int64_t(g_prime.size()));

  ExactRunStats stats;
  stats.s_min = s_min;
  stats.first_pass_candidates = std::int64_t(g.size());
  stats.second_pass_candidates = std::int64_t(g_prime.size());
  return {std::move(result), stats};
}

}  // namespace mol
