#pragma once

#include <cstdint>
#include <unordered_set>

#include "mol/common.hpp"

namespace mol {

// Fraction of the oracle's top-k an approximate result recovered
// (set-based; denominator is the oracle set size).
inline double relative_hit_rate(const RetrievalResult& result,
                                const RetrievalResult& oracle_result) {
  if (oracle_result.item_ids.empty()) return 1.0;
  std::unordered_set<std::uint64_t> truth(oracle_result.item_ids.begin(),
                                          oracle_result.item_ids.end());
  std::int64_t hits = 0;
  for (std::uint64_t id : result.item_ids) hits += truth.count(id) ? 1 : 0;
  return double(hits) / double(truth.size());
}

}  // namespace mol
