#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "mol/common.hpp"
#include "mol/core.hpp"

namespace mol {

// One scored entry during selection. The key is a row index or an item id;
// both are non-negative, so unsigned ordering matches either.
struct ScoredRow {
  double score;
  std::uint64_t key;
};

inline bool scored_row_before(const ScoredRow& a, const ScoredRow& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.key < b.key;
}

// Bounded selector keeping the best k entries under (score desc, key asc).
// Backed by a binary heap with the current worst entry at the front.
class TopKSelector {
 public:
  explicit TopKSelector(std::int64_t k) : k_(k) { heap_.reserve(size_t(k)); }

  void offer(double score, std::uint64_t key) {
    if (std::int64_t(heap_.size()) < k_) {
      heap_.push_back({score, key});
      std::push_heap(heap_.begin(), heap_.end(), scored_row_before);
      return;
    }
    if (!scored_row_before({score, key}, heap_.front())) return;
    std::pop_heap(heap_.begin(), heap_.end(), scored_row_before);
    heap_.back() = {score, key};
    std::push_heap(heap_.begin(), heap_.end(), scored_row_before);
  }

  bool full() const { return std::int64_t(heap_.size()) >= k_; }
  // Worst retained score; callers must check full() first.
  double threshold() const { return heap_.front().score; }

  std::vector<ScoredRow> take_sorted() {
    std::sort(heap_.begin(), heap_.end(), scored_row_before);
    return std::move(heap_);
  }

 private:
  std::int64_t k_;
  std::vector<ScoredRow> heap_;
};

struct TopKDots {
  std::vector<std::int64_t> rows;  // best first
  std::vector<double> dots;        // non-increasing
};

// Exact top-k selection tuned for dense scans: passing rows append to a
// buffer, and a periodic nth_element compaction re-derives the admission
// threshold. Rows strictly below the threshold can never re-enter the top k
// (ties still can, by lower key), so the hot path is one compare. Amortized
// cost is O(1) per scanned row plus O(cap) per compaction.
class ThresholdReservoir {
 public:
  explicit ThresholdReservoir(std::int64_t k)
      : k_(k), cap_(std::max<std::int64_t>(4096, 2 * k)) {
    buf_.reserve(size_t(cap_) + 1);
  }

  // Admission cut: -inf until the buffer first fills past k.
  double threshold() const { return threshold_; }

  void offer(double score, std::uint64_t key) {
    if (score < threshold_) return;
    buf_.push_back({score, key});
    if (std::int64_t(buf_.size()) >= cap_) compact();
  }

  std::vector<ScoredRow> take_sorted() {
    std::sort(buf_.begin(), buf_.end(), scored_row_before);
    if (std::int64_t(buf_.size()) > k_) buf_.resize(size_t(k_));
    return std::move(buf_);
  }

 private:
  void compact() {
    if (std::int64_t(buf_.size()) <= k_) return;
    std::nth_element(buf_.begin(), buf_.begin() + (k_ - 1), buf_.end(),
                     scored_row_before);
    threshold_ = buf_[size_t(k_ - 1)].score;
    buf_.resize(size_t(k_));
  }

  std::int64_t k_;
  std::int64_t cap_;
  double threshold_ = -std::numeric_limits<double>::infinity();
  std::vector<ScoredRow> buf_;
};

namespace detail {

inline TopKDots selector_to_dots(TopKSelector& selector) {
  auto sorted = selector.take_sorted();
  TopKDots out;
  out.rows.reserve(sorted.size());
  out.dots.reserve(sorted.size());
  for (const auto& e : sorted) {
    out.rows.push_back(std::int64_t(e.key));
    out.dots.push_back(e.score);
  }
  return out;
}

// Dense dot kernel: one block of contiguous rows against one query vector.
// Small dims get unrolled bodies so the compiler can vectorize across rows;
// those carry the whole cost of the average-vector scan.
template <class Scalar>
void dot_rows_block(const double* query, const Scalar* data, std::int64_t rows,
                    int dim, double* out) {
  switch (dim) {
    case 1:
      for (std::int64_t r = 0; r < rows; ++r) out[r] = query[0] * double(data[r]);
      return;
    case 2:
      for (std::int64_t r = 0; r < rows; ++r) {
        out[r] = query[0] * double(data[2 * r]) + query[1] * double(data[2 * r + 1]);
      }
      return;
    case 4:
      for (std::int64_t r = 0; r < rows; ++r) {
        const Scalar* v = data + 4 * r;
        out[r] = query[0] * double(v[0]) + query[1] * double(v[1]) +
                 query[2] * double(v[2]) + query[3] * double(v[3]);
      }
      return;
    default:
      for (std::int64_t r = 0; r < rows; ++r) {
        const Scalar* v = data + std::int64_t(dim) * r;
        double acc = 0.0;
        for (int t = 0; t < dim; ++t) acc += query[t] * double(v[t]);
        out[r] = acc;
      }
  }
}

inline constexpr std::int64_t kScanBlockRows = 4096;

}  // namespace detail

// Top-k rows of a dense row-major [n][dim] matrix by dot product with
// `query`. Ties break toward the lower row index; returned dots are
// non-increasing. Scans in blocks: materialize a block of dots with the
// dense kernel, then feed the selector, which rejects sub-threshold rows
// with one compare once it is full.
template <class Scalar>
TopKDots topk_dot_product(std::span<const double> query, const Scalar* data,
                          std::int64_t n_rows, int dim, std::int64_t k,
                          ReadCounter* counter = nullptr) {
  if (k < 1) throw ArgumentError("top-k requires k >= 1");
  if (int(query.size()) != dim) {
    throw ConfigError("query vector dimension does not match matrix columns");
  }
  ThresholdReservoir reservoir(std::min<std::int64_t>(k, n_rows > 0 ? n_rows : k));
  double block[detail::kScanBlockRows];
  for (std::int64_t base = 0; base < n_rows; base += detail::kScanBlockRows) {
    const std::int64_t rows = std::min(detail::kScanBlockRows, n_rows - base);
    detail::dot_rows_block(query.data(), data + base * std::int64_t(dim), rows,
                           dim, block);
    double cut = reservoir.threshold();
    for (std::int64_t r = 0; r < rows; ++r) {
      if (block[r] < cut) continue;
      reservoir.offer(block[r], std::uint64_t(base + r));
      cut = reservoir.threshold();
    }
  }
  if (counter) counter->scalars += std::uint64_t(n_rows) * std::uint64_t(dim);
  auto sorted = reservoir.take_sorted();
  TopKDots out;
  out.rows.reserve(sorted.size());
  out.dots.reserve(sorted.size());
  for (const auto& e : sorted) {
    out.rows.push_back(std::int64_t(e.key));
    out.dots.push_back(e.score);
  }
  return out;
}

// All rows of a dense [n][dim] matrix whose dot product with `query` reaches
// `threshold` (inclusive), in ascending row order.
template <class Scalar>
std::vector<std::int64_t> range_dot_product(std::span<const double> query,
                                            const Scalar* data,
                                            std::int64_t n_rows, int dim,
                                            double threshold,
                                            ReadCounter* counter = nullptr) {
  if (int(query.size()) != dim) {
    throw ConfigError("query vector dimension does not match matrix columns");
  }
  std::vector<std::int64_t> rows_out;
  double block[detail::kScanBlockRows];
  for (std::int64_t base = 0; base < n_rows; base += detail::kScanBlockRows) {
    const std::int64_t rows = std::min(detail::kScanBlockRows, n_rows - base);
    detail::dot_rows_block(query.data(), data + base * std::int64_t(dim), rows,
                           dim, block);
    for (std::int64_t r = 0; r < rows; ++r) {
      if (block[r] >= threshold) rows_out.push_back(base + r);
    }
  }
  if (counter) counter->scalars += std::uint64_t(n_rows) * std::uint64_t(dim);
  return rows_out;
}

// Top-k index rows by one component-pair dot (cosine when the config is
// normalized). The scan walks the strided component slice in place.
template <class Scalar>
TopKDots component_topk(const QueryEmbeddingsT<Scalar>& query,
                        const ItemIndexT<Scalar>& index, int query_comp,
                        int item_comp, std::int64_t k,
                        ReadCounter* counter = nullptr) {
  if (k < 1) throw ArgumentError("top-k requires k >= 1");
  const auto& cfg = index.config;
  TopKSelector selector(std::min<std::int64_t>(k, index.n_items));
  const Scalar* data =
      index.embeddings.data() + std::int64_t(item_comp) * cfg.dim;
  const std::int64_t stride = std::int64_t(cfg.item_components) * cfg.dim;
  std::vector<double> qv(query.component(query_comp),
                         query.component(query_comp) + cfg.dim);
  const double q_scale = cfg.normalized ? 1.0 / query.norm_of(query_comp) : 1.0;
  for (std::int64_t r = 0; r < index.n_items; ++r) {
    const Scalar* v = data + r * stride;
    double dot = 0.0;
    for (int t = 0; t < cfg.dim; ++t) dot += qv[t] * double(v[t]);
    dot *= q_scale;
    if (cfg.normalized) dot /= index.norm_of(r, item_comp);
    selector.offer(dot, r);
  }
  if (counter) {
    counter->scalars += std::uint64_t(index.n_items) * std::uint64_t(cfg.dim);
  }
  return detail::selector_to_dots(selector);
}

// All index rows whose component-pair dot reaches `threshold` (inclusive),
// ascending row order.
template <class Scalar>
std::vector<std::int64_t> component_range(const QueryEmbeddingsT<Scalar>& query,
                                          const ItemIndexT<Scalar>& index,
                                          int query_comp, int item_comp,
                                          double threshold,
                                          ReadCounter* counter = nullptr) {
  const auto& cfg = index.config;
  const Scalar* data =
      index.embeddings.data() + std::int64_t(item_comp) * cfg.dim;
  const std::int64_t stride = std::int64_t(cfg.item_components) * cfg.dim;
  std::vector<double> qv(query.component(query_comp),
                         query.component(query_comp) + cfg.dim);
  const double q_scale = cfg.normalized ? 1.0 / query.norm_of(query_comp) : 1.0;
  std::vector<std::int64_t> rows;
  for (std::int64_t r = 0; r < index.n_items; ++r) {
    const Scalar* v = data + r * stride;
    double dot = 0.0;
    for (int t = 0; t < cfg.dim; ++t) dot += qv[t] * double(v[t]);
    dot *= q_scale;
    if (cfg.normalized) dot /= index.norm_of(r, item_comp);
    if (dot >= threshold) rows.push_back(r);
  }
  if (counter) {
    counter->scalars += std::uint64_t(index.n_items) * std::uint64_t(cfg.dim);
  }
  return rows;
}

}  // namespace mol
