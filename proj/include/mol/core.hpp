#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mol/common.hpp"

namespace mol {

// Shape of a mixture-of-logits instance: every query carries
// `query_components` embeddings of `dim`, every item `item_components`
// embeddings of `dim`, and scoring mixes the outer product of the two sets
// (total() component pairs). With `normalized` set, all component dot
// products are cosine dots over the stored raw vectors.
struct ComponentConfig {
  int query_components = 1;
  int item_components = 1;
  int dim = 1;
  bool normalized = false;

  int total() const { return query_components * item_components; }

  void validate() const {
    if (query_components < 1 || item_components < 1 || dim < 1) {
      throw ConfigError("component config requires query_components >= 1, "
                        "item_components >= 1, dim >= 1");
    }
  }

  bool operator==(const ComponentConfig&) const = default;
};

namespace detail {

template <class Scalar>
double dot_accumulate(const Scalar* a, const Scalar* b, int dim) {
  double acc = 0.0;
  for (int t = 0; t < dim; ++t) acc += double(a[t]) * double(b[t]);
  return acc;
}

template <class Scalar>
double l2_norm(const Scalar* v, int dim) {
  double acc = 0.0;
  for (int t = 0; t < dim; ++t) acc += double(v[t]) * double(v[t]);
  return std::sqrt(acc);
}

}  // namespace detail

// Item-side storage: raw component embeddings, per-component l2 norms when
// the instance is normalized, and the materialized average vectors that back
// average-dot candidate generation. avg_vectors[i] = sum over the item's
// (normalized) components divided by total(), kept in double so that the
// materialized single dot tracks the explicit per-component average to
// near machine precision.
template <class Scalar>
struct ItemIndexT {
  ComponentConfig config;
  std::int64_t n_items = 0;
  std::vector<Scalar> embeddings;    // [n_items][item_components][dim]
  std::vector<Scalar> norms;         // [n_items][item_components] iff normalized
  std::vector<double> avg_vectors;   // [n_items][dim], empty if not materialized
  std::vector<std::uint64_t> item_ids;

  const Scalar* component(std::int64_t item, int c) const {
    return embeddings.data() +
           (item * config.item_components + c) * std::int64_t(config.dim);
  }
  const double* avg_row(std::int64_t item) const {
    return avg_vectors.data() + item * std::int64_t(config.dim);
  }
  double norm_of(std::int64_t item, int c) const {
    return double(norms[item * config.item_components + c]);
  }
  bool materialized() const { return !avg_vectors.empty(); }
};

using ItemIndex = ItemIndexT<float>;

// Builds an index from row-major [n_items][item_components][dim] data.
// Rejects zero-norm components when the config is normalized: a cosine dot
// against a zero vector has no value we could defend.
template <class Scalar>
ItemIndexT<Scalar> build_item_index(const ComponentConfig& config,
                                    std::vector<Scalar> embeddings,
                                    std::vector<std::uint64_t> item_ids,
                                    bool materialize_avg = true) {
  config.validate();
  const std::int64_t per_item =
      std::int64_t(config.item_components) * config.dim;
  if (per_item == 0 || embeddings.size() % per_item != 0) {
    throw ConfigError("embedding buffer size is not a multiple of "
                      "item_components * dim");
  }
  ItemIndexT<Scalar> index;
  index.config = config;
  index.n_items = std::int64_t(embeddings.size()) / per_item;
  if (std::int64_t(item_ids.size()) != index.n_items) {
    throw ConfigError("item id count does not match embedding row count");
  }
  {
    std::vector<std::uint64_t> sorted = item_ids;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw ConfigError("item ids must be unique");
    }
  }
  index.embeddings = std::move(embeddings);
  index.item_ids = std::move(item_ids);

  if (config.normalized) {
    index.norms.resize(index.n_items * config.item_components);
    for (std::int64_t i = 0; i < index.n_items; ++i) {
      for (int c = 0; c < config.item_components; ++c) {
        double nrm = detail::l2_norm(index.component(i, c), config.dim);
        if (!(nrm > 0.0)) {
          throw ConfigError("zero-norm component embedding at item row " +
                            std::to_string(i) + ", component " +
                            std::to_string(c) +
                            " (normalized index rejects these at build time)");
        }
        index.norms[i * config.item_components + c] = Scalar(nrm);
      }
    }
  }

  if (materialize_avg) {
    const double inv_total = 1.0 / double(config.total());
    index.avg_vectors.assign(index.n_items * std::int64_t(config.dim), 0.0);
    for (std::int64_t i = 0; i < index.n_items; ++i) {
      double* out = index.avg_vectors.data() + i * std::int64_t(config.dim);
      for (int c = 0; c < config.item_components; ++c) {
        const Scalar* v = index.component(i, c);
        const double scale =
            config.normalized ? inv_total / index.norm_of(i, c) : inv_total;
        for (int t = 0; t < config.dim; ++t) out[t] += scale * double(v[t]);
      }
    }
  }
  return index;
}

// Query-side bundle: raw component embeddings plus the precomputed component
// sum that pairs with ItemIndexT::avg_vectors. gate_row identifies the query
// in table gates; other gates ignore it.
template <class Scalar>
struct QueryEmbeddingsT {
  ComponentConfig config;
  std::vector<Scalar> vectors;     // [query_components][dim]
  std::vector<double> sum_vector;  // [dim], sum of (normalized) components
  std::vector<Scalar> norms;       // [query_components] iff normalized
  std::int64_t gate_row = 0;

  const Scalar* component(int c) const {
    return vectors.data() + std::int64_t(c) * config.dim;
  }
  double norm_of(int c) const { return double(norms[c]); }
};

using QueryEmbeddings = QueryEmbeddingsT<float>;

template <class Scalar>
QueryEmbeddingsT<Scalar> build_query(const ComponentConfig& config,
                                     std::vector<Scalar> vectors,
                                     std::int64_t gate_row = 0) {
  config.validate();
  const std::int64_t expected =
      std::int64_t(config.query_components) * config.dim;
  if (std::int64_t(vectors.size()) != expected) {
    throw ConfigError("query buffer size does not match query_components * dim");
  }
  QueryEmbeddingsT<Scalar> q;
  q.config = config;
  q.vectors = std::move(vectors);
  q.gate_row = gate_row;
  if (config.normalized) {
    q.norms.resize(config.query_components);
    for (int c = 0; c < config.query_components; ++c) {
      double nrm = detail::l2_norm(q.component(c), config.dim);
      if (!(nrm > 0.0)) {
        throw ConfigError("zero-norm query component " + std::to_string(c));
      }
      q.norms[c] = Scalar(nrm);
    }
  }
  q.sum_vector.assign(config.dim, 0.0);
  for (int c = 0; c < config.query_components; ++c) {
    const Scalar* v = q.component(c);
    const double scale = config.normalized ? 1.0 / q.norm_of(c) : 1.0;
    for (int t = 0; t < config.dim; ++t) q.sum_vector[t] += scale * double(v[t]);
  }
  return q;
}

// ---------------------------------------------------------------------------
// Gating

struct UniformGate {};

// Softmax over the component dots at a given temperature. Large temperatures
// approach Uniform, small ones approach ArgmaxOneHot.
struct SoftmaxDotsGate {
  double temperature = 1.0;
};

struct ArgmaxOneHotGate {};

// Explicit per-(query, item) weight table, row-major [n_queries][n_items][P].
struct TableGate {
  std::int64_t n_queries = 0;
  std::int64_t n_items = 0;
  int components = 0;
  std::vector<double> weights;

  const double* row(std::int64_t q, std::int64_t i) const {
    return weights.data() + (q * n_items + i) * std::int64_t(components);
  }
};

using GatingFunction =
    std::variant<UniformGate, SoftmaxDotsGate, ArgmaxOneHotGate, TableGate>;

inline std::string gate_name(const GatingFunction& gate) {
  switch (gate.index()) {
    case 0: return "uniform";
    case 1: return "softmax_dots(t=" +
                   std::to_string(std::get<SoftmaxDotsGate>(gate).temperature) + ")";
    case 2: return "argmax_one_hot";
    default: return "table";
  }
}

inline constexpr double kSimplexSumTolerance = 1e-6;
inline constexpr double kSimplexEntrySlack = 1e-9;

// Fills `out` with the gating weights for one (query, item) pair given its
// component dots. Table rows are validated against the simplex contract
// (entries in [-1e-9, 1 + 1e-9], sum within 1e-6 of one), then clamped and
// renormalized so downstream score math sees an exact convex combination.
inline void gate_weights(const GatingFunction& gate, std::int64_t query_row,
                         std::int64_t item_row, std::span<const double> dots,
                         std::span<double> out) {
  const int p = int(dots.size());
  if (std::holds_alternative<UniformGate>(gate)) {
    const double w = 1.0 / double(p);
    for (int i = 0; i < p; ++i) out[i] = w;
    return;
  }
  if (const auto* soft = std::get_if<SoftmaxDotsGate>(&gate)) {
    if (!(soft->temperature > 0.0)) {
      throw GateError("softmax gate temperature must be positive");
    }
    const double inv_t = 1.0 / soft->temperature;
    double max_dot = dots[0];
    for (int i = 1; i < p; ++i) max_dot = std::max(max_dot, dots[i]);
    double sum = 0.0;
    for (int i = 0; i < p; ++i) {
      out[i] = std::exp((dots[i] - max_dot) * inv_t);
      sum += out[i];
    }
    const double inv_sum = 1.0 / sum;
    for (int i = 0; i < p; ++i) out[i] *= inv_sum;
    return;
  }
  if (std::holds_alternative<ArgmaxOneHotGate>(gate)) {
    int best = 0;
    for (int i = 1; i < p; ++i) {
      if (dots[i] > dots[best]) best = i;  // ties keep the lowest component
    }
    for (int i = 0; i < p; ++i) out[i] = 0.0;
    out[best] = 1.0;
    return;
  }

  const auto& table = std::get<TableGate>(gate);
  if (table.components != p) {
    throw ConfigError("table gate component count does not match instance");
  }
  if (query_row < 0 || query_row >= table.n_queries || item_row < 0 ||
      item_row >= table.n_items) {
    throw ConfigError("table gate has no row for (query " +
                      std::to_string(query_row) + ", item " +
                      std::to_string(item_row) + ")");
  }
  const double* row = table.row(query_row, item_row);
  double sum = 0.0;
  for (int i = 0; i < p; ++i) {
    if (!(row[i] >= -kSimplexEntrySlack && row[i] <= 1.0 + kSimplexEntrySlack)) {
      throw GateError("gate weight out of [0, 1] at component " +
                      std::to_string(i));
    }
    sum += row[i];
  }
  if (std::abs(sum - 1.0) > kSimplexSumTolerance) {
    throw GateError("gate weights sum to " + std::to_string(sum) +
                    ", expected 1");
  }
  double clamped_sum = 0.0;
  for (int i = 0; i < p; ++i) {
    out[i] = std::clamp(row[i], 0.0, 1.0);
    clamped_sum += out[i];
  }
  const double inv = 1.0 / clamped_sum;
  for (int i = 0; i < p; ++i) out[i] *= inv;
}

// ---------------------------------------------------------------------------
// Scoring

namespace detail {

template <class Scalar>
void check_compatible(const QueryEmbeddingsT<Scalar>& query,
                      const ItemIndexT<Scalar>& index) {
  if (query.config != index.config) {
    throw ConfigError("query and index component configs do not match");
  }
}

}  // namespace detail

// Writes the total() component dots for one (query, item) pair in row-major
// (query component, item component) order.
template <class Scalar>
void component_dots(const QueryEmbeddingsT<Scalar>& query,
                    const ItemIndexT<Scalar>& index, std::int64_t item_row,
                    std::span<double> out) {
  detail::check_compatible(query, index);
  if (item_row < 0 || item_row >= index.n_items) {
    throw ArgumentError("item row " + std::to_string(item_row) +
                        " out of range");
  }
  const auto& cfg = index.config;
  int p = 0;
  for (int qc = 0; qc < cfg.query_components; ++qc) {
    const Scalar* f = query.component(qc);
    const double f_scale = cfg.normalized ? 1.0 / query.norm_of(qc) : 1.0;
    for (int ic = 0; ic < cfg.item_components; ++ic, ++p) {
      double dot = detail::dot_accumulate(f, index.component(item_row, ic),
                                          cfg.dim);
      if (cfg.normalized) dot *= f_scale / index.norm_of(item_row, ic);
      out[p] = dot;
    }
  }
}

template <class Scalar>
std::vector<double> component_dots(const QueryEmbeddingsT<Scalar>& query,
                                   const ItemIndexT<Scalar>& index,
                                   std::int64_t item_row) {
  std::vector<double> dots(index.config.total());
  component_dots(query, index, item_row, std::span<double>(dots));
  return dots;
}

// Reusable scoring state for one query against one index. Buffers the dot
// and weight scratch space so per-item scoring does not allocate.
template <class Scalar>
class MolScorer {
 public:
  MolScorer(const QueryEmbeddingsT<Scalar>& query,
            const ItemIndexT<Scalar>& index, const GatingFunction& gate)
      : query_(query), index_(index), gate_(gate),
        dots_(index.config.total()), weights_(index.config.total()) {
    detail::check_compatible(query, index);
  }

  double score(std::int64_t item_row) {
    component_dots(query_, index_, item_row, std::span<double>(dots_));
    return mix(item_row);
  }

  // Component dots for the most recent score() call.
  std::span<const double> last_dots() const { return dots_; }

  const ItemIndexT<Scalar>& index() const { return index_; }
  const QueryEmbeddingsT<Scalar>& query() const { return query_; }

 private:
  double mix(std::int64_t item_row) {
    gate_weights(gate_, query_.gate_row, item_row,
                 std::span<const double>(dots_), std::span<double>(weights_));
    const int p = int(dots_.size());
    double score = 0.0;
    double lo = dots_[0], hi = dots_[0];
    for (int i = 0; i < p; ++i) {
      score += weights_[i] * dots_[i];
      lo = std::min(lo, dots_[i]);
      hi = std::max(hi, dots_[i]);
    }
    // A convex combination lives in [min dot, max dot]; rounding must not
    // push the reported score outside it.
    return std::clamp(score, lo, hi);
  }

  const QueryEmbeddingsT<Scalar>& query_;
  const ItemIndexT<Scalar>& index_;
  GatingFunction gate_;
  std::vector<double> dots_;
  std::vector<double> weights_;
};

// Mixture-of-logits similarity for one (query, item) pair.
template <class Scalar>
double mol_score(const QueryEmbeddingsT<Scalar>& query,
                 const ItemIndexT<Scalar>& index, std::int64_t item_row,
                 const GatingFunction& gate) {
  MolScorer<Scalar> scorer(query, index, gate);
  return scorer.score(item_row);
}

// Scores a list of rows. Per-row reduction order is identical to mol_score,
// so the output matches an elementwise mol_score loop bit for bit.
template <class Scalar>
std::vector<double> mol_score_batch(const QueryEmbeddingsT<Scalar>& query,
                                    const ItemIndexT<Scalar>& index,
                                    std::span<const std::int64_t> rows,
                                    const GatingFunction& gate) {
  MolScorer<Scalar> scorer(query, index, gate);
  std::vector<double> scores;
  scores.reserve(rows.size());
  for (std::int64_t row : rows) scores.push_back(scorer.score(row));
  return scores;
}

}  // namespace mol
