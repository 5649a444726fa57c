// Shared test fixtures and independent reference implementations. The
// references deliberately avoid the library's scan/selection code paths so
// they can serve as oracles for them.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "mol/core.hpp"
#include "mol/workload.hpp"

namespace moltest {

// Three scalar items with two item-side components each:
//   x1 = (0.5, 0.9), x2 = (0.8, 0.1), x3 = (0.2, 0.3), query f = [1.0].
// Uniform-gate scores: 0.7, 0.45, 0.25.
struct TinyExample {
  mol::ItemIndex index;
  mol::QueryEmbeddings query;

  TinyExample() {
    mol::ComponentConfig config{1, 2, 1, false};
    index = mol::build_item_index<float>(
        config, {0.5f, 0.9f, 0.8f, 0.1f, 0.2f, 0.3f}, {0, 1, 2});
    query = mol::build_query<float>(config, {1.0f});
  }
};

struct RandomInstance {
  mol::ItemIndex index;
  std::vector<mol::QueryEmbeddings> queries;
};

inline RandomInstance random_instance(std::uint64_t seed, std::int64_t n_items,
                                      int query_components, int item_components,
                                      int dim, bool normalized,
                                      std::int64_t n_queries = 2) {
  mol::WorkloadSpec spec;
  spec.seed = seed;
  spec.n_items = n_items;
  spec.n_queries = n_queries;
  spec.config = {query_components, item_components, dim, normalized};
  mol::Workload w = mol::generate(spec);
  return {std::move(w.index), std::move(w.queries)};
}

// Reference component dots in extended precision, straight from the raw
// buffers.
inline std::vector<double> reference_dots(const mol::QueryEmbeddings& query,
                                          const mol::ItemIndex& index,
                                          std::int64_t row) {
  const auto& cfg = index.config;
  std::vector<double> out;
  for (int qc = 0; qc < cfg.query_components; ++qc) {
    for (int ic = 0; ic < cfg.item_components; ++ic) {
      long double dot = 0.0L, qn = 0.0L, in = 0.0L;
      const float* f = query.component(qc);
      const float* g = index.component(row, ic);
      for (int t = 0; t < cfg.dim; ++t) {
        dot += (long double)(f[t]) * (long double)(g[t]);
        qn += (long double)(f[t]) * (long double)(f[t]);
        in += (long double)(g[t]) * (long double)(g[t]);
      }
      if (cfg.normalized) dot /= sqrtl(qn) * sqrtl(in);
      out.push_back(double(dot));
    }
  }
  return out;
}

// Reference mixture score: reference dots + directly evaluated gate.
inline double reference_score(const mol::QueryEmbeddings& query,
                              const mol::ItemIndex& index, std::int64_t row,
                              const mol::GatingFunction& gate) {
  auto dots = reference_dots(query, index, row);
  const int p = int(dots.size());
  std::vector<double> w(p, 0.0);
  if (std::holds_alternative<mol::UniformGate>(gate)) {
    std::fill(w.begin(), w.end(), 1.0 / p);
  } else if (const auto* s = std::get_if<mol::SoftmaxDotsGate>(&gate)) {
    double sum = 0.0;
    for (int i = 0; i < p; ++i) sum += std::exp(dots[i] / s->temperature);
    for (int i = 0; i < p; ++i) w[i] = std::exp(dots[i] / s->temperature) / sum;
  } else if (std::holds_alternative<mol::ArgmaxOneHotGate>(gate)) {
    w[size_t(std::max_element(dots.begin(), dots.end()) - dots.begin())] = 1.0;
  } else {
    const auto& table = std::get<mol::TableGate>(gate);
    const double* row_w = table.row(query.gate_row, row);
    for (int i = 0; i < p; ++i) w[i] = row_w[i];
  }
  double score = 0.0;
  for (int i = 0; i < p; ++i) score += w[i] * dots[i];
  return score;
}

// Worst-case fixture for the per-embedding gap bound (n = 1, k = 1): item y
// sits just below both component winners, and a table gate pins each
// candidate's weight on its weakest component while y gets its strongest.
// The candidates then score 0, y scores 9.5, and the certificate bound is
// 10, so the realized gap reaches 95% of the bound.
struct TightnessFixture {
  mol::ItemIndex index;
  mol::QueryEmbeddings query;
  mol::GatingFunction gate;
  std::int64_t n = 1;
  std::int64_t k = 1;
};

inline TightnessFixture tightness_fixture() {
  mol::ComponentConfig config{1, 2, 1, false};
  TightnessFixture fx;
  fx.index = mol::build_item_index<float>(
      config,
      {10.0f, 0.0f,   // a: wins component 1
       0.0f, 9.9f,    // b: wins component 2
       9.5f, 9.4f},   // y: just outside both top-1 lists
      {0, 1, 2});
  fx.query = mol::build_query<float>(config, {1.0f});
  mol::TableGate gate;
  gate.n_queries = 1;
  gate.n_items = 3;
  gate.components = 2;
  gate.weights = {
      0.0, 1.0,  // a scores its weak component: 0
      1.0, 0.0,  // b scores its weak component: 0
      1.0, 0.0,  // y scores its strong component: 9.5
  };
  fx.gate = gate;
  return fx;
}

// Full-sort selection oracle over arbitrary per-row keys.
struct RankedRow {
  double score;
  std::uint64_t key;
};

inline std::vector<RankedRow> full_sort_topk(std::vector<RankedRow> rows,
                                             std::int64_t k) {
  std::sort(rows.begin(), rows.end(), [](const RankedRow& a, const RankedRow& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.key < b.key;
  });
  if (std::int64_t(rows.size()) > k) rows.resize(size_t(k));
  return rows;
}

}  // namespace moltest
