#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "mol/common.hpp"
#include "mol/core.hpp"

namespace mol {

// SplitMix64: the canonical 64-bit mixing generator (Steele, Lea, Flood).
// Chosen because its output stream is fully specified by integer arithmetic,
// so generation is reproducible byte for byte from the seed alone.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1): top 53 bits scaled, exact in double.
  double uniform() { return double(next() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1]; safe as a log argument.
  double uniform_pos() { return double((next() >> 11) + 1) * 0x1.0p-53; }

  std::uint64_t below(std::uint64_t bound) { return next() % bound; }

  // Marsaglia polar method, one value per call (the pair partner is
  // discarded to keep the stream layout simple).
  double gaussian() {
    for (;;) {
      const double u = 2.0 * uniform() - 1.0;
      const double v = 2.0 * uniform() - 1.0;
      const double s = u * u + v * v;
      if (s > 0.0 && s < 1.0) {
        return u * std::sqrt(-2.0 * std::log(s) / s);
      }
    }
  }

 private:
  std::uint64_t state_;
};

struct GaussianDistribution {
  double mean = 0.0;
  double stddev = 1.0;
};

// Cluster centers drawn first; every item or query picks one center and all
// of its component embeddings are perturbations of it. Components of one
// entity are therefore correlated, the way trained component embeddings
// are, and the spread controls how much the average dot tells you about any
// single component dot.
struct ClusteredDistribution {
  int n_clusters = 8;
  double spread = 0.1;
};

using WorkloadDistribution =
    std::variant<GaussianDistribution, ClusteredDistribution>;

// Full description of a synthetic workload. Identical specs generate
// identical bytes.
struct WorkloadSpec {
  std::uint64_t seed = 0;
  std::int64_t n_items = 1;
  std::int64_t n_queries = 1;
  ComponentConfig config;
  GatingFunction gate = UniformGate{};
  WorkloadDistribution distribution = GaussianDistribution{};

  void validate() const {
    config.validate();
    if (n_items < 1 || n_queries < 1) {
      throw ArgumentError("workload requires n_items >= 1 and n_queries >= 1");
    }
    if (const auto* g = std::get_if<GaussianDistribution>(&distribution)) {
      if (!std::isfinite(g->mean) || !std::isfinite(g->stddev) ||
          g->stddev <= 0.0) {
        throw ArgumentError("gaussian distribution needs finite mean and positive stddev");
      }
    } else {
      const auto& c = std::get<ClusteredDistribution>(distribution);
      if (c.n_clusters < 1 || !std::isfinite(c.spread) || c.spread <= 0.0) {
        throw ArgumentError("clustered distribution needs n_clusters >= 1 and positive spread");
      }
    }
  }
};

struct Workload {
  ItemIndex index;
  std::vector<QueryEmbeddings> queries;
};

namespace detail {

// Vector stream shared by the item and query sides. Items are drawn first,
// then queries, from one sequential SplitMix64 stream. begin_entity() marks
// the start of one item or query; clustered mode picks that entity's center
// there.
class VectorSource {
 public:
  VectorSource(SplitMix64& rng, const WorkloadDistribution& dist, int dim)
      : rng_(rng), dim_(dim) {
    if (const auto* c = std::get_if<ClusteredDistribution>(&dist)) {
      clustered_ = true;
      spread_ = c->spread;
      centers_.resize(size_t(c->n_clusters) * dim_);
      for (auto& x : centers_) x = rng_.gaussian();
    } else {
      const auto& g = std::get<GaussianDistribution>(dist);
      mean_ = g.mean;
      stddev_ = g.stddev;
    }
  }

  void begin_entity() {
    if (clustered_) {
      current_center_ = size_t(rng_.below(centers_.size() / dim_));
    }
  }

  void fill(float* out) {
    if (clustered_) {
      const double* center = centers_.data() + current_center_ * dim_;
      for (int t = 0; t < dim_; ++t) {
        out[t] = float(center[t] + spread_ * rng_.gaussian());
      }
    } else {
      for (int t = 0; t < dim_; ++t) {
        out[t] = float(mean_ + stddev_ * rng_.gaussian());
      }
    }
  }

 private:
  SplitMix64& rng_;
  int dim_;
  bool clustered_ = false;
  double mean_ = 0.0;
  double stddev_ = 1.0;
  double spread_ = 0.1;
  size_t current_center_ = 0;
  std::vector<double> centers_;
};

}  // namespace detail

// Deterministic synthetic workload: item embeddings, then query embeddings,
// from a single SplitMix64 stream seeded by spec.seed.
inline Workload generate(const WorkloadSpec& spec) {
  spec.validate();
  SplitMix64 rng(spec.seed);
  detail::VectorSource source(rng, spec.distribution, spec.config.dim);

  const auto& cfg = spec.config;
  std::vector<float> items(size_t(spec.n_items) * cfg.item_components * cfg.dim);
  for (std::int64_t i = 0; i < spec.n_items; ++i) {
    source.begin_entity();
    for (int c = 0; c < cfg.item_components; ++c) {
      source.fill(items.data() + (i * cfg.item_components + c) * std::int64_t(cfg.dim));
    }
  }
  std::vector<std::uint64_t> ids(size_t(spec.n_items));
  for (std::int64_t i = 0; i < spec.n_items; ++i) ids[size_t(i)] = std::uint64_t(i);

  Workload workload;
  workload.index = build_item_index(cfg, std::move(items), std::move(ids));
  workload.queries.reserve(size_t(spec.n_queries));
  for (std::int64_t q = 0; q < spec.n_queries; ++q) {
    source.begin_entity();
    std::vector<float> qv(size_t(cfg.query_components) * cfg.dim);
    for (int c = 0; c < cfg.query_components; ++c) {
      source.fill(qv.data() + std::int64_t(c) * cfg.dim);
    }
    workload.queries.push_back(build_query(cfg, std::move(qv), q));
  }
  return workload;
}

}  // namespace mol
