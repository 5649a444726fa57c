#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "mol/common.hpp"
#include "mol/core.hpp"

namespace mol {

// Binary formats, little-endian throughout.
//
// Item index ("MOLE0001"):
//   magic[8], u32 version=1, u32 n_items, u32 item_components, u32 dim,
//   u32 flags (bit0 = normalized),
//   u64 item_ids[n_items],
//   f32 embeddings[n_items][item_components][dim],
//   f32 norms[n_items][item_components]        -- only when bit0 set
//
// Queries ("MOLQ0001"):
//   magic[8], u32 version=1, u32 n_queries, u32 query_components, u32 dim,
//   f32 embeddings[n_queries][query_components][dim]
//
// Average vectors are never stored; they are rematerialized on load.

inline constexpr char kIndexMagic[8] = {'M', 'O', 'L', 'E', '0', '0', '0', '1'};
inline constexpr char kQueryMagic[8] = {'M', 'O', 'L', 'Q', '0', '0', '0', '1'};
inline constexpr std::uint32_t kFormatVersion = 1;

namespace detail {

class BinaryWriter {
 public:
  explicit BinaryWriter(const std::string& path)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw Error("cannot open '" + path + "' for writing");
  }

  void bytes(const void* data, size_t size) {
    out_.write(reinterpret_cast<const char*>(data), std::streamsize(size));
    if (!out_) throw Error("write failed for '" + path_ + "'");
  }
  void u32(std::uint32_t v) { bytes(&v, sizeof v); }

 private:
  std::string path_;
  std::ofstream out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::string& path)
      : in_(path, std::ios::binary) {
    if (!in_) throw Error("cannot open '" + path + "' for reading");
  }

  void bytes(void* data, size_t size, const char* section) {
    in_.read(reinterpret_cast<char*>(data), std::streamsize(size));
    if (size_t(in_.gcount()) != size) {
      throw FormatError("file truncated", offset_ + std::uint64_t(in_.gcount()),
                        section);
    }
    offset_ += size;
  }
  std::uint32_t u32(const char* section) {
    std::uint32_t v = 0;
    bytes(&v, sizeof v, section);
    return v;
  }
  std::uint64_t offset() const { return offset_; }

  bool at_eof() {
    in_.peek();
    return in_.eof();
  }

 private:
  std::ifstream in_;
  std::uint64_t offset_ = 0;
};

}  // namespace detail

// The on-disk layout above assumes a little-endian host, which covers every
// target this project builds on.
static_assert(std::endian::native == std::endian::little,
              "index file format requires a little-endian host");

inline void write_index(const ItemIndex& index, const std::string& path) {
  detail::BinaryWriter w(path);
  w.bytes(kIndexMagic, sizeof kIndexMagic);
  w.u32(kFormatVersion);
  w.u32(std::uint32_t(index.n_items));
  w.u32(std::uint32_t(index.config.item_components));
  w.u32(std::uint32_t(index.config.dim));
  w.u32(index.config.normalized ? 1u : 0u);
  w.bytes(index.item_ids.data(), index.item_ids.size() * sizeof(std::uint64_t));
  w.bytes(index.embeddings.data(), index.embeddings.size() * sizeof(float));
  if (index.config.normalized) {
    w.bytes(index.norms.data(), index.norms.size() * sizeof(float));
  }
}

// Loads an index written by write_index. The file does not carry the
// query-side component count (it is a property of whichever queries are run
// against the index), so the caller provides it; average vectors are
// rematerialized for that shape. Stored norms are trusted for values but
// re-checked for positivity, matching the build-time invariant.
inline ItemIndex read_index(const std::string& path, int query_components = 1) {
  detail::BinaryReader r(path);
  char magic[8];
  r.bytes(magic, sizeof magic, "magic");
  if (std::memcmp(magic, kIndexMagic, sizeof magic) != 0) {
    throw FormatError("bad magic, not a MOLE0001 index file", 0, "magic");
  }
  const std::uint32_t version = r.u32("header");
  if (version != kFormatVersion) {
    throw FormatError("unsupported version " + std::to_string(version), 8,
                      "header");
  }
  const std::uint32_t n_items = r.u32("header");
  const std::uint32_t item_components = r.u32("header");
  const std::uint32_t dim = r.u32("header");
  const std::uint32_t flags = r.u32("header");

  ComponentConfig config;
  config.query_components = query_components;
  config.item_components = int(item_components);
  config.dim = int(dim);
  config.normalized = (flags & 1u) != 0;
  config.validate();

  std::vector<std::uint64_t> ids(n_items);
  r.bytes(ids.data(), ids.size() * sizeof(std::uint64_t), "item_ids");
  std::vector<float> embeddings(size_t(n_items) * item_components * dim);
  r.bytes(embeddings.data(), embeddings.size() * sizeof(float), "embeddings");

  ItemIndex index;
  if (config.normalized) {
    std::vector<float> norms(size_t(n_items) * item_components);
    r.bytes(norms.data(), norms.size() * sizeof(float), "norms");
    // Rebuild through the normal path so zero-norm rows are rejected and the
    // averages are materialized, then keep the stored norms bit for bit.
    index = build_item_index(config, std::move(embeddings), std::move(ids));
    for (size_t i = 0; i < norms.size(); ++i) {
      if (!(norms[i] > 0.0f)) {
        throw FormatError("normalized index contains a non-positive norm",
                          r.offset(), "norms");
      }
    }
    index.norms = std::move(norms);
  } else {
    index = build_item_index(config, std::move(embeddings), std::move(ids));
  }
  return index;
}

inline void write_queries(const std::vector<QueryEmbeddings>& queries,
                          const std::string& path) {
  detail::BinaryWriter w(path);
  w.bytes(kQueryMagic, sizeof kQueryMagic);
  w.u32(kFormatVersion);
  w.u32(std::uint32_t(queries.size()));
  const int query_components =
      queries.empty() ? 1 : queries.front().config.query_components;
  const int dim = queries.empty() ? 1 : queries.front().config.dim;
  w.u32(std::uint32_t(query_components));
  w.u32(std::uint32_t(dim));
  for (const auto& q : queries) {
    if (q.config.query_components != query_components || q.config.dim != dim) {
      throw ConfigError("write_queries requires a homogeneous query list");
    }
    w.bytes(q.vectors.data(), q.vectors.size() * sizeof(float));
  }
}

// Loads queries written by write_queries. The file stores only the query
// side; the item-side component count and the normalized flag come from the
// index the queries will run against.
inline std::vector<QueryEmbeddings> read_queries(const std::string& path,
                                                 int item_components = 1,
                                                 bool normalized = false) {
  detail::BinaryReader r(path);
  char magic[8];
  r.bytes(magic, sizeof magic, "magic");
  if (std::memcmp(magic, kQueryMagic, sizeof magic) != 0) {
    throw FormatError("bad magic, not a MOLQ0001 query file", 0, "magic");
  }
  const std::uint32_t version = r.u32("header");
  if (version != kFormatVersion) {
    throw FormatError("unsupported version " + std::to_string(version), 8,
                      "header");
  }
  const std::uint32_t n_queries = r.u32("header");
  const std::uint32_t query_components = r.u32("header");
  const std::uint32_t dim = r.u32("header");

  ComponentConfig config;
  config.query_components = int(query_components);
  config.item_components = item_components;
  config.dim = int(dim);
  config.normalized = normalized;
  config.validate();

  std::vector<QueryEmbeddings> queries;
  queries.reserve(n_queries);
  for (std::uint32_t i = 0; i < n_queries; ++i) {
    std::vector<float> data(size_t(query_components) * dim);
    r.bytes(data.data(), data.size() * sizeof(float), "query_embeddings");
    queries.push_back(build_query(config, std::move(data), std::int64_t(i)));
  }
  return queries;
}

// Loads an index/queries pair and stitches the shared shape together: the
// query file supplies the query-side component count, the index file the
// item side and the normalized flag.
struct LoadedWorkload {
  ItemIndex index;
  std::vector<QueryEmbeddings> queries;
};

inline LoadedWorkload load_workload(const std::string& index_path,
                                    const std::string& queries_path) {
  // Peek the query header first so the index materializes with the right P.
  detail::BinaryReader r(queries_path);
  char magic[8];
  r.bytes(magic, sizeof magic, "magic");
  if (std::memcmp(magic, kQueryMagic, sizeof magic) != 0) {
    throw FormatError("bad magic, not a MOLQ0001 query file", 0, "magic");
  }
  r.u32("header");
  r.u32("header");
  const std::uint32_t query_components = r.u32("header");

  LoadedWorkload loaded;
  loaded.index = read_index(index_path, int(query_components));
  loaded.queries = read_queries(queries_path,
                                loaded.index.config.item_components,
                                loaded.index.config.normalized);
  if (!loaded.queries.empty() &&
      loaded.queries.front().config != loaded.index.config) {
    throw ConfigError("query file shape does not match index file shape");
  }
  return loaded;
}

}  // namespace mol
