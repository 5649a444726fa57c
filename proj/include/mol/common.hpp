#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mol {

// Error taxonomy. Everything thrown by the library derives from Error so
// callers can catch one base type at the CLI boundary.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape or flag mismatch between a query, an index, or an operation input.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Invalid argument value (k = 0, bad rank, non-finite input, ...).
class ArgumentError : public Error {
 public:
  explicit ArgumentError(const std::string& msg) : Error(msg) {}
};

// Gating weights failed the simplex contract.
class GateError : public Error {
 public:
  explicit GateError(const std::string& msg) : Error(msg) {}
};

// An operation needed materialized average vectors and the index has none.
class NotMaterializedError : public Error {
 public:
  explicit NotMaterializedError(const std::string& msg) : Error(msg) {}
};

// Malformed binary file. Carries the byte offset where parsing stopped and
// the section being read at that point.
class FormatError : public Error {
 public:
  FormatError(const std::string& msg, std::uint64_t offset, std::string section)
      : Error(msg + " (section '" + section + "', byte offset " +
              std::to_string(offset) + ")"),
        byte_offset(offset),
        section(std::move(section)) {}

  std::uint64_t byte_offset;
  std::string section;
};

// Counts scalar reads performed by candidate-generation scans. Optional:
// scans accept a null pointer and skip the bookkeeping.
struct ReadCounter {
  std::uint64_t scalars = 0;
};

// Which retrieval strategy produced a result, with its budget parameters.
struct MethodTag {
  enum class Kind { BruteForce, Exact, PerEmbedding, Average, Combined };

  Kind kind = Kind::BruteForce;
  std::int64_t n = 0;   // PerEmbedding / Average budget
  std::int64_t n1 = 0;  // Combined: per-embedding budget
  std::int64_t n2 = 0;  // Combined: average budget
  std::int64_t k = 0;

  std::string name() const {
    switch (kind) {
      case Kind::BruteForce:   return "brute_force";
      case Kind::Exact:        return "exact";
      case Kind::PerEmbedding: return "per_embedding";
      case Kind::Average:      return "average";
      case Kind::Combined:     return "combined";
    }
    return "unknown";
  }

  std::string params() const {
    switch (kind) {
      case Kind::PerEmbedding:
      case Kind::Average:
        return "n=" + std::to_string(n);
      case Kind::Combined:
        return "n1=" + std::to_string(n1) + ",n2=" + std::to_string(n2);
      default:
        return "";
    }
  }

  std::string describe() const {
    auto p = params();
    return p.empty() ? name() : name() + "(" + p + ")";
  }
};

// Ordered top-k answer. Scores are non-increasing; ties are broken by
// ascending item id so every strategy is deterministic and directly
// comparable against the oracle.
struct RetrievalResult {
  std::vector<std::uint64_t> item_ids;
  std::vector<double> scores;
  MethodTag method;
  std::int64_t candidates_scored = 0;
};

// Global ordering rule: higher score first, equal scores by ascending id.
inline bool ranks_before(double score_a, std::uint64_t id_a, double score_b,
                         std::uint64_t id_b) {
  if (score_a != score_b) return score_a > score_b;
  return id_a < id_b;
}

}  // namespace mol
