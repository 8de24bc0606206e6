#pragma once

// Schema and structure distances over hash vectors, their product, and the
// relevance score used by prompt sampling.

#include <map>
#include <span>
#include <string>
#include <vector>

#include "ctsql/corpus.hpp"
#include "ctsql/sqlrep.hpp"

namespace ctsql {

enum class RelevanceMode {
  default_min, // smallest distance to the unlabeled set = most relevant
  literal_max, // largest distance, the formula taken literally
};

enum class SchemaHashSource {
  schema, // hash the instance's full schema (tables + columns)
  query,  // hash schema tokens appearing in the instance's own query
};

// Computes and memoizes hash vectors for instances against one corpus-wide
// Psi snapshot, so every distance in a run is comparable.
class DistanceContext {
public:
  DistanceContext(const TaskStream& stream, const SchemaVocab& vocab,
                  SchemaHashSource source = SchemaHashSource::schema)
      : stream_(stream), vocab_(vocab), source_(source) {}

  const HashVector& schema_hash(const Instance& inst) const;
  const HashVector& struct_hash(const Instance& inst) const;

  // Euclidean distance on schema-token hash vectors.
  double d_sch(const Instance& a, const Instance& b) const;
  // Euclidean distance on SQL-keyword hash vectors; both sides must carry SQL.
  double d_stru(const Instance& a, const Instance& b) const;
  // Product of the two, balancing their weights.
  double d_combined(const Instance& a, const Instance& b) const;

  // Relevance of a labeled/pseudo instance to the unlabeled pool: the
  // extreme d_sch over the pool, per mode. Fails on an empty pool.
  double relevance(const Instance& labeled, std::span<const Instance> unlabeled,
                   RelevanceMode mode) const;

private:
  const TaskStream& stream_;
  const SchemaVocab& vocab_;
  SchemaHashSource source_;
  mutable std::map<std::string, HashVector> schema_memo_; // by db_id
  mutable std::map<std::string, HashVector> query_memo_;  // by SQL text
  mutable std::map<std::string, HashVector> struct_memo_; // by SQL text
};

} // namespace ctsql
