#include "ctsql/distance.hpp"

#include <limits>

namespace ctsql {

const HashVector& DistanceContext::schema_hash(const Instance& inst) const {
  if (source_ == SchemaHashSource::query && inst.has_sql()) {
    auto it = query_memo_.find(*inst.sql);
    if (it == query_memo_.end())
      it = query_memo_.emplace(*inst.sql, schema_hash_of_query(*inst.sql, vocab_)).first;
    return it->second;
  }
  // Default reading: the hash depends only on the instance's schema, so the
  // memo is keyed by db. Unlabeled instances land here in both modes.
  auto it = schema_memo_.find(inst.db_id);
  if (it == schema_memo_.end())
    it = schema_memo_
             .emplace(inst.db_id, schema_hash_of_schema(stream_.schema_of(inst.db_id), vocab_))
             .first;
  return it->second;
}

const HashVector& DistanceContext::struct_hash(const Instance& inst) const {
  if (!inst.has_sql())
    fail(errc::contract, "struct hash of instance '" + inst.id + "' which carries no SQL");
  auto it = struct_memo_.find(*inst.sql);
  if (it == struct_memo_.end())
    it = struct_memo_.emplace(*inst.sql, ctsql::struct_hash(*inst.sql)).first;
  return it->second;
}

double DistanceContext::d_sch(const Instance& a, const Instance& b) const {
  return hash_distance(schema_hash(a), schema_hash(b));
}

double DistanceContext::d_stru(const Instance& a, const Instance& b) const {
  return hash_distance(struct_hash(a), struct_hash(b));
}

double DistanceContext::d_combined(const Instance& a, const Instance& b) const {
  return d_stru(a, b) * d_sch(a, b);
}

double DistanceContext::relevance(const Instance& labeled, std::span<const Instance> unlabeled,
                                  RelevanceMode mode) const {
  if (unlabeled.empty()) fail(errc::contract, "relevance over an empty unlabeled set");
  double best = (mode == RelevanceMode::default_min)
                    ? std::numeric_limits<double>::infinity()
                    : -std::numeric_limits<double>::infinity();
  for (const Instance& u : unlabeled) {
    const double d = d_sch(u, labeled);
    if (mode == RelevanceMode::default_min) {
      if (d < best) best = d;
    } else {
      if (d > best) best = d;
    }
  }
  return best;
}

} // namespace ctsql
