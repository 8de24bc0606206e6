#pragma once

// Corpus loading and task-stream construction: schemas, instances, and the
// K-task split with disjoint databases and zero-shot test guarantees.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ctsql/error.hpp"

namespace ctsql {

enum class ColumnType { text, number, time, boolean, other };

struct Column {
  size_t table_index = 0;
  std::string name; // normalized: lowercased, trimmed
  ColumnType type = ColumnType::other;
};

struct Schema {
  std::string db_id;
  std::vector<std::string> tables; // normalized names
  std::vector<Column> columns;

  // Whitespace/punctuation tokens of all table and column names, in
  // schema order, duplicates removed.
  std::vector<std::string> name_tokens() const;
};

enum class LabelKind { gold, pseudo, none };

struct Instance {
  std::string id;
  std::string db_id;
  std::vector<std::string> nlq;    // tokenized question
  std::optional<std::string> sql;  // gold or pseudo label
  std::optional<int> origin_task;  // 1-based task the instance belongs to
  LabelKind kind = LabelKind::none;
  double confidence = 1.0;         // mu in (0,1]; meaningful for pseudo

  bool has_sql() const { return sql.has_value(); }
};

enum class SplitTag { train, valid, test };

struct Task {
  int index = 0; // 1-based
  std::vector<Instance> labeled;   // A^i
  std::vector<Instance> unlabeled; // U^i
  std::vector<Instance> valid;
  std::vector<Instance> test;
};

struct TaskStream {
  std::vector<Task> tasks;
  std::map<std::string, Schema> schemas;

  const Schema& schema_of(const std::string& db_id) const;
  size_t task_count() const { return tasks.size(); }
};

struct SplitConfig {
  int k_tasks = 0;
  std::vector<std::vector<std::string>> db_groups; // one group per task
  std::vector<size_t> labeled_caps;                // per task; size 1 broadcasts
  uint64_t seed = 0;

  size_t labeled_cap(size_t task_index0) const;
};

struct Corpus {
  std::map<std::string, Schema> schemas;
  std::vector<Instance> instances;
  std::vector<SplitTag> splits; // parallel to instances
};

// Parses the schema and examples files (JSON lists; see README for the
// shapes). Throws errc::parse naming the offending record index and
// errc::reference for dangling db ids.
Corpus load_corpus(const std::string& schema_path, const std::string& examples_path);

// Parse from already-read documents; paths only label error messages.
Corpus parse_corpus(const std::string& schema_doc, const std::string& examples_doc);

// Groups instances by the config's db groups, partitions each task's train
// pool into labeled/unlabeled by seeded shuffle, and validates every stream
// invariant (disjoint dbs, task 1 largest, zero-shot test presence).
TaskStream build_task_stream(const Corpus& corpus, const SplitConfig& split);

struct TaskStats {
  int task = 0;
  size_t labeled = 0;
  size_t unlabeled = 0;
  size_t valid = 0;
  size_t test = 0;
  size_t zero_shot = 0; // test instances on a db/table unseen in A^i
};

std::vector<TaskStats> stream_stats(const TaskStream& stream);

std::string format_stats(const std::vector<TaskStats>& stats);

// Table names referenced by the instance's SQL, resolved against its schema.
// Used by the zero-shot count; instances without SQL yield an empty set.
std::vector<std::string> referenced_tables(const Instance& inst, const Schema& schema);

} // namespace ctsql
