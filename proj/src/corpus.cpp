#include "ctsql/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ctsql/sqlrep.hpp"
#include "ctsql/util.hpp"

namespace ctsql {

using nlohmann::json;

std::vector<std::string> Schema::name_tokens() const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  auto push = [&](const std::string& name) {
    for (const auto& tok : tokenize(name))
      if (seen.insert(tok).second) out.push_back(tok);
  };
  for (const auto& t : tables) push(t);
  for (const auto& c : columns) push(c.name);
  return out;
}

const Schema& TaskStream::schema_of(const std::string& db_id) const {
  auto it = schemas.find(db_id);
  if (it == schemas.end()) fail(errc::reference, "unknown db_id '" + db_id + "'");
  return it->second;
}

size_t SplitConfig::labeled_cap(size_t task_index0) const {
  if (labeled_caps.empty()) fail(errc::config, "split: labeled_cap missing");
  if (labeled_caps.size() == 1) return labeled_caps[0];
  if (task_index0 >= labeled_caps.size())
    fail(errc::config, "split: labeled_cap list shorter than K");
  return labeled_caps[task_index0];
}

// ---------------------------------------------------------------------------
// Loading

namespace {

ColumnType column_type_of(const std::string& s) {
  if (s == "text") return ColumnType::text;
  if (s == "number") return ColumnType::number;
  if (s == "time") return ColumnType::time;
  if (s == "boolean") return ColumnType::boolean;
  return ColumnType::other;
}

SplitTag split_tag_of(const std::string& s, size_t record) {
  if (s == "train") return SplitTag::train;
  if (s == "valid") return SplitTag::valid;
  if (s == "test") return SplitTag::test;
  fail(errc::parse, "examples record " + std::to_string(record) + ": unknown split '" + s + "'");
}

std::string normalized_name(const std::string& raw, const char* what, size_t record) {
  std::string name = lowercase(trim(raw));
  if (name.empty())
    fail(errc::parse,
         "schema record " + std::to_string(record) + ": empty " + what + " after normalization");
  return name;
}

json parse_doc(const std::string& doc, const char* label) {
  json parsed = json::parse(doc, nullptr, false);
  if (parsed.is_discarded()) fail(errc::parse, std::string(label) + ": not valid JSON");
  if (!parsed.is_array()) fail(errc::parse, std::string(label) + ": expected a top-level list");
  return parsed;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::parse, "cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace

Corpus parse_corpus(const std::string& schema_doc, const std::string& examples_doc) {
  Corpus corpus;

  const json schemas = parse_doc(schema_doc, "schema file");
  for (size_t r = 0; r < schemas.size(); ++r) {
    const json& rec = schemas[r];
    try {
      Schema s;
      s.db_id = rec.at("db_id").get<std::string>();
      if (trim(s.db_id).empty())
        fail(errc::parse, "schema record " + std::to_string(r) + ": empty db_id");
      for (const auto& t : rec.at("tables"))
        s.tables.push_back(normalized_name(t.get<std::string>(), "table name", r));
      for (const auto& c : rec.at("columns")) {
        Column col;
        const long ti = c.at("table").get<long>();
        if (ti < 0 || static_cast<size_t>(ti) >= s.tables.size())
          fail(errc::parse, "schema record " + std::to_string(r) + ": column '" +
                                c.at("name").get<std::string>() + "' references table index " +
                                std::to_string(ti) + " out of range");
        col.table_index = static_cast<size_t>(ti);
        col.name = normalized_name(c.at("name").get<std::string>(), "column name", r);
        col.type = column_type_of(c.value("type", "other"));
        s.columns.push_back(std::move(col));
      }
      if (!corpus.schemas.emplace(s.db_id, s).second)
        fail(errc::parse, "schema record " + std::to_string(r) + ": duplicate db_id '" +
                              s.db_id + "'");
    } catch (const json::exception& e) {
      fail(errc::parse, "schema record " + std::to_string(r) + ": " + e.what());
    }
  }

  const json examples = parse_doc(examples_doc, "examples file");
  std::set<std::string> ids;
  for (size_t r = 0; r < examples.size(); ++r) {
    const json& rec = examples[r];
    try {
      Instance inst;
      inst.id = rec.at("id").get<std::string>();
      if (!ids.insert(inst.id).second)
        fail(errc::parse,
             "examples record " + std::to_string(r) + ": duplicate id '" + inst.id + "'");
      inst.db_id = rec.at("db_id").get<std::string>();
      if (!corpus.schemas.count(inst.db_id))
        fail(errc::reference, "examples record " + std::to_string(r) +
                                  ": unknown db_id '" + inst.db_id + "'");
      inst.nlq = tokenize(rec.at("question").get<std::string>());
      const json& q = rec.at("query");
      if (!q.is_null()) {
        inst.sql = q.get<std::string>();
        inst.kind = LabelKind::gold;
      }
      corpus.splits.push_back(split_tag_of(rec.at("split").get<std::string>(), r));
      corpus.instances.push_back(std::move(inst));
    } catch (const json::exception& e) {
      fail(errc::parse, "examples record " + std::to_string(r) + ": " + e.what());
    }
  }
  return corpus;
}

Corpus load_corpus(const std::string& schema_path, const std::string& examples_path) {
  return parse_corpus(read_file(schema_path), read_file(examples_path));
}

// ---------------------------------------------------------------------------
// Stream construction

TaskStream build_task_stream(const Corpus& corpus, const SplitConfig& split) {
  if (split.k_tasks <= 0) fail(errc::config, "split: K must be positive");
  if (split.db_groups.size() != static_cast<size_t>(split.k_tasks))
    fail(errc::config, "split: expected " + std::to_string(split.k_tasks) + " db groups, got " +
                           std::to_string(split.db_groups.size()));

  // Group membership; overlaps and dangling ids are config errors.
  std::map<std::string, size_t> group_of;
  for (size_t g = 0; g < split.db_groups.size(); ++g) {
    if (split.db_groups[g].empty())
      fail(errc::config, "split: db group " + std::to_string(g + 1) + " is empty");
    for (const auto& db : split.db_groups[g]) {
      if (!corpus.schemas.count(db))
        fail(errc::config, "split: group " + std::to_string(g + 1) + " names unknown db '" +
                               db + "'");
      if (!group_of.emplace(db, g).second)
        fail(errc::config, "split: db '" + db + "' appears in more than one group");
    }
  }

  TaskStream stream;
  stream.schemas = corpus.schemas;
  stream.tasks.resize(static_cast<size_t>(split.k_tasks));
  for (size_t g = 0; g < stream.tasks.size(); ++g)
    stream.tasks[g].index = static_cast<int>(g) + 1;

  // Distribute instances; train pools are partitioned below.
  std::vector<std::vector<Instance>> train_pools(stream.tasks.size());
  for (size_t i = 0; i < corpus.instances.size(); ++i) {
    const Instance& inst = corpus.instances[i];
    auto it = group_of.find(inst.db_id);
    if (it == group_of.end())
      fail(errc::config, "instance '" + inst.id + "' is on db '" + inst.db_id +
                             "' which no group claims");
    Task& task = stream.tasks[it->second];
    Instance copy = inst;
    copy.origin_task = task.index;
    switch (corpus.splits[i]) {
      case SplitTag::train: train_pools[it->second].push_back(std::move(copy)); break;
      case SplitTag::valid: task.valid.push_back(std::move(copy)); break;
      case SplitTag::test: task.test.push_back(std::move(copy)); break;
    }
  }

  // Labeled/unlabeled partition: deterministic shuffle by seed, the first
  // labeled_cap instances keep their gold labels, the rest are stripped.
  for (size_t g = 0; g < stream.tasks.size(); ++g) {
    auto& pool = train_pools[g];
    std::mt19937_64 rng(sub_seed(split.seed, "split:task" + std::to_string(g + 1)));
    std::shuffle(pool.begin(), pool.end(), rng);
    const size_t cap = split.labeled_cap(g);
    Task& task = stream.tasks[g];
    for (auto& inst : pool) {
      if (inst.has_sql() && task.labeled.size() < cap) {
        task.labeled.push_back(std::move(inst));
      } else {
        // Label stripped: the instance enters the stream unlabeled even if
        // the corpus knows its query.
        Instance u = std::move(inst);
        u.sql.reset();
        u.kind = LabelKind::none;
        task.unlabeled.push_back(std::move(u));
      }
    }
  }

  // Validate stream invariants.
  for (const Task& task : stream.tasks)
    if (task.test.empty())
      fail(errc::config,
           "task " + std::to_string(task.index) + " has an empty test set");
  for (size_t g = 1; g < stream.tasks.size(); ++g)
    if (stream.tasks[g].labeled.size() > stream.tasks[0].labeled.size())
      fail(errc::config, "task 1 must have the largest labeled set (task " +
                             std::to_string(g + 1) + " has " +
                             std::to_string(stream.tasks[g].labeled.size()) + " > " +
                             std::to_string(stream.tasks[0].labeled.size()) + ")");
  for (const auto& st : stream_stats(stream))
    if (st.zero_shot == 0)
      fail(errc::config, "task " + std::to_string(st.task) +
                             ": no test instance on a db or table unseen in its labeled set");
  return stream;
}

// ---------------------------------------------------------------------------
// Stats

std::vector<std::string> referenced_tables(const Instance& inst, const Schema& schema) {
  std::vector<std::string> out;
  if (!inst.has_sql()) return out;
  std::vector<SqlToken> toks;
  try {
    toks = lex_sql(*inst.sql);
  } catch (const Error&) {
    return out; // unlexable query references nothing
  }
  std::set<std::string> tables(schema.tables.begin(), schema.tables.end());
  std::set<std::string> seen;
  for (const auto& t : toks)
    if (t.kind == SqlTokenKind::identifier && tables.count(t.text) && seen.insert(t.text).second)
      out.push_back(t.text);
  return out;
}

std::vector<TaskStats> stream_stats(const TaskStream& stream) {
  std::vector<TaskStats> out;
  for (const Task& task : stream.tasks) {
    TaskStats st;
    st.task = task.index;
    st.labeled = task.labeled.size();
    st.unlabeled = task.unlabeled.size();
    st.valid = task.valid.size();
    st.test = task.test.size();

    // Tables and dbs seen in A^i, via each labeled instance's gold query.
    std::set<std::string> seen_dbs;
    std::set<std::string> seen_tables; // qualified as db.table
    for (const Instance& a : task.labeled) {
      seen_dbs.insert(a.db_id);
      for (const auto& t : referenced_tables(a, stream.schema_of(a.db_id)))
        seen_tables.insert(a.db_id + "." + t);
    }
    for (const Instance& t : task.test) {
      bool zero_shot = !seen_dbs.count(t.db_id);
      if (!zero_shot) {
        for (const auto& tab : referenced_tables(t, stream.schema_of(t.db_id)))
          if (!seen_tables.count(t.db_id + "." + tab)) {
            zero_shot = true;
            break;
          }
      }
      if (zero_shot) ++st.zero_shot;
    }
    out.push_back(st);
  }
  return out;
}

std::string format_stats(const std::vector<TaskStats>& stats) {
  std::ostringstream ss;
  ss << "task  labeled  unlabeled  valid  test  zero_shot\n";
  for (const auto& st : stats) {
    char line[128];
    std::snprintf(line, sizeof(line), "%4d  %7zu  %9zu  %5zu  %4zu  %9zu\n", st.task, st.labeled,
                  st.unlabeled, st.valid, st.test, st.zero_shot);
    ss << line;
  }
  return ss.str();
}

} // namespace ctsql
