#pragma once

// SQL surface representations: keyword extraction over the fixed vocabulary
// Phi, schema-token hashing over the growing vocabulary Psi, skeleton
// templates, and the canonical exact-match comparison used for accuracy.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ctsql/error.hpp"

namespace ctsql {

struct Schema; // corpus.hpp

// ---------------------------------------------------------------------------
// Lexing

enum class SqlTokenKind { identifier, number, string, op, punct, star };

struct SqlToken {
  SqlTokenKind kind;
  std::string text; // identifiers lowercased, operators verbatim
  size_t pos = 0;   // byte offset into the source text
};

// Splits SQL text into tokens. Identifiers are lowercased; `<>` is
// normalized to `!=`. Throws errc::lex with the byte position on
// unterminated strings or characters outside the SQL surface.
std::vector<SqlToken> lex_sql(std::string_view sql);

// ---------------------------------------------------------------------------
// Vocabularies

// Fixed, ordered SQL keyword/operator vocabulary. Multiword entries
// (GROUP BY, ORDER BY) match as units before single words.
class KeywordVocab {
public:
  static const KeywordVocab& instance();

  size_t size() const { return entries_.size(); }
  const std::string& at(size_t i) const { return entries_[i]; }
  std::optional<size_t> index_of(std::string_view keyword) const;

private:
  KeywordVocab();
  std::vector<std::string> entries_;
  std::map<std::string, size_t, std::less<>> index_;
};

// Append-only vocabulary of schema-name tokens. Indices are stable across
// growth; a snapshot is just the size observed at hash time.
class SchemaVocab {
public:
  // Returns the token's index, appending it if unseen.
  size_t add(std::string_view token);
  std::optional<size_t> index_of(std::string_view token) const;
  size_t size() const { return entries_.size(); }
  const std::string& at(size_t i) const { return entries_[i]; }

  // Registers every table-name and column-name token of the schema.
  void add_schema(const Schema& schema);

private:
  std::vector<std::string> entries_;
  std::map<std::string, size_t, std::less<>> index_;
};

// ---------------------------------------------------------------------------
// Hash vectors

enum class VocabTag { phi, psi };

// Sparse binary indicator over a vocabulary snapshot.
struct HashVector {
  VocabTag tag = VocabTag::phi;
  size_t snapshot = 0;           // vocabulary size at evaluation time
  std::vector<uint32_t> bits;    // sorted, duplicate-free set-bit indices

  bool operator==(const HashVector&) const = default;
};

// Euclidean distance between binary vectors: sqrt of the symmetric
// difference cardinality. Vectors must share tag and snapshot.
double hash_distance(const HashVector& a, const HashVector& b);

// ---------------------------------------------------------------------------
// Operations

// Exactly the Phi members present in the SQL text, case-insensitive,
// multiword units matched first.
std::vector<std::string> extract_keywords(std::string_view sql);

// Keyword presence projected onto Phi indices.
HashVector struct_hash(std::string_view sql);

// Bits set for every Psi token among the schema's table/column name tokens.
HashVector schema_hash_of_schema(const Schema& schema, const SchemaVocab& vocab);

// Literal reading: bits set for Psi tokens appearing in the SQL text itself.
HashVector schema_hash_of_query(std::string_view sql, const SchemaVocab& vocab);

// ---------------------------------------------------------------------------
// Skeletons

// Canonical token sequence with schema identifiers abstracted to COL/TAB and
// literals to VAL; everything else uppercased.
struct SqlSkeleton {
  std::vector<std::string> tokens;

  std::string text() const;
  bool operator==(const SqlSkeleton&) const = default;
  auto operator<=>(const SqlSkeleton&) const = default;
};

SqlSkeleton skeletonize(std::string_view sql, const Schema& schema);

// ---------------------------------------------------------------------------
// Canonical comparison

// Canonical form: keywords uppercased, identifiers lowercased, whitespace
// normalized, SELECT lists and all-AND WHERE conjuncts sorted as multisets.
std::string canonical_sql(std::string_view sql);

// True iff the canonical forms are equal. A side that fails to lex counts
// as a non-match; *diag (when given) receives the reason.
bool exact_match(std::string_view pred, std::string_view gold, std::string* diag = nullptr);

} // namespace ctsql
