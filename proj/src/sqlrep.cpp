#include "ctsql/sqlrep.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "ctsql/corpus.hpp"
#include "ctsql/util.hpp"

namespace ctsql {

// ---------------------------------------------------------------------------
// Lexer

namespace {

bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

[[noreturn]] void lex_error(size_t pos, const std::string& what) {
  fail(errc::lex, "sql lex error at position " + std::to_string(pos) + ": " + what);
}

} // namespace

std::vector<SqlToken> lex_sql(std::string_view sql) {
  std::vector<SqlToken> tokens;
  size_t i = 0;
  const size_t n = sql.size();
  while (i < n) {
    const char c = sql[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '\'' || c == '"') {
      size_t j = i + 1;
      while (j < n && sql[j] != c) ++j;
      if (j >= n) lex_error(i, "unterminated string literal");
      tokens.push_back({SqlTokenKind::string, std::string(sql.substr(i, j - i + 1)), i});
      i = j + 1;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(sql[i + 1])))) {
      size_t j = i;
      while (j < n && std::isdigit(static_cast<unsigned char>(sql[j]))) ++j;
      if (j < n && sql[j] == '.') {
        ++j;
        while (j < n && std::isdigit(static_cast<unsigned char>(sql[j]))) ++j;
      }
      tokens.push_back({SqlTokenKind::number, std::string(sql.substr(i, j - i)), i});
      i = j;
      continue;
    }
    if (ident_start(c)) {
      size_t j = i;
      while (j < n && ident_char(sql[j])) ++j;
      tokens.push_back({SqlTokenKind::identifier, lowercase(sql.substr(i, j - i)), i});
      i = j;
      continue;
    }
    switch (c) {
      case '=':
        tokens.push_back({SqlTokenKind::op, "=", i});
        ++i;
        continue;
      case '!':
        if (i + 1 < n && sql[i + 1] == '=') {
          tokens.push_back({SqlTokenKind::op, "!=", i});
          i += 2;
          continue;
        }
        lex_error(i, "stray '!'");
      case '<':
        if (i + 1 < n && sql[i + 1] == '=') {
          tokens.push_back({SqlTokenKind::op, "<=", i});
          i += 2;
        } else if (i + 1 < n && sql[i + 1] == '>') {
          tokens.push_back({SqlTokenKind::op, "!=", i}); // normalize <> to !=
          i += 2;
        } else {
          tokens.push_back({SqlTokenKind::op, "<", i});
          ++i;
        }
        continue;
      case '>':
        if (i + 1 < n && sql[i + 1] == '=') {
          tokens.push_back({SqlTokenKind::op, ">=", i});
          i += 2;
        } else {
          tokens.push_back({SqlTokenKind::op, ">", i});
          ++i;
        }
        continue;
      case '*':
        tokens.push_back({SqlTokenKind::star, "*", i});
        ++i;
        continue;
      case '(': case ')': case ',': case '.': case ';':
      case '+': case '-': case '/': case '%':
        tokens.push_back({SqlTokenKind::punct, std::string(1, c), i});
        ++i;
        continue;
      default:
        lex_error(i, std::string("unexpected character '") + c + "'");
    }
  }
  return tokens;
}

// ---------------------------------------------------------------------------
// KeywordVocab

KeywordVocab::KeywordVocab() {
  entries_ = {
      "SELECT", "FROM", "WHERE", "GROUP BY", "HAVING", "ORDER BY", "LIMIT",
      "JOIN", "ON", "AS", "AND", "OR", "NOT", "IN", "EXISTS", "BETWEEN",
      "LIKE", "UNION", "INTERSECT", "EXCEPT", "DISTINCT", "COUNT", "SUM",
      "AVG", "MIN", "MAX", "ASC", "DESC", "=", "!=", "<", ">", "<=", ">=",
  };
  for (size_t i = 0; i < entries_.size(); ++i) index_[entries_[i]] = i;
}

const KeywordVocab& KeywordVocab::instance() {
  static const KeywordVocab vocab;
  return vocab;
}

std::optional<size_t> KeywordVocab::index_of(std::string_view keyword) const {
  auto it = index_.find(keyword);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------
// SchemaVocab

size_t SchemaVocab::add(std::string_view token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  const size_t idx = entries_.size();
  entries_.emplace_back(token);
  index_.emplace(std::string(token), idx);
  return idx;
}

std::optional<size_t> SchemaVocab::index_of(std::string_view token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void SchemaVocab::add_schema(const Schema& schema) {
  for (const auto& tok : schema.name_tokens()) add(tok);
}

// ---------------------------------------------------------------------------
// Hash vectors

double hash_distance(const HashVector& a, const HashVector& b) {
  if (a.tag != b.tag)
    fail(errc::contract, "hash vectors over different vocabularies");
  if (a.snapshot != b.snapshot)
    fail(errc::contract, "hash vectors over mismatched vocabulary snapshots");
  // Symmetric difference of two sorted index sets.
  size_t i = 0, j = 0, diff = 0;
  while (i < a.bits.size() && j < b.bits.size()) {
    if (a.bits[i] == b.bits[j]) {
      ++i;
      ++j;
    } else if (a.bits[i] < b.bits[j]) {
      ++i;
      ++diff;
    } else {
      ++j;
      ++diff;
    }
  }
  diff += (a.bits.size() - i) + (b.bits.size() - j);
  return std::sqrt(static_cast<double>(diff));
}

// ---------------------------------------------------------------------------
// Keyword extraction

namespace {

// Emits the Phi keywords of a lexed token stream in first-appearance order.
std::vector<std::string> keywords_of(const std::vector<SqlToken>& tokens) {
  const auto& vocab = KeywordVocab::instance();
  std::vector<std::string> found;
  std::set<std::string> seen;
  auto emit = [&](const std::string& kw) {
    if (seen.insert(kw).second) found.push_back(kw);
  };
  for (size_t i = 0; i < tokens.size(); ++i) {
    const SqlToken& t = tokens[i];
    if (t.kind == SqlTokenKind::op) {
      if (vocab.index_of(t.text)) emit(t.text);
      continue;
    }
    if (t.kind != SqlTokenKind::identifier) continue;
    // Multiword units first: GROUP BY / ORDER BY.
    if (i + 1 < tokens.size() && tokens[i + 1].kind == SqlTokenKind::identifier &&
        tokens[i + 1].text == "by" && (t.text == "group" || t.text == "order")) {
      emit(t.text == "group" ? "GROUP BY" : "ORDER BY");
      ++i;
      continue;
    }
    std::string upper = t.text;
    std::transform(upper.begin(), upper.end(), upper.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (vocab.index_of(upper)) emit(upper);
  }
  return found;
}

} // namespace

std::vector<std::string> extract_keywords(std::string_view sql) {
  if (trim(sql).empty()) fail(errc::contract, "extract_keywords: empty sql");
  return keywords_of(lex_sql(sql));
}

HashVector struct_hash(std::string_view sql) {
  const auto& vocab = KeywordVocab::instance();
  HashVector v;
  v.tag = VocabTag::phi;
  v.snapshot = vocab.size();
  for (const auto& kw : extract_keywords(sql))
    v.bits.push_back(static_cast<uint32_t>(*vocab.index_of(kw)));
  std::sort(v.bits.begin(), v.bits.end());
  return v;
}

HashVector schema_hash_of_schema(const Schema& schema, const SchemaVocab& vocab) {
  HashVector v;
  v.tag = VocabTag::psi;
  v.snapshot = vocab.size();
  std::set<uint32_t> bits;
  for (const auto& tok : schema.name_tokens())
    if (auto idx = vocab.index_of(tok); idx && *idx < v.snapshot)
      bits.insert(static_cast<uint32_t>(*idx));
  v.bits.assign(bits.begin(), bits.end());
  return v;
}

HashVector schema_hash_of_query(std::string_view sql, const SchemaVocab& vocab) {
  HashVector v;
  v.tag = VocabTag::psi;
  v.snapshot = vocab.size();
  std::set<uint32_t> bits;
  for (const auto& t : lex_sql(sql)) {
    if (t.kind != SqlTokenKind::identifier) continue;
    for (const auto& tok : tokenize(t.text))
      if (auto idx = vocab.index_of(tok); idx && *idx < v.snapshot)
        bits.insert(static_cast<uint32_t>(*idx));
  }
  v.bits.assign(bits.begin(), bits.end());
  return v;
}

// ---------------------------------------------------------------------------
// Skeletons

namespace {

std::string uppercased(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

} // namespace

std::string SqlSkeleton::text() const { return join(tokens, " "); }

SqlSkeleton skeletonize(std::string_view sql, const Schema& schema) {
  std::set<std::string> tables(schema.tables.begin(), schema.tables.end());
  std::set<std::string> columns;
  for (const auto& c : schema.columns) columns.insert(c.name);

  SqlSkeleton skel;
  for (const auto& t : lex_sql(sql)) {
    switch (t.kind) {
      case SqlTokenKind::number:
      case SqlTokenKind::string:
        skel.tokens.emplace_back("VAL");
        break;
      case SqlTokenKind::identifier:
        if (tables.count(t.text)) {
          skel.tokens.emplace_back("TAB");
        } else if (columns.count(t.text)) {
          skel.tokens.emplace_back("COL");
        } else {
          skel.tokens.push_back(uppercased(t.text));
        }
        break;
      default:
        skel.tokens.push_back(t.text);
        break;
    }
  }
  return skel;
}

// ---------------------------------------------------------------------------
// Canonical comparison

namespace {

// Canonical token of a lexed SQL token: keywords uppercased, identifiers
// lowercased, literals verbatim.
std::string canonical_token(const SqlToken& t) {
  if (t.kind == SqlTokenKind::identifier) {
    const std::string upper = uppercased(t.text);
    if (KeywordVocab::instance().index_of(upper) || upper == "BY") return upper;
    return t.text;
  }
  return t.text;
}

bool is_clause_boundary(const std::string& tok) {
  return tok == "FROM" || tok == "WHERE" || tok == "GROUP" || tok == "ORDER" ||
         tok == "HAVING" || tok == "LIMIT" || tok == "UNION" || tok == "INTERSECT" ||
         tok == "EXCEPT" || tok == ";";
}

// Splits tokens[b, e) at top-level occurrences of `sep` into token runs.
std::vector<std::vector<std::string>> split_top_level(const std::vector<std::string>& toks,
                                                      size_t b, size_t e,
                                                      const std::string& sep) {
  std::vector<std::vector<std::string>> parts;
  std::vector<std::string> cur;
  int depth = 0;
  for (size_t i = b; i < e; ++i) {
    const std::string& t = toks[i];
    if (t == "(") ++depth;
    if (t == ")") --depth;
    if (depth == 0 && t == sep) {
      parts.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(t);
    }
  }
  parts.push_back(std::move(cur));
  return parts;
}

bool has_top_level(const std::vector<std::string>& toks, size_t b, size_t e,
                   const std::string& needle) {
  int depth = 0;
  for (size_t i = b; i < e; ++i) {
    if (toks[i] == "(") ++depth;
    if (toks[i] == ")") --depth;
    if (depth == 0 && toks[i] == needle) return true;
  }
  return false;
}

// Replaces toks[b, e) by its top-level pieces sorted as a multiset and
// rejoined with `sep`.
void sort_region(std::vector<std::string>& toks, size_t b, size_t e, const std::string& sep) {
  auto parts = split_top_level(toks, b, e, sep);
  if (parts.size() < 2) return;
  std::sort(parts.begin(), parts.end(),
            [](const std::vector<std::string>& a, const std::vector<std::string>& b2) {
              return join(a, " ") < join(b2, " ");
            });
  std::vector<std::string> rebuilt;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) rebuilt.push_back(sep);
    rebuilt.insert(rebuilt.end(), parts[i].begin(), parts[i].end());
  }
  toks.erase(toks.begin() + static_cast<long>(b), toks.begin() + static_cast<long>(e));
  toks.insert(toks.begin() + static_cast<long>(b), rebuilt.begin(), rebuilt.end());
}

} // namespace

std::string canonical_sql(std::string_view sql) {
  std::vector<std::string> toks;
  for (const auto& t : lex_sql(sql)) toks.push_back(canonical_token(t));
  // Drop a trailing statement terminator.
  while (!toks.empty() && toks.back() == ";") toks.pop_back();

  // SELECT list: from the leading SELECT (past optional DISTINCT) to the
  // matching top-level FROM; compared as a multiset of column expressions.
  if (!toks.empty() && toks[0] == "SELECT") {
    size_t b = 1;
    if (b < toks.size() && toks[b] == "DISTINCT") ++b;
    size_t e = b;
    int d = 0;
    while (e < toks.size() && !(d == 0 && toks[e] == "FROM")) {
      if (toks[e] == "(") ++d;
      if (toks[e] == ")") --d;
      ++e;
    }
    if (e > b && e < toks.size()) sort_region(toks, b, e, ",");
  }

  // WHERE clause: sorted as a conjunct multiset only when every top-level
  // connective is AND.
  {
    int d = 0;
    for (size_t i = 0; i < toks.size(); ++i) {
      if (toks[i] == "(") ++d;
      if (toks[i] == ")") --d;
      if (d != 0 || toks[i] != "WHERE") continue;
      size_t b = i + 1;
      size_t e = b;
      int d2 = 0;
      while (e < toks.size() && !(d2 == 0 && is_clause_boundary(toks[e]))) {
        if (toks[e] == "(") ++d2;
        if (toks[e] == ")") --d2;
        ++e;
      }
      if (!has_top_level(toks, b, e, "OR")) sort_region(toks, b, e, "AND");
      break;
    }
  }

  return join(toks, " ");
}

bool exact_match(std::string_view pred, std::string_view gold, std::string* diag) {
  try {
    return canonical_sql(pred) == canonical_sql(gold);
  } catch (const Error& e) {
    if (diag) *diag = e.what();
    return false;
  }
}

} // namespace ctsql
