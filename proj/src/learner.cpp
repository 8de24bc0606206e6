#include "ctsql/learner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "ctsql/util.hpp"

namespace ctsql {

// ---------------------------------------------------------------------------
// Features

namespace {

uint64_t fnv1a(std::string_view s) {
  uint64_t h = 1469598103934665603ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

// Token equality up to a trailing plural 's', so "singers" hits the table
// "singer".
bool tokens_match(const std::string& a, const std::string& b) {
  if (a == b) return true;
  if (a.size() == b.size() + 1 && a.back() == 's' && a.compare(0, b.size(), b) == 0) return true;
  if (b.size() == a.size() + 1 && b.back() == 's' && b.compare(0, a.size(), a) == 0) return true;
  return false;
}

} // namespace

FeatureVector featurize(std::span<const std::string> nlq, const Schema& schema, uint32_t dim) {
  if (nlq.empty()) fail(errc::contract, "featurize: empty question");
  if (dim < 4) fail(errc::config, "featurize: dimension too small");
  const uint32_t hash_dim = dim - 2; // top two slots hold overlap counters

  std::map<uint32_t, double> acc;
  for (size_t i = 0; i < nlq.size(); ++i) {
    acc[static_cast<uint32_t>(fnv1a("u:" + nlq[i]) % hash_dim)] += 1.0;
    if (i + 1 < nlq.size())
      acc[static_cast<uint32_t>(fnv1a("b:" + nlq[i] + " " + nlq[i + 1]) % hash_dim)] += 1.0;
  }

  // Schema-overlap counters: NLQ tokens matching table / column name tokens.
  double table_overlap = 0.0, column_overlap = 0.0;
  std::vector<std::string> table_tokens, column_tokens;
  for (const auto& t : schema.tables)
    for (const auto& tok : tokenize(t)) table_tokens.push_back(tok);
  for (const auto& c : schema.columns)
    for (const auto& tok : tokenize(c.name)) column_tokens.push_back(tok);
  for (const auto& q : nlq) {
    if (std::any_of(table_tokens.begin(), table_tokens.end(),
                    [&](const std::string& t) { return tokens_match(q, t); }))
      table_overlap += 1.0;
    if (std::any_of(column_tokens.begin(), column_tokens.end(),
                    [&](const std::string& c) { return tokens_match(q, c); }))
      column_overlap += 1.0;
  }
  if (table_overlap > 0.0) acc[dim - 2] = table_overlap;
  if (column_overlap > 0.0) acc[dim - 1] = column_overlap;

  FeatureVector x;
  x.entries.assign(acc.begin(), acc.end());
  return x;
}

// ---------------------------------------------------------------------------
// ReferenceLearner

ReferenceLearner::ReferenceLearner(ReferenceLearnerConfig cfg) : cfg_(cfg) {}

void ReferenceLearner::observe(const std::string& sql, const Schema& schema) {
  const SqlSkeleton skel = skeletonize(sql, schema);
  const std::string key = skel.text();
  if (class_index_.count(key)) return;
  class_index_.emplace(key, skeletons_.size());
  skeletons_.push_back(skel);
  weights_.emplace_back();
  bias_.push_back(0.0);
}

size_t ReferenceLearner::class_of(const SqlSkeleton& skel) const {
  auto it = class_index_.find(skel.text());
  if (it == class_index_.end())
    fail(errc::contract, "skeleton not in catalog: " + skel.text());
  return it->second;
}

std::vector<double> ReferenceLearner::class_probabilities(const FeatureVector& x) const {
  const size_t k = skeletons_.size();
  std::vector<double> logits(k);
  for (size_t c = 0; c < k; ++c) {
    double z = bias_[c];
    const auto& w = weights_[c];
    for (const auto& [idx, val] : x.entries) {
      auto it = w.find(idx);
      if (it != w.end()) z += it->second * val;
    }
    logits[c] = z;
  }
  const double zmax = *std::max_element(logits.begin(), logits.end());
  double denom = 0.0;
  for (double& z : logits) {
    z = std::exp(z - zmax);
    denom += z;
  }
  for (double& z : logits) z /= denom;
  return logits;
}

double ReferenceLearner::nll_loss(const Instance& example, double weight,
                                  const Schema& schema) const {
  if (!example.has_sql())
    fail(errc::contract, "nll_loss: instance '" + example.id + "' carries no SQL");
  if (weight <= 0.0 || weight > 1.0)
    fail(errc::contract, "nll_loss: weight must lie in (0, 1]");
  const size_t target = class_of(skeletonize(*example.sql, schema));
  const FeatureVector x = featurize(example.nlq, schema, cfg_.feature_dim);
  const auto probs = class_probabilities(x);
  return weight * -std::log(std::max(probs[target], 1e-300));
}

double ReferenceLearner::train_epoch(std::span<const TrainExample> examples, double lr,
                                     uint64_t shuffle_seed) {
  if (examples.empty()) return 0.0;
  std::vector<size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(shuffle_seed);
  std::shuffle(order.begin(), order.end(), rng);

  double total = 0.0;
  for (size_t pos : order) {
    const TrainExample& ex = examples[pos];
    if (!ex.instance.has_sql())
      fail(errc::contract, "train_epoch: instance '" + ex.instance.id + "' carries no SQL");
    if (!ex.schema) fail(errc::contract, "train_epoch: example without schema");
    const size_t target = class_of(skeletonize(*ex.instance.sql, *ex.schema));
    const FeatureVector x = featurize(ex.instance.nlq, *ex.schema, cfg_.feature_dim);
    const auto probs = class_probabilities(x);
    total += ex.weight * -std::log(std::max(probs[target], 1e-300));
    if (lr != 0.0) {
      for (size_t c = 0; c < skeletons_.size(); ++c) {
        const double coef = lr * ex.weight * (probs[c] - (c == target ? 1.0 : 0.0));
        if (!std::isfinite(coef))
          fail(errc::internal, "train_epoch: non-finite gradient on instance '" +
                                   ex.instance.id + "' class " + std::to_string(c));
        if (coef == 0.0) continue;
        auto& w = weights_[c];
        for (const auto& [idx, val] : x.entries) w[idx] -= coef * val;
        bias_[c] -= coef;
      }
    }
    ++step_count_;
  }
  return total / static_cast<double>(examples.size());
}

Prediction ReferenceLearner::predict(std::span<const std::string> nlq,
                                     const Schema& schema) const {
  if (skeletons_.empty()) fail(errc::not_trained, "predict: empty skeleton catalog");
  const FeatureVector x = featurize(nlq, schema, cfg_.feature_dim);
  const auto probs = class_probabilities(x);
  size_t best = 0;
  for (size_t c = 1; c < probs.size(); ++c)
    if (probs[c] > probs[best]) best = c;

  Prediction pred;
  pred.skeleton = skeletons_[best];
  pred.confidence = probs[best];

  // Deterministic slot filling: COL/TAB by maximal token-set Jaccard with
  // the question, VAL by the first quoted or numeric question token.
  std::set<std::string> q(nlq.begin(), nlq.end());
  auto jaccard = [&](const std::string& name) {
    std::vector<std::string> toks = tokenize(name);
    std::set<std::string> nset(toks.begin(), toks.end());
    size_t inter = 0;
    for (const auto& t : nset)
      if (q.count(t)) ++inter;
    const size_t uni = nset.size() + q.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
  };
  auto best_name = [&](const std::vector<std::string>& names) {
    size_t pick = 0;
    double score = -1.0;
    for (size_t i = 0; i < names.size(); ++i) {
      const double s = jaccard(names[i]);
      if (s > score) {
        score = s;
        pick = i;
      }
    }
    return names.empty() ? std::string() : names[pick];
  };
  std::vector<std::string> table_names = schema.tables;
  std::vector<std::string> column_names;
  for (const auto& c : schema.columns) column_names.push_back(c.name);

  std::string value = "1";
  for (const auto& t : nlq) {
    if (t.empty()) continue;
    if (t.front() == '\'' || t.front() == '"' ||
        std::isdigit(static_cast<unsigned char>(t.front()))) {
      value = t;
      break;
    }
  }

  std::vector<std::string> out;
  for (const auto& tok : pred.skeleton.tokens) {
    if (tok == "TAB")
      out.push_back(best_name(table_names));
    else if (tok == "COL")
      out.push_back(best_name(column_names));
    else if (tok == "VAL")
      out.push_back(value);
    else
      out.push_back(tok);
  }
  pred.sql = join(out, " ");
  return pred;
}

// ---------------------------------------------------------------------------
// Gradient access

double ReferenceLearner::param(size_t cls, int64_t feature) const {
  if (cls >= skeletons_.size()) fail(errc::argument, "param: class out of range");
  if (feature < 0) return bias_[cls];
  auto it = weights_[cls].find(static_cast<uint32_t>(feature));
  return it == weights_[cls].end() ? 0.0 : it->second;
}

void ReferenceLearner::add_to_param(size_t cls, int64_t feature, double delta) {
  if (cls >= skeletons_.size()) fail(errc::argument, "param: class out of range");
  if (feature < 0)
    bias_[cls] += delta;
  else
    weights_[cls][static_cast<uint32_t>(feature)] += delta;
}

std::map<std::pair<size_t, int64_t>, double> ReferenceLearner::loss_gradient(
    const Instance& example, double weight, const Schema& schema) const {
  const size_t target = class_of(skeletonize(*example.sql, schema));
  const FeatureVector x = featurize(example.nlq, schema, cfg_.feature_dim);
  const auto probs = class_probabilities(x);
  std::map<std::pair<size_t, int64_t>, double> grad;
  for (size_t c = 0; c < skeletons_.size(); ++c) {
    const double coef = weight * (probs[c] - (c == target ? 1.0 : 0.0));
    grad[{c, -1}] = coef;
    for (const auto& [idx, val] : x.entries) grad[{c, static_cast<int64_t>(idx)}] = coef * val;
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Checkpoints

std::string ReferenceLearner::snapshot() const {
  std::ostringstream body;
  body << "dim " << cfg_.feature_dim << "\n";
  body << "classes " << skeletons_.size() << "\n";
  char buf[64];
  for (size_t c = 0; c < skeletons_.size(); ++c) {
    body << "skeleton " << skeletons_[c].text() << "\n";
    std::snprintf(buf, sizeof(buf), "%.17g", bias_[c]);
    body << "bias " << buf << "\n";
    body << "row " << weights_[c].size();
    for (const auto& [idx, val] : weights_[c]) {
      std::snprintf(buf, sizeof(buf), "%.17g", val);
      body << " " << idx << ":" << buf;
    }
    body << "\n";
  }
  body << "steps " << step_count_ << "\n";
  const std::string payload = body.str();
  std::ostringstream out;
  out << "CTSQLCKPT 1\n" << payload << "checksum " << fnv1a(payload) << "\n";
  return out.str();
}

void ReferenceLearner::restore(const std::string& checkpoint) {
  std::istringstream in(checkpoint);
  std::string line;
  if (!std::getline(in, line) || line != "CTSQLCKPT 1")
    fail(errc::integrity, "checkpoint: bad header");

  // Verify the checksum over everything between header and trailer.
  const size_t header_len = std::string("CTSQLCKPT 1\n").size();
  const size_t tail = checkpoint.rfind("checksum ");
  if (tail == std::string::npos || tail < header_len)
    fail(errc::integrity, "checkpoint: missing checksum");
  const std::string payload = checkpoint.substr(header_len, tail - header_len);
  const std::string tail_line = trim(checkpoint.substr(tail + 9));
  if (std::to_string(fnv1a(payload)) != tail_line)
    fail(errc::integrity, "checkpoint: checksum mismatch");

  ReferenceLearner loaded(cfg_);
  std::istringstream body(payload);
  auto expect = [&](const char* tag) {
    std::string word;
    if (!(body >> word) || word != tag)
      fail(errc::integrity, std::string("checkpoint: expected '") + tag + "'");
  };
  expect("dim");
  body >> loaded.cfg_.feature_dim;
  expect("classes");
  size_t k = 0;
  body >> k;
  body.ignore();
  for (size_t c = 0; c < k; ++c) {
    std::string skel_line;
    if (!std::getline(body, skel_line) || skel_line.rfind("skeleton ", 0) != 0)
      fail(errc::integrity, "checkpoint: malformed skeleton record");
    SqlSkeleton skel;
    std::istringstream toks(skel_line.substr(9));
    std::string t;
    while (toks >> t) skel.tokens.push_back(t);
    loaded.class_index_.emplace(skel.text(), loaded.skeletons_.size());
    loaded.skeletons_.push_back(std::move(skel));

    expect("bias");
    double b = 0.0;
    body >> b;
    loaded.bias_.push_back(b);

    expect("row");
    size_t entries = 0;
    body >> entries;
    std::map<uint32_t, double> row;
    for (size_t e = 0; e < entries; ++e) {
      std::string pair;
      body >> pair;
      const size_t colon = pair.find(':');
      if (colon == std::string::npos) fail(errc::integrity, "checkpoint: malformed weight");
      row[static_cast<uint32_t>(std::stoul(pair.substr(0, colon)))] =
          std::stod(pair.substr(colon + 1));
    }
    loaded.weights_.push_back(std::move(row));
    body.ignore();
  }
  expect("steps");
  body >> loaded.step_count_;
  if (!body) fail(errc::integrity, "checkpoint: truncated");
  *this = std::move(loaded);
}

std::unique_ptr<Learner> ReferenceLearner::fresh() const {
  return std::make_unique<ReferenceLearner>(cfg_);
}

} // namespace ctsql
