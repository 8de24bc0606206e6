#pragma once

// The pluggable parser contract and the bundled reference learner: a
// multinomial skeleton classifier over hashed text features plus a
// deterministic slot filler. Any parser exposing this surface (trainable
// likelihood, confidence in (0,1], snapshot/restore) can replace it.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctsql/corpus.hpp"
#include "ctsql/sqlrep.hpp"

namespace ctsql {

// Classifies each optimization term for the run audit.
enum class TermClass { gold, pseudo, memory };

struct TrainExample {
  Instance instance;            // must carry SQL
  const Schema* schema = nullptr;
  double weight = 1.0;
  TermClass cls = TermClass::gold;
};

struct Prediction {
  std::string sql;
  double confidence = 0.0; // model probability of the chosen skeleton
  SqlSkeleton skeleton;
};

struct FeatureVector {
  // (index, value), sorted by index, duplicate-free.
  std::vector<std::pair<uint32_t, double>> entries;
};

// Hashed bag of NLQ unigrams and bigrams plus two schema-overlap counters
// in the top feature slots. `dim` is the total dimension.
FeatureVector featurize(std::span<const std::string> nlq, const Schema& schema, uint32_t dim);

class Learner {
public:
  virtual ~Learner() = default;

  // Catalog pass: registers the skeleton of a labeled SQL. Append-only.
  virtual void observe(const std::string& sql, const Schema& schema) = 0;
  virtual size_t catalog_size() const = 0;

  virtual double nll_loss(const Instance& example, double weight, const Schema& schema) const = 0;

  // One SGD pass in seeded-shuffle order; returns the mean loss.
  virtual double train_epoch(std::span<const TrainExample> examples, double lr,
                             uint64_t shuffle_seed) = 0;

  virtual Prediction predict(std::span<const std::string> nlq, const Schema& schema) const = 0;

  virtual std::string snapshot() const = 0;
  virtual void restore(const std::string& checkpoint) = 0;

  // A new untrained learner with the same configuration.
  virtual std::unique_ptr<Learner> fresh() const = 0;
};

struct ReferenceLearnerConfig {
  uint32_t feature_dim = 1u << 16;
};

class ReferenceLearner final : public Learner {
public:
  explicit ReferenceLearner(ReferenceLearnerConfig cfg = {});

  void observe(const std::string& sql, const Schema& schema) override;
  size_t catalog_size() const override { return skeletons_.size(); }
  const SqlSkeleton& skeleton_at(size_t cls) const { return skeletons_[cls]; }

  double nll_loss(const Instance& example, double weight, const Schema& schema) const override;
  double train_epoch(std::span<const TrainExample> examples, double lr,
                     uint64_t shuffle_seed) override;
  Prediction predict(std::span<const std::string> nlq, const Schema& schema) const override;

  std::string snapshot() const override;
  void restore(const std::string& checkpoint) override;
  std::unique_ptr<Learner> fresh() const override;

  // Class probabilities for one featurized input; sums to 1.
  std::vector<double> class_probabilities(const FeatureVector& x) const;

  // Parameter access for gradient verification and diagnostics. `feature`
  // of -1 addresses the class bias.
  double param(size_t cls, int64_t feature) const;
  void add_to_param(size_t cls, int64_t feature, double delta);

  // Analytic gradient of the weighted loss of one example, as a map from
  // (class, feature-or-bias) to the partial derivative. Only touched
  // parameters appear.
  std::map<std::pair<size_t, int64_t>, double> loss_gradient(const Instance& example,
                                                             double weight,
                                                             const Schema& schema) const;

private:
  size_t class_of(const SqlSkeleton& skel) const; // contract error if absent

  ReferenceLearnerConfig cfg_;
  std::vector<SqlSkeleton> skeletons_;
  std::map<std::string, size_t> class_index_; // skeleton text -> class id
  std::vector<std::map<uint32_t, double>> weights_;
  std::vector<double> bias_;
  uint64_t step_count_ = 0;
};

} // namespace ctsql
