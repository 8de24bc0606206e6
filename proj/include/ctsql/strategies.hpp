#pragma once

// Training procedures over a task stream: sequential fine-tuning,
// self-training, self-training with episodic replay, the teacher-student
// procedure with dual sampling, and full retraining.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ctsql/corpus.hpp"
#include "ctsql/distance.hpp"
#include "ctsql/learner.hpp"
#include "ctsql/metrics.hpp"

namespace ctsql {

enum class ValidUsage { none, early_stop };
enum class RandomBaseline { uniform_catalog, zero };

struct StrategyConfig {
  int warm_epochs = 8;
  int self_epochs = 8;
  int student_epochs = 0;   // 0 means warm_epochs + self_epochs
  size_t pseudo_k = 16;     // pseudo instances selected per self epoch
  double memory_fraction = 0.30;
  size_t memory_cap = 50;
  size_t pool_multiplier = 3; // TopK pool size = multiplier * N
  double lr = 0.1;
  uint64_t seed = 0;
  int threads = 1;
  ValidUsage valid_usage = ValidUsage::none;
  int early_stop_patience = 2;
  RelevanceMode relevance_mode = RelevanceMode::default_min;
  SchemaHashSource schema_hash_source = SchemaHashSource::schema;
  RandomBaseline random_baseline = RandomBaseline::uniform_catalog;

  // Per-task memory budget: fraction of the task's train pool, capped.
  size_t memory_size(const Task& task) const;
};

// Per-task exemplar store. Entries are copies with labels frozen at
// insertion; capacity is enforced per task.
class MemoryStore {
public:
  void store(int task_index, std::vector<Instance> exemplars, size_t capacity);
  std::span<const Instance> task_memory(int task_index) const;
  bool has(int task_index) const;
  // All memories of tasks strictly before `task_index`, in task order.
  std::vector<const Instance*> replay_pool(int task_index) const;

private:
  std::map<int, std::vector<Instance>> memories_;
};

// ---------------------------------------------------------------------------
// Audit

struct TermRecord { // per-epoch aggregate of one term class
  int task = 0;
  std::string stage; // warm | self | student | oracle
  int epoch = 0;
  TermClass cls = TermClass::gold;
  size_t count = 0;
  double weight_sum = 0.0;
};

struct TermDetail { // one optimization term, kept when detailed audit is on
  int task = 0;
  std::string stage;
  int epoch = 0;
  TermClass cls = TermClass::gold;
  std::string instance_id;
  double weight = 0.0;
};

struct ScanRecord { // one pass of pseudo-label prediction over unlabeled data
  int task = 0;
  std::string stage;
  int epoch = 0;
  size_t count = 0;
};

class AuditLog {
public:
  bool detailed = false;

  void log_epoch(int task, const std::string& stage, int epoch,
                 std::span<const TrainExample> examples);
  void log_scan(int task, const std::string& stage, int epoch, size_t count);

  const std::vector<TermRecord>& terms() const { return terms_; }
  const std::vector<TermDetail>& details() const { return details_; }
  const std::vector<ScanRecord>& scans() const { return scans_; }

  std::string to_text() const; // line-delimited records

private:
  std::vector<TermRecord> terms_;
  std::vector<TermDetail> details_;
  std::vector<ScanRecord> scans_;
};

// ---------------------------------------------------------------------------
// Results

struct RunResult {
  std::string strategy;
  AccMatrix matrix{1};
  MetricsReport metrics;
  std::vector<double> task_seconds;
  std::vector<uint64_t> task_visits; // training examples processed per task
  double sampling_seconds = 0.0;     // time spent inside exemplar sampling
  AuditLog audit;
  std::vector<std::string> warnings;
  uint64_t seed = 0;
};

using LearnerFactory = std::function<std::unique_ptr<Learner>()>;

RunResult run_finetune(const TaskStream& stream, const StrategyConfig& cfg,
                       const LearnerFactory& make_learner, bool detailed_audit = false);
RunResult run_self_training(const TaskStream& stream, const StrategyConfig& cfg,
                            const LearnerFactory& make_learner, bool detailed_audit = false);
RunResult run_vanilla(const TaskStream& stream, const StrategyConfig& cfg,
                      const LearnerFactory& make_learner, bool detailed_audit = false);
RunResult run_sfnet(const TaskStream& stream, const StrategyConfig& cfg,
                    const LearnerFactory& make_learner, bool detailed_audit = false);
RunResult run_oracle(const TaskStream& stream, const StrategyConfig& cfg,
                     const LearnerFactory& make_learner, bool detailed_audit = false);

// Open registry: external strategies and learners plug in by name.
using StrategyFn = std::function<RunResult(const TaskStream&, const StrategyConfig&,
                                           const LearnerFactory&, bool)>;

class StrategyRegistry {
public:
  static StrategyRegistry& instance();
  void add(const std::string& name, StrategyFn fn);
  const StrategyFn& get(const std::string& name) const; // config error if unknown
  std::vector<std::string> names() const;

private:
  StrategyRegistry();
  std::map<std::string, StrategyFn> fns_;
};

} // namespace ctsql
