#include "ctsql/strategies.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "ctsql/sampling.hpp"
#include "ctsql/util.hpp"

namespace ctsql {

size_t StrategyConfig::memory_size(const Task& task) const {
  const double train_size = static_cast<double>(task.labeled.size() + task.unlabeled.size());
  const auto want = static_cast<size_t>(std::llround(memory_fraction * train_size));
  return std::max<size_t>(1, std::min(memory_cap, want));
}

// ---------------------------------------------------------------------------
// MemoryStore

void MemoryStore::store(int task_index, std::vector<Instance> exemplars, size_t capacity) {
  if (exemplars.size() > capacity)
    fail(errc::contract, "memory for task " + std::to_string(task_index) +
                             " exceeds its capacity " + std::to_string(capacity));
  if (memories_.count(task_index))
    fail(errc::contract, "memory for task " + std::to_string(task_index) + " already stored");
  memories_.emplace(task_index, std::move(exemplars));
}

std::span<const Instance> MemoryStore::task_memory(int task_index) const {
  auto it = memories_.find(task_index);
  if (it == memories_.end()) return {};
  return it->second;
}

bool MemoryStore::has(int task_index) const { return memories_.count(task_index) > 0; }

std::vector<const Instance*> MemoryStore::replay_pool(int task_index) const {
  std::vector<const Instance*> out;
  for (const auto& [idx, mem] : memories_) {
    if (idx >= task_index) continue;
    for (const Instance& m : mem) out.push_back(&m);
  }
  return out;
}

// ---------------------------------------------------------------------------
// AuditLog

void AuditLog::log_epoch(int task, const std::string& stage, int epoch,
                         std::span<const TrainExample> examples) {
  TermRecord rec[3];
  for (int c = 0; c < 3; ++c) {
    rec[c].task = task;
    rec[c].stage = stage;
    rec[c].epoch = epoch;
    rec[c].cls = static_cast<TermClass>(c);
  }
  for (const TrainExample& ex : examples) {
    TermRecord& r = rec[static_cast<int>(ex.cls)];
    ++r.count;
    r.weight_sum += ex.weight;
    if (detailed)
      details_.push_back({task, stage, epoch, ex.cls, ex.instance.id, ex.weight});
  }
  for (int c = 0; c < 3; ++c)
    if (rec[c].count > 0) terms_.push_back(rec[c]);
}

void AuditLog::log_scan(int task, const std::string& stage, int epoch, size_t count) {
  scans_.push_back({task, stage, epoch, count});
}

std::string AuditLog::to_text() const {
  static const char* names[] = {"gold", "pseudo", "memory"};
  std::ostringstream out;
  char buf[64];
  for (const TermRecord& r : terms_) {
    std::snprintf(buf, sizeof(buf), "%.17g", r.weight_sum);
    out << "term task=" << r.task << " stage=" << r.stage << " epoch=" << r.epoch
        << " class=" << names[static_cast<int>(r.cls)] << " count=" << r.count
        << " weight_sum=" << buf << "\n";
  }
  for (const ScanRecord& s : scans_)
    out << "scan task=" << s.task << " stage=" << s.stage << " epoch=" << s.epoch
        << " count=" << s.count << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Shared training machinery

namespace {

struct EarlyStopper {
  bool enabled = false;
  int patience = 2;
  double best = -1.0;
  int stale = 0;

  bool should_stop(double valid_acc) {
    if (!enabled) return false;
    if (valid_acc > best) {
      best = valid_acc;
      stale = 0;
      return false;
    }
    return ++stale >= patience;
  }
};

class Driver {
public:
  Driver(std::string strategy, const TaskStream& stream, const StrategyConfig& cfg,
         bool detailed_audit)
      : strategy_(std::move(strategy)), stream_(stream), cfg_(cfg) {
    result_.strategy = strategy_;
    result_.seed = cfg.seed;
    result_.matrix = AccMatrix(static_cast<int>(stream.task_count()));
    result_.task_seconds.assign(stream.task_count(), 0.0);
    result_.task_visits.assign(stream.task_count(), 0);
    result_.audit.detailed = detailed_audit;
    for (const Task& t : stream.tasks)
      result_.matrix.test_sizes[static_cast<size_t>(t.index - 1)] = t.test.size();
  }

  const Schema* schema_of(const Instance& inst) const { return &stream_.schema_of(inst.db_id); }

  std::vector<TrainExample> gold_examples(std::span<const Instance> pool) const {
    std::vector<TrainExample> out;
    out.reserve(pool.size());
    for (const Instance& a : pool) out.push_back({a, schema_of(a), 1.0, TermClass::gold});
    return out;
  }

  void append_memory_terms(std::vector<TrainExample>& examples,
                           const std::vector<const Instance*>& replay) const {
    for (const Instance* m : replay)
      examples.push_back({*m, schema_of(*m), 1.0, TermClass::memory});
  }

  void catalog(Learner& learner, std::span<const Instance> pool) const {
    for (const Instance& a : pool)
      if (a.has_sql()) learner.observe(*a.sql, *schema_of(a));
  }

  // One audited optimization pass.
  double epoch(Learner& learner, std::span<const TrainExample> examples, int task,
               const std::string& stage, int epoch_idx) {
    result_.audit.log_epoch(task, stage, epoch_idx, examples);
    const uint64_t shuffle_seed =
        sub_seed(cfg_.seed, "shuffle:" + strategy_ + ":task" + std::to_string(task) + ":" +
                                stage + ":" + std::to_string(epoch_idx));
    const double loss = learner.train_epoch(examples, cfg_.lr, shuffle_seed);
    result_.task_visits[static_cast<size_t>(task - 1)] += examples.size();
    return loss;
  }

  // Predicts pseudo labels for the whole unlabeled set, then keeps k chosen
  // uniformly at random. Each kept instance carries the predicted SQL and
  // its confidence.
  std::vector<Instance> pseudo_label(Learner& learner, const Task& task,
                                     const std::string& stage, int epoch_idx) {
    if (task.unlabeled.empty()) return {};
    result_.audit.log_scan(task.index, stage, epoch_idx, task.unlabeled.size());

    std::vector<Instance> predicted(task.unlabeled.size());
    parallel_for(task.unlabeled.size(), cfg_.threads, [&](size_t i) {
      const Instance& u = task.unlabeled[i];
      const Prediction p = learner.predict(u.nlq, *schema_of(u));
      Instance pseudo = u;
      pseudo.sql = p.sql;
      pseudo.kind = LabelKind::pseudo;
      pseudo.confidence = p.confidence;
      predicted[i] = std::move(pseudo);
    });

    size_t k = cfg_.pseudo_k;
    if (k > predicted.size()) {
      warn("task " + std::to_string(task.index) + ": pseudo_k " + std::to_string(k) +
           " exceeds unlabeled pool " + std::to_string(predicted.size()) + "; using all");
      k = predicted.size();
    }
    if (k == predicted.size()) return predicted;

    std::vector<size_t> idx(predicted.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(sub_seed(cfg_.seed, "pseudo:" + strategy_ + ":task" +
                                                std::to_string(task.index) + ":" + stage + ":" +
                                                std::to_string(epoch_idx)));
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    std::vector<Instance> chosen;
    chosen.reserve(k);
    for (size_t i : idx) chosen.push_back(predicted[i]);
    return chosen;
  }

  static void append_pseudo_terms(std::vector<TrainExample>& examples,
                                  std::span<const Instance> pseudos, const Driver& d,
                                  bool weight_by_confidence) {
    for (const Instance& p : pseudos)
      examples.push_back(
          {p, d.schema_of(p), weight_by_confidence ? p.confidence : 1.0, TermClass::pseudo});
  }

  // Fills column j of the accuracy grid: every test set with i <= j+1.
  void evaluate_column(const Learner& learner, int j) {
    const int k = result_.matrix.k();
    for (int i = 1; i <= std::min(j + 1, k); ++i) {
      const Task& task = stream_.tasks[static_cast<size_t>(i - 1)];
      result_.matrix.set(i, j, evaluate(learner, task.test, stream_, cfg_.threads));
    }
  }

  void baseline_pass(const LearnerFactory& make_learner) {
    if (cfg_.random_baseline == RandomBaseline::zero) return;
    auto base = make_learner();
    catalog(*base, stream_.tasks.front().labeled);
    for (const Task& t : stream_.tasks) {
      double acc = 0.0;
      if (base->catalog_size() > 0) acc = evaluate(*base, t.test, stream_, cfg_.threads);
      result_.matrix.random_baseline[static_cast<size_t>(t.index - 1)] = acc;
    }
  }

  void warn(const std::string& msg) { result_.warnings.push_back(msg); }

  struct TaskTimer {
    Driver& driver;
    size_t slot;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    ~TaskTimer() {
      driver.result_.task_seconds[slot] +=
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
  };

  double timed_sampling(const std::function<SampleResult()>& fn, SampleResult& out) {
    const auto t0 = std::chrono::steady_clock::now();
    out = fn();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result_.sampling_seconds += secs;
    return secs;
  }

  RunResult finish() {
    result_.metrics = compute_metrics(result_.matrix);
    return std::move(result_);
  }

  const std::string strategy_;
  const TaskStream& stream_;
  const StrategyConfig& cfg_;
  RunResult result_;
};

void warm_start(Driver& d, Learner& learner, const Task& task) {
  if (task.labeled.empty())
    fail(errc::config, "task " + std::to_string(task.index) + " has an empty labeled set");
  const auto examples = d.gold_examples(task.labeled);
  for (int e = 1; e <= d.cfg_.warm_epochs; ++e)
    d.epoch(learner, examples, task.index, "warm", e);
}

// Self-updating epochs shared by self-training, the replay variant, and the
// teacher: per epoch, re-predict pseudo labels, then optimize gold +
// confidence-weighted pseudo (+ any replay terms). Returns the final
// epoch's pseudo set.
std::vector<Instance> self_phase(Driver& d, Learner& learner, const Task& task,
                                 const std::vector<const Instance*>& replay) {
  std::vector<Instance> pseudos;
  EarlyStopper stopper{d.cfg_.valid_usage == ValidUsage::early_stop && !task.valid.empty(),
                       d.cfg_.early_stop_patience};
  for (int e = 1; e <= d.cfg_.self_epochs; ++e) {
    pseudos = d.pseudo_label(learner, task, "self", e);
    std::vector<TrainExample> examples = d.gold_examples(task.labeled);
    Driver::append_pseudo_terms(examples, pseudos, d, /*weight_by_confidence=*/true);
    d.append_memory_terms(examples, replay);
    d.epoch(learner, examples, task.index, "self", e);
    if (stopper.should_stop(task.valid.empty()
                                ? 0.0
                                : evaluate(learner, task.valid, d.stream_, d.cfg_.threads)))
      break;
  }
  return pseudos;
}

} // namespace

// ---------------------------------------------------------------------------
// Strategies

RunResult run_finetune(const TaskStream& stream, const StrategyConfig& cfg,
                       const LearnerFactory& make_learner, bool detailed_audit) {
  Driver d("finetune", stream, cfg, detailed_audit);
  d.baseline_pass(make_learner);
  auto learner = make_learner();
  for (const Task& task : stream.tasks) {
    Driver::TaskTimer timer{d, static_cast<size_t>(task.index - 1)};
    d.catalog(*learner, task.labeled);
    warm_start(d, *learner, task);
    d.evaluate_column(*learner, task.index);
  }
  return d.finish();
}

RunResult run_self_training(const TaskStream& stream, const StrategyConfig& cfg,
                            const LearnerFactory& make_learner, bool detailed_audit) {
  Driver d("self-training", stream, cfg, detailed_audit);
  d.baseline_pass(make_learner);
  auto learner = make_learner();
  for (const Task& task : stream.tasks) {
    Driver::TaskTimer timer{d, static_cast<size_t>(task.index - 1)};
    d.catalog(*learner, task.labeled);
    warm_start(d, *learner, task);
    self_phase(d, *learner, task, {});
    d.evaluate_column(*learner, task.index);
  }
  return d.finish();
}

RunResult run_vanilla(const TaskStream& stream, const StrategyConfig& cfg,
                      const LearnerFactory& make_learner, bool detailed_audit) {
  Driver d("vanilla", stream, cfg, detailed_audit);
  d.baseline_pass(make_learner);
  auto learner = make_learner();
  MemoryStore memory;
  for (const Task& task : stream.tasks) {
    Driver::TaskTimer timer{d, static_cast<size_t>(task.index - 1)};
    d.catalog(*learner, task.labeled);
    warm_start(d, *learner, task);
    self_phase(d, *learner, task, memory.replay_pool(task.index));

    // Episodic memory: gold instances only, sampled uniformly.
    const size_t m = cfg.memory_size(task);
    SampleResult picked = random_sample(task.labeled, m,
                                        sub_seed(cfg.seed, "memory:task" +
                                                               std::to_string(task.index)));
    for (const auto& w : picked.warnings) d.warn(w);
    memory.store(task.index, std::move(picked.chosen), m);

    d.evaluate_column(*learner, task.index);
  }
  return d.finish();
}

RunResult run_sfnet(const TaskStream& stream, const StrategyConfig& cfg,
                    const LearnerFactory& make_learner, bool detailed_audit) {
  Driver d("sfnet", stream, cfg, detailed_audit);
  d.baseline_pass(make_learner);

  SchemaVocab vocab;
  for (const auto& [db, schema] : stream.schemas) vocab.add_schema(schema);
  DistanceContext ctx(stream, vocab, cfg.schema_hash_source);

  auto student = make_learner();
  MemoryStore student_memory;
  std::vector<Instance> past_pool; // A^k union P^k for all finished tasks

  for (const Task& task : stream.tasks) {
    Driver::TaskTimer timer{d, static_cast<size_t>(task.index - 1)};
    const size_t m = cfg.memory_size(task);

    // Teacher and student both continue from the student's last state.
    const std::string start_ckpt = student->snapshot();
    auto teacher = student->fresh();
    teacher->restore(start_ckpt);

    // Teacher memory: past instances relevant to the current unlabeled set,
    // diversified by SQL structure.
    SampleResult teacher_memory;
    if (!past_pool.empty() && !task.unlabeled.empty()) {
      SamplerConfig scfg;
      scfg.n_tea = m;
      scfg.pool_size = std::max<size_t>(m * cfg.pool_multiplier, m);
      scfg.m_stu = m;
      scfg.relevance_mode = cfg.relevance_mode;
      d.timed_sampling(
          [&] { return prompt_sample(past_pool, task.unlabeled, scfg, ctx); },
          teacher_memory);
      for (const auto& w : teacher_memory.warnings) d.warn(w);
    }
    std::vector<const Instance*> teacher_replay;
    for (const Instance& inst : teacher_memory.chosen) teacher_replay.push_back(&inst);

    d.catalog(*teacher, task.labeled);
    warm_start(d, *teacher, task);
    const std::vector<Instance> pseudo_set = self_phase(d, *teacher, task, teacher_replay);

    // Student: unweighted task loss over gold + final pseudo labels, plus
    // replay over its own sampled memories.
    d.catalog(*student, task.labeled);
    for (const Instance& p : pseudo_set) student->observe(*p.sql, *d.schema_of(p));

    std::vector<TrainExample> examples = d.gold_examples(task.labeled);
    Driver::append_pseudo_terms(examples, pseudo_set, d, /*weight_by_confidence=*/false);
    d.append_memory_terms(examples, student_memory.replay_pool(task.index));

    const int student_epochs =
        cfg.student_epochs > 0 ? cfg.student_epochs : cfg.warm_epochs + cfg.self_epochs;
    EarlyStopper stopper{cfg.valid_usage == ValidUsage::early_stop && !task.valid.empty(),
                         cfg.early_stop_patience};
    for (int e = 1; e <= student_epochs; ++e) {
      d.epoch(*student, examples, task.index, "student", e);
      if (stopper.should_stop(task.valid.empty()
                                  ? 0.0
                                  : evaluate(*student, task.valid, stream, cfg.threads)))
        break;
    }

    // Student memory: medoids of gold + pseudo under the combined distance.
    std::vector<Instance> review_pool(task.labeled.begin(), task.labeled.end());
    review_pool.insert(review_pool.end(), pseudo_set.begin(), pseudo_set.end());
    SampleResult reviewed;
    d.timed_sampling([&] { return review_sample(review_pool, m, ctx); }, reviewed);
    for (const auto& w : reviewed.warnings) d.warn(w);
    student_memory.store(task.index, std::move(reviewed.chosen), m);

    past_pool.insert(past_pool.end(), task.labeled.begin(), task.labeled.end());
    past_pool.insert(past_pool.end(), pseudo_set.begin(), pseudo_set.end());

    // All reported accuracies come from the student.
    d.evaluate_column(*student, task.index);
  }
  return d.finish();
}

RunResult run_oracle(const TaskStream& stream, const StrategyConfig& cfg,
                     const LearnerFactory& make_learner, bool detailed_audit) {
  Driver d("oracle", stream, cfg, detailed_audit);
  d.baseline_pass(make_learner);
  std::vector<Instance> all_labeled;
  for (const Task& task : stream.tasks) {
    Driver::TaskTimer timer{d, static_cast<size_t>(task.index - 1)};
    all_labeled.insert(all_labeled.end(), task.labeled.begin(), task.labeled.end());

    // Full retraining: a fresh model over every labeled set seen so far.
    auto learner = make_learner();
    d.catalog(*learner, all_labeled);
    const auto examples = d.gold_examples(all_labeled);
    for (int e = 1; e <= cfg.warm_epochs; ++e)
      d.epoch(*learner, examples, task.index, "oracle", e);
    d.evaluate_column(*learner, task.index);
  }
  return d.finish();
}

// ---------------------------------------------------------------------------
// Registry

StrategyRegistry::StrategyRegistry() {
  fns_["finetune"] = run_finetune;
  fns_["self-training"] = run_self_training;
  fns_["vanilla"] = run_vanilla;
  fns_["sfnet"] = run_sfnet;
  fns_["oracle"] = run_oracle;
}

StrategyRegistry& StrategyRegistry::instance() {
  static StrategyRegistry reg;
  return reg;
}

void StrategyRegistry::add(const std::string& name, StrategyFn fn) {
  fns_[name] = std::move(fn);
}

const StrategyFn& StrategyRegistry::get(const std::string& name) const {
  auto it = fns_.find(name);
  if (it == fns_.end()) fail(errc::config, "unknown strategy '" + name + "'");
  return it->second;
}

std::vector<std::string> StrategyRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, fn] : fns_) out.push_back(name);
  return out;
}

} // namespace ctsql
