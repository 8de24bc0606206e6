#include "ctsql/sampling.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "ctsql/util.hpp"

namespace ctsql {

void SamplerConfig::validate() const {
  if (n_tea == 0 || n_tea > pool_size)
    fail(errc::config, "sampler: need 0 < N <= pool size");
  if (m_stu == 0) fail(errc::config, "sampler: student memory size must be positive");
}

namespace {

std::vector<double> relevance_scores(std::span<const Instance> pool,
                                     std::span<const Instance> unlabeled,
                                     const SamplerConfig& cfg, const DistanceContext& ctx) {
  std::vector<double> scores(pool.size());
  for (size_t i = 0; i < pool.size(); ++i)
    scores[i] = ctx.relevance(pool[i], unlabeled, cfg.relevance_mode);
  return scores;
}

// One medoid instance per cluster, in ascending medoid order; detail carries
// each medoid's within-cluster cost.
SampleResult medoids_of(std::span<const Instance> pool, size_t k, const DistFn& dist) {
  Clustering clustering = kmedoids(pool.size(), k, dist);
  SampleResult out;
  for (size_t c = 0; c < clustering.medoids.size(); ++c) {
    const size_t m = clustering.medoids[c];
    out.chosen.push_back(pool[m]);
    double cost = 0.0;
    for (size_t i = 0; i < pool.size(); ++i)
      if (clustering.assignments[i] == c) cost += dist(i, m);
    out.detail.push_back(cost);
  }
  return out;
}

} // namespace

SampleResult prompt_sample(std::span<const Instance> past_pool,
                           std::span<const Instance> unlabeled, const SamplerConfig& cfg,
                           const DistanceContext& ctx) {
  SampleResult out;
  if (past_pool.empty()) return out; // first task: no past to draw from
  if (unlabeled.empty()) fail(errc::contract, "prompt_sample: empty unlabeled set");
  cfg.validate();

  const auto scores = relevance_scores(past_pool, unlabeled, cfg, ctx);

  size_t pool_size = cfg.pool_size;
  if (pool_size > past_pool.size()) {
    out.warnings.push_back("pool size " + std::to_string(pool_size) +
                           " exceeds past pool " + std::to_string(past_pool.size()) +
                           "; shrunk");
    pool_size = past_pool.size();
  }
  const auto order = cfg.relevance_mode == RelevanceMode::default_min ? TopKOrder::ascending
                                                                      : TopKOrder::descending;
  const TopKResult picked = topk(scores, pool_size, order);

  std::vector<Instance> pool;
  pool.reserve(picked.indices.size());
  for (size_t idx : picked.indices) pool.push_back(past_pool[idx]);

  size_t n = cfg.n_tea;
  if (n >= pool.size()) {
    if (n > pool.size())
      out.warnings.push_back("cluster count exceeds pool; returning whole pool");
    out.chosen = std::move(pool);
    for (size_t idx : picked.indices) out.detail.push_back(scores[idx]);
    return out;
  }

  auto dist = [&](size_t a, size_t b) { return ctx.d_stru(pool[a], pool[b]); };
  SampleResult clustered = medoids_of(pool, n, dist);
  clustered.warnings = std::move(out.warnings);
  return clustered;
}

SampleResult review_sample(std::span<const Instance> pool, size_t memory_size,
                           const DistanceContext& ctx) {
  if (pool.empty()) fail(errc::contract, "review_sample: empty pool");
  for (const Instance& inst : pool)
    if (!inst.has_sql())
      fail(errc::contract, "review_sample: instance '" + inst.id + "' carries no SQL");

  SampleResult out;
  if (memory_size >= pool.size()) {
    if (memory_size > pool.size())
      out.warnings.push_back("memory size exceeds pool; returning whole pool");
    out.chosen.assign(pool.begin(), pool.end());
    out.detail.assign(pool.size(), 0.0);
    return out;
  }
  auto dist = [&](size_t a, size_t b) { return ctx.d_combined(pool[a], pool[b]); };
  SampleResult clustered = medoids_of(pool, memory_size, dist);
  clustered.warnings = std::move(out.warnings);
  return clustered;
}

SampleResult random_sample(std::span<const Instance> pool, size_t memory_size, uint64_t seed) {
  SampleResult out;
  if (memory_size >= pool.size()) {
    if (memory_size > pool.size())
      out.warnings.push_back("memory size exceeds pool; returning whole pool");
    out.chosen.assign(pool.begin(), pool.end());
    out.detail.assign(pool.size(), 0.0);
    return out;
  }
  std::vector<size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(memory_size);
  std::sort(idx.begin(), idx.end());
  for (size_t i : idx) {
    out.chosen.push_back(pool[i]);
    out.detail.push_back(0.0);
  }
  return out;
}

SampleResult schema_sim_sample(std::span<const Instance> past_pool,
                               std::span<const Instance> unlabeled, size_t n,
                               const SamplerConfig& cfg, const DistanceContext& ctx) {
  SampleResult out;
  if (past_pool.empty()) return out;
  if (unlabeled.empty()) fail(errc::contract, "schema_sim_sample: empty unlabeled set");

  const auto scores = relevance_scores(past_pool, unlabeled, cfg, ctx);
  const auto order = cfg.relevance_mode == RelevanceMode::default_min ? TopKOrder::ascending
                                                                      : TopKOrder::descending;
  const TopKResult picked = topk(scores, n, order);
  if (picked.pool_short)
    out.warnings.push_back("requested more instances than the pool holds");
  for (size_t idx : picked.indices) {
    out.chosen.push_back(past_pool[idx]);
    out.detail.push_back(scores[idx]);
  }
  return out;
}

SampleResult schema_clus_sample(std::span<const Instance> pool, size_t memory_size,
                                const DistanceContext& ctx) {
  if (pool.empty()) fail(errc::contract, "schema_clus_sample: empty pool");
  SampleResult out;
  if (memory_size >= pool.size()) {
    if (memory_size > pool.size())
      out.warnings.push_back("memory size exceeds pool; returning whole pool");
    out.chosen.assign(pool.begin(), pool.end());
    out.detail.assign(pool.size(), 0.0);
    return out;
  }
  auto dist = [&](size_t a, size_t b) { return ctx.d_sch(pool[a], pool[b]); };
  SampleResult clustered = medoids_of(pool, memory_size, dist);
  clustered.warnings = std::move(out.warnings);
  return clustered;
}

} // namespace ctsql
