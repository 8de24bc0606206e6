#pragma once

// Exemplar samplers: prompt sampling for the teacher memory, review sampling
// for the student memory, and the baseline samplers used in ablations.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ctsql/clustering.hpp"
#include "ctsql/corpus.hpp"
#include "ctsql/distance.hpp"

namespace ctsql {

struct SamplerConfig {
  size_t n_tea = 0;       // teacher memory size N (clusters / picks)
  size_t pool_size = 0;   // TopK pool size before clustering
  size_t m_stu = 0;       // student memory size per task
  RelevanceMode relevance_mode = RelevanceMode::default_min;

  void validate() const;
};

struct SampleResult {
  std::vector<Instance> chosen;
  std::vector<std::string> warnings;

  // Debug detail per chosen instance, parallel to `chosen`: the relevance
  // score (prompt/schema-sim) or the medoid's cluster cost (clustered).
  std::vector<double> detail;
};

// Relevance-filter the past pool, cluster the survivors by SQL-structure
// distance, and return one medoid per cluster. Empty past pool (task 1)
// yields an empty memory.
SampleResult prompt_sample(std::span<const Instance> past_pool,
                           std::span<const Instance> unlabeled, const SamplerConfig& cfg,
                           const DistanceContext& ctx);

// Cluster the gold+pseudo pool under the combined distance; one medoid per
// cluster. Requires every pool instance to carry SQL.
SampleResult review_sample(std::span<const Instance> pool, size_t memory_size,
                           const DistanceContext& ctx);

// Uniform seeded subset without replacement.
SampleResult random_sample(std::span<const Instance> pool, size_t memory_size, uint64_t seed);

// Top-N by relevance alone, no structure clustering.
SampleResult schema_sim_sample(std::span<const Instance> past_pool,
                               std::span<const Instance> unlabeled, size_t n,
                               const SamplerConfig& cfg, const DistanceContext& ctx);

// Clustering by schema distance alone.
SampleResult schema_clus_sample(std::span<const Instance> pool, size_t memory_size,
                                const DistanceContext& ctx);

} // namespace ctsql
