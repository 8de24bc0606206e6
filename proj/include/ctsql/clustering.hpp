#pragma once

// K-medoids over arbitrary symmetric nonnegative dissimilarities, plus
// deterministic TopK selection.

#include <cstdint>
#include <functional>
#include <vector>

#include "ctsql/error.hpp"

namespace ctsql {

using DistFn = std::function<double(size_t, size_t)>;

struct Clustering {
  std::vector<size_t> assignments; // item index -> cluster id
  std::vector<size_t> medoids;     // cluster id -> item index, ascending
  double total_cost = 0.0;
};

// Deterministic k-medoids: seeded by min-distance-sum then farthest-point,
// alternates assignment/update to a fixed point (<= 100 iterations), then
// applies best-improvement medoid swaps until no single swap lowers the
// cost. `seed` is reserved for randomized restarts and currently unused.
Clustering kmedoids(size_t n, size_t k, const DistFn& dist, uint64_t seed = 0);

struct TopKResult {
  std::vector<size_t> indices; // selected items, ascending original order
  bool pool_short = false;     // k exceeded the pool; everything returned
};

enum class TopKOrder { ascending, descending };

// The k items with extreme scores; ties broken by lowest item index.
TopKResult topk(const std::vector<double>& scores, size_t k, TopKOrder order);

} // namespace ctsql
