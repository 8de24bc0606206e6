#include "ctsql/clustering.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace ctsql {

namespace {

// Assigns every item to its nearest medoid; ties go to the medoid with the
// lowest item index (medoids is kept ascending). A medoid always belongs to
// its own cluster, even when another medoid sits at distance zero.
void assign_items(size_t n, const std::vector<size_t>& medoids, const DistFn& dist,
                  std::vector<size_t>& assignments, double& total_cost) {
  assignments.assign(n, 0);
  total_cost = 0.0;
  for (size_t i = 0; i < n; ++i) {
    size_t best_cluster = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t c = 0; c < medoids.size(); ++c) {
      if (medoids[c] == i) {
        best_cluster = c;
        best_d = dist(i, i);
        break;
      }
      const double d = dist(i, medoids[c]);
      if (d < best_d) {
        best_d = d;
        best_cluster = c;
      }
    }
    assignments[i] = best_cluster;
    total_cost += best_d;
  }
}

double clustering_cost(size_t n, const std::vector<size_t>& medoids, const DistFn& dist) {
  double cost = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (size_t m : medoids) best = std::min(best, dist(i, m));
    cost += best;
  }
  return cost;
}

} // namespace

Clustering kmedoids(size_t n, size_t k, const DistFn& dist, uint64_t /*seed*/) {
  if (k == 0) fail(errc::argument, "kmedoids: k must be positive");
  if (k > n) fail(errc::argument, "kmedoids: k exceeds item count");

  // Seeding: start from the item with minimal distance sum, then grow by
  // farthest-from-chosen. All ties resolve to the lowest index.
  std::vector<size_t> medoids;
  {
    size_t best = 0;
    double best_sum = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < n; ++i) {
      double sum = 0.0;
      for (size_t j = 0; j < n; ++j) sum += dist(i, j);
      if (sum < best_sum) {
        best_sum = sum;
        best = i;
      }
    }
    medoids.push_back(best);
  }
  while (medoids.size() < k) {
    size_t best = 0;
    double best_min = -1.0;
    for (size_t i = 0; i < n; ++i) {
      if (std::find(medoids.begin(), medoids.end(), i) != medoids.end()) continue;
      double mind = std::numeric_limits<double>::infinity();
      for (size_t m : medoids) mind = std::min(mind, dist(i, m));
      if (mind > best_min) {
        best_min = mind;
        best = i;
      }
    }
    medoids.push_back(best);
  }
  std::sort(medoids.begin(), medoids.end());

  Clustering result;
  assign_items(n, medoids, dist, result.assignments, result.total_cost);

  // Alternate: per-cluster medoid update, then reassignment, to a fixed point.
  for (int iter = 0; iter < 100; ++iter) {
    std::vector<size_t> updated(medoids.size());
    for (size_t c = 0; c < medoids.size(); ++c) {
      size_t best = medoids[c];
      double best_sum = std::numeric_limits<double>::infinity();
      for (size_t i = 0; i < n; ++i) {
        if (result.assignments[i] != c) continue;
        double sum = 0.0;
        for (size_t j = 0; j < n; ++j)
          if (result.assignments[j] == c) sum += dist(i, j);
        if (sum < best_sum) {
          best_sum = sum;
          best = i;
        }
      }
      updated[c] = best;
    }
    std::sort(updated.begin(), updated.end());
    if (updated == medoids) break;
    medoids = updated;
    assign_items(n, medoids, dist, result.assignments, result.total_cost);
  }

  // Swap polish: the alternating fixed point can still admit an improving
  // medoid<->non-medoid swap; apply best-improvement swaps until none is
  // left so the result is single-swap locally optimal.
  bool improved = true;
  while (improved) {
    improved = false;
    double best_cost = clustering_cost(n, medoids, dist);
    std::vector<size_t> best_medoids = medoids;
    for (size_t c = 0; c < medoids.size(); ++c) {
      for (size_t i = 0; i < n; ++i) {
        if (std::find(medoids.begin(), medoids.end(), i) != medoids.end()) continue;
        std::vector<size_t> candidate = medoids;
        candidate[c] = i;
        std::sort(candidate.begin(), candidate.end());
        const double cost = clustering_cost(n, candidate, dist);
        if (cost < best_cost - 1e-12) {
          best_cost = cost;
          best_medoids = candidate;
          improved = true;
        }
      }
    }
    if (improved) medoids = best_medoids;
  }

  result.medoids = medoids;
  assign_items(n, medoids, dist, result.assignments, result.total_cost);
  return result;
}

TopKResult topk(const std::vector<double>& scores, size_t k, TopKOrder order) {
  TopKResult res;
  const size_t n = scores.size();
  if (k >= n) {
    res.indices.resize(n);
    std::iota(res.indices.begin(), res.indices.end(), 0);
    res.pool_short = k > n;
    return res;
  }
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
    if (scores[a] != scores[b])
      return order == TopKOrder::ascending ? scores[a] < scores[b] : scores[a] > scores[b];
    return a < b;
  });
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  res.indices = std::move(idx);
  return res;
}

} // namespace ctsql
