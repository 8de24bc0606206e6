#pragma once

// The K x K accuracy grid and the four stream metrics derived from it.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "ctsql/corpus.hpp"
#include "ctsql/learner.hpp"

namespace ctsql {

// acc_{i,j}: accuracy on task i's test set after training task j. Entries
// with j < i-1 are never computed (no metric consumes them). Indices are
// 1-based to match the usual notation.
class AccMatrix {
public:
  explicit AccMatrix(int k);

  int k() const { return k_; }
  void set(int i, int j, double acc);
  double at(int i, int j) const;
  bool defined(int i, int j) const;

  std::vector<size_t> test_sizes;      // per task
  std::vector<double> random_baseline; // b-bar per task, index 0 = task 1

  std::string to_csv() const;

private:
  int k_;
  std::vector<double> cells_; // NaN = undefined
};

// Exact-match accuracy of the learner over a test set. Prediction failures
// (untrained model) count as misses.
double evaluate(const Learner& learner, std::span<const Instance> test,
                const TaskStream& stream, int threads = 1);

double acc_a(const AccMatrix& m);
double acc_w(const AccMatrix& m); // test-size weighted final-column mean
double bwt(const AccMatrix& m);   // requires K >= 2
double fwt(const AccMatrix& m);   // requires K >= 2 and populated baselines

struct MetricsReport {
  double acc_a = 0.0;
  double acc_w = 0.0;
  double bwt = 0.0;  // NaN when K == 1
  double fwt = 0.0;  // NaN when K == 1
};

MetricsReport compute_metrics(const AccMatrix& m);

} // namespace ctsql
