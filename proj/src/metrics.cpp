#include "ctsql/metrics.hpp"

#include <atomic>
#include <cstdio>
#include <limits>
#include <sstream>

#include "ctsql/sqlrep.hpp"
#include "ctsql/util.hpp"

namespace ctsql {

AccMatrix::AccMatrix(int k) : k_(k) {
  if (k <= 0) fail(errc::argument, "AccMatrix: K must be positive");
  cells_.assign(static_cast<size_t>(k) * static_cast<size_t>(k),
                std::numeric_limits<double>::quiet_NaN());
  test_sizes.assign(static_cast<size_t>(k), 0);
  random_baseline.assign(static_cast<size_t>(k), 0.0);
}

void AccMatrix::set(int i, int j, double acc) {
  if (i < 1 || i > k_ || j < 1 || j > k_) fail(errc::argument, "AccMatrix: index out of range");
  if (acc < 0.0 || acc > 1.0) fail(errc::argument, "AccMatrix: accuracy outside [0,1]");
  cells_[static_cast<size_t>(i - 1) * k_ + (j - 1)] = acc;
}

double AccMatrix::at(int i, int j) const {
  if (i < 1 || i > k_ || j < 1 || j > k_) fail(errc::argument, "AccMatrix: index out of range");
  const double v = cells_[static_cast<size_t>(i - 1) * k_ + (j - 1)];
  if (std::isnan(v))
    fail(errc::argument, "AccMatrix: acc_{" + std::to_string(i) + "," + std::to_string(j) +
                             "} was never computed");
  return v;
}

bool AccMatrix::defined(int i, int j) const {
  if (i < 1 || i > k_ || j < 1 || j > k_) return false;
  return !std::isnan(cells_[static_cast<size_t>(i - 1) * k_ + (j - 1)]);
}

std::string AccMatrix::to_csv() const {
  std::ostringstream out;
  out << "i\\j";
  for (int j = 1; j <= k_; ++j) out << "," << j;
  out << "\n";
  char buf[64];
  for (int i = 1; i <= k_; ++i) {
    out << i;
    for (int j = 1; j <= k_; ++j) {
      out << ",";
      if (defined(i, j)) {
        std::snprintf(buf, sizeof(buf), "%.17g", at(i, j));
        out << buf;
      }
    }
    out << "\n";
  }
  return out.str();
}

double evaluate(const Learner& learner, std::span<const Instance> test, const TaskStream& stream,
                int threads) {
  if (test.empty()) fail(errc::argument, "evaluate: empty test set");
  std::atomic<size_t> hits{0};
  parallel_for(test.size(), threads, [&](size_t i) {
    const Instance& inst = test[i];
    if (!inst.has_sql()) return;
    try {
      const Prediction pred = learner.predict(inst.nlq, stream.schema_of(inst.db_id));
      if (exact_match(pred.sql, *inst.sql)) hits.fetch_add(1, std::memory_order_relaxed);
    } catch (const Error&) {
      // untrained model or unlexable prediction: a miss
    }
  });
  return static_cast<double>(hits.load()) / static_cast<double>(test.size());
}

double acc_a(const AccMatrix& m) {
  double sum = 0.0;
  for (int i = 1; i <= m.k(); ++i) sum += m.at(i, m.k());
  return sum / m.k();
}

double acc_w(const AccMatrix& m) {
  double weighted = 0.0;
  double total = 0.0;
  for (int i = 1; i <= m.k(); ++i) {
    const auto size = static_cast<double>(m.test_sizes[static_cast<size_t>(i - 1)]);
    if (size <= 0.0) fail(errc::argument, "acc_w: test sizes must be positive");
    weighted += size * m.at(i, m.k());
    total += size;
  }
  return weighted / total;
}

double bwt(const AccMatrix& m) {
  if (m.k() < 2) fail(errc::argument, "bwt: needs K >= 2");
  double sum = 0.0;
  for (int i = 1; i <= m.k() - 1; ++i) sum += m.at(i, m.k()) - m.at(i, i);
  return sum / (m.k() - 1);
}

double fwt(const AccMatrix& m) {
  if (m.k() < 2) fail(errc::argument, "fwt: needs K >= 2");
  double sum = 0.0;
  for (int i = 2; i <= m.k(); ++i)
    sum += m.at(i, i - 1) - m.random_baseline[static_cast<size_t>(i - 1)];
  return sum / (m.k() - 1);
}

MetricsReport compute_metrics(const AccMatrix& m) {
  MetricsReport r;
  r.acc_a = acc_a(m);
  r.acc_w = acc_w(m);
  if (m.k() >= 2) {
    r.bwt = bwt(m);
    r.fwt = fwt(m);
  } else {
    r.bwt = std::numeric_limits<double>::quiet_NaN();
    r.fwt = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

} // namespace ctsql
