#pragma once

// Wall-clock scaling of ldgosm_solve in the node count n.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <vector>

#include "dstsgnn/errors.hpp"
#include "dstsgnn/ldgosm.hpp"

namespace dstsgnn {

struct BenchRow {
  Eigen::Index n = 0;
  double median_seconds = 0.0;
};

struct BenchResult {
  Eigen::Index d = 0;
  std::vector<BenchRow> rows;
  double slope = 0.0;  // least-squares slope of log(time) against log(n)
};

inline double loglog_slope(const std::vector<BenchRow>& rows) {
  if (rows.size() < 2) return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& r : rows) {
    const double x = std::log(static_cast<double>(r.n)), y = std::log(r.median_seconds);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double k = static_cast<double>(rows.size());
  return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

/// Per-solve time for each n: every repeat runs enough back-to-back solves to
/// fill min_repeat_seconds and records the mean; the row keeps the median repeat.
inline BenchResult bench_ldgosm(const std::vector<Eigen::Index>& n_list, Eigen::Index d, int repeats,
                                std::uint64_t seed = 11, double min_repeat_seconds = 0.1) {
  detail::require(!n_list.empty() && std::is_sorted(n_list.begin(), n_list.end()), ErrorKind::Config,
                  "bench n values must be non-empty and ascending");
  detail::require(d >= 1 && repeats >= 1, ErrorKind::Config, "bench needs d >= 1 and repeats >= 1");
  using Clock = std::chrono::steady_clock;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;

  BenchResult out;
  out.d = d;
  for (const auto n : n_list) {
    detail::require(n >= d, ErrorKind::Config, "bench needs n >= d");
    const Matrix x = Matrix::NullaryExpr(n, d, [&]() { return dist(rng); });
    const auto inp = DynamicGraphInput::from_features(x);
    const double ridge = default_ridge(x);
    volatile double sink = ldgosm_solve(inp, ridge).objective;  // warm-up

    std::vector<double> per_solve;
    for (int r = 0; r < repeats; ++r) {
      int iters = 0;
      const auto t0 = Clock::now();
      double elapsed = 0.0;
      do {
        sink = sink + ldgosm_solve(inp, ridge).objective;
        ++iters;
        elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
      } while (elapsed < min_repeat_seconds);
      per_solve.push_back(elapsed / iters);
    }
    std::nth_element(per_solve.begin(), per_solve.begin() + static_cast<std::ptrdiff_t>(per_solve.size() / 2),
                     per_solve.end());
    out.rows.push_back({n, per_solve[per_solve.size() / 2]});
  }
  out.slope = loglog_slope(out.rows);
  return out;
}

/// Least-squares fit time = fixed + per_node * n, for reading off the O(d^3) intercept.
struct AffineFit {
  double fixed_seconds = 0.0;
  double per_node_seconds = 0.0;
};

inline AffineFit affine_fit(const std::vector<BenchRow>& rows) {
  if (rows.size() < 2) return {};
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& r : rows) {
    const double x = static_cast<double>(r.n);
    sx += x;
    sy += r.median_seconds;
    sxx += x * x;
    sxy += x * r.median_seconds;
  }
  const double k = static_cast<double>(rows.size());
  const double b = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  return {(sy - b * sx) / k, b};
}

inline void write_bench_csv(std::ostream& os, const BenchResult& r) {
  os << "n,median_seconds\n";
  os.precision(9);
  for (const auto& row : r.rows) os << row.n << ',' << row.median_seconds << '\n';
}

}  // namespace dstsgnn
