#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "senstrack/error.hpp"
#include "senstrack/model.hpp"

namespace senstrack {

inline constexpr long long kDefaultGridCap = 2000000;

/// Points a / R for all compositions a of R into n parts, lexicographically ascending.
/// For n = 2 the first coordinate runs 0, 1/R, ..., 1.
class BeliefGrid {
 public:
  BeliefGrid() = default;

  BeliefGrid(int n, int resolution, long long cap = kDefaultGridCap) : n_(n), r_(resolution) {
    if (n < 2) throw Error(ErrorCode::InvalidArgument, "grid needs at least 2 states");
    if (resolution < 2) throw Error(ErrorCode::InvalidArgument, "grid resolution must give >= 3 points per edge");
    const long long count = binomial(resolution + n - 1, n - 1);
    if (count > cap || count <= 0)
      throw Error(ErrorCode::GridTooLarge, std::to_string(count) + " points exceed the cap");
    // ways_[m][k] = number of compositions of m into k parts
    ways_.assign(r_ + 1, std::vector<long long>(n_ + 1, 0));
    for (int m = 0; m <= r_; ++m)
      for (int k = 1; k <= n_; ++k) ways_[m][k] = binomial(m + k - 1, k - 1);
    points_.resize(n, count);
    std::vector<int> a(n, 0);
    long long idx = 0;
    auto rec = [&](auto&& self, int pos, int remaining) -> void {
      if (pos == n_ - 1) {
        a[pos] = remaining;
        for (int i = 0; i < n_; ++i) points_(i, idx) = static_cast<double>(a[i]) / r_;
        ++idx;
        return;
      }
      for (int v = 0; v <= remaining; ++v) {
        a[pos] = v;
        self(self, pos + 1, remaining - v);
      }
    };
    rec(rec, 0, r_);
  }

  int n() const { return n_; }
  int resolution() const { return r_; }
  long long size() const { return points_.cols(); }
  VectorXd point(long long i) const { return points_.col(i); }
  const MatrixXd& points() const { return points_; }

  /// Lexicographic rank of an integer composition.
  long long rank(const std::vector<int>& a) const {
    long long r = 0;
    int remaining = r_;
    for (int i = 0; i < n_ - 1; ++i) {
      for (int v = 0; v < a[i]; ++v) r += ways_[remaining - v][n_ - 1 - i];
      remaining -= a[i];
    }
    return r;
  }

  std::vector<int> composition(long long idx) const {
    std::vector<int> a(n_);
    for (int i = 0; i < n_; ++i) a[i] = static_cast<int>(std::lround(points_(i, idx) * r_));
    return a;
  }

  struct Vertex {
    long long index;
    double weight;
  };

  /// Barycentric weights on the Freudenthal simplex containing p (linear interpolation for n = 2).
  std::vector<Vertex> locate(const VectorXd& p) const {
    std::vector<Vertex> out;
    if (n_ == 2) {
      double x = std::clamp(p(0), 0.0, 1.0) * r_;
      long long i = static_cast<long long>(std::floor(x));
      if (i >= r_) i = r_ - 1;
      const double f = x - static_cast<double>(i);
      out.push_back({i, 1.0 - f});
      if (f > 0.0) out.push_back({i + 1, f});
      return out;
    }
    // staircase coordinates x_i = R * sum_{j >= i} p_j, i = 1..n-1, with R >= x_1 >= ... >= x_{n-1} >= 0
    const int m = n_ - 1;
    std::vector<double> x(m);
    double tail = 0.0;
    for (int i = n_ - 1; i >= 1; --i) {
      tail += std::max(p(i), 0.0);
      x[i - 1] = tail * r_;
    }
    for (int i = 0; i < m; ++i) {
      x[i] = std::clamp(x[i], 0.0, static_cast<double>(r_));
      if (i > 0) x[i] = std::min(x[i], x[i - 1]);
    }
    std::vector<int> base(m);
    std::vector<double> frac(m);
    for (int i = 0; i < m; ++i) {
      base[i] = static_cast<int>(std::floor(x[i]));
      if (base[i] >= r_) base[i] = r_ - 1;
      frac[i] = x[i] - base[i];
    }
    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return frac[a] > frac[b]; });
    std::vector<int> v = base;
    auto emit = [&](double w) {
      if (w <= 0.0) return;
      std::vector<int> a(n_);
      a[0] = r_ - v[0];
      for (int i = 1; i < m; ++i) a[i] = v[i - 1] - v[i];
      a[n_ - 1] = v[m - 1];
      out.push_back({rank(a), w});
    };
    emit(1.0 - frac[order[0]]);
    for (int k = 0; k < m; ++k) {
      v[order[k]] += 1;
      const double w = (k + 1 < m) ? frac[order[k]] - frac[order[k + 1]] : frac[order[k]];
      emit(w);
    }
    return out;
  }

  /// Linear interpolation in the first coordinate; n = 2 only.
  double interpolate_2state(const VectorXd& values, double p0) const {
    const double x = std::clamp(p0, 0.0, 1.0) * r_;
    long long i = static_cast<long long>(x);
    if (i >= r_) i = r_ - 1;
    const double f = x - static_cast<double>(i);
    return (1.0 - f) * values(i) + f * values(i + 1);
  }

  double interpolate(const VectorXd& values, const VectorXd& p) const {
    double acc = 0.0;
    for (const auto& v : locate(p)) acc += v.weight * values(v.index);
    return acc;
  }

  long long nearest(const VectorXd& p) const {
    auto vs = locate(p);
    long long best = vs.front().index;
    double bw = vs.front().weight;
    for (const auto& v : vs)
      if (v.weight > bw) {
        bw = v.weight;
        best = v.index;
      }
    return best;
  }

 private:
  int n_ = 0;
  int r_ = 0;
  MatrixXd points_;
  std::vector<std::vector<long long>> ways_;
};

}  // namespace senstrack
