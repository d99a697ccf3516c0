#pragma once

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "senstrack/error.hpp"

namespace senstrack {

/// Gauss-Hermite rule for E f(Z), Z ~ N(0,1), by Golub-Welsch. Weights sum to 1.
struct HermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline HermiteRule gauss_hermite(int order) {
  if (order < 1) throw Error(ErrorCode::InvalidArgument, "quadrature order must be positive");
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) jac(k, k - 1) = jac(k - 1, k) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  HermiteRule r;
  double total = 0.0;
  for (int i = 0; i < order; ++i) {
    r.nodes.push_back(es.eigenvalues()(i));
    const double v = es.eigenvectors()(0, i);
    r.weights.push_back(v * v);
    total += v * v;
  }
  for (auto& w : r.weights) w /= total;
  return r;
}

inline std::vector<int> first_primes(int count) {
  std::vector<int> out;
  for (int c = 2; static_cast<int>(out.size()) < count; ++c) {
    bool prime = true;
    for (int p : out) {
      if (p * p > c) break;
      if (c % p == 0) {
        prime = false;
        break;
      }
    }
    if (prime) out.push_back(c);
  }
  return out;
}

inline double radical_inverse(std::uint64_t i, int base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

/// Cranley-Patterson shifted Halton points mapped to standard normals; one column per sample.
inline Eigen::MatrixXd qmc_normals(int dim, int samples, std::uint64_t seed) {
  Eigen::MatrixXd z(dim, samples);
  if (dim == 0) return z;
  const auto primes = first_primes(dim);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> shift(dim);
  for (auto& s : shift) s = unif(rng);
  const boost::math::normal_distribution<double> nd;
  for (int j = 0; j < samples; ++j) {
    for (int i = 0; i < dim; ++i) {
      double u = radical_inverse(static_cast<std::uint64_t>(j) + 1, primes[i]) + shift[i];
      u -= std::floor(u);
      u = std::clamp(u, 1e-15, 1.0 - 1e-15);
      z(i, j) = boost::math::quantile(nd, u);
    }
  }
  return z;
}

}  // namespace senstrack
