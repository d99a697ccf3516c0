#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "senstrack/error.hpp"

namespace senstrack {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Rng = std::mt19937_64;

inline constexpr double kStochasticTol = 1e-9;
inline constexpr double kCovJitter = 1e-10;

/// Column-stochastic chain: trans(j, i) = P(next = j | current = i).
struct MarkovChain {
  MatrixXd trans;
  VectorXd prior;

  int n() const { return static_cast<int>(prior.size()); }
};

inline MarkovChain validate_chain(const MatrixXd& trans, const VectorXd& prior) {
  if (trans.rows() != trans.cols())
    throw Error(ErrorCode::DimensionMismatch, "transition matrix is not square");
  if (trans.rows() != prior.size())
    throw Error(ErrorCode::DimensionMismatch, "prior length does not match transition matrix");
  if (prior.size() < 2) throw Error(ErrorCode::DimensionMismatch, "need at least 2 states");
  const auto n = trans.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(prior(i) >= 0.0)) throw Error(ErrorCode::NegativeEntry, "prior entry " + std::to_string(i));
    if (prior(i) > 1.0) throw Error(ErrorCode::NonStochastic, "prior entry exceeds 1");
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!(trans(j, i) >= 0.0))
        throw Error(ErrorCode::NegativeEntry,
                    "transition entry (" + std::to_string(j) + "," + std::to_string(i) + ")");
      if (trans(j, i) > 1.0) throw Error(ErrorCode::NonStochastic, "transition entry exceeds 1");
    }
    const double s = trans.col(i).sum();
    if (std::abs(s - 1.0) > kStochasticTol)
      throw Error(ErrorCode::NonStochastic,
                  "column " + std::to_string(i) + " sums to " + std::to_string(s));
  }
  if (std::abs(prior.sum() - 1.0) > kStochasticTol)
    throw Error(ErrorCode::NonStochastic, "prior sums to " + std::to_string(prior.sum()));
  return MarkovChain{trans, prior};
}

/// P^k pi.
inline VectorXd state_marginal(const MarkovChain& chain, int k) {
  VectorXd p = chain.prior;
  for (int i = 0; i < k; ++i) p = chain.trans * p;
  return p;
}

struct GaussianKernel {
  VectorXd mean;
  MatrixXd cov;

  int dim() const { return static_cast<int>(mean.size()); }
};

inline void validate_kernel(const GaussianKernel& k) {
  if (k.cov.rows() != k.mean.size() || k.cov.cols() != k.mean.size())
    throw Error(ErrorCode::DimensionMismatch, "kernel covariance does not match mean");
  if (k.dim() == 0) return;
  if ((k.cov - k.cov.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw Error(ErrorCode::ValidationError, "kernel covariance not symmetric");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(k.cov, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-12)
    throw Error(ErrorCode::ValidationError, "kernel covariance not positive semidefinite");
}

/// Factorized kernel: density Cholesky (jittered if needed) and a sampling square root.
class KernelFactor {
 public:
  KernelFactor() = default;

  explicit KernelFactor(const GaussianKernel& k) : mean_(k.mean) {
    const int d = k.dim();
    if (d == 0) return;
    Eigen::LLT<MatrixXd> llt(k.cov);
    if (llt.info() != Eigen::Success) {
      llt.compute(k.cov + kCovJitter * MatrixXd::Identity(d, d));
      if (llt.info() != Eigen::Success)
        throw Error(ErrorCode::SingularCovariance, "kernel covariance not factorizable after jitter");
    }
    chol_ = llt.matrixL();
    log_norm_ = -0.5 * d * std::log(2.0 * M_PI) - chol_.diagonal().array().log().sum();

    Eigen::LLT<MatrixXd> exact(k.cov);
    if (exact.info() == Eigen::Success) {
      sample_ = exact.matrixL();
    } else {
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(k.cov);
      if (es.info() != Eigen::Success)
        throw Error(ErrorCode::SingularCovariance, "eigendecomposition failed");
      VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
      sample_ = es.eigenvectors() * root.asDiagonal();
    }
  }

  int dim() const { return static_cast<int>(mean_.size()); }
  const VectorXd& mean() const { return mean_; }
  const MatrixXd& sqrt_factor() const { return sample_; }

  double log_density(const VectorXd& y) const {
    if (y.size() != mean_.size()) throw Error(ErrorCode::DimensionMismatch, "observation dimension");
    if (mean_.size() == 0) return 0.0;
    VectorXd z = chol_.triangularView<Eigen::Lower>().solve(y - mean_);
    return log_norm_ - 0.5 * z.squaredNorm();
  }

  template <class Gen>
  VectorXd sample(Gen& rng) const {
    std::normal_distribution<double> nd(0.0, 1.0);
    VectorXd z(mean_.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = nd(rng);
    if (mean_.size() == 0) return z;
    return mean_ + sample_ * z;
  }

 private:
  VectorXd mean_;
  MatrixXd chol_;
  MatrixXd sample_;
  double log_norm_ = 0.0;
};

inline double log_likelihood(const GaussianKernel& k, const VectorXd& y) {
  return KernelFactor(k).log_density(y);
}

inline double likelihood(const GaussianKernel& k, const VectorXd& y) {
  return std::exp(log_likelihood(k, y));
}

inline VectorXd sample(const GaussianKernel& k, Rng& rng) { return KernelFactor(k).sample(rng); }

/// All per-state kernels of one control, with cached factorizations.
class ObservationModel {
 public:
  ObservationModel() = default;

  explicit ObservationModel(std::vector<GaussianKernel> kernels) : kernels_(std::move(kernels)) {
    if (kernels_.empty()) throw Error(ErrorCode::DimensionMismatch, "no kernels");
    const int d = kernels_[0].dim();
    means_.resize(d, static_cast<Eigen::Index>(kernels_.size()));
    for (std::size_t i = 0; i < kernels_.size(); ++i) {
      validate_kernel(kernels_[i]);
      if (kernels_[i].dim() != d)
        throw Error(ErrorCode::DimensionMismatch, "kernel dimensions differ within a control");
      means_.col(static_cast<Eigen::Index>(i)) = kernels_[i].mean;
      factors_.emplace_back(kernels_[i]);
    }
  }

  int dim() const { return static_cast<int>(means_.rows()); }
  int states() const { return static_cast<int>(kernels_.size()); }
  const MatrixXd& means() const { return means_; }
  const GaussianKernel& kernel(int i) const { return kernels_[i]; }
  const std::vector<GaussianKernel>& kernels() const { return kernels_; }
  const MatrixXd& cov(int i) const { return kernels_[i].cov; }

  double log_likelihood(int state, const VectorXd& y) const { return factors_[state].log_density(y); }
  double likelihood(int state, const VectorXd& y) const { return std::exp(log_likelihood(state, y)); }

  VectorXd log_likelihoods(const VectorXd& y) const {
    VectorXd out(states());
    for (int i = 0; i < states(); ++i) out(i) = factors_[i].log_density(y);
    return out;
  }

  /// Q-tilde = sum_i p_i Q_i.
  MatrixXd mixture_cov(const VectorXd& p) const {
    MatrixXd q = MatrixXd::Zero(dim(), dim());
    for (int i = 0; i < states(); ++i)
      if (p(i) != 0.0) q.noalias() += p(i) * kernels_[i].cov;
    return q;
  }

  template <class Gen>
  VectorXd sample(int state, Gen& rng) const {
    return factors_[state].sample(rng);
  }

  const KernelFactor& factor(int state) const { return factors_[state]; }

 private:
  std::vector<GaussianKernel> kernels_;
  std::vector<KernelFactor> factors_;
  MatrixXd means_;
};

struct Control {
  int id = 0;
  std::optional<std::vector<int>> allocation;
  double cost = 0.0;
};

inline long long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// Allocation vectors with total samples in [1, N] (or [0, N]) in ascending lexicographic order.
inline std::vector<Control> enumerate_controls(int s, int N, bool include_empty) {
  if (s < 1) throw Error(ErrorCode::InvalidArgument, "need at least one sensor");
  if (N < 0) throw Error(ErrorCode::InvalidArgument, "negative budget");
  if (N == 0 && !include_empty) throw Error(ErrorCode::BudgetZero, "budget 0 leaves no controls");
  std::vector<Control> out;
  std::vector<int> a(s, 0);
  auto rec = [&](auto&& self, int pos, int remaining) -> void {
    if (pos == s) {
      if (include_empty || remaining < N) out.push_back(Control{static_cast<int>(out.size()), a, 0.0});
      return;
    }
    for (int v = 0; v <= remaining; ++v) {
      a[pos] = v;
      self(self, pos + 1, remaining - v);
    }
    a[pos] = 0;
  };
  rec(rec, 0, N);
  return out;
}

struct SensorSpec {
  std::string name;
  VectorXd mu;      // per state
  VectorXd sigma2;  // per state AR innovation variance
  double phi = 0.0;
  double sigma_z2 = 0.0;
  double delta = 1.0;
};

inline void validate_sensor(const SensorSpec& s, int n) {
  if (s.mu.size() != n || s.sigma2.size() != n)
    throw Error(ErrorCode::DimensionMismatch, "sensor " + s.name + " per-state vectors");
  if (!(std::abs(s.phi) < 1.0)) throw Error(ErrorCode::ValidationError, "sensor " + s.name + ": |phi| >= 1");
  if ((s.sigma2.array() < 0.0).any())
    throw Error(ErrorCode::ValidationError, "sensor " + s.name + ": negative sigma2");
  if (!(s.sigma_z2 >= 0.0)) throw Error(ErrorCode::ValidationError, "sensor " + s.name + ": negative sigma_z2");
  if (!(s.delta > 0.0)) throw Error(ErrorCode::ValidationError, "sensor " + s.name + ": delta must be positive");
}

/// Symmetric Toeplitz matrix with first row (1, phi, phi^2, ...).
inline MatrixXd ar1_toeplitz(int m, double phi) {
  MatrixXd t(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) t(i, j) = std::pow(phi, std::abs(i - j));
  return t;
}

inline std::vector<GaussianKernel> build_observation_model(const std::vector<SensorSpec>& sensors,
                                                           const std::vector<int>& allocation) {
  if (allocation.size() != sensors.size())
    throw Error(ErrorCode::DimensionMismatch, "allocation length does not match sensor count");
  if (sensors.empty()) throw Error(ErrorCode::InvalidArgument, "no sensors");
  const int n = static_cast<int>(sensors[0].mu.size());
  int d = 0;
  for (int c : allocation) {
    if (c < 0) throw Error(ErrorCode::ValidationError, "negative sample count");
    d += c;
  }
  std::vector<GaussianKernel> out(n);
  for (int i = 0; i < n; ++i) {
    out[i].mean = VectorXd::Zero(d);
    out[i].cov = MatrixXd::Zero(d, d);
    int off = 0;
    for (std::size_t l = 0; l < sensors.size(); ++l) {
      const int m = allocation[l];
      if (m == 0) continue;
      const auto& s = sensors[l];
      out[i].mean.segment(off, m).setConstant(s.mu(i));
      out[i].cov.block(off, off, m, m) = s.sigma2(i) / (1.0 - s.phi * s.phi) * ar1_toeplitz(m, s.phi) +
                                         s.sigma_z2 * MatrixXd::Identity(m, m);
      off += m;
    }
  }
  return out;
}

inline double allocation_energy(const std::vector<int>& allocation, const std::vector<double>& deltas) {
  if (allocation.size() != deltas.size())
    throw Error(ErrorCode::DimensionMismatch, "allocation length does not match deltas");
  double e = 0.0;
  for (std::size_t l = 0; l < allocation.size(); ++l) e += allocation[l] * deltas[l];
  return e;
}

inline double sensing_cost(const std::vector<int>& allocation, const std::vector<double>& deltas, double C) {
  if (!(C > 0.0)) throw Error(ErrorCode::CostOutOfRange, "normalizer must be positive");
  const double c = allocation_energy(allocation, deltas) / C;
  if (c < 0.0 || c > 1.0 + 1e-12)
    throw Error(ErrorCode::CostOutOfRange, "normalized cost " + std::to_string(c) + " outside [0,1]");
  return std::min(c, 1.0);
}

inline double default_normalizer(int budget, const std::vector<double>& deltas) {
  return budget * *std::max_element(deltas.begin(), deltas.end());
}

/// Eigen-spectrum of one AR(1) Toeplitz block size; weight_j = (v_j . 1)^2.
struct BlockSpectrum {
  VectorXd eig;
  VectorXd weight;
};

struct Scenario {
  MarkovChain chain;
  std::vector<SensorSpec> sensors;
  int budget = 0;
  bool include_empty = false;
  std::optional<double> normalizer_override;
  double norm_c = 1.0;
  std::vector<Control> controls;
  std::shared_ptr<const std::vector<ObservationModel>> obs;
  std::shared_ptr<const std::vector<std::vector<BlockSpectrum>>> spectra;  // [sensor][count]
  double lambda = 0.5;
  int horizon = 5;
  int initial_control = 0;
  std::optional<int> initial_control_override;

  int n() const { return chain.n(); }
  int num_controls() const { return static_cast<int>(controls.size()); }
  bool sensor_based() const { return !sensors.empty(); }
  const ObservationModel& model(int u) const { return (*obs)[u]; }

  std::vector<double> deltas() const {
    std::vector<double> d;
    for (const auto& s : sensors) d.push_back(s.delta);
    return d;
  }

  /// allocation^T delta for sensor scenarios, the normalized cost otherwise.
  double energy(int u) const {
    const auto& c = controls[u];
    if (c.allocation && sensor_based()) return allocation_energy(*c.allocation, deltas());
    return c.cost;
  }

  Scenario with_lambda(double l) const {
    if (!(l >= 0.0 && l <= 1.0)) throw Error(ErrorCode::ValidationError, "lambda outside [0,1]");
    Scenario s = *this;
    s.lambda = l;
    return s;
  }

  int cheapest_control() const {
    int best = -1;
    for (const auto& c : controls) {
      if (c.allocation && std::all_of(c.allocation->begin(), c.allocation->end(), [](int v) { return v == 0; }))
        continue;
      if (model(c.id).dim() == 0) continue;
      if (best < 0 || c.cost < controls[best].cost) best = c.id;
    }
    return best < 0 ? 0 : best;
  }
};

inline void validate_scenario_common(Scenario& s) {
  if (!(s.lambda >= 0.0 && s.lambda <= 1.0)) throw Error(ErrorCode::ValidationError, "lambda outside [0,1]");
  if (s.horizon < 1) throw Error(ErrorCode::ValidationError, "horizon must be >= 1");
  if (s.controls.empty()) throw Error(ErrorCode::ValidationError, "no controls");
  for (const auto& c : s.controls)
    if (!(c.cost >= 0.0 && c.cost <= 1.0))
      throw Error(ErrorCode::CostOutOfRange, "control " + std::to_string(c.id) + " cost outside [0,1]");
  for (const auto& m : *s.obs)
    if (m.states() != s.n()) throw Error(ErrorCode::DimensionMismatch, "kernels missing for some states");
  if (s.initial_control_override) {
    if (*s.initial_control_override < 0 || *s.initial_control_override >= s.num_controls())
      throw Error(ErrorCode::ValidationError, "initial_control out of range");
    s.initial_control = *s.initial_control_override;
  } else {
    s.initial_control = s.cheapest_control();
  }
}

inline Scenario make_explicit_scenario(const MarkovChain& chain, const std::vector<double>& costs,
                                       const std::vector<std::vector<GaussianKernel>>& kernels, double lambda,
                                       int horizon, std::optional<int> initial_control = std::nullopt) {
  if (costs.size() != kernels.size())
    throw Error(ErrorCode::DimensionMismatch, "cost list and kernel list differ in length");
  Scenario s;
  s.chain = chain;
  auto obs = std::make_shared<std::vector<ObservationModel>>();
  for (std::size_t u = 0; u < costs.size(); ++u) {
    if (static_cast<int>(kernels[u].size()) != chain.n())
      throw Error(ErrorCode::DimensionMismatch, "control " + std::to_string(u) + " kernel count");
    s.controls.push_back(Control{static_cast<int>(u), std::nullopt, costs[u]});
    obs->emplace_back(kernels[u]);
  }
  s.obs = obs;
  s.lambda = lambda;
  s.horizon = horizon;
  s.initial_control_override = initial_control;
  validate_scenario_common(s);
  return s;
}

inline Scenario make_sensor_scenario(const MarkovChain& chain, const std::vector<SensorSpec>& sensors, int budget,
                                     bool include_empty, std::optional<double> normalizer, double lambda,
                                     int horizon, std::optional<int> initial_control = std::nullopt) {
  if (sensors.empty()) throw Error(ErrorCode::ValidationError, "no sensors");
  for (const auto& sp : sensors) validate_sensor(sp, chain.n());
  Scenario s;
  s.chain = chain;
  s.sensors = sensors;
  s.budget = budget;
  s.include_empty = include_empty;
  s.normalizer_override = normalizer;
  const auto deltas = s.deltas();
  s.norm_c = normalizer ? *normalizer : default_normalizer(budget, deltas);
  s.controls = enumerate_controls(static_cast<int>(sensors.size()), budget, include_empty);
  auto obs = std::make_shared<std::vector<ObservationModel>>();
  for (auto& c : s.controls) {
    c.cost = sensing_cost(*c.allocation, deltas, s.norm_c);
    obs->emplace_back(build_observation_model(sensors, *c.allocation));
  }
  s.obs = obs;
  auto spectra = std::make_shared<std::vector<std::vector<BlockSpectrum>>>();
  for (const auto& sp : sensors) {
    std::vector<BlockSpectrum> per;
    per.push_back(BlockSpectrum{});
    for (int m = 1; m <= budget; ++m) {
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(ar1_toeplitz(m, sp.phi));
      VectorXd proj = es.eigenvectors().transpose() * VectorXd::Ones(m);
      per.push_back(BlockSpectrum{es.eigenvalues(), proj.array().square()});
    }
    spectra->push_back(std::move(per));
  }
  s.spectra = spectra;
  s.lambda = lambda;
  s.horizon = horizon;
  s.initial_control_override = initial_control;
  validate_scenario_common(s);
  return s;
}

}  // namespace senstrack
