#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <optional>
#include <vector>

#include "senstrack/error.hpp"
#include "senstrack/estimator.hpp"
#include "senstrack/model.hpp"

namespace senstrack {

/// (1-lambda) p^T h(p,u) + lambda c, with h_i = 1 - tr(G^T G Q_i) - |p + G(m_i - y_pred)|^2.
inline double current_cost_hform(const Belief& p, const ObservationModel& model, double cost, double lambda) {
  auto t = compute_gain(p, model);
  const int n = static_cast<int>(p.size());
  double acc = 0.0;
  if (model.dim() == 0) {
    acc = 1.0 - p.squaredNorm();
  } else {
    MatrixXd gtg = t.gain.transpose() * t.gain;
    for (int i = 0; i < n; ++i) {
      if (p(i) == 0.0) continue;
      const double tr = (gtg.array() * model.cov(i).array()).sum();
      VectorXd v = p + t.gain * (model.means().col(i) - t.y_pred);
      acc += p(i) * (1.0 - tr - v.squaredNorm());
    }
  }
  return (1.0 - lambda) * acc + lambda * cost;
}

/// (1-lambda) tr((I - G M) Sigma) + lambda c.
inline double current_cost_trace(const Belief& p, const ObservationModel& model, double cost, double lambda) {
  double tr = 1.0 - p.squaredNorm();
  if (model.dim() > 0) {
    auto t = compute_gain(p, model);
    // tr(G M Sigma) = sum(G^T .* (M Sigma))
    tr -= (t.gain.transpose().array() * t.b.array()).sum();
  }
  return (1.0 - lambda) * tr + lambda * cost;
}

inline double current_cost(const Belief& p, const ObservationModel& model, double cost, double lambda) {
  const double v = current_cost_trace(p, model, cost, lambda);
#ifndef NDEBUG
  const double h = current_cost_hform(p, model, cost, lambda);
  assert(std::abs(v - h) <= 1e-10);
#endif
  return v;
}

namespace detail {

/// tr(G M Sigma) through W = M^T Qtilde^{-1} M, using the per-sensor AR(1) spectra.
/// Returns nullopt when Qtilde is singular for this belief.
inline std::optional<double> structured_reduction(const Scenario& s, const Belief& p, int u) {
  const auto& alloc = *s.controls[u].allocation;
  const int n = s.n();
  MatrixXd w = MatrixXd::Zero(n, n);
  bool any = false;
  for (std::size_t l = 0; l < alloc.size(); ++l) {
    const int m = alloc[l];
    if (m == 0) continue;
    any = true;
    const auto& sp = s.sensors[l];
    const auto& spec = (*s.spectra)[l][m];
    const double a = p.dot(sp.sigma2) / (1.0 - sp.phi * sp.phi);
    double sum = 0.0;
    for (Eigen::Index j = 0; j < spec.eig.size(); ++j) {
      const double den = a * spec.eig(j) + sp.sigma_z2;
      if (!(den > 1e-300)) return std::nullopt;
      sum += spec.weight(j) / den;
    }
    w.noalias() += sum * sp.mu * sp.mu.transpose();
  }
  if (!any) return 0.0;
  MatrixXd sigma = error_covariance(p);
  MatrixXd k = MatrixXd::Identity(n, n) + sigma * w;
  MatrixXd z = k.partialPivLu().solve(sigma);
  return ((sigma * w).array() * z.transpose().array()).sum();
}

}  // namespace detail

/// Current cost of control u at predicted belief p under the scenario's lambda.
inline double current_cost(const Scenario& s, const Belief& p, int u, double lambda) {
  const auto& c = s.controls[u];
  if (s.sensor_based() && c.allocation && s.spectra) {
    if (auto red = detail::structured_reduction(s, p, u))
      return (1.0 - lambda) * (1.0 - p.squaredNorm() - *red) + lambda * c.cost;
  }
  return current_cost(p, s.model(u), c.cost, lambda);
}

inline double current_cost(const Scenario& s, const Belief& p, int u) { return current_cost(s, p, u, s.lambda); }

struct ScalarControl {
  double m1 = 0.0, m2 = 0.0;
  double var1 = 1.0, var2 = 1.0;
  double cost = 0.0;

  double a12() const { return (m1 - m2) * (m1 - m2); }
};

inline std::vector<ScalarControl> scalar_controls(const Scenario& s) {
  if (s.n() != 2) throw Error(ErrorCode::NotTwoStateScalar, "scenario has " + std::to_string(s.n()) + " states");
  std::vector<ScalarControl> out;
  for (const auto& c : s.controls) {
    const auto& m = s.model(c.id);
    if (m.dim() != 1) throw Error(ErrorCode::NotTwoStateScalar, "control " + std::to_string(c.id) + " is not scalar");
    out.push_back(ScalarControl{m.means()(0, 0), m.means()(0, 1), m.cov(0)(0, 0), m.cov(1)(0, 0), c.cost});
  }
  return out;
}

inline double current_cost_2state_scalar(double p, const ScalarControl& c, double lambda) {
  const double f = p * (1.0 - p);
  const double a = c.a12();
  const double den = a * f + c.var1 * p + c.var2 * (1.0 - p);
  if (!(den > 0.0)) throw Error(ErrorCode::DegenerateKernel, "zero denominator in scalar closed form");
  return (1.0 - lambda) * (2.0 * f - 2.0 * a * f * f / den) + lambda * c.cost;
}

enum class CaseVariant { I, II, III, IV };

inline const char* to_string(CaseVariant v) {
  switch (v) {
    case CaseVariant::I: return "I";
    case CaseVariant::II: return "II";
    case CaseVariant::III: return "III";
    case CaseVariant::IV: return "IV";
  }
  return "?";
}

struct CaseLabel {
  CaseVariant variant = CaseVariant::I;
  double a12 = 0.0;
  double var1 = 0.0, var2 = 0.0;
};

inline constexpr double kCaseTol = 1e-12;

inline CaseLabel classify_case(const ScalarControl& c) {
  const bool same_mean = std::abs(c.m1 - c.m2) <= kCaseTol;
  const bool same_var = std::abs(c.var1 - c.var2) <= kCaseTol;
  CaseVariant v = same_mean ? (same_var ? CaseVariant::I : CaseVariant::II)
                            : (same_var ? CaseVariant::III : CaseVariant::IV);
  return CaseLabel{v, c.a12(), c.var1, c.var2};
}

/// Sufficient Blackwell characterizations only: uninformative b, equal-mean variance ordering,
/// equal-variance mean separation.
inline bool blackwell_dominates(const ScalarControl& a, const ScalarControl& b) {
  const auto la = classify_case(a), lb = classify_case(b);
  if (lb.variant == CaseVariant::I) return true;
  if (lb.variant == CaseVariant::II && (la.variant == CaseVariant::I || la.variant == CaseVariant::II))
    return a.var1 <= b.var1 + kCaseTol && a.var2 <= b.var2 + kCaseTol;
  if (la.variant == CaseVariant::III && lb.variant == CaseVariant::III)
    return std::abs(a.var1 - b.var1) <= kCaseTol && a.a12() >= b.a12() - kCaseTol;
  return false;
}

inline constexpr double kTieTol = 1e-12;

/// Lowest index whose value is within kTieTol (relative) of the minimum.
inline int argmin_with_ties(const VectorXd& v) {
  const double best = v.minCoeff();
  const double tol = kTieTol * std::max(1.0, std::abs(best));
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (v(i) <= best + tol) return static_cast<int>(i);
  return 0;
}

inline std::vector<double> unit_grid(int points = 1001) {
  std::vector<double> g(points);
  for (int i = 0; i < points; ++i) g[i] = static_cast<double>(i) / (points - 1);
  return g;
}

/// Lowest-id control that Blackwell-dominates every other control and has the smallest
/// current cost at every point of a 1001-point grid.
inline std::optional<int> passive_optimal(const Scenario& s) {
  auto sc = scalar_controls(s);
  const auto grid = unit_grid();
  for (std::size_t u = 0; u < sc.size(); ++u) {
    bool ok = true;
    for (std::size_t v = 0; v < sc.size() && ok; ++v)
      if (v != u && !blackwell_dominates(sc[u], sc[v])) ok = false;
    for (double p : grid) {
      if (!ok) break;
      Belief b(2);
      b << p, 1.0 - p;
      const double lu = current_cost(s, b, static_cast<int>(u));
      for (std::size_t v = 0; v < sc.size() && ok; ++v)
        if (v != u && lu > current_cost(s, b, static_cast<int>(v)) + kCaseTol) ok = false;
    }
    if (ok) return static_cast<int>(u);
  }
  return std::nullopt;
}

/// p* where the current costs of a and b cross (equal a12, equal costs, opposite variance ordering).
inline double case4_crossing(const ScalarControl& a, const ScalarControl& b) {
  if (std::abs(a.a12() - b.a12()) > kCaseTol) throw Error(ErrorCode::HypothesisViolated, "a12 differs");
  if (std::abs(a.cost - b.cost) > kCaseTol) throw Error(ErrorCode::HypothesisViolated, "costs differ");
  if (!(a.var1 > b.var1) || !(a.var2 < b.var2))
    throw Error(ErrorCode::HypothesisViolated, "need var1(a) > var1(b) and var2(a) < var2(b)");
  return (b.var2 - a.var2) / (a.var1 - b.var1 + b.var2 - a.var2);
}

}  // namespace senstrack
