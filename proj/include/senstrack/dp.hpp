#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "senstrack/cost.hpp"
#include "senstrack/error.hpp"
#include "senstrack/estimator.hpp"
#include "senstrack/grid.hpp"
#include "senstrack/model.hpp"
#include "senstrack/parallel.hpp"
#include "senstrack/quadrature.hpp"

namespace senstrack {

struct QuadratureSpec {
  int scalar_order = 64;
  int vector_samples = 4096;
  std::uint64_t seed = 20240611;
};

inline void validate_quadrature(const QuadratureSpec& q) {
  if (q.scalar_order < 8) throw Error(ErrorCode::InvalidArgument, "scalar_order must be >= 8");
  if (q.vector_samples < 256) throw Error(ErrorCode::InvalidArgument, "vector_samples must be >= 256");
}

/// Quadrature nodes for the predictive mixture of one control.
///
/// Nodes are drawn from every component and pooled under the equal-weight proposal
/// q = (1/n) sum_k f_k. rho(k, t) = f_k(y_t) / q(y_t), so for any belief p
///   E_y g(y) ~= sum_t omega_t (rho_t . p) g(y_t),
/// and the Bayes update at node t only needs rho_t.
struct NodeSet {
  bool empty = false;
  VectorXd omega;
  MatrixXd rho;  // n x T
};

inline NodeSet build_nodes(const ObservationModel& model, const QuadratureSpec& quad) {
  validate_quadrature(quad);
  NodeSet ns;
  const int n = model.states(), d = model.dim();
  if (d == 0) {
    ns.empty = true;
    return ns;
  }
  MatrixXd z;
  VectorXd w;
  if (d == 1) {
    auto rule = gauss_hermite(quad.scalar_order);
    z.resize(1, quad.scalar_order);
    w.resize(quad.scalar_order);
    for (int j = 0; j < quad.scalar_order; ++j) {
      z(0, j) = rule.nodes[j];
      w(j) = rule.weights[j];
    }
  } else {
    z = qmc_normals(d, quad.vector_samples, quad.seed);
    w = VectorXd::Constant(quad.vector_samples, 1.0 / quad.vector_samples);
  }
  const int m = static_cast<int>(w.size());
  const int total = n * m;
  ns.omega.resize(total);
  ns.rho.resize(n, total);
  VectorXd y(d);
  for (int i = 0; i < n; ++i) {
    const auto& f = model.factor(i);
    for (int j = 0; j < m; ++j) {
      const int t = i * m + j;
      y = f.mean() + f.sqrt_factor() * z.col(j);
      VectorXd ll = model.log_likelihoods(y);
      const double mx = ll.maxCoeff();
      if (!std::isfinite(mx)) throw Error(ErrorCode::QuadratureUnstable, "all node likelihoods underflow");
      const double lse = mx + std::log((ll.array() - mx).exp().sum());
      ns.rho.col(t) = (ll.array() - lse + std::log(static_cast<double>(n))).exp();
      ns.omega(t) = w(j) / n;
    }
  }
  return ns;
}

struct ValueTable {
  int stage = 0;
  VectorXd values;
  std::shared_ptr<const BeliefGrid> grid;
};

struct ThresholdInterval {
  double p_low = 0.0;
  double p_high = 0.0;
  int control = 0;
};

struct ThresholdReport {
  std::vector<ThresholdInterval> intervals;
  std::vector<int> non_contiguous;  // controls whose region is split
};

struct PolicyTable {
  int stage = 0;
  std::vector<int> choice;
  std::optional<ThresholdReport> thresholds;
};

struct DpSolution {
  std::shared_ptr<const BeliefGrid> grid;
  std::vector<ValueTable> values;     // values[k-1] is stage k
  std::vector<PolicyTable> policies;  // policies[k-1] is stage k
  double lambda = 0.0;

  int decide(const Belief& p, int stage) const {
    if (stage < 1 || stage > static_cast<int>(policies.size()))
      throw Error(ErrorCode::StageOutOfRange, "stage " + std::to_string(stage));
    return policies[stage - 1].choice[grid->nearest(p)];
  }
};

/// E_y J(Phi(p, u, y)) with J interpolated on the grid. The weights are self-normalized so a
/// constant J, or a degenerate p, is integrated exactly.
inline double expected_future_cost(const MarkovChain& chain, const Belief& p, const NodeSet& nodes,
                                   const BeliefGrid& grid, const VectorXd& next) {
  if (nodes.empty) return grid.interpolate(next, chain.trans * p);
  const int n = static_cast<int>(p.size());
  const auto total = nodes.omega.size();
  double acc = 0.0, mass = 0.0;
  if (n == 2) {
    const double p0 = p(0), p1 = p(1);
    const double t00 = chain.trans(0, 0), t01 = chain.trans(0, 1);
    for (Eigen::Index t = 0; t < total; ++t) {
      const double a = nodes.rho(0, t) * p0, b = nodes.rho(1, t) * p1;
      const double s = a + b;
      if (!(s > 0.0)) continue;
      acc += nodes.omega(t) * s * grid.interpolate_2state(next, (t00 * a + t01 * b) / s);
      mass += nodes.omega(t) * s;
    }
    if (!(mass > 0.0)) throw Error(ErrorCode::QuadratureUnstable, "predictive mass vanished");
    if (!(mass > 0.0)) throw Error(ErrorCode::QuadratureUnstable, "predictive mass vanished");
  return acc / mass;
  }
  VectorXd post(n), phi(n);
  for (Eigen::Index t = 0; t < total; ++t) {
    post = nodes.rho.col(t).cwiseProduct(p);
    const double s = post.sum();
    if (!(s > 0.0)) continue;
    phi.noalias() = chain.trans * post;
    phi /= s;
    acc += nodes.omega(t) * s * grid.interpolate(next, phi);
    mass += nodes.omega(t) * s;
  }
  if (!(mass > 0.0)) throw Error(ErrorCode::QuadratureUnstable, "predictive mass vanished");
  return acc / mass;
}

inline double expected_future_cost(const Scenario& s, const Belief& p, int u, const ValueTable& next,
                                   const QuadratureSpec& quad) {
  return expected_future_cost(s.chain, p, build_nodes(s.model(u), quad), *next.grid, next.values);
}

inline ThresholdReport thresholds_from_choices(const std::vector<double>& ps, const std::vector<int>& choice) {
  ThresholdReport r;
  std::vector<int> seen;
  for (std::size_t i = 0; i < choice.size(); ++i) {
    if (i == 0 || choice[i] != choice[i - 1]) {
      if (std::find(seen.begin(), seen.end(), choice[i]) != seen.end()) {
        if (std::find(r.non_contiguous.begin(), r.non_contiguous.end(), choice[i]) == r.non_contiguous.end())
          r.non_contiguous.push_back(choice[i]);
      } else {
        seen.push_back(choice[i]);
      }
      r.intervals.push_back(ThresholdInterval{ps[i], ps[i], choice[i]});
    } else {
      r.intervals.back().p_high = ps[i];
    }
  }
  return r;
}

inline ThresholdReport extract_thresholds(const PolicyTable& policy, const BeliefGrid& grid) {
  if (grid.n() != 2) throw Error(ErrorCode::NotTwoState, "thresholds need a 2-state grid");
  std::vector<double> ps(grid.size());
  for (long long i = 0; i < grid.size(); ++i) ps[i] = grid.points()(0, i);
  return thresholds_from_choices(ps, policy.choice);
}

/// Finite-horizon backward induction over the grid. Near-ties go to the lowest control id.
inline DpSolution backward_induction(const Scenario& s, std::shared_ptr<const BeliefGrid> grid,
                                     const QuadratureSpec& quad) {
  if (grid->n() != s.n()) throw Error(ErrorCode::DimensionMismatch, "grid and scenario state counts differ");
  const int L = s.horizon, U = s.num_controls();
  const auto G = static_cast<std::size_t>(grid->size());
  std::vector<NodeSet> nodes(U);
  parallel_for(static_cast<std::size_t>(U), [&](std::size_t u) { nodes[u] = build_nodes(s.model(int(u)), quad); });
  MatrixXd cur(U, static_cast<Eigen::Index>(G));
  parallel_for(G, [&](std::size_t g) {
    VectorXd p = grid->point(static_cast<long long>(g));
    for (int u = 0; u < U; ++u) cur(u, static_cast<Eigen::Index>(g)) = current_cost(s, p, u);
  });
  DpSolution sol;
  sol.grid = grid;
  sol.lambda = s.lambda;
  sol.values.resize(L);
  sol.policies.resize(L);
  for (int k = L; k >= 1; --k) {
    ValueTable vt{k, VectorXd(static_cast<Eigen::Index>(G)), grid};
    PolicyTable pt{k, std::vector<int>(G, 0), std::nullopt};
    const VectorXd* next = k < L ? &sol.values[k].values : nullptr;
    parallel_for(G, [&](std::size_t g) {
      VectorXd p = grid->point(static_cast<long long>(g));
      VectorXd v(U);
      for (int u = 0; u < U; ++u) {
        v(u) = cur(u, static_cast<Eigen::Index>(g));
        if (next) v(u) += expected_future_cost(s.chain, p, nodes[u], *grid, *next);
      }
      const int arg = argmin_with_ties(v);
      vt.values(static_cast<Eigen::Index>(g)) = v(arg);
      pt.choice[g] = arg;
    });
    if (grid->n() == 2) pt.thresholds = extract_thresholds(pt, *grid);
    sol.values[k - 1] = std::move(vt);
    sol.policies[k - 1] = std::move(pt);
  }
  return sol;
}

struct ConcavityReport {
  bool pass = true;
  bool advisory = false;  // n >= 3
  double max_second_diff = -std::numeric_limits<double>::infinity();
  double tolerance = 0.0;
  long long worst_index = -1;
};

/// Second differences along every lattice direction e_i - e_j.
inline ConcavityReport check_concavity(const VectorXd& values, const BeliefGrid& grid) {
  ConcavityReport r;
  r.advisory = grid.n() >= 3;
  r.tolerance = 1e-6 * std::max(1.0, values.cwiseAbs().maxCoeff());
  const int n = grid.n();
  if (n == 2) {
    for (long long i = 1; i + 1 < grid.size(); ++i) {
      const double d2 = values(i - 1) - 2.0 * values(i) + values(i + 1);
      if (d2 > r.max_second_diff) {
        r.max_second_diff = d2;
        r.worst_index = i;
      }
    }
  } else {
    for (long long g = 0; g < grid.size(); ++g) {
      auto a = grid.composition(g);
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
          if (a[i] < 1 || a[j] < 1) continue;
          auto lo = a, hi = a;
          lo[i] -= 1;
          lo[j] += 1;
          hi[i] += 1;
          hi[j] -= 1;
          const double d2 = values(grid.rank(lo)) - 2.0 * values(g) + values(grid.rank(hi));
          if (d2 > r.max_second_diff) {
            r.max_second_diff = d2;
            r.worst_index = g;
          }
        }
    }
  }
  r.pass = !(r.max_second_diff > r.tolerance);
  return r;
}

inline ConcavityReport check_concavity(const ValueTable& t) { return check_concavity(t.values, *t.grid); }

}  // namespace senstrack
