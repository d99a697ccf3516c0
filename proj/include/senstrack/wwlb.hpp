#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "senstrack/error.hpp"
#include "senstrack/model.hpp"

namespace senstrack {

/// State-dependent test point: state x maps to x + h(x). Targets outside the state set carry probability 0.
struct TestPoint {
  std::vector<int> offsets;
  bool bijective = false;
  bool valid = true;

  int n() const { return static_cast<int>(offsets.size()); }

  int target(int x) const {
    const int t = x + offsets[x];
    return (t >= 0 && t < n()) ? t : -1;
  }

  bool is_zero() const {
    return std::all_of(offsets.begin(), offsets.end(), [](int h) { return h == 0; });
  }

  TestPoint negated() const {
    std::vector<int> o(offsets);
    for (auto& h : o) h = -h;
    return make(std::move(o));
  }

  std::string label() const {
    std::string s;
    for (std::size_t i = 0; i < offsets.size(); ++i) {
      if (i) s += ';';
      s += std::to_string(offsets[i]);
    }
    return s;
  }

  static TestPoint make(std::vector<int> offsets) {
    TestPoint t;
    t.offsets = std::move(offsets);
    const int n = t.n();
    std::vector<int> hit(n, 0);
    t.valid = true;
    for (int x = 0; x < n; ++x) {
      const int y = t.target(x);
      if (y < 0)
        t.valid = false;
      else
        hit[y]++;
    }
    t.bijective = t.valid && std::all_of(hit.begin(), hit.end(), [](int c) { return c == 1; });
    return t;
  }

  /// perm[x] is the image of state x.
  static TestPoint from_permutation(const std::vector<int>& perm) {
    std::vector<int> o(perm.size());
    for (std::size_t x = 0; x < perm.size(); ++x) o[x] = perm[x] - static_cast<int>(x);
    return make(std::move(o));
  }

  static TestPoint scalar_shift(int n, int h) { return make(std::vector<int>(n, h)); }
  static TestPoint zero(int n) { return make(std::vector<int>(n, 0)); }
};

/// Every permutation of the state set except the identity, in lexicographic order.
inline std::vector<TestPoint> permutation_test_points(int n) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<TestPoint> out;
  while (std::next_permutation(perm.begin(), perm.end())) out.push_back(TestPoint::from_permutation(perm));
  return out;
}

namespace detail {

inline double log_det_psd(const MatrixXd& q) {
  if (q.rows() == 0) return 0.0;
  Eigen::LLT<MatrixXd> llt(q);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(q, Eigen::EigenvaluesOnly);
    double s = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
      const double e = es.eigenvalues()(i);
      if (!(e > 0.0)) return -std::numeric_limits<double>::infinity();
      s += std::log(e);
    }
    return s;
  }
  return 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
}

}  // namespace detail

/// Chernoff exponent kappa(s) = -ln int f_a^s f_b^(1-s).
inline double chernoff_exponent(const GaussianKernel& a, const GaussianKernel& b, double s) {
  if (a.dim() != b.dim()) throw Error(ErrorCode::DimensionMismatch, "kernel dimensions differ");
  if (!(s > 0.0 && s < 1.0)) throw Error(ErrorCode::InvalidArgument, "s must lie in (0,1)");
  if (a.dim() == 0) return 0.0;
  const int d = a.dim();
  MatrixXd mix = (1.0 - s) * a.cov + s * b.cov;
  Eigen::LLT<MatrixXd> llt(mix);
  if (llt.info() != Eigen::Success) {
    llt.compute(mix + kCovJitter * MatrixXd::Identity(d, d));
    if (llt.info() != Eigen::Success)
      throw Error(ErrorCode::SingularMixtureCovariance, "(1-s) Qa + s Qb not factorizable");
  }
  const VectorXd dm = b.mean - a.mean;
  const double quad = dm.dot(llt.solve(dm));
  const double ld_mix = 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
  const double ld_a = detail::log_det_psd(a.cov), ld_b = detail::log_det_psd(b.cov);
  if (!std::isfinite(ld_a) || !std::isfinite(ld_b)) return std::numeric_limits<double>::infinity();
  return 0.5 * (ld_mix - (1.0 - s) * ld_a - s * ld_b) + 0.5 * s * (1.0 - s) * quad;
}

/// Bhattacharyya coefficient xi = int sqrt(f_a f_b).
inline double bhattacharyya(const GaussianKernel& a, const GaussianKernel& b) {
  if (a.dim() != b.dim()) throw Error(ErrorCode::DimensionMismatch, "kernel dimensions differ");
  if (a.dim() == 0) return 1.0;
  double k;
  try {
    k = chernoff_exponent(a, b, 0.5);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SingularMixtureCovariance)
      throw Error(ErrorCode::SingularAverageCovariance, "(Qa + Qb)/2 not factorizable");
    throw;
  }
  return std::exp(-k);
}

enum class WwlbMode { Paper, Exact };

inline const char* to_string(WwlbMode m) { return m == WwlbMode::Paper ? "paper" : "exact"; }

struct GEntries {
  double g_next = 0.0;   // G^{k+1}_{k+1,k+1}
  double g_cross = 0.0;  // G^{k+1}_{k+1,k}
  double g_cur = 0.0;    // G^{k+1}_{k,k}
};

/// Log-term summations, G entries and J0 for one scenario.
///
/// Stage k couples x_{k-1}, x_k, x_{k+1}; y_k is observed under u_{k-1} and y_{k+1} under u_k.
/// At k = 0 the role of P(x_0 | x_{-1}) is played by the prior with a single dummy x_{-1}.
class WwlbEngine {
 public:
  WwlbEngine(const Scenario& s, WwlbMode mode) : chain_(s.chain), mode_(mode), obs_(s.obs) {
    const int n = chain_.n();
    sqrt_p_ = chain_.trans.cwiseSqrt();
    sqrt_prior_ = chain_.prior.cwiseSqrt();
    xi_.resize(s.num_controls());
    for (int u = 0; u < s.num_controls(); ++u) {
      MatrixXd x = MatrixXd::Ones(n, n);
      for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) x(a, b) = x(b, a) = bhattacharyya(s.model(u).kernel(a), s.model(u).kernel(b));
      xi_[u] = x;
    }
    marginals_.push_back(chain_.prior);
    for (int k = 1; k <= s.horizon + 1; ++k) marginals_.push_back(chain_.trans * marginals_.back());
  }

  WwlbMode mode() const { return mode_; }
  int n() const { return chain_.n(); }
  const MarkovChain& chain() const { return chain_; }
  const MatrixXd& xi(int u) const { return xi_[u]; }

  VectorXd marginal(int k) const {
    if (k < static_cast<int>(marginals_.size())) return marginals_[k];
    VectorXd p = marginals_.back();
    for (int i = static_cast<int>(marginals_.size()) - 1; i < k; ++i) p = chain_.trans * p;
    return p;
  }

  // Linear-scale summations. With support_only, paths of zero probability are skipped
  // (the defining expectations); otherwise the sums run over all states as written in closed form.

  double eta_sum(int k, const TestPoint& ha, const TestPoint& hb, int u, bool support_only) const {
    const int n = this->n();
    const VectorXd pk = marginal(k);
    const MatrixXd& xi = xi_[u];
    double acc = 0.0;
    for (int xk = 0; xk < n; ++xk) {
      if (pk(xk) == 0.0) continue;
      double inner = 0.0;
      for (int x1 = 0; x1 < n; ++x1) {
        if (support_only && chain_.trans(x1, xk) == 0.0) continue;
        const int ta = ha.target(x1), tb = hb.target(x1);
        if (ta < 0 || tb < 0) continue;
        inner += sqrt_p_(ta, xk) * sqrt_p_(tb, xk) * xi(ta, tb);
      }
      acc += pk(xk) * inner;
    }
    return acc;
  }

  double rho_sum(int k, const TestPoint& ha, const TestPoint& hb, int u_prev, bool support_only) const {
    const int n = this->n();
    const MatrixXd& xi = xi_[u_prev];
    double acc = 0.0;
    for_prev(k, [&](double pprev, auto&& tin_sqrt, auto&& tin_pos) {
      for (int xk = 0; xk < n; ++xk) {
        if (support_only && !tin_pos(xk)) continue;
        const int ta = ha.target(xk), tb = hb.target(xk);
        if (ta < 0 || tb < 0) continue;
        const double head = tin_sqrt(ta) * tin_sqrt(tb) * xi(ta, tb);
        if (head == 0.0) continue;
        double inner = 0.0;
        for (int x1 = 0; x1 < n; ++x1) {
          if (support_only && chain_.trans(x1, xk) == 0.0) continue;
          inner += sqrt_p_(x1, ta) * sqrt_p_(x1, tb);
        }
        acc += pprev * head * inner;
      }
    });
    return acc;
  }

  double zeta_sum(int k, const TestPoint& ha, const TestPoint& hb, int u_prev, int u, bool support_only) const {
    const int n = this->n();
    const MatrixXd& xi_k = xi_[u_prev];
    const MatrixXd& xi_k1 = xi_[u];
    double acc = 0.0;
    for_prev(k, [&](double pprev, auto&& tin_sqrt, auto&& tin_pos) {
      for (int xk = 0; xk < n; ++xk) {
        if (support_only && !tin_pos(xk)) continue;
        const int ta = ha.target(xk);
        if (ta < 0) continue;
        const double head = tin_sqrt(ta) * tin_sqrt(xk) * xi_k(ta, xk);
        if (head == 0.0) continue;
        double inner = 0.0;
        for (int x1 = 0; x1 < n; ++x1) {
          if (support_only && chain_.trans(x1, xk) == 0.0) continue;
          const int tb = hb.target(x1);
          if (tb < 0) continue;
          inner += sqrt_p_(x1, ta) * sqrt_p_(tb, xk) * xi_k1(tb, x1);
        }
        acc += pprev * head * inner;
      }
    });
    return acc;
  }

  double gamma_sum(const TestPoint& ha, const TestPoint& hb, int u_init, bool support_only) const {
    const int n = this->n();
    const MatrixXd& xi = xi_[u_init];
    double acc = 0.0;
    for (int x0 = 0; x0 < n; ++x0) {
      if (support_only && chain_.prior(x0) == 0.0) continue;
      const int ta = ha.target(x0), tb = hb.target(x0);
      if (ta < 0 || tb < 0) continue;
      acc += sqrt_prior_(ta) * sqrt_prior_(tb) * xi(ta, tb);
    }
    return acc;
  }

  static double log_of(double v) { return v > 0.0 ? std::log(v) : -std::numeric_limits<double>::infinity(); }

  double eta(int k, const TestPoint& ha, const TestPoint& hb, int u) const {
    if (ha.is_zero() && hb.is_zero()) return 0.0;
    return log_of(eta_sum(k, ha, hb, u, false));
  }
  double rho(int k, const TestPoint& ha, const TestPoint& hb, int u_prev) const {
    if (ha.is_zero() && hb.is_zero()) return 0.0;
    return log_of(rho_sum(k, ha, hb, u_prev, false));
  }
  double zeta(int k, const TestPoint& ha, const TestPoint& hb, int u_prev, int u) const {
    if (ha.is_zero() && hb.is_zero()) return 0.0;
    return log_of(zeta_sum(k, ha, hb, u_prev, u, false));
  }
  double gamma(const TestPoint& ha, const TestPoint& hb, int u_init) const {
    if (ha.is_zero() && hb.is_zero()) return 0.0;
    return log_of(gamma_sum(ha, hb, u_init, false));
  }

  GEntries g_entries(int k, int u_prev, int u, const TestPoint& hk, const TestPoint& hk1) const {
    if (hk.is_zero() || hk1.is_zero()) throw Error(ErrorCode::DegenerateTestPoint, "zero test point");
    const TestPoint z = TestPoint::zero(n());
    const TestPoint mk = hk.negated(), mk1 = hk1.negated();
    const bool ex = mode_ == WwlbMode::Exact;
    const double el_half = eta_sum(k, hk1, z, u, ex);
    const double ek_half = rho_sum(k, hk, z, u_prev, ex);
    if (!(el_half > 0.0)) throw Error(ErrorCode::DegenerateTestPoint, "eta(h_{k+1},0) = -inf");
    if (!(ek_half > 0.0)) throw Error(ErrorCode::DegenerateTestPoint, "rho(h_k,0) = -inf");
    const double el_pm = eta_sum(k, hk1, mk1, u, ex);
    const double ek_pm = rho_sum(k, hk, mk, u_prev, ex);
    GEntries g;
    if (ex) {
      const double el_p = eta_sum(k, hk1, hk1, u, true), el_m = eta_sum(k, mk1, mk1, u, true);
      const double ek_p = rho_sum(k, hk, hk, u_prev, true), ek_m = rho_sum(k, mk, mk, u_prev, true);
      g.g_next = (el_p - 2.0 * el_pm + el_m) / (el_half * el_half);
      g.g_cur = (ek_p - 2.0 * ek_pm + ek_m) / (ek_half * ek_half);
    } else {
      g.g_next = 2.0 * (1.0 - el_pm) / (el_half * el_half);
      g.g_cur = 2.0 * (1.0 - ek_pm) / (ek_half * ek_half);
    }
    const double zpp = zeta_sum(k, hk, hk1, u_prev, u, ex);
    const double zmp = zeta_sum(k, mk, hk1, u_prev, u, ex);
    const double zmm = zeta_sum(k, mk, mk1, u_prev, u, ex);
    const double zpm = zeta_sum(k, hk, mk1, u_prev, u, ex);
    g.g_cross = (zpp - zmp + zmm - zpm) / (el_half * ek_half);
    return g;
  }

  double j0(int u_init, const TestPoint& h0) const {
    const TestPoint z = TestPoint::zero(n());
    const TestPoint m0 = h0.negated();
    const bool ex = mode_ == WwlbMode::Exact;
    const double half = gamma_sum(h0, z, u_init, ex);
    if (!(half > 0.0)) throw Error(ErrorCode::DegenerateTestPoint, "gamma(h_0,0) = -inf");
    const double pm = gamma_sum(h0, m0, u_init, ex);
    if (ex) {
      const double p = gamma_sum(h0, h0, u_init, true), m = gamma_sum(m0, m0, u_init, true);
      return (p - 2.0 * pm + m) / (half * half);
    }
    return 2.0 * (1.0 - pm) / (half * half);
  }

 private:
  /// Calls body(P(x_{k-1}), sqrt P(. | x_{k-1}), P(. | x_{k-1}) > 0) for each x_{k-1} in the support.
  template <class Body>
  void for_prev(int k, Body&& body) const {
    if (k == 0) {
      body(1.0, [&](int x) { return sqrt_prior_(x); }, [&](int x) { return chain_.prior(x) > 0.0; });
      return;
    }
    const VectorXd prev = marginal(k - 1);
    for (int xp = 0; xp < n(); ++xp) {
      if (prev(xp) == 0.0) continue;
      body(prev(xp), [&, xp](int x) { return sqrt_p_(x, xp); }, [&, xp](int x) { return chain_.trans(x, xp) > 0.0; });
    }
  }

  MarkovChain chain_;
  WwlbMode mode_;
  std::shared_ptr<const std::vector<ObservationModel>> obs_;
  MatrixXd sqrt_p_;
  VectorXd sqrt_prior_;
  std::vector<MatrixXd> xi_;
  std::vector<VectorXd> marginals_;
};

struct WwlbAccumulator {
  int stage = 0;             // k
  double a_value = 0.0;      // A_k
  double inv_a = 0.0;        // A_k^{-1}, 0 at k = 0
  double last_cross = 0.0;   // G^k_{k,k-1}, 0 at k = 0
  double j_value = 0.0;      // J_k
  std::vector<int> committed;  // u_{-1}, u_0, ..., u_{k-1}
  WwlbMode mode = WwlbMode::Paper;
};

inline WwlbAccumulator init_accumulator(const WwlbEngine& e, int u_init) {
  WwlbAccumulator a;
  a.mode = e.mode();
  a.committed.push_back(u_init);
  return a;
}

struct AdvanceResult {
  double j = 0.0;
  GEntries g;
  WwlbAccumulator next;
};

inline AdvanceResult advance(const WwlbEngine& e, const WwlbAccumulator& acc, int u, const TestPoint& hk,
                             const TestPoint& hk1) {
  const int k = acc.stage;
  AdvanceResult r;
  r.g = e.g_entries(k, acc.committed.back(), u, hk, hk1);
  const double a = r.g.g_cur - acc.last_cross * acc.inv_a * acc.last_cross;
  if (!(a > 0.0)) throw Error(ErrorCode::DegenerateRecursion, "A_{k+1} <= 0");
  r.j = r.g.g_next - r.g.g_cross * r.g.g_cross / a;
  r.next = acc;
  r.next.stage = k + 1;
  r.next.a_value = a;
  r.next.inv_a = 1.0 / a;
  r.next.last_cross = r.g.g_cross;
  r.next.j_value = r.j;
  r.next.committed.push_back(u);
  return r;
}

inline double wwlb_bound(double j, double h_scale = 1.0) {
  if (!(j > 0.0)) throw Error(ErrorCode::NonpositiveInformation, "J must be positive");
  return h_scale * h_scale / j;
}

using TestPointPair = std::pair<TestPoint, TestPoint>;

inline std::vector<TestPointPair> all_pairs(const std::vector<TestPoint>& tps) {
  std::vector<TestPointPair> out;
  for (const auto& a : tps)
    for (const auto& b : tps) out.emplace_back(a, b);
  return out;
}

struct VScore {
  double v = 0.0;
  double j = 0.0;
  std::size_t pair = 0;
  AdvanceResult step;
};

/// max over admissible (h_k, h_{k+1}) of 1/J_{k+1}; degenerate pairs are skipped.
inline VScore v_score(const WwlbEngine& e, const WwlbAccumulator& acc, int u, const std::vector<TestPointPair>& pairs) {
  if (pairs.empty()) throw Error(ErrorCode::InvalidArgument, "empty test-point set");
  VScore best;
  bool found = false;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    AdvanceResult r;
    try {
      r = advance(e, acc, u, pairs[i].first, pairs[i].second);
    } catch (const Error& err) {
      if (err.code() == ErrorCode::DegenerateTestPoint || err.code() == ErrorCode::DegenerateRecursion) continue;
      throw;
    }
    if (!(r.j > 0.0) || !std::isfinite(r.j)) continue;
    const double v = 1.0 / r.j;
    if (!found || v > best.v) {
      best.v = v;
      best.j = r.j;
      best.pair = i;
      best.step = std::move(r);
      found = true;
    }
  }
  if (!found) throw Error(ErrorCode::AllTestPointsDegenerate, "no admissible test-point pair");
  return best;
}

struct CeWwlbChoice {
  int control = 0;
  VScore score;
};

/// argmin_u (1-lambda) v(u) + lambda c(u); ties go to the lowest id.
inline CeWwlbChoice ce_wwlb_choose(const WwlbEngine& e, const Scenario& s, const WwlbAccumulator& acc,
                                   const std::vector<TestPointPair>& pairs, double lambda) {
  double best = std::numeric_limits<double>::infinity();
  CeWwlbChoice out;
  bool found = false;
  for (int u = 0; u < s.num_controls(); ++u) {
    VScore vs;
    try {
      vs = v_score(e, acc, u, pairs);
    } catch (const Error& err) {
      if (err.code() == ErrorCode::AllTestPointsDegenerate) continue;
      throw;
    }
    const double score = (1.0 - lambda) * vs.v + lambda * s.controls[u].cost;
    if (score < best) {
      best = score;
      out.control = u;
      out.score = std::move(vs);
      found = true;
    }
  }
  if (!found) throw Error(ErrorCode::AllTestPointsDegenerate, "no control admits a test point");
  return out;
}

struct CeWwlbStep {
  int stage = 0;  // decision stage k+1 (chooses u_k)
  int control = 0;
  std::size_t pair = 0;
  std::string h_k, h_k1;
  double j = 0.0;
  double v = 0.0;
  double bound = 0.0;
};

/// The CE-WWLB score does not depend on the belief, so the whole horizon is planned up front.
inline std::vector<CeWwlbStep> ce_wwlb_plan(const WwlbEngine& e, const Scenario& s,
                                            const std::vector<TestPointPair>& pairs, double lambda) {
  std::vector<CeWwlbStep> plan;
  auto acc = init_accumulator(e, s.initial_control);
  for (int stage = 1; stage <= s.horizon; ++stage) {
    auto c = ce_wwlb_choose(e, s, acc, pairs, lambda);
    const auto& pr = pairs[c.score.pair];
    plan.push_back(CeWwlbStep{stage, c.control, c.score.pair, pr.first.label(), pr.second.label(), c.score.j,
                              c.score.v, wwlb_bound(c.score.j)});
    acc = c.score.step.next;
  }
  return plan;
}

}  // namespace senstrack
