#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "senstrack/sim.hpp"
#include "senstrack/wwlb.hpp"

using namespace senstrack;

namespace {

struct Instance {
  Scenario s;
  oracle::WwlbOracle o;
};

/// Random positive chain with scalar Gaussian kernels for three controls.
Instance random_instance(int n, std::mt19937_64& rng, int horizon = 6) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto chain = validate_chain(oracle::random_positive_chain(n, rng, 0.05), oracle::random_simplex(n, rng, 0.2));
  std::vector<std::vector<GaussianKernel>> kernels;
  oracle::WwlbOracle o{chain.trans, chain.prior, {}};
  for (int c = 0; c < 3; ++c) {
    std::vector<GaussianKernel> ks;
    std::vector<std::pair<double, double>> ok;
    for (int i = 0; i < n; ++i) {
      const double m = 3.0 * u(rng) - 1.5, v = 0.3 + 1.5 * u(rng);
      ks.push_back({VectorXd::Constant(1, m), MatrixXd::Constant(1, 1, v)});
      ok.emplace_back(m, v);
    }
    kernels.push_back(ks);
    o.kernels.push_back(ok);
  }
  return {make_explicit_scenario(chain, {0.2, 0.5, 0.8}, kernels, 0.5, horizon), o};
}

double xi_numeric(double m1, double v1, double m2, double v2) {
  return oracle::integrate([&](double y) { return std::sqrt(oracle::gauss_pdf(y, m1, v1) * oracle::gauss_pdf(y, m2, v2)); });
}

}  // namespace

TEST(TestPoints, PermutationsAndValidity) {
  EXPECT_EQ(permutation_test_points(3).size(), 5u);
  EXPECT_EQ(permutation_test_points(4).size(), 23u);
  for (const auto& t : permutation_test_points(4)) {
    EXPECT_TRUE(t.bijective);
    EXPECT_FALSE(t.is_zero());
    EXPECT_FALSE(t.negated().bijective);
  }
  auto s = TestPoint::scalar_shift(3, 1);
  EXPECT_FALSE(s.valid);
  EXPECT_EQ(s.target(2), -1);
  EXPECT_EQ(s.target(1), 2);
  EXPECT_EQ(TestPoint::make({1, -1}).label(), "1;-1");
}

TEST(Bhattacharyya, ClosedFormMatchesIntegration) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    const double m1 = 4 * u(rng) - 2, m2 = 4 * u(rng) - 2, v1 = 0.1 + 2 * u(rng), v2 = 0.1 + 2 * u(rng);
    GaussianKernel a{VectorXd::Constant(1, m1), MatrixXd::Constant(1, 1, v1)};
    GaussianKernel b{VectorXd::Constant(1, m2), MatrixXd::Constant(1, 1, v2)};
    EXPECT_NEAR(bhattacharyya(a, b), xi_numeric(m1, v1, m2, v2), 1e-10);
  }
  GaussianKernel a{VectorXd::Zero(1), MatrixXd::Identity(1, 1)};
  EXPECT_DOUBLE_EQ(bhattacharyya(a, a), 1.0);
}

TEST(Bhattacharyya, BivariateMatchesIntegration) {
  std::mt19937_64 rng(42);
  for (int rep = 0; rep < 5; ++rep) {
    GaussianKernel a{VectorXd::Random(2), oracle::random_spd(2, rng, 0.4)};
    GaussianKernel b{VectorXd::Random(2), oracle::random_spd(2, rng, 0.4)};
    const double num = oracle::integrate_2d(
        [&](double y1, double y2) {
          VectorXd y(2);
          y << y1, y2;
          return std::sqrt(oracle::mvn_pdf(y, a.mean, a.cov) * oracle::mvn_pdf(y, b.mean, b.cov));
        },
        -12, 12, 800);
    EXPECT_NEAR(bhattacharyya(a, b), num, 1e-6);
  }
}

TEST(Chernoff, MatchesIntegration) {
  GaussianKernel a{VectorXd::Constant(1, 0.3), MatrixXd::Constant(1, 1, 0.7)};
  GaussianKernel b{VectorXd::Constant(1, -0.5), MatrixXd::Constant(1, 1, 1.9)};
  for (double s : {0.2, 0.5, 0.8}) {
    const double num = oracle::integrate([&](double y) {
      return std::pow(oracle::gauss_pdf(y, 0.3, 0.7), s) * std::pow(oracle::gauss_pdf(y, -0.5, 1.9), 1 - s);
    });
    EXPECT_NEAR(chernoff_exponent(a, b, s), -std::log(num), 1e-10);
  }
  EXPECT_THROW(chernoff_exponent(a, b, 1.0), Error);
}

TEST(Engine, ExactModeMatchesDefiningExpectations) {
  std::mt19937_64 rng(43);
  for (int rep = 0; rep < 6; ++rep) {
    const int n = 2 + rep % 3;
    auto inst = random_instance(n, rng);
    WwlbEngine e(inst.s, WwlbMode::Exact);
    auto tps = permutation_test_points(n);
    tps.push_back(TestPoint::scalar_shift(n, 1));
    tps.push_back(TestPoint::scalar_shift(n, -1));
    for (int k : {0, 1, 3}) {
      const auto& hk = tps[rng() % tps.size()];
      const auto& hk1 = tps[rng() % tps.size()];
      const int up = static_cast<int>(rng() % 3), u = static_cast<int>(rng() % 3);
      auto g = e.g_entries(k, up, u, hk, hk1);
      auto want = inst.o.g(k, up, u, hk.offsets, hk1.offsets);
      EXPECT_NEAR(g.g_next, want.next, 1e-8 * std::max(1.0, std::abs(want.next)));
      EXPECT_NEAR(g.g_cur, want.cur, 1e-8 * std::max(1.0, std::abs(want.cur)));
      EXPECT_NEAR(g.g_cross, want.cross, 1e-8 * std::max(1.0, std::abs(want.cross)));
    }
  }
}

TEST(Engine, PaperModeLogTermsAndCrossMatch) {
  std::mt19937_64 rng(44);
  for (int rep = 0; rep < 4; ++rep) {
    const int n = 2 + rep % 3;
    auto inst = random_instance(n, rng);
    WwlbEngine paper(inst.s, WwlbMode::Paper);
    const auto tps = permutation_test_points(n);
    const std::vector<int> zero(n, 0);
    for (int k : {0, 2}) {
      const auto& hk = tps[rng() % tps.size()];
      const auto& hk1 = tps[rng() % tps.size()];
      const auto z = TestPoint::zero(n);
      EXPECT_NEAR(std::exp(paper.eta(k, hk1, z, 1)), inst.o.e_l(k, hk1.offsets, 0.5, zero, 0.0, 1), 1e-10);
      EXPECT_NEAR(std::exp(paper.eta(k, hk1, hk1.negated(), 1)),
                  inst.o.e_l(k, hk1.offsets, 0.5, hk1.negated().offsets, 0.5, 1), 1e-10);
      EXPECT_NEAR(std::exp(paper.rho(k, hk, z, 0)), inst.o.e_k(k, hk.offsets, 0.5, zero, 0.0, 0), 1e-10);
      EXPECT_NEAR(std::exp(paper.zeta(k, hk, hk1, 0, 2)), inst.o.e_cross(k, hk.offsets, hk1.offsets, 0, 2), 1e-10);
      auto g = paper.g_entries(k, 0, 2, hk, hk1);
      EXPECT_NEAR(g.g_cross, inst.o.g(k, 0, 2, hk.offsets, hk1.offsets).cross, 1e-8);
    }
  }
}

TEST(Engine, PaperDiagonalDiffersByShiftMass) {
  // The closed-form diagonal assumes E L+ = E L- = 1. Under x -> x - h(x) semantics the negated map of a
  // non-trivial permutation leaves the state set for some x, so the two modes differ by
  // (2 - E L+ - E L-) / (E sqrt L+)^2.
  std::mt19937_64 rng(45);
  auto inst = random_instance(3, rng);
  WwlbEngine paper(inst.s, WwlbMode::Paper), exact(inst.s, WwlbMode::Exact);
  const std::vector<int> zero(3, 0);
  for (const auto& h : permutation_test_points(3)) {
    const auto gp = paper.g_entries(1, 0, 1, h, h);
    const auto ge = exact.g_entries(1, 0, 1, h, h);
    const double lp = inst.o.e_l(1, h.offsets, 1.0, zero, 0.0, 1);
    const double lm = inst.o.e_l(1, h.negated().offsets, 1.0, zero, 0.0, 1);
    const double half = inst.o.e_l(1, h.offsets, 0.5, zero, 0.0, 1);
    EXPECT_NEAR(lp, 1.0, 1e-10);
    EXPECT_LT(lm, 1.0 - 1e-6);
    EXPECT_NEAR(gp.g_next - ge.g_next, (2.0 - lp - lm) / (half * half), 1e-8);
  }
}

TEST(Engine, RecursionMatchesOracleRecursion) {
  std::mt19937_64 rng(46);
  auto inst = random_instance(3, rng);
  WwlbEngine e(inst.s, WwlbMode::Exact);
  const auto tps = permutation_test_points(3);
  auto acc = init_accumulator(e, inst.s.initial_control);
  double a = 0.0, last_cross = 0.0;
  int u_prev = inst.s.initial_control;
  for (int k = 0; k < 5; ++k) {
    const int u = k % 3;
    const auto& hk = tps[k % tps.size()];
    const auto& hk1 = tps[(k + 1) % tps.size()];
    auto r = advance(e, acc, u, hk, hk1);
    auto g = inst.o.g(k, u_prev, u, hk.offsets, hk1.offsets);
    const double a_next = g.cur - (k == 0 ? 0.0 : last_cross * last_cross / a);
    const double j = g.next - g.cross * g.cross / a_next;
    EXPECT_NEAR(r.j, j, 1e-8 * std::max(1.0, std::abs(j)));
    a = a_next;
    last_cross = g.cross;
    u_prev = u;
    acc = r.next;
  }
  EXPECT_EQ(acc.stage, 5);
  EXPECT_EQ(acc.committed.size(), 6u);
}

TEST(Engine, StaticUninformativeBoundIsPriorVariance) {
  MatrixXd t = MatrixXd::Identity(2, 2);
  auto chain = validate_chain(t, VectorXd::Constant(2, 0.5));
  GaussianKernel k{VectorXd::Zero(1), MatrixXd::Identity(1, 1)};
  auto s = make_explicit_scenario(chain, {0.1}, {{k, k}}, 0.5, 3);
  WwlbEngine e(s, WwlbMode::Exact);
  EXPECT_NEAR(wwlb_bound(e.j0(0, TestPoint::scalar_shift(2, 1))), 0.25, 1e-15);
  EXPECT_NEAR(wwlb_bound(e.j0(0, TestPoint::scalar_shift(2, -1))), 0.25, 1e-15);
}

TEST(Engine, DegenerateAndErrors) {
  std::mt19937_64 rng(47);
  auto inst = random_instance(2, rng);
  WwlbEngine e(inst.s, WwlbMode::Paper);
  const auto z = TestPoint::zero(2);
  EXPECT_DOUBLE_EQ(e.eta(0, z, z, 0), 0.0);
  EXPECT_THROW(wwlb_bound(0.0), Error);
  auto acc = init_accumulator(e, 0);
  EXPECT_THROW(v_score(e, acc, 0, {{z, z}}), Error);
  EXPECT_THROW(v_score(e, acc, 0, {}), Error);
}

TEST(CeWwlb, CostOnlyEndpointPicksCheapest) {
  std::mt19937_64 rng(48);
  auto inst = random_instance(3, rng);
  WwlbEngine e(inst.s, WwlbMode::Paper);
  auto pairs = all_pairs(permutation_test_points(3));
  for (const auto& step : ce_wwlb_plan(e, inst.s, pairs, 1.0)) EXPECT_EQ(step.control, 0);
}

TEST(CeWwlb, PureBoundRankingIgnoresCosts) {
  std::mt19937_64 rng(49);
  auto inst = random_instance(3, rng);
  auto pairs = all_pairs(permutation_test_points(3));
  WwlbEngine e(inst.s, WwlbMode::Paper);
  auto scaled = inst.s;
  for (auto& c : scaled.controls) c.cost *= 0.3;
  const auto a = ce_wwlb_plan(e, inst.s, pairs, 0.0);
  const auto b = ce_wwlb_plan(e, scaled, pairs, 0.0);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].control, b[i].control);
    EXPECT_GT(a[i].bound, 0.0);
  }
}

TEST(CeWwlb, ChosenScoreIsMinimal) {
  std::mt19937_64 rng(50);
  auto inst = random_instance(2, rng);
  WwlbEngine e(inst.s, WwlbMode::Exact);
  auto pairs = all_pairs({TestPoint::scalar_shift(2, 1), TestPoint::scalar_shift(2, -1)});
  auto acc = init_accumulator(e, inst.s.initial_control);
  auto c = ce_wwlb_choose(e, inst.s, acc, pairs, 0.4);
  const double chosen = 0.6 * c.score.v + 0.4 * inst.s.controls[c.control].cost;
  for (int u = 0; u < inst.s.num_controls(); ++u) {
    auto vs = v_score(e, acc, u, pairs);
    EXPECT_GE(0.6 * vs.v + 0.4 * inst.s.controls[u].cost, chosen - 1e-15);
  }
}
