#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "senstrack/cost.hpp"
#include "senstrack/error.hpp"
#include "senstrack/estimator.hpp"
#include "senstrack/model.hpp"
#include "senstrack/parallel.hpp"
#include "senstrack/strategy.hpp"
#include "senstrack/wwlb.hpp"

namespace senstrack {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t episode_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master ^ splitmix64(index + 1));
}

inline std::uint64_t hash_observation(const VectorXd& y) {
  std::uint64_t h = 1469598103934665603ull;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    std::uint64_t bits;
    const double v = y(i);
    std::memcpy(&bits, &v, sizeof bits);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xFF;
      h *= 1099511628211ull;
    }
  }
  return h;
}

template <class Gen>
int sample_categorical(const VectorXd& p, Gen& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double r = unif(rng);
  double c = 0.0;
  int last = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) <= 0.0) continue;
    c += p(i);
    last = static_cast<int>(i);
    if (r < c) return last;
  }
  return last;
}

inline int argmax_lowest(const VectorXd& p) {
  int best = 0;
  for (Eigen::Index i = 1; i < p.size(); ++i)
    if (p(i) > p(best)) best = static_cast<int>(i);
  return best;
}

struct EpisodeOptions {
  bool bayes_metrics = false;  // score the Bayes posterior instead of the Kalman-like one
};

/// Stage k = 1..L entries are stored at index k-1.
struct EpisodeRecord {
  std::vector<int> states;
  std::vector<int> controls;
  std::vector<std::uint64_t> obs_hash;
  std::vector<Belief> posterior;
  std::vector<Belief> bayes_prediction;
  std::vector<double> trace;
  std::vector<int> detected;
  std::vector<double> energy;
  std::vector<double> stage_cost;
  double max_correction = 0.0;
  std::uint64_t seed = 0;
};

inline EpisodeRecord run_episode(const Scenario& s, const Strategy& st, Rng& rng, const EpisodeOptions& opt = {}) {
  const int L = s.horizon;
  EpisodeRecord rec;
  int x = sample_categorical(s.chain.prior, rng);
  VectorXd y = s.model(s.initial_control).sample(x, rng);
  auto kf = kalman_update(s.chain.prior, s.model(s.initial_control), y);
  Belief kalman_post = kf.posterior;
  rec.max_correction = kf.correction;
  Belief bayes_post = bayes_posterior(s.chain.prior, s.model(s.initial_control), y);
  Belief bayes_pred = s.chain.trans * bayes_post;

  std::optional<WwlbAccumulator> acc;
  const auto* ce = std::get_if<CeWwlb>(&st.kind);
  if (ce) acc = init_accumulator(*ce->engine, s.initial_control);

  for (int k = 1; k <= L; ++k) {
    int u;
    if (ce) {
      auto c = ce_wwlb_choose(*ce->engine, s, *acc, ce->pairs, s.lambda);
      u = c.control;
      acc = c.score.step.next;
    } else {
      u = decide(st, bayes_pred, k, s);
    }
    rec.bayes_prediction.push_back(bayes_pred);
    x = sample_categorical(VectorXd(s.chain.trans.col(x)), rng);
    const auto& model = s.model(u);
    y = model.sample(x, rng);

    kf = kalman_update(predict(s.chain, kalman_post), model, y);
    kalman_post = kf.posterior;
    rec.max_correction = std::max(rec.max_correction, kf.correction);
    bayes_post = bayes_posterior(bayes_pred, model, y);
    bayes_pred = s.chain.trans * bayes_post;

    const Belief& est = opt.bayes_metrics ? bayes_post : kalman_post;
    const double tr = 1.0 - est.squaredNorm();
    rec.states.push_back(x);
    rec.controls.push_back(u);
    rec.obs_hash.push_back(hash_observation(y));
    rec.posterior.push_back(est);
    rec.trace.push_back(tr);
    rec.detected.push_back(argmax_lowest(est) == x ? 1 : 0);
    rec.energy.push_back(s.energy(u));
    rec.stage_cost.push_back((1.0 - s.lambda) * tr + s.lambda * s.controls[u].cost);
  }
  return rec;
}

inline EpisodeRecord run_episode(const Scenario& s, const Strategy& st, std::uint64_t seed,
                                 const EpisodeOptions& opt = {}) {
  Rng rng(seed);
  auto r = run_episode(s, st, rng, opt);
  r.seed = seed;
  return r;
}

struct MetricsReport {
  std::string strategy;
  double lambda = 0.0;
  int runs = 0;
  int horizon = 0;
  std::uint64_t seed = 0;
  double amse = 0.0, amse_ci = 0.0;
  double adp = 0.0, adp_ci = 0.0;
  double aec = 0.0, aec_ci = 0.0;
  double avg_cost = 0.0;
  std::vector<double> sensor_share;  // fraction of requested samples per sensor
  double max_correction = 0.0;
};

inline double ci_halfwidth(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return 1.96 * std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
}

inline MetricsReport monte_carlo(const Scenario& s, const Strategy& strategy, int runs, std::uint64_t seed,
                                 const EpisodeOptions& opt = {}) {
  if (runs < 1) throw Error(ErrorCode::InvalidArgument, "runs must be >= 1");
  const Strategy st = resolve_schedule(strategy, s);
  const std::size_t K = static_cast<std::size_t>(runs);
  const std::size_t ns = s.sensors.size();
  std::vector<double> mse(K), det(K), en(K), cost(K), corr(K);
  std::vector<std::vector<double>> samples(K, std::vector<double>(ns, 0.0));
  parallel_for(K, [&](std::size_t e) {
    auto rec = run_episode(s, st, episode_seed(seed, e), opt);
    double a = 0, b = 0, c = 0, d = 0;
    for (int k = 0; k < s.horizon; ++k) {
      a += rec.trace[k];
      b += rec.detected[k];
      c += rec.energy[k];
      d += s.controls[rec.controls[k]].cost;
      if (const auto& al = s.controls[rec.controls[k]].allocation; al && ns)
        for (std::size_t l = 0; l < ns; ++l) samples[e][l] += (*al)[l];
    }
    mse[e] = a / s.horizon;
    det[e] = b / s.horizon;
    en[e] = c / s.horizon;
    cost[e] = d / s.horizon;
    corr[e] = rec.max_correction;
  });
  MetricsReport r;
  r.strategy = strategy.label;
  r.lambda = s.lambda;
  r.runs = runs;
  r.horizon = s.horizon;
  r.seed = seed;
  std::vector<double> totals(ns, 0.0);
  for (std::size_t e = 0; e < K; ++e) {
    r.amse += mse[e];
    r.adp += det[e];
    r.aec += en[e];
    r.avg_cost += cost[e];
    r.max_correction = std::max(r.max_correction, corr[e]);
    for (std::size_t l = 0; l < ns; ++l) totals[l] += samples[e][l];
  }
  r.amse /= runs;
  r.adp /= runs;
  r.aec /= runs;
  r.avg_cost /= runs;
  r.amse_ci = ci_halfwidth(mse, r.amse);
  r.adp_ci = ci_halfwidth(det, r.adp);
  r.aec_ci = ci_halfwidth(en, r.aec);
  double all = 0.0;
  for (double t : totals) all += t;
  for (double t : totals) r.sensor_share.push_back(all > 0.0 ? t / all : 0.0);
  return r;
}

struct StrategyFactory {
  std::string name;
  std::function<Strategy(const Scenario&)> make;
};

/// One report per (lambda, strategy), ordered by lambda then strategy; the seed is shared.
inline std::vector<MetricsReport> sweep_lambda(const Scenario& s, const std::vector<StrategyFactory>& family,
                                               const std::vector<double>& lambdas, int runs, std::uint64_t seed) {
  std::vector<MetricsReport> rows;
  for (double l : lambdas) {
    const Scenario sl = s.with_lambda(l);
    for (const auto& f : family) {
      auto r = monte_carlo(sl, f.make(sl), runs, seed);
      r.strategy = f.name;
      rows.push_back(std::move(r));
    }
  }
  return rows;
}

inline std::vector<double> default_lambda_grid() {
  std::vector<double> g;
  for (int i = 0; i <= 10; ++i) g.push_back(i / 10.0);
  return g;
}

struct ScenarioOverrides {
  std::optional<int> states;
  std::optional<int> budget;
  std::optional<int> horizon;
  std::optional<double> lambda;
  std::optional<double> self_transition;
};

/// Self-transition a on the diagonal, the remainder spread uniformly; uniform prior.
inline MarkovChain sticky_chain(int n, double a) {
  MatrixXd t = MatrixXd::Constant(n, n, (1.0 - a) / (n - 1));
  t.diagonal().setConstant(a);
  return validate_chain(t, VectorXd::Constant(n, 1.0 / n));
}

/// Two states, scalar kernels: ids 0..4 are Case I, II, III and a crossing pair of Case IV
/// controls crossing at p* = 1/3.
inline Scenario two_state_scalar_scenario(const ScenarioOverrides& o = {}) {
  if (o.states && *o.states != 2) throw Error(ErrorCode::InvalidArgument, "two_state_scalar has 2 states");
  auto k = [](double m, double v) { return GaussianKernel{VectorXd::Constant(1, m), MatrixXd::Constant(1, 1, v)}; };
  std::vector<std::vector<GaussianKernel>> kernels = {
      {k(0, 1), k(0, 1)},
      {k(0, 0.25), k(0, 1)},
      {k(0, 1), k(2, 1)},
      {k(0, 3), k(2, 1)},
      {k(0, 1), k(2, 2)},
  };
  std::vector<double> costs = {0.05, 0.2, 0.4, 0.6, 0.6};
  return make_explicit_scenario(sticky_chain(2, o.self_transition.value_or(0.9)), costs, kernels,
                                o.lambda.value_or(0.5), o.horizon.value_or(5));
}

/// Three AR(1) sensors with reception costs (0.585, 0.776, 1). The cheapest one barely separates
/// the states; the other two separate complementary groups of states.
inline std::vector<SensorSpec> body_sensors(int n) {
  SensorSpec ecg{"ecg", VectorXd(n), VectorXd(n), 0.5, 0.1, 0.585};
  SensorSpec acc{"acc", VectorXd(n), VectorXd(n), 0.5, 0.1, 0.776};
  SensorSpec gyro{"gyro", VectorXd(n), VectorXd(n), 0.5, 0.1, 1.0};
  for (int i = 0; i < n; ++i) {
    ecg.mu(i) = 0.02 * i;
    ecg.sigma2(i) = 1.0;
    acc.mu(i) = 1.0 * (i / 2);
    acc.sigma2(i) = 0.5;
    gyro.mu(i) = 1.0 * (i % 2);
    gyro.sigma2(i) = 0.5;
  }
  return {ecg, acc, gyro};
}

inline Scenario body_sensing_scenario(const ScenarioOverrides& o = {}) {
  const int n = o.states.value_or(4);
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 states");
  return make_sensor_scenario(sticky_chain(n, o.self_transition.value_or(0.9)), body_sensors(n),
                              o.budget.value_or(12), false, std::nullopt, o.lambda.value_or(0.5),
                              o.horizon.value_or(5));
}

inline Scenario default_scenario(const std::string& kind, const ScenarioOverrides& o = {}) {
  if (kind == "two_state_scalar") return two_state_scalar_scenario(o);
  if (kind == "body_sensing_like") return body_sensing_scenario(o);
  throw Error(ErrorCode::InvalidArgument, "unknown scenario kind " + kind);
}

}  // namespace senstrack
