#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>

#include "senstrack/error.hpp"
#include "senstrack/model.hpp"

namespace senstrack {

using Belief = VectorXd;

inline Belief predict(const MarkovChain& chain, const Belief& posterior) { return chain.trans * posterior; }

/// diag(p) - p p^T
inline MatrixXd error_covariance(const Belief& p) {
  MatrixXd s = -p * p.transpose();
  s.diagonal() += p;
  return s;
}

/// Clamp negatives to zero and renormalize. Returns the L1 size of the correction.
inline double project_to_simplex(Belief& p) {
  Belief orig = p;
  p = p.cwiseMax(0.0);
  const double s = p.sum();
  if (!(s > 0.0)) throw Error(ErrorCode::ZeroEvidence, "belief has no positive mass");
  p /= s;
  return (p - orig).lpNorm<1>();
}

/// Symmetric solve with a diagonal jitter retry.
inline Eigen::LLT<MatrixXd> factor_innovation(const MatrixXd& s) {
  if (!s.allFinite()) throw Error(ErrorCode::SingularInnovation, "non-finite innovation covariance");
  Eigen::LLT<MatrixXd> llt(s);
  if (llt.info() == Eigen::Success) return llt;
  llt.compute(s + kCovJitter * MatrixXd::Identity(s.rows(), s.cols()));
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::SingularInnovation, "innovation covariance not factorizable after jitter");
  return llt;
}

struct GainTerms {
  MatrixXd sigma;   // Sigma_{k|k-1}
  VectorXd y_pred;  // M p
  MatrixXd mix_cov; // Q-tilde
  MatrixXd gain;    // n x d
  MatrixXd b;       // M Sigma
};

inline GainTerms compute_gain(const Belief& p, const ObservationModel& model) {
  GainTerms t;
  t.sigma = error_covariance(p);
  const MatrixXd& m = model.means();
  t.y_pred = m * p;
  t.mix_cov = model.mixture_cov(p);
  if (model.dim() == 0) {
    t.gain = MatrixXd::Zero(p.size(), 0);
    t.b = MatrixXd::Zero(0, p.size());
    return t;
  }
  t.b = m * t.sigma;
  MatrixXd s = t.b * m.transpose() + t.mix_cov;
  auto llt = factor_innovation(s);
  t.gain = llt.solve(t.b).transpose();
  return t;
}

struct FilterState {
  Belief prior;       // p_{k|k-1}
  Belief posterior;   // p_{k|k}
  Belief prediction;  // p_{k+1|k}, filled when a chain is supplied
  MatrixXd pred_cov;
  MatrixXd post_cov;
  MatrixXd gain;
  VectorXd pred_obs;
  MatrixXd mix_cov;
  double correction = 0.0;  // L1 size of the clamp/renormalize step
};

inline FilterState kalman_update(const Belief& prediction, const ObservationModel& model, const VectorXd& y) {
  if (y.size() != model.dim()) throw Error(ErrorCode::DimensionMismatch, "observation dimension");
  FilterState st;
  st.prior = prediction;
  auto t = compute_gain(prediction, model);
  st.pred_cov = t.sigma;
  st.pred_obs = t.y_pred;
  st.mix_cov = t.mix_cov;
  st.gain = t.gain;
  Belief post = prediction;
  if (model.dim() > 0) post += t.gain * (y - t.y_pred);
  st.correction = project_to_simplex(post);
  st.posterior = post;
  st.post_cov = error_covariance(post);
  st.prediction = post;
  return st;
}

inline FilterState kalman_update(const MarkovChain& chain, const Belief& prediction, const ObservationModel& model,
                                 const VectorXd& y) {
  auto st = kalman_update(prediction, model, y);
  st.prediction = predict(chain, st.posterior);
  return st;
}

/// Posterior r(y) p / 1^T r(y) p, computed in log space.
inline Belief bayes_posterior(const Belief& prediction, const ObservationModel& model, const VectorXd& y) {
  if (y.size() != model.dim()) throw Error(ErrorCode::DimensionMismatch, "observation dimension");
  if (model.dim() == 0) return prediction;
  VectorXd ll = model.log_likelihoods(y);
  double mx = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < ll.size(); ++i)
    if (prediction(i) > 0.0) mx = std::max(mx, ll(i));
  if (!std::isfinite(mx)) throw Error(ErrorCode::ZeroEvidence, "all log-likelihoods are -inf");
  Belief w(prediction.size());
  for (Eigen::Index i = 0; i < ll.size(); ++i)
    w(i) = prediction(i) > 0.0 ? prediction(i) * std::exp(ll(i) - mx) : 0.0;
  const double s = w.sum();
  if (!(s > 0.0)) throw Error(ErrorCode::ZeroEvidence, "evidence underflow");
  return w / s;
}

/// Phi(p, u, y) = P r(y,u) p / 1^T r(y,u) p
inline Belief bayes_update(const MarkovChain& chain, const Belief& prediction, const ObservationModel& model,
                           const VectorXd& y) {
  return chain.trans * bayes_posterior(prediction, model, y);
}

}  // namespace senstrack
