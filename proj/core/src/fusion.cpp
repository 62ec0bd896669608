#include "secest/fusion.hpp"

#include <cmath>

namespace secest {

std::string to_string(EstimatorMode mode) {
  switch (mode) {
    case EstimatorMode::KfOnly: return "kf_only";
    case EstimatorMode::SeOnly: return "se_only";
    case EstimatorMode::KfPlusSe: return "kf_plus_se";
  }
  return "unknown";
}

FusionEstimator::FusionEstimator(const LtiSystem& sys, int T, EstimatorMode mode,
                                 KalmanState kf0, SolverConfig cfg)
    : sys_(sys), mode_(mode), kf_(std::move(kf0)), cfg_(cfg), T_(T) {
  if (T < 2) throw DimensionError("window length must be at least 2");
  if (static_cast<long>(sys.p) * T <= sys.n)
    throw DimensionError("window too short: p*T must exceed n");
  if (kf_.x_hat.size() != sys.n) throw DimensionError("filter state size mismatch");
  dm_ = build_decoder_matrices(sys_, T);
  se_fallback_ = kf_.x_hat;
}

FusionStep FusionEstimator::step(int k, const VectorXd& y, const VectorXd& u) {
  if (k != next_k_) throw DimensionError("measurements must arrive in order");
  if (y.size() != sys_.p || u.size() != sys_.m)
    throw DimensionError("step dimension mismatch");
  ++next_k_;

  if (k > 0 && mode_ != EstimatorMode::SeOnly)
    kf_ = predict(kf_, sys_, u_prev_);

  ys_.push_back(y);
  if (static_cast<int>(ys_.size()) > T_) ys_.pop_front();

  FusionStep out;
  out.e_hat = VectorXd::Zero(sys_.p);
  // The decoder needs T past measurements, so the first decoded step is
  // k = T; through k = T-1 the attack estimate stays zero.
  out.window_full = k >= T_;

  DecodeResult dec;
  bool have_decode = false;
  if (mode_ != EstimatorMode::KfOnly && out.window_full) {
    const MeasurementWindow w = MeasurementWindow::from_samples(
        {ys_.begin(), ys_.end()}, {us_.begin(), us_.end()});
    // A clean window needs no attack subtraction; skipping the solver
    // keeps the attack-free fused path identical to the plain filter.
    const bool clean = mode_ == EstimatorMode::KfPlusSe &&
                       residual_projection(dm_, w).cwiseAbs().maxCoeff() <=
                           1e-12 * (1.0 + w.Y.cwiseAbs().maxCoeff());
    if (clean) {
      out.decode_ok = true;
    } else {
      dec = decode(dm_, w, cfg_);
      if (dec.status == SolveStatus::Optimal) {
        out.decode_ok = true;
        have_decode = true;
        out.e_hat = dec.attack.per_step.back();
      } else {
        ++failures_;
      }
    }
  }

  if (mode_ == EstimatorMode::SeOnly) {
    out.x_hat = have_decode
                    ? propagate_state(sys_, dec.x0_hat, T_ - 1,
                                      {us_.begin(), us_.end()})
                    : se_fallback_;
  } else {
    kf_ = update(kf_, sys_, y - out.e_hat);
    out.x_hat = kf_.x_hat;
  }

  u_prev_ = u;
  us_.push_back(u);
  if (static_cast<int>(us_.size()) > T_ - 1) us_.pop_front();
  se_fallback_ = sys_.A * out.x_hat + sys_.B * u;
  return out;
}

RunResult run_estimator(FusionEstimator& est, const std::vector<VectorXd>& ys,
                        const std::vector<VectorXd>& us,
                        const std::vector<VectorXd>& true_states,
                        const std::vector<VectorXd>& true_attacks) {
  if (ys.size() != us.size()) throw DimensionError("one input per measurement");
  const int K = static_cast<int>(ys.size());

  RunResult res;
  res.x_hat.reserve(K);
  res.e_hat.reserve(K);
  for (int k = 0; k < K; ++k) {
    FusionStep s = est.step(k, ys[k], us[k]);
    res.x_hat.push_back(std::move(s.x_hat));
    res.e_hat.push_back(std::move(s.e_hat));
  }

  res.metrics.decode_failures = est.decode_failures();
  if (!true_states.empty()) {
    if (static_cast<int>(true_states.size()) < K)
      throw DimensionError("need a true state per step");
    double acc = 0.0;
    for (int k = 0; k < K; ++k) acc += (res.x_hat[k] - true_states[k]).squaredNorm();
    res.metrics.state_rmse = K > 0 ? std::sqrt(acc / K) : 0.0;
  }
  if (!true_attacks.empty()) {
    if (static_cast<int>(true_attacks.size()) != K)
      throw DimensionError("need a true attack per step");
    const int p = K > 0 ? static_cast<int>(true_attacks.front().size()) : 0;
    res.metrics.attack_error.resize(p, K);
    for (int k = 0; k < K; ++k)
      res.metrics.attack_error.col(k) = res.e_hat[k] - true_attacks[k];
  }
  return res;
}

}  // namespace secest
