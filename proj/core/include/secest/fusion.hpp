#pragma once

#include <deque>
#include <string>
#include <vector>

#include "secest/decoder.hpp"
#include "secest/kalman.hpp"
#include "secest/lti.hpp"

namespace secest {

enum class EstimatorMode { KfOnly, SeOnly, KfPlusSe };

std::string to_string(EstimatorMode mode);

struct FusionStep {
  VectorXd x_hat;  // estimate of x(k) from data through step k
  VectorXd e_hat;  // attack estimate at step k
  bool window_full = false;
  bool decode_ok = false;
};

/// Online estimator combining the sparse-attack decoder with a Kalman
/// filter. From step k = T onward, each step decodes the trailing
/// T-sample window y(k-T+1..k), takes the decoded attack's final slice
/// e_hat(k), and feeds the cleaned measurement y - e_hat to the filter.
/// Before that, and in KfOnly mode, e_hat is zero. SeOnly skips the
/// filter and returns the decoded window state propagated to the current
/// step; on solver failure any mode falls back to e_hat = 0 and counts
/// the event.
class FusionEstimator {
 public:
  FusionEstimator(const LtiSystem& sys, int T, EstimatorMode mode, KalmanState kf0,
                  SolverConfig cfg = {});

  /// Measurements must arrive in order; u is the input applied at step k
  /// (it shapes the prediction of step k+1).
  FusionStep step(int k, const VectorXd& y, const VectorXd& u);

  const KalmanState& kalman() const { return kf_; }
  EstimatorMode mode() const { return mode_; }
  int window() const { return T_; }
  int decode_failures() const { return failures_; }

 private:
  LtiSystem sys_;
  DecoderMatrices dm_;
  EstimatorMode mode_;
  KalmanState kf_;
  SolverConfig cfg_;
  std::deque<VectorXd> ys_;  // last T measurements
  std::deque<VectorXd> us_;  // last T-1 inputs
  VectorXd u_prev_;
  VectorXd se_fallback_;  // one-step propagation of the last estimate
  int failures_ = 0;
  int next_k_ = 0;
  int T_;
};

struct RunMetrics {
  double state_rmse = 0.0;
  MatrixXd attack_error;  // p x K, signed e_hat - e_true
  int decode_failures = 0;
};

struct RunResult {
  std::vector<VectorXd> x_hat;
  std::vector<VectorXd> e_hat;
  RunMetrics metrics;
};

/// Folds step over a measurement/input sequence. Truth and true attacks
/// are optional; when given, the RMSE and the signed attack error map
/// are filled in.
RunResult run_estimator(FusionEstimator& est, const std::vector<VectorXd>& ys,
                        const std::vector<VectorXd>& us,
                        const std::vector<VectorXd>& true_states = {},
                        const std::vector<VectorXd>& true_attacks = {});

}  // namespace secest
