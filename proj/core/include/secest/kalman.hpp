#pragma once

#include <Eigen/Dense>

#include "secest/lti.hpp"

namespace secest {

/// Kalman filter state. The covariance is re-symmetrized after every
/// update; Qn and Rn ride along so predict/update need no extra context.
struct KalmanState {
  VectorXd x_hat;
  MatrixXd P;
  MatrixXd Qn;
  MatrixXd Rn;
};

/// x_hat = x0 (zeros when empty), P = p0 * I, Qn = qn * I, Rn = rn * I.
KalmanState make_kalman(const LtiSystem& sys, const VectorXd& x0 = VectorXd(),
                        double p0 = 1.0, double qn = 1e-6, double rn = 1e-4);

/// Time update: x_hat <- A x_hat + B u, P <- A P A' + Qn.
KalmanState predict(const KalmanState& ks, const LtiSystem& sys, const VectorXd& u);

/// Measurement update with gain K = P C' (C P C' + Rn)^-1. Throws
/// SingularInnovation when the innovation covariance is numerically
/// singular.
KalmanState update(const KalmanState& ks, const LtiSystem& sys, const VectorXd& y);

}  // namespace secest
