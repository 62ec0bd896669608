#include "secest/kalman.hpp"

#include <Eigen/Eigenvalues>

namespace secest {

KalmanState make_kalman(const LtiSystem& sys, const VectorXd& x0, double p0,
                        double qn, double rn) {
  if (x0.size() != 0 && x0.size() != sys.n)
    throw DimensionError("initial state size mismatch");
  KalmanState ks;
  ks.x_hat = x0.size() ? x0 : VectorXd::Zero(sys.n);
  ks.P = p0 * MatrixXd::Identity(sys.n, sys.n);
  ks.Qn = qn * MatrixXd::Identity(sys.n, sys.n);
  ks.Rn = rn * MatrixXd::Identity(sys.p, sys.p);
  return ks;
}

KalmanState predict(const KalmanState& ks, const LtiSystem& sys, const VectorXd& u) {
  if (ks.x_hat.size() != sys.n || u.size() != sys.m)
    throw DimensionError("predict dimension mismatch");
  KalmanState next = ks;
  next.x_hat = sys.A * ks.x_hat + sys.B * u;
  next.P = sys.A * ks.P * sys.A.transpose() + ks.Qn;
  return next;
}

KalmanState update(const KalmanState& ks, const LtiSystem& sys, const VectorXd& y) {
  if (ks.x_hat.size() != sys.n || y.size() != sys.p)
    throw DimensionError("update dimension mismatch");
  const MatrixXd S = sys.C * ks.P * sys.C.transpose() + ks.Rn;

  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(S);
  if (eig.info() != Eigen::Success ||
      eig.eigenvalues().minCoeff() <= 1e-12 * std::max(1.0, eig.eigenvalues().maxCoeff()))
    throw SingularInnovation("innovation covariance is numerically singular");

  const MatrixXd Sinv = eig.eigenvectors() *
                        eig.eigenvalues().cwiseInverse().asDiagonal() *
                        eig.eigenvectors().transpose();
  const MatrixXd K = ks.P * sys.C.transpose() * Sinv;
  KalmanState next = ks;
  next.x_hat = ks.x_hat + K * (y - sys.C * ks.x_hat);
  next.P = (MatrixXd::Identity(sys.n, sys.n) - K * sys.C) * ks.P;
  next.P = 0.5 * (next.P + next.P.transpose()).eval();
  return next;
}

}  // namespace secest
