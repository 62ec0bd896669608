#include "secest/quadrotor.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace secest {

QuadrotorModel build_quadrotor(const QuadrotorParams& params) {
  if (params.dt <= 0.0) throw DimensionError("sample period must be positive");
  if (params.tau <= 0.0) throw DimensionError("angle time constant must be positive");

  const int n = QuadrotorModel::kStates;
  const int m = QuadrotorModel::kInputs;
  MatrixXd Ac = MatrixXd::Zero(n, n);
  MatrixXd Bc = MatrixXd::Zero(n, m);
  for (int axis = 0; axis < 2; ++axis) {  // x: states 0..3, y: states 4..7
    const int o = 4 * axis;
    Ac(o + 0, o + 1) = 1.0;
    Ac(o + 1, o + 2) = params.gravity;
    Ac(o + 2, o + 3) = 1.0;
    Ac(o + 3, o + 3) = -1.0 / params.tau;
    Bc(o + 3, axis) = params.kappa / params.tau;
  }
  Ac(8, 9) = 1.0;
  Bc(9, 2) = params.thrust_gain;

  MatrixXd aug = MatrixXd::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = Ac;
  aug.topRightCorner(n, m) = Bc;
  const MatrixXd expm = (aug * params.dt).exp();

  QuadrotorModel model;
  model.A0 = expm.topLeftCorner(n, n);
  model.B = expm.topRightCorner(n, m);
  model.params = params;

  if (Eigen::ColPivHouseholderQR<MatrixXd>(controllability_matrix(model.A0, model.B))
          .rank() != n)
    throw DesignError("quadrotor parameterization is uncontrollable");
  return model;
}

MatrixXd controllability_matrix(const MatrixXd& A, const MatrixXd& B) {
  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(B.cols());
  MatrixXd ctrb(n, n * m);
  MatrixXd col = B;
  for (int k = 0; k < n; ++k) {
    ctrb.middleCols(k * m, m) = col;
    col = A * col;
  }
  return ctrb;
}

MeasurementSelection select_measurements(int n_y) {
  if (n_y < 3 || n_y > QuadrotorModel::kStates)
    throw ConfigError("n_y must lie in [3, 10]");
  static const std::vector<int> order = {0, 4, 8, 1, 5, 2, 6, 9, 3, 7};
  return select_measurements(
      std::vector<int>(order.begin(), order.begin() + n_y));
}

MeasurementSelection select_measurements(const std::vector<int>& indices) {
  const int n = QuadrotorModel::kStates;
  if (indices.size() < 3 || static_cast<int>(indices.size()) > n)
    throw ConfigError("measurement selection must have 3 to 10 rows");
  if (indices[0] != 0 || indices[1] != 4 || indices[2] != 8)
    throw ConfigError("positions (states 0, 4, 8) must be measured first");
  std::vector<int> sorted = indices;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i] < 0 || sorted[i] >= n) throw ConfigError("state index out of range");
    if (i > 0 && sorted[i] == sorted[i - 1]) throw ConfigError("duplicate state index");
  }
  MeasurementSelection sel;
  sel.indices = indices;
  sel.C = MatrixXd::Zero(static_cast<int>(indices.size()), n);
  for (std::size_t r = 0; r < indices.size(); ++r) sel.C(r, indices[r]) = 1.0;
  return sel;
}

MatrixXd solve_dare(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Qc,
                    const MatrixXd& Rc, double tol, int max_iters) {
  const int n = static_cast<int>(A.rows());
  if (B.rows() != n || Qc.rows() != n || Qc.cols() != n || Rc.rows() != B.cols() ||
      Rc.cols() != B.cols())
    throw DimensionError("Riccati dimension mismatch");
  MatrixXd P = Qc;
  for (int it = 0; it < max_iters; ++it) {
    const MatrixXd BtP = B.transpose() * P;
    const MatrixXd gain = (Rc + BtP * B).ldlt().solve(BtP * A);
    MatrixXd next = Qc + A.transpose() * P * A -
                    (A.transpose() * BtP.transpose()) * gain;
    next = 0.5 * (next + next.transpose()).eval();
    const double diff = (next - P).cwiseAbs().maxCoeff();
    P = next;
    if (diff <= tol) return P;
  }
  throw DesignError("Riccati iteration did not converge");
}

namespace {

void attach_report(FeedbackDesign& fd, const MatrixXd& B,
                   const std::optional<MatrixXd>& meas) {
  if (!meas) return;
  fd.report = correctability_report(LtiSystem::make(fd.A_closed, B, *meas));
}

}  // namespace

FeedbackDesign lqr_gain(const MatrixXd& A0, const MatrixXd& B, const MatrixXd& Qc,
                        const MatrixXd& Rc, const std::optional<MatrixXd>& meas) {
  const MatrixXd P = solve_dare(A0, B, Qc, Rc);
  FeedbackDesign fd;
  fd.kind = DesignKind::Lqr;
  fd.G = -(Rc + B.transpose() * P * B).ldlt().solve(B.transpose() * P * A0);
  fd.A_closed = A0 + B * fd.G;
  fd.achieved = Eigen::EigenSolver<MatrixXd>(fd.A_closed).eigenvalues();
  attach_report(fd, B, meas);
  return fd;
}

FeedbackDesign lqr_gain(const QuadrotorModel& model, const MatrixXd& Qc,
                        const MatrixXd& Rc, const std::optional<MatrixXd>& meas) {
  return lqr_gain(model.A0, model.B, Qc, Rc, meas);
}

MatrixXd default_lqr_Qc() {
  VectorXd d = VectorXd::Ones(QuadrotorModel::kStates);
  for (int i : QuadrotorModel::kPositions) d(i) = 10.0;
  return d.asDiagonal();
}

MatrixXd default_lqr_Rc() {
  return MatrixXd::Identity(QuadrotorModel::kInputs, QuadrotorModel::kInputs);
}

FeedbackDesign place_poles(const MatrixXd& A0, const MatrixXd& B,
                           const VectorXd& poles,
                           const std::optional<MatrixXd>& meas) {
  const int n = static_cast<int>(A0.rows());
  const int m = static_cast<int>(B.cols());
  if (A0.cols() != n || B.rows() != n) throw DimensionError("system dimension mismatch");
  if (poles.size() != n) throw DimensionError("need one pole per state");
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(poles(i) - poles(j)) <= 1e-9 * (1.0 + poles.cwiseAbs().maxCoeff()))
        throw DesignError("requested poles must be distinct");

  // Requesting the spectrum A0 already has needs no feedback at all, and
  // G = 0 is the canonical gain for that request.
  {
    const Eigen::VectorXcd open = Eigen::EigenSolver<MatrixXd>(A0).eigenvalues();
    const double scale = 1.0 + poles.cwiseAbs().maxCoeff();
    std::vector<double> have;
    bool all_real = true;
    for (int i = 0; i < n; ++i) {
      if (std::abs(open(i).imag()) > 1e-9 * scale) all_real = false;
      have.push_back(open(i).real());
    }
    std::vector<double> want(poles.data(), poles.data() + n);
    std::sort(have.begin(), have.end());
    std::sort(want.begin(), want.end());
    bool match = all_real;
    for (int i = 0; i < n && match; ++i)
      if (std::abs(have[i] - want[i]) > 1e-9 * scale) match = false;
    if (match) {
      FeedbackDesign fd;
      fd.kind = DesignKind::PolePlacement;
      fd.G = MatrixXd::Zero(m, n);
      fd.A_closed = A0;
      fd.achieved = open;
      fd.placement_residual = 0.0;
      for (int i = 0; i < n; ++i)
        fd.placement_residual = std::max(fd.placement_residual, std::abs(have[i] - want[i]));
      attach_report(fd, B, meas);
      return fd;
    }
  }

  MatrixXd V(n, n), W(m, n);
  MatrixXd U(n, 0);  // orthonormal basis of the eigenvectors chosen so far
  for (int i = 0; i < n; ++i) {
    MatrixXd Mi(n, n + m);
    Mi << A0 - poles(i) * MatrixXd::Identity(n, n), B;
    Eigen::JacobiSVD<MatrixXd> svd(Mi, Eigen::ComputeFullV);
    const double smax = svd.singularValues()(0);
    int rank = 0;
    for (int k = 0; k < svd.singularValues().size(); ++k)
      if (svd.singularValues()(k) > 1e-12 * std::max(1.0, smax)) ++rank;
    const int nullity = n + m - rank;
    if (nullity < 1) throw DesignError("pole admits no closed-loop eigenvector");
    const MatrixXd N = svd.matrixV().rightCols(nullity);
    const MatrixXd Nv = N.topRows(n);
    const MatrixXd Nw = N.bottomRows(m);

    auto independence = [&](const VectorXd& c) {
      const VectorXd v = Nv * c;
      const double nv = v.norm();
      if (nv <= 1e-12) return 0.0;
      return (v - U * (U.transpose() * v)).norm() / nv;
    };
    auto density = [&](const VectorXd& c) {
      const VectorXd v = (Nv * c).cwiseAbs();
      const double top = v.maxCoeff();
      return top <= 0.0 ? -1.0 : v.minCoeff() / top;
    };

    // For block-structured plants the nullspace directions are confined
    // to single blocks, and an eigenvector with a zero coordinate
    // silences every measurement of that coordinate. Generic mixes keep
    // all coordinates active, so the densest candidate that stays clear
    // of the span already chosen wins; the least-gain direction and the
    // raw basis remain as fallbacks for degenerate nullspaces.
    std::vector<VectorXd> cands;
    VectorXd mix(nullity);
    for (int j = 0; j < nullity; ++j) mix(j) = 1.0 / std::sqrt(j + 1.0);
    cands.push_back(mix.normalized());
    for (int j = 0; j < nullity; ++j) mix(j) *= (j % 2 == 0 ? 1.0 : -1.0);
    cands.push_back(mix.normalized());
    cands.push_back(VectorXd::Ones(nullity).normalized());
    for (int j = 0; j < nullity; ++j) cands.push_back(VectorXd::Unit(nullity, j));
    Eigen::JacobiSVD<MatrixXd> wsvd(Nw, Eigen::ComputeFullV);
    cands.push_back(wsvd.matrixV().col(wsvd.matrixV().cols() - 1));
    const MatrixXd Z = Nv - U * (U.transpose() * Nv);
    Eigen::JacobiSVD<MatrixXd> zsvd(Z, Eigen::ComputeFullV);
    cands.push_back(zsvd.matrixV().col(0));

    VectorXd c;
    double best_score = -2.0;
    for (const VectorXd& cand : cands) {
      if (independence(cand) < 0.1) continue;
      const double score = density(cand);
      if (score > best_score) {
        best_score = score;
        c = cand;
      }
    }
    if (best_score < -1.0) {
      c = zsvd.matrixV().col(0);
      if (independence(c) < 1e-6)
        throw DesignError("eigenstructure assignment is ill conditioned");
    }

    const double scale = (Nv * c).norm();
    V.col(i) = Nv * c / scale;
    W.col(i) = Nw * c / scale;
    VectorXd u = V.col(i) - U * (U.transpose() * V.col(i));
    U.conservativeResize(n, U.cols() + 1);
    U.col(U.cols() - 1) = u / u.norm();
  }

  Eigen::FullPivLU<MatrixXd> lu(V.transpose());
  if (!lu.isInvertible()) throw DesignError("assigned eigenvectors are dependent");

  FeedbackDesign fd;
  fd.kind = DesignKind::PolePlacement;
  fd.G = lu.solve(W.transpose()).transpose();
  fd.A_closed = A0 + B * fd.G;
  fd.achieved = Eigen::EigenSolver<MatrixXd>(fd.A_closed).eigenvalues();

  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j)
      best = std::min(best, std::abs(fd.achieved(j) - std::complex<double>(poles(i))));
    worst = std::max(worst, best);
  }
  fd.placement_residual = worst;
  if (worst > 1e-6)
    throw DesignError("pole placement missed the request by " + std::to_string(worst));
  attach_report(fd, B, meas);
  return fd;
}

FeedbackDesign place_poles(const QuadrotorModel& model, const VectorXd& poles,
                           const std::optional<MatrixXd>& meas) {
  return place_poles(model.A0, model.B, poles, meas);
}

VectorXd default_pole_request() {
  // Slow distinct poles keep every observability-window profile spread over
  // the whole decoding window; fast modes die within a step or two and hand
  // an attacker cheap one-step displacements that defeat sparse recovery.
  return VectorXd::LinSpaced(QuadrotorModel::kStates, 0.95, 0.995);
}

FeedbackDesign design_secure_feedback(const QuadrotorModel& model, const MatrixXd& C,
                                      const VectorXd& initial_poles, int max_tries,
                                      std::uint64_t seed) {
  if (max_tries < 1) throw DimensionError("max_tries must be positive");
  const int n = QuadrotorModel::kStates;
  if (initial_poles.size() != n) throw DimensionError("need one pole per state");
  for (int i = 0; i < n; ++i)
    if (initial_poles(i) <= 0.0 || initial_poles(i) >= 1.0)
      throw DesignError("initial poles must lie in (0, 1)");

  const int p = static_cast<int>(C.rows());
  constexpr double kGap = 1e-4;
  const double lo = 1e-3, hi = 0.999;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);

  FeedbackDesign best;
  int best_smin = -1;
  for (int t = 0; t < max_tries; ++t) {
    VectorXd cand = initial_poles;
    if (t > 0) {
      const double eps = std::min(1e-3 * std::pow(2.0, t / 10), 0.05);
      for (int i = 0; i < n; ++i) cand(i) += eps * unif(rng);
      std::sort(cand.data(), cand.data() + n);
      for (int i = 0; i < n; ++i) {
        const double ceil_i = hi - (n - 1 - i) * kGap;
        cand(i) = std::clamp(cand(i), lo, ceil_i);
        if (i > 0) cand(i) = std::min(std::max(cand(i), cand(i - 1) + kGap), ceil_i);
      }
    }

    FeedbackDesign fd;
    try {
      fd = place_poles(model.A0, model.B, cand);
    } catch (const DesignError&) {
      continue;
    }
    fd.report = correctability_report(LtiSystem::make(fd.A_closed, model.B, C));
    fd.tries = t;
    if (fd.report->s_min == p) return fd;
    if (fd.report->s_min > best_smin) {
      best_smin = fd.report->s_min;
      best = fd;
    }
  }
  throw MaxTriesExceeded("no candidate reached full eigenvector support", best);
}

}  // namespace secest
