#include "secest/decoder.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>

namespace secest {

namespace {

// Y with the forced response of the known inputs removed; what remains is
// Phi * x0 + E (+ noise).
VectorXd strip_forced(const DecoderMatrices& dm, const MeasurementWindow& w) {
  if (w.Y.size() != static_cast<long>(dm.p) * dm.T)
    throw DimensionError("window length does not match decoder matrices");
  VectorXd Yc = w.Y;
  if (w.known_inputs.empty()) return Yc;
  if (!dm.has_input_model())
    throw DimensionError("decoder matrices carry no input model");
  if (static_cast<int>(w.known_inputs.size()) != dm.T - 1)
    throw DimensionError("window must carry exactly T-1 known inputs");
  for (int k = 1; k < dm.T; ++k)
    for (int j = 0; j < k; ++j)
      Yc.segment(static_cast<long>(k) * dm.p, dm.p) -=
          dm.markov[k - 1 - j] * w.known_inputs[j];
  return Yc;
}

}  // namespace

MeasurementWindow MeasurementWindow::from_samples(const std::vector<VectorXd>& ys,
                                                  const std::vector<VectorXd>& us) {
  if (ys.empty()) throw DimensionError("window needs at least one measurement");
  MeasurementWindow w;
  w.T = static_cast<int>(ys.size());
  w.p = static_cast<int>(ys.front().size());
  if (!us.empty() && static_cast<int>(us.size()) != w.T - 1)
    throw DimensionError("window inputs must number T-1");
  w.Y.resize(static_cast<long>(w.p) * w.T);
  for (int k = 0; k < w.T; ++k) {
    if (ys[k].size() != w.p) throw DimensionError("measurement size varies inside window");
    w.Y.segment(static_cast<long>(k) * w.p, w.p) = ys[k];
  }
  w.known_inputs = us;
  return w;
}

VectorXd residual_projection(const DecoderMatrices& dm, const MeasurementWindow& w) {
  return dm.Q2.transpose() * strip_forced(dm, w);
}

DecodeResult decode(const DecoderMatrices& dm, const MeasurementWindow& w,
                    const SolverConfig& cfg) {
  const VectorXd Yc = strip_forced(dm, w);

  L1Problem prob;
  prob.M = dm.Q2.transpose();
  prob.b = prob.M * Yc;
  prob.tol_feas = cfg.tol_feas;
  prob.tol_opt = cfg.tol_opt;
  prob.max_iters = cfg.max_iters;
  L1Solution sol = solve_l1_equality(prob);

  DecodeResult res;
  res.status = sol.status;
  res.iterations = sol.iterations;
  res.feas_residual = sol.feas_residual;
  res.attack.E_hat = sol.e_hat;
  res.attack.per_step.reserve(dm.T);
  res.attack.support.reserve(dm.T);
  for (int k = 0; k < dm.T; ++k) {
    VectorXd slice = sol.e_hat.segment(static_cast<long>(k) * dm.p, dm.p);
    res.attack.support.push_back(cfg.support_eps < 0.0
                                     ? thresholded_support(slice)
                                     : thresholded_support(slice, cfg.support_eps));
    res.attack.per_step.push_back(std::move(slice));
  }
  res.x0_hat = dm.R1.triangularView<Eigen::Upper>().solve(
      dm.Q1.transpose() * (Yc - sol.e_hat));
  return res;
}

VectorXd propagate_state(const LtiSystem& sys, const VectorXd& x0, int k,
                         const std::vector<VectorXd>& inputs) {
  if (x0.size() != sys.n) throw DimensionError("state size mismatch");
  if (k < 0) throw DimensionError("propagation steps must be nonnegative");
  if (!inputs.empty() && static_cast<int>(inputs.size()) < k)
    throw DimensionError("not enough inputs to propagate");
  VectorXd x = x0;
  for (int j = 0; j < k; ++j) {
    x = sys.A * x;
    if (!inputs.empty()) x += sys.B * inputs[j];
  }
  return x;
}

CorrectabilityReport correctability_report(const LtiSystem& sys, double eps) {
  if (eps < 0.0) throw DimensionError("support threshold must be nonnegative");
  CorrectabilityReport rep;
  rep.eps = eps;
  rep.p = sys.p;
  rep.n = sys.n;

  Eigen::EigenSolver<MatrixXd> es(sys.A);
  if (es.info() != Eigen::Success)
    throw DesignError("eigendecomposition failed");
  rep.eigenvalues = es.eigenvalues();
  rep.eigenvectors = es.eigenvectors();
  for (int i = 0; i < sys.n; ++i)
    rep.eigenvectors.col(i).normalize();

  rep.supports.resize(sys.n);
  for (int i = 0; i < sys.n; ++i) {
    Eigen::VectorXcd w = sys.C * rep.eigenvectors.col(i);
    const double top = w.cwiseAbs().maxCoeff();
    int s = 0;
    if (top > 0.0)
      for (int j = 0; j < sys.p; ++j)
        if (std::abs(w(j)) > eps * top) ++s;
    rep.supports[i] = s;
  }
  rep.s_min = *std::min_element(rep.supports.begin(), rep.supports.end());
  rep.q_max = rep.s_min >= 1 ? (rep.s_min - 1) / 2 : -1;

  const double scale = rep.eigenvalues.cwiseAbs().maxCoeff();
  bool distinct = true, real_positive = true;
  for (int i = 0; i < sys.n; ++i) {
    const auto li = rep.eigenvalues(i);
    if (std::abs(li.imag()) > 1e-9 * (1.0 + scale) || li.real() <= 0.0)
      real_positive = false;
    for (int j = i + 1; j < sys.n; ++j)
      if (std::abs(li - rep.eigenvalues(j)) <= 1e-9 * (1.0 + scale)) distinct = false;
  }
  rep.distinct_real_positive_eigenvalues = distinct && real_positive;

  rep.C_full_rank =
      Eigen::ColPivHouseholderQR<MatrixXd>(sys.C).rank() == sys.p;
  rep.observable =
      Eigen::ColPivHouseholderQR<MatrixXd>(build_observability(sys, sys.n)).rank() ==
      sys.n;

  if (rep.q_max >= 0) rep.t_star = min_window_length(rep, rep.q_max, sys.p, sys.n);
  return rep;
}

int min_window_length(const CorrectabilityReport& report, int q, int p, int n) {
  if (n != static_cast<int>(report.supports.size()))
    throw DimensionError("n does not match the report's support count");
  if (p < 1 || q < 0) throw DimensionError("p must be positive and q nonnegative");
  std::vector<std::int64_t> s(report.supports.begin(), report.supports.end());
  for (auto v : s)
    if (v < 0 || v > p) throw DimensionError("supports must lie in [0, p]");
  std::sort(s.begin(), s.end());
  if (s.front() - 2 * static_cast<std::int64_t>(q) <= 0)
    throw NotCorrectable("smallest eigenvector support does not exceed 2q");

  // For fixed subset size m the ratio ((m-2)p + min)/(max - 2q) is maximized
  // by a consecutive window of the sorted supports: fixing the max element
  // s[b], the largest attainable min over m-element subsets is s[b-m+1].
  // The smallest integer strictly greater than a/b is a/b + 1 for positive
  // integers, and it is monotone in the ratio, so maximizing per-window
  // integer values equals taking it of the maximum ratio.
  std::int64_t best = n;
  for (int m = 2; m <= n; ++m) {
    for (int b = m - 1; b < n; ++b) {
      const std::int64_t num = static_cast<std::int64_t>(m - 2) * p + s[b - m + 1];
      const std::int64_t den = s[b] - 2 * static_cast<std::int64_t>(q);
      best = std::max(best, num / den + 1);
    }
  }
  return static_cast<int>(best);
}

double check_q_correctable(const LtiSystem& sys, int q, int T, int trials,
                           std::uint64_t seed, double magnitude_scale) {
  if (q < 0 || q > sys.p) throw DimensionError("q must lie in [0, p]");
  if (trials < 1) throw DimensionError("trials must be positive");
  const DecoderMatrices dm = build_decoder_matrices(sys, T);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> size_dist(0, q);
  std::bernoulli_distribution big(0.5);

  int hits = 0;
  std::vector<int> chans(sys.p);
  std::iota(chans.begin(), chans.end(), 0);
  for (int t = 0; t < trials; ++t) {
    VectorXd x0(sys.n);
    for (int i = 0; i < sys.n; ++i) x0(i) = gauss(rng);

    std::vector<VectorXd> ys(T);
    VectorXd x = x0;
    for (int k = 0; k < T; ++k) {
      VectorXd e = VectorXd::Zero(sys.p);
      const int sz = size_dist(rng);
      for (int j = 0; j < sz; ++j) {  // partial Fisher-Yates support draw
        std::uniform_int_distribution<int> pick(j, sys.p - 1);
        std::swap(chans[j], chans[pick(rng)]);
        e(chans[j]) = gauss(rng) * (big(rng) ? 100.0 : 1.0) * magnitude_scale;
      }
      ys[k] = sys.C * x + e;
      x = sys.A * x;
    }

    const DecodeResult res = decode(dm, MeasurementWindow::from_samples(ys));
    if (res.status == SolveStatus::Optimal &&
        (res.x0_hat - x0).norm() <= 1e-6 * (1.0 + x0.norm()))
      ++hits;
  }
  return static_cast<double>(hits) / trials;
}

}  // namespace secest
