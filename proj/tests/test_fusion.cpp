#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "secest/fusion.hpp"

using namespace secest;

namespace {

// n = 4 plant measured through a Vandermonde map: every mode hits every
// channel, so one corrupted channel is correctable (q_max = 1) and the
// certified window is T = 7. kWindow sits above it, which makes decoding
// on clean single-channel attacks exact rather than merely likely.
LtiSystem small_plant() {
  MatrixXd A = MatrixXd::Zero(4, 4);
  A.diagonal() << 0.5, 0.7, 0.8, 0.9;
  MatrixXd C(4, 4);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) C(r, c) = std::pow(0.6 + 0.3 * c, r);
  return LtiSystem::autonomous(A, C);
}

LtiSystem forced_plant() {
  const LtiSystem base = small_plant();
  MatrixXd B(4, 1);
  B << 1.0, 0.5, -0.25, 0.1;
  return LtiSystem::make(base.A, B, base.C);
}

constexpr int kWindow = 8;

}  // namespace

TEST_SUITE("fusion") {

TEST_CASE("the small plant's window certificate covers one bad channel") {
  const auto rep = correctability_report(small_plant());
  REQUIRE(rep.q_max >= 1);
  CHECK(min_window_length(rep, 1, rep.p, rep.n) <= kWindow);
}

TEST_CASE("mode names") {
  CHECK(to_string(EstimatorMode::KfOnly) == "kf_only");
  CHECK(to_string(EstimatorMode::SeOnly) == "se_only");
  CHECK(to_string(EstimatorMode::KfPlusSe) == "kf_plus_se");
}

TEST_CASE("construction rejects malformed setups") {
  const LtiSystem sys = small_plant();
  const KalmanState kf = make_kalman(sys);
  CHECK_THROWS_AS(FusionEstimator(sys, 1, EstimatorMode::KfOnly, kf), DimensionError);

  const LtiSystem tall =
      LtiSystem::autonomous(MatrixXd::Identity(10, 10), MatrixXd::Ones(1, 10));
  CHECK_THROWS_AS(FusionEstimator(tall, 2, EstimatorMode::KfOnly, make_kalman(tall)),
                  DimensionError);

  KalmanState bad = kf;
  bad.x_hat = VectorXd::Zero(5);
  CHECK_THROWS_AS(FusionEstimator(sys, kWindow, EstimatorMode::KfOnly, bad),
                  DimensionError);
}

TEST_CASE("measurements must arrive in order with matching sizes") {
  const LtiSystem sys = small_plant();
  FusionEstimator est(sys, kWindow, EstimatorMode::KfOnly, make_kalman(sys));
  const VectorXd y = VectorXd::Zero(4);
  const VectorXd u = VectorXd::Zero(1);
  est.step(0, y, u);
  CHECK_THROWS_AS(est.step(2, y, u), DimensionError);
  CHECK_THROWS_AS(est.step(0, y, u), DimensionError);
  est.step(1, y, u);
  CHECK_THROWS_AS(est.step(2, VectorXd::Zero(3), u), DimensionError);
  CHECK_THROWS_AS(est.step(2, y, VectorXd::Zero(2)), DimensionError);
  CHECK(est.window() == kWindow);
  CHECK(est.mode() == EstimatorMode::KfOnly);
}

TEST_CASE("attack estimates stay zero until the first full window") {
  const LtiSystem sys = small_plant();
  const int K = 12;
  std::mt19937_64 rng(5);
  const VectorXd x0 = oracles::randn_vec(4, rng);
  const Trajectory tr = simulate_closed_loop(sys, x0, K);

  std::vector<VectorXd> es(K, VectorXd::Zero(4));
  for (int k = 0; k < K; ++k) es[static_cast<std::size_t>(k)](2) = 1.0 + 0.3 * k;

  FusionEstimator est(sys, kWindow, EstimatorMode::KfPlusSe,
                      make_kalman(sys, x0, 1.0, 0.0, 1e-4));
  for (int k = 0; k < K; ++k) {
    const auto& e = es[static_cast<std::size_t>(k)];
    const FusionStep s =
        est.step(k, tr.measurements[static_cast<std::size_t>(k)] + e,
                 tr.inputs[static_cast<std::size_t>(k)]);
    if (k < kWindow) {
      CHECK_FALSE(s.window_full);
      CHECK(s.e_hat.cwiseAbs().maxCoeff() == 0.0);
    } else {
      CHECK(s.window_full);
      CHECK(s.decode_ok);
      CHECK((s.e_hat - e).cwiseAbs().maxCoeff() < 1e-6);
    }
  }
  CHECK(est.decode_failures() == 0);
}

TEST_CASE("the plain filter never touches the decoder") {
  const LtiSystem sys = small_plant();
  const int K = 15;
  std::mt19937_64 rng(6);
  const VectorXd x0 = oracles::randn_vec(4, rng);
  const Trajectory tr = simulate_closed_loop(sys, x0, K);

  FusionEstimator est(sys, kWindow, EstimatorMode::KfOnly, make_kalman(sys, x0));
  for (int k = 0; k < K; ++k) {
    VectorXd y = tr.measurements[static_cast<std::size_t>(k)];
    y(0) += 50.0;
    const FusionStep s = est.step(k, y, tr.inputs[static_cast<std::size_t>(k)]);
    CHECK(s.e_hat.cwiseAbs().maxCoeff() == 0.0);
    CHECK_FALSE(s.decode_ok);
  }
  CHECK(est.decode_failures() == 0);
}

TEST_CASE("decode-only estimates are exact on clean sparse-attacked data") {
  const LtiSystem sys = forced_plant();
  const int K = 14;
  std::mt19937_64 rng(9);
  const VectorXd x0 = oracles::randn_vec(4, rng);
  std::vector<VectorXd> us(K);
  for (auto& u : us) u = oracles::randn_vec(1, rng);
  const Trajectory tr = simulate_open_loop(sys, x0, us);

  std::vector<VectorXd> es(K, VectorXd::Zero(4));
  std::vector<VectorXd> ys(K);
  for (int k = 0; k < K; ++k) {
    es[static_cast<std::size_t>(k)](1) = std::sin(0.5 * k) + 2.0;
    ys[static_cast<std::size_t>(k)] =
        tr.measurements[static_cast<std::size_t>(k)] + es[static_cast<std::size_t>(k)];
  }

  FusionEstimator est(sys, kWindow, EstimatorMode::SeOnly, make_kalman(sys, x0));
  const RunResult rr = run_estimator(est, ys, us, tr.states, es);
  for (int k = 0; k < K; ++k)
    CHECK((rr.x_hat[static_cast<std::size_t>(k)] - tr.states[static_cast<std::size_t>(k)])
              .cwiseAbs()
              .maxCoeff() < 1e-6);
  for (int k = kWindow; k < K; ++k)
    CHECK(rr.metrics.attack_error.col(k).cwiseAbs().maxCoeff() < 1e-6);

  double acc = 0.0;
  for (int k = 0; k < K; ++k)
    acc += (rr.x_hat[static_cast<std::size_t>(k)] - tr.states[static_cast<std::size_t>(k)])
               .squaredNorm();
  CHECK(rr.metrics.state_rmse == doctest::Approx(std::sqrt(acc / K)).epsilon(1e-12));
  CHECK(rr.metrics.decode_failures == 0);
}

TEST_CASE("attack-free noise-free fusion collapses to the plain filter") {
  const LtiSystem sys = forced_plant();
  const int K = 20;
  std::mt19937_64 rng(11);
  const VectorXd x0 = oracles::randn_vec(4, rng);
  std::vector<VectorXd> us(K);
  for (auto& u : us) u = oracles::randn_vec(1, rng);
  const Trajectory tr = simulate_open_loop(sys, x0, us);

  const VectorXd x0_guess = x0 + 0.5 * oracles::randn_vec(4, rng);
  FusionEstimator fused(sys, kWindow, EstimatorMode::KfPlusSe,
                        make_kalman(sys, x0_guess));
  FusionEstimator plain(sys, kWindow, EstimatorMode::KfOnly,
                        make_kalman(sys, x0_guess));
  const RunResult a = run_estimator(fused, tr.measurements, us);
  const RunResult b = run_estimator(plain, tr.measurements, us);
  for (int k = 0; k < K; ++k)
    CHECK((a.x_hat[static_cast<std::size_t>(k)] - b.x_hat[static_cast<std::size_t>(k)])
              .cwiseAbs()
              .maxCoeff() == 0.0);
  CHECK(fused.decode_failures() == 0);
}

TEST_CASE("fusion tracks the plain filter on attack-free noisy data") {
  const LtiSystem sys = small_plant();
  const int K = 80;
  const double sigma = 0.01;
  std::mt19937_64 rng(13);
  const VectorXd x0 = oracles::randn_vec(4, rng);
  const Trajectory tr = simulate_closed_loop(sys, x0, K);

  std::vector<VectorXd> ys(K);
  std::normal_distribution<double> gauss(0.0, sigma);
  for (int k = 0; k < K; ++k) {
    ys[static_cast<std::size_t>(k)] = tr.measurements[static_cast<std::size_t>(k)];
    for (int i = 0; i < 4; ++i) ys[static_cast<std::size_t>(k)](i) += gauss(rng);
  }
  const std::vector<VectorXd> us(K, VectorXd::Zero(1));

  FusionEstimator fused(sys, kWindow, EstimatorMode::KfPlusSe,
                        make_kalman(sys, x0, 1.0, 1e-6, sigma * sigma));
  FusionEstimator plain(sys, kWindow, EstimatorMode::KfOnly,
                        make_kalman(sys, x0, 1.0, 1e-6, sigma * sigma));
  const RunResult a = run_estimator(fused, ys, us, tr.states);
  const RunResult b = run_estimator(plain, ys, us, tr.states);
  CHECK(std::abs(a.metrics.state_rmse - b.metrics.state_rmse) <=
        0.05 * b.metrics.state_rmse);
}

TEST_CASE("solver starvation falls back to a zero attack estimate") {
  const LtiSystem sys = small_plant();
  const int K = 10;
  std::mt19937_64 rng(15);
  const VectorXd x0 = oracles::randn_vec(4, rng);
  const Trajectory tr = simulate_closed_loop(sys, x0, K);

  std::vector<VectorXd> ys(K);
  for (int k = 0; k < K; ++k) {
    ys[static_cast<std::size_t>(k)] = tr.measurements[static_cast<std::size_t>(k)];
    ys[static_cast<std::size_t>(k)](2) += 4.0;
  }
  const std::vector<VectorXd> us(K, VectorXd::Zero(1));

  SolverConfig starved;
  starved.max_iters = 1;
  FusionEstimator fused(sys, kWindow, EstimatorMode::KfPlusSe, make_kalman(sys, x0),
                        starved);
  FusionEstimator plain(sys, kWindow, EstimatorMode::KfOnly, make_kalman(sys, x0));
  const RunResult a = run_estimator(fused, ys, us);
  const RunResult b = run_estimator(plain, ys, us);
  CHECK(fused.decode_failures() == K - kWindow);
  for (int k = 0; k < K; ++k) {
    CHECK(a.e_hat[static_cast<std::size_t>(k)].cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.x_hat[static_cast<std::size_t>(k)] - b.x_hat[static_cast<std::size_t>(k)])
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
}

TEST_CASE("batch runner handles empty input and validates lengths") {
  const LtiSystem sys = small_plant();
  FusionEstimator est(sys, kWindow, EstimatorMode::KfOnly, make_kalman(sys));
  const RunResult rr = run_estimator(est, {}, {});
  CHECK(rr.x_hat.empty());
  CHECK(rr.e_hat.empty());
  CHECK(rr.metrics.state_rmse == 0.0);

  const std::vector<VectorXd> ys(2, VectorXd::Zero(4));
  const std::vector<VectorXd> us(2, VectorXd::Zero(1));
  FusionEstimator est2(sys, kWindow, EstimatorMode::KfOnly, make_kalman(sys));
  CHECK_THROWS_AS(run_estimator(est2, ys, {}), DimensionError);
  FusionEstimator est3(sys, kWindow, EstimatorMode::KfOnly, make_kalman(sys));
  CHECK_THROWS_AS(run_estimator(est3, ys, us, {VectorXd::Zero(3)}), DimensionError);
}

TEST_CASE("estimates depend only on past measurements") {
  const LtiSystem sys = small_plant();
  const int K = 12, split = 8;
  std::mt19937_64 rng(17);
  const VectorXd x0 = oracles::randn_vec(4, rng);
  const Trajectory tr = simulate_closed_loop(sys, x0, K);

  std::vector<VectorXd> ys(K), altered(K);
  for (int k = 0; k < K; ++k) {
    ys[static_cast<std::size_t>(k)] = tr.measurements[static_cast<std::size_t>(k)];
    ys[static_cast<std::size_t>(k)](1) += 0.5;
    altered[static_cast<std::size_t>(k)] = ys[static_cast<std::size_t>(k)];
    if (k >= split) altered[static_cast<std::size_t>(k)](0) += 9.0;
  }
  const std::vector<VectorXd> us(K, VectorXd::Zero(1));

  FusionEstimator ea(sys, kWindow, EstimatorMode::KfPlusSe, make_kalman(sys, x0));
  FusionEstimator eb(sys, kWindow, EstimatorMode::KfPlusSe, make_kalman(sys, x0));
  const RunResult a = run_estimator(ea, ys, us);
  const RunResult b = run_estimator(eb, altered, us);
  for (int k = 0; k < split; ++k) {
    CHECK((a.x_hat[static_cast<std::size_t>(k)] - b.x_hat[static_cast<std::size_t>(k)])
              .cwiseAbs()
              .maxCoeff() == 0.0);
    CHECK((a.e_hat[static_cast<std::size_t>(k)] - b.e_hat[static_cast<std::size_t>(k)])
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
}

}  // TEST_SUITE
