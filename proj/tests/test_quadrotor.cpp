#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "secest/quadrotor.hpp"

using namespace secest;

TEST_SUITE("quadrotor") {

TEST_CASE("model construction and parameter validation") {
  const QuadrotorModel model = build_quadrotor();
  CHECK(model.A0.rows() == 10);
  CHECK(model.B.cols() == 3);

  QuadrotorParams bad;
  bad.dt = 0.0;
  CHECK_THROWS_AS(build_quadrotor(bad), DimensionError);
  bad = QuadrotorParams{};
  bad.tau = -1.0;
  CHECK_THROWS_AS(build_quadrotor(bad), DimensionError);
}

TEST_CASE("level start with zero input hovers in place") {
  const QuadrotorModel model = build_quadrotor();
  VectorXd x = VectorXd::Zero(10);
  x(0) = 1.5;
  x(4) = -2.0;
  x(8) = 3.0;
  for (int k = 0; k < 20; ++k) x = model.A0 * x;
  CHECK(x(0) == doctest::Approx(1.5));
  CHECK(x(4) == doctest::Approx(-2.0));
  CHECK(x(8) == doctest::Approx(3.0));
  CHECK(x.cwiseAbs().sum() == doctest::Approx(6.5));
}

TEST_CASE("constant thrust integrates to the double-integrator response") {
  const QuadrotorModel model = build_quadrotor();
  const double dt = model.params.dt;
  const double F = 0.7;
  VectorXd x = VectorXd::Zero(10);
  VectorXd u = VectorXd::Zero(3);
  u(2) = F;
  for (int k = 1; k <= 15; ++k) {
    x = model.A0 * x + model.B * u;
    CHECK(x(9) == doctest::Approx(F * dt * k).epsilon(1e-12));
    CHECK(x(8) == doctest::Approx(F * dt * dt * k * k / 2.0).epsilon(1e-12));
  }
}

TEST_CASE("discretization carries the exact angle-loop eigenvalue") {
  const QuadrotorModel model = build_quadrotor();
  const Eigen::VectorXcd eigs = model.A0.eigenvalues();
  // Continuous angle-rate pole -1/tau discretizes to exp(-dt/tau).
  const double expected = std::exp(-model.params.dt / model.params.tau);
  int ones = 0, angle_poles = 0;
  for (int i = 0; i < eigs.size(); ++i) {
    CHECK(std::abs(eigs(i).imag()) <= 1e-12);
    if (std::abs(eigs(i).real() - 1.0) <= 1e-9) ++ones;
    if (std::abs(eigs(i).real() - expected) <= 1e-9) ++angle_poles;
  }
  CHECK(ones == 8);
  CHECK(angle_poles == 2);
}

TEST_CASE("default model is controllable") {
  const QuadrotorModel model = build_quadrotor();
  const MatrixXd ctrb = controllability_matrix(model.A0, model.B);
  CHECK(ctrb.rows() == 10);
  CHECK(ctrb.cols() == 30);
  Eigen::JacobiSVD<MatrixXd> svd(ctrb);
  CHECK(svd.singularValues()(9) > 1e-9 * svd.singularValues()(0));
}

TEST_CASE("measurement selection order and validation") {
  CHECK(select_measurements(3).indices == std::vector<int>{0, 4, 8});
  CHECK(select_measurements(5).indices == std::vector<int>{0, 4, 8, 1, 5});
  CHECK(select_measurements(8).indices == std::vector<int>{0, 4, 8, 1, 5, 2, 6, 9});
  CHECK(select_measurements(10).indices.size() == 10);

  const MeasurementSelection sel = select_measurements(5);
  CHECK(sel.C.rows() == 5);
  for (int r = 0; r < 5; ++r) {
    CHECK(sel.C.row(r).sum() == doctest::Approx(1.0));
    CHECK(sel.C(r, sel.indices[static_cast<std::size_t>(r)]) == 1.0);
  }

  CHECK_THROWS_AS(select_measurements(2), ConfigError);
  CHECK_THROWS_AS(select_measurements(11), ConfigError);
  CHECK_THROWS_AS(select_measurements(std::vector<int>{0, 4, 8, 4}), ConfigError);
  CHECK_THROWS_AS(select_measurements(std::vector<int>{0, 8, 4}), ConfigError);
  CHECK_THROWS_AS(select_measurements(std::vector<int>{0, 4, 8, 12}), ConfigError);
}

TEST_CASE("scalar Riccati fixed point matches the closed form") {
  MatrixXd a(1, 1), b(1, 1), q(1, 1), r(1, 1);
  a << 1;
  b << 1;
  q << 1;
  r << 1;
  const MatrixXd P = solve_dare(a, b, q, r);
  CHECK(P(0, 0) == doctest::Approx((1.0 + std::sqrt(5.0)) / 2.0).epsilon(1e-9));

  const FeedbackDesign fb = lqr_gain(a, b, q, r);
  const double p = P(0, 0);
  CHECK(fb.G(0, 0) == doctest::Approx(-p / (p + 1.0)).epsilon(1e-9));

  // A second parameter set against the general scalar closed form.
  a << 1.7;
  q << 0.3;
  r << 2.0;
  CHECK(solve_dare(a, b, q, r)(0, 0) ==
        doctest::Approx(oracles::scalar_dare(1.7, 1.0, 0.3, 2.0)).epsilon(1e-9));
}

TEST_CASE("default LQR stabilizes but is decoder-poor") {
  const QuadrotorModel model = build_quadrotor();
  const MeasurementSelection sel = select_measurements(5);
  const FeedbackDesign fb =
      lqr_gain(model, default_lqr_Qc(), default_lqr_Rc(), sel.C);

  CHECK(fb.kind == DesignKind::Lqr);
  CHECK(fb.achieved.cwiseAbs().maxCoeff() < 1.0);

  REQUIRE(fb.report.has_value());
  const auto& rep = *fb.report;
  CHECK(rep.q_max == 0);
  CHECK(std::count(rep.supports.begin(), rep.supports.end(), 1) >= 1);
  CHECK(*std::min_element(rep.supports.begin(), rep.supports.end()) < 5);
}

TEST_CASE("single-input placement matches Ackermann's formula") {
  std::mt19937_64 rng(51);
  for (int trial = 0; trial < 5; ++trial) {
    // Companion form is always controllable from the last coordinate.
    const int n = 3;
    MatrixXd A = MatrixXd::Zero(n, n);
    A.topRightCorner(n - 1, n - 1).setIdentity();
    A.row(n - 1) = oracles::randn_vec(n, rng).transpose();
    MatrixXd B = MatrixXd::Zero(n, 1);
    B(n - 1, 0) = 1.0;

    VectorXd poles(3);
    poles << 0.5, 0.6, 0.7;
    const FeedbackDesign fb = place_poles(A, B, poles);
    const Eigen::RowVectorXd K = oracles::ackermann_gain(A, B.col(0), poles);
    CHECK((fb.G + K).cwiseAbs().maxCoeff() <= 1e-6 * (1.0 + K.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("requesting the existing spectrum needs no feedback") {
  MatrixXd A = MatrixXd::Zero(3, 3);
  A.diagonal() << 0.5, 0.6, 0.7;
  const MatrixXd B = MatrixXd::Identity(3, 3);
  VectorXd poles(3);
  poles << 0.5, 0.6, 0.7;
  const FeedbackDesign fb = place_poles(A, B, poles);
  CHECK(fb.G.cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("quadrotor placement achieves the requested spectrum") {
  const QuadrotorModel model = build_quadrotor();
  const VectorXd request = default_pole_request();
  REQUIRE(request.size() == 10);
  for (int i = 1; i < 10; ++i) CHECK(request(i) > request(i - 1));
  CHECK(request(0) == doctest::Approx(0.95));
  CHECK(request(9) == doctest::Approx(0.995));

  const FeedbackDesign fb = place_poles(model, request);
  CHECK(fb.placement_residual <= 1e-6);
  std::vector<double> achieved;
  for (int i = 0; i < fb.achieved.size(); ++i) {
    CHECK(std::abs(fb.achieved(i).imag()) <= 1e-8);
    achieved.push_back(fb.achieved(i).real());
  }
  std::sort(achieved.begin(), achieved.end());
  for (int i = 0; i < 10; ++i)
    CHECK(achieved[static_cast<std::size_t>(i)] ==
          doctest::Approx(request(i)).epsilon(1e-6));

  CHECK((fb.A_closed - (model.A0 + model.B * fb.G)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("degenerate pole requests are rejected") {
  const QuadrotorModel model = build_quadrotor();
  VectorXd bad = default_pole_request();
  bad(3) = bad(2);
  CHECK_THROWS_AS(place_poles(model, bad), DesignError);

  // The perturbation search additionally insists on initial poles
  // inside the unit interval.
  bad = default_pole_request();
  bad(9) = 1.5;
  CHECK_THROWS_AS(
      design_secure_feedback(model, select_measurements(5).C, bad, 10, 1),
      DesignError);
}

TEST_CASE("secure design keeps an already-full-support candidate") {
  const QuadrotorModel model = build_quadrotor();
  const MatrixXd C = MatrixXd::Identity(10, 10);
  const FeedbackDesign fb =
      design_secure_feedback(model, C, default_pole_request(), 50, 7);
  CHECK(fb.tries == 0);
  REQUIRE(fb.report.has_value());
  CHECK(fb.report->s_min == 10);

  const FeedbackDesign direct = place_poles(model, default_pole_request());
  CHECK((fb.G - direct.G).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("secure design reaches full support through five measurements") {
  const QuadrotorModel model = build_quadrotor();
  const MeasurementSelection sel = select_measurements(5);
  const FeedbackDesign fb =
      design_secure_feedback(model, sel.C, default_pole_request(), 1000, 99);

  REQUIRE(fb.report.has_value());
  CHECK(fb.report->s_min == 5);
  CHECK(fb.report->q_max == 2);
  CHECK(fb.tries <= 1000);
  CHECK(fb.achieved.cwiseAbs().maxCoeff() < 1.0);
  CHECK(fb.report->distinct_real_positive_eigenvalues);

  // The perturbation stays within its cap: achieved poles remain close
  // to the initial request.
  std::vector<double> achieved;
  for (int i = 0; i < fb.achieved.size(); ++i)
    achieved.push_back(fb.achieved(i).real());
  std::sort(achieved.begin(), achieved.end());
  const VectorXd request = default_pole_request();
  for (int i = 0; i < 10; ++i)
    CHECK(std::abs(achieved[static_cast<std::size_t>(i)] - request(i)) <= 0.05 + 1e-9);
}

TEST_CASE("a selection with a dead row is rejected up front") {
  const QuadrotorModel model = build_quadrotor();
  MatrixXd C = MatrixXd::Zero(6, 10);
  C.topRows(5) = select_measurements(5).C;
  CHECK_THROWS_AS(design_secure_feedback(model, C, default_pole_request(), 5, 3),
                  const DimensionError&);
}

TEST_CASE("support survives a selection that skips a whole axis chain") {
  // Assigned eigenvectors mix every block, so even measurements drawn from
  // two of the three axes see all ten modes.
  const QuadrotorModel model = build_quadrotor();
  MatrixXd C = MatrixXd::Zero(5, 10);
  const int rows[5] = {0, 1, 2, 8, 9};
  for (int i = 0; i < 5; ++i) C(i, rows[i]) = 1.0;
  const FeedbackDesign fb =
      design_secure_feedback(model, C, default_pole_request(), 50, 2026);
  REQUIRE(fb.report.has_value());
  CHECK(fb.report->s_min == 5);
  CHECK(fb.tries == 0);
}

TEST_CASE("a plant with no input authority exhausts its tries") {
  QuadrotorModel model = build_quadrotor();
  model.B.setZero();
  bool threw = false;
  try {
    design_secure_feedback(model, select_measurements(5).C,
                           default_pole_request(), 4, 3);
  } catch (const MaxTriesExceeded& e) {
    threw = true;
    CHECK_FALSE(e.best.report.has_value());
  }
  CHECK(threw);
}

}  // TEST_SUITE
