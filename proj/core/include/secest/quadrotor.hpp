#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "secest/decoder.hpp"
#include "secest/lti.hpp"

namespace secest {

/// Continuous-time template, discretized exactly at dt by the matrix
/// exponential of the augmented [A B; 0 0] block. Each lateral axis is
/// the chain position <- velocity <- angle, with the angle rate tracking
/// the commanded angle through a first-order loop of time constant tau
/// and dc gain kappa. The vertical axis is a double integrator driven by
/// the thrust input.
struct QuadrotorParams {
  double dt = 0.1;
  double tau = 0.2;
  double kappa = 1.0;
  double gravity = 9.81;     // lateral acceleration per unit tilt
  double thrust_gain = 1.0;  // vertical acceleration per unit thrust
};

/// State layout: [p_x, v_x, th_x, thdot_x, p_y, v_y, th_y, thdot_y, p_z, v_z].
/// Inputs: [th_ref_x, th_ref_y, F].
struct QuadrotorModel {
  MatrixXd A0;  // 10 x 10 discrete open loop
  MatrixXd B;   // 10 x 3
  QuadrotorParams params;

  static constexpr int kStates = 10;
  static constexpr int kInputs = 3;
  static constexpr int kPositions[3] = {0, 4, 8};
};

/// Measured state indices and the induced selector C (rows of I). The
/// three positions always come first.
struct MeasurementSelection {
  std::vector<int> indices;
  MatrixXd C;
};

enum class DesignKind { Lqr, PolePlacement };

struct FeedbackDesign {
  MatrixXd G;         // m x n feedback gain, u = G x
  MatrixXd A_closed;  // A0 + B G
  DesignKind kind = DesignKind::Lqr;
  Eigen::VectorXcd achieved;        // closed-loop eigenvalues
  double placement_residual = 0.0;  // max matched distance to the request
  std::optional<CorrectabilityReport> report;
  int tries = 0;
};

/// Pole perturbation ran out of attempts; best carries the candidate with
/// the largest s_min seen.
class MaxTriesExceeded : public DesignError {
 public:
  MaxTriesExceeded(const std::string& msg, FeedbackDesign best_design)
      : DesignError(msg), best(std::move(best_design)) {}
  FeedbackDesign best;
};

/// Builds the discrete model and asserts controllability.
QuadrotorModel build_quadrotor(const QuadrotorParams& params = {});

MatrixXd controllability_matrix(const MatrixXd& A, const MatrixXd& B);

/// Positions {0,4,8} plus, in order, v_x, v_y, th_x, th_y, v_z, thdot_x,
/// thdot_y until n_y rows are reached. n_y must lie in [3, 10].
MeasurementSelection select_measurements(int n_y);

/// Explicit state indices; positions must be listed first.
MeasurementSelection select_measurements(const std::vector<int>& indices);

/// Fixed point of P = Qc + A'PA - A'PB (Rc + B'PB)^-1 B'PA, iterated to
/// an absolute tolerance of 1e-10 on the update.
MatrixXd solve_dare(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Qc,
                    const MatrixXd& Rc, double tol = 1e-10, int max_iters = 200000);

/// LQR state feedback u = G x with G = -(Rc + B'PB)^-1 B'PA. When meas is
/// given, the returned design carries the correctability report of the
/// closed loop seen through it.
FeedbackDesign lqr_gain(const MatrixXd& A0, const MatrixXd& B, const MatrixXd& Qc,
                        const MatrixXd& Rc,
                        const std::optional<MatrixXd>& meas = std::nullopt);
FeedbackDesign lqr_gain(const QuadrotorModel& model, const MatrixXd& Qc,
                        const MatrixXd& Rc,
                        const std::optional<MatrixXd>& meas = std::nullopt);

/// 10 on the position diagonal, 1 elsewhere.
MatrixXd default_lqr_Qc();
MatrixXd default_lqr_Rc();

/// Places the closed-loop eigenvalues of A0 + B G at the requested
/// distinct real poles by eigenstructure assignment: for each pole the
/// pair (v, w) with w = G v is read off the null space of [A0 - pole*I, B],
/// choosing the minimum-gain direction unless it would make the
/// eigenvector set ill conditioned. Throws DesignError when the achieved
/// spectrum misses the request by more than 1e-6.
FeedbackDesign place_poles(const MatrixXd& A0, const MatrixXd& B,
                           const VectorXd& poles,
                           const std::optional<MatrixXd>& meas = std::nullopt);
FeedbackDesign place_poles(const QuadrotorModel& model, const VectorXd& poles,
                           const std::optional<MatrixXd>& meas = std::nullopt);

/// 10 distinct reals evenly spaced in [0.55, 0.95].
VectorXd default_pole_request();

/// Perturbs the requested poles with uniform noise (magnitude 1e-3,
/// doubling every 10 failed tries, capped at 0.05, re-sorted with a
/// minimum gap of 1e-4 and clamped inside (0, 1)) until every eigenvector
/// of the closed loop has full measurement support s_i = p. Throws
/// MaxTriesExceeded carrying the best candidate otherwise.
FeedbackDesign design_secure_feedback(const QuadrotorModel& model, const MatrixXd& C,
                                      const VectorXd& initial_poles, int max_tries,
                                      std::uint64_t seed);

}  // namespace secest
