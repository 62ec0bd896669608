#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "secest/errors.hpp"

namespace secest {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Discrete-time LTI system x(k+1) = A x(k) + B u(k), y(k) = C x(k).
///
/// The same struct models both the open loop (A = A0, u external) and the
/// autonomous closed loop (A = A0 + B*G, u unused). C must have full row
/// rank and no identically zero row.
struct LtiSystem {
  MatrixXd A;  // n x n
  MatrixXd B;  // n x m
  MatrixXd C;  // p x n
  int n = 0;
  int m = 0;
  int p = 0;

  static LtiSystem make(MatrixXd A, MatrixXd B, MatrixXd C);

  /// Autonomous system (B fixed to an n x 1 zero column).
  static LtiSystem autonomous(MatrixXd A, MatrixXd C);
};

/// Simulated run: states x(0..K), inputs u(0..K-1), clean measurements
/// y(0..K-1). Attack and noise injection happen downstream.
struct Trajectory {
  std::vector<VectorXd> states;
  std::vector<VectorXd> inputs;
  std::vector<VectorXd> measurements;

  int steps() const { return static_cast<int>(measurements.size()); }
};

/// Full QR split of the stacked observability matrix Phi = Q1 * R1 with
/// [Q1 Q2] square orthogonal. Q2' annihilates the column space of Phi and
/// maps a measurement window to its attack-only residual.
///
/// markov holds C*A^j*B for j = 0..T-2 when built from a system; it is the
/// impulse-response cache used to subtract known-input forced responses.
struct DecoderMatrices {
  MatrixXd Phi;  // (p*T) x n
  MatrixXd Q1;   // (p*T) x n
  MatrixXd Q2;   // (p*T) x (p*T - n)
  MatrixXd R1;   // n x n upper triangular
  int T = 0;
  int p = 0;
  int n = 0;
  std::vector<MatrixXd> markov;

  bool has_input_model() const { return !markov.empty(); }
};

/// Stacks [C; C*A; ...; C*A^(T-1)].
MatrixXd build_observability(const LtiSystem& sys, int T);

/// Full (not thin) QR factorization of Phi. Throws UnobservableSystem when
/// a diagonal entry of R1 falls below 1e-9 times the largest one.
DecoderMatrices factorize(const MatrixXd& Phi);

/// factorize(build_observability(sys, T)) plus the impulse-response cache,
/// so windows with known inputs can be decoded.
DecoderMatrices build_decoder_matrices(const LtiSystem& sys, int T);

/// x(k+1) = A x(k), y(k) = C x(k) for K steps. Inputs recorded as zeros.
/// States carry x(0..K); measurements carry y(0..K-1).
Trajectory simulate_closed_loop(const LtiSystem& sys, const VectorXd& x0, int K);

/// x(k+1) = A x(k) + B u(k) driven by the given input sequence. States carry
/// x(0..K); measurements carry y(0..K-1) for K = inputs.size().
Trajectory simulate_open_loop(const LtiSystem& sys, const VectorXd& x0,
                              const std::vector<VectorXd>& inputs);

/// Reads {"A": [[...]], "B": [[...]], "C": [[...]]} from a JSON text file.
/// B may be omitted for autonomous systems. Dimensions are inferred and
/// validated. Throws ConfigError on malformed input.
LtiSystem load_system_file(const std::string& path);

/// Writes the system back in the same format.
void save_system_file(const LtiSystem& sys, const std::string& path);

}  // namespace secest
