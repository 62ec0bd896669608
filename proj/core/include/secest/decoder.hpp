#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "secest/l1.hpp"
#include "secest/lti.hpp"

namespace secest {

/// Stacked measurement window Y = [y(s); y(s+1); ...; y(s+T-1)] together
/// with the inputs u(s..s+T-2) applied inside the window (absent for
/// autonomous runs). The decoder treats the window start as time 0.
struct MeasurementWindow {
  VectorXd Y;
  std::vector<VectorXd> known_inputs;
  int T = 0;
  int p = 0;

  /// Stacks per-step measurements; us must be empty or hold T-1 inputs.
  static MeasurementWindow from_samples(const std::vector<VectorXd>& ys,
                                        const std::vector<VectorXd>& us = {});
};

/// Recovered stacked attack with its per-step slices e_hat(0..T-1) and
/// per-step thresholded supports.
struct AttackEstimate {
  VectorXd E_hat;
  std::vector<VectorXd> per_step;
  std::vector<std::vector<int>> support;
};

struct SolverConfig {
  double tol_feas = 1e-8;
  double tol_opt = 1e-6;
  int max_iters = 5000;
  double support_eps = -1.0;  // negative: per-step default threshold
};

struct DecodeResult {
  VectorXd x0_hat;  // state at the start of the window
  AttackEstimate attack;
  SolveStatus status = SolveStatus::Optimal;
  int iterations = 0;
  double feas_residual = 0.0;
};

/// Eigenvector support analysis of a closed-loop system. s_i counts the
/// measurement channels excited by eigenvector i; the smallest s_i fixes
/// how many per-step sensor corruptions the decoder can provably undo
/// (q_max) and the window length that certifies it (t_star, computed at
/// q = q_max; -1 when no finite certificate exists).
///
/// The flags record whether the hypotheses behind that certificate hold;
/// when they do not (complex or repeated eigenvalues), supports are still
/// computed from entry magnitudes and the numbers are advisory.
struct CorrectabilityReport {
  Eigen::VectorXcd eigenvalues;
  Eigen::MatrixXcd eigenvectors;  // unit-norm columns
  std::vector<int> supports;
  double eps = 1e-8;
  int s_min = 0;
  int q_max = 0;  // floor((s_min - 1)/2); -1 when s_min = 0
  int t_star = -1;
  bool distinct_real_positive_eigenvalues = false;
  bool C_full_rank = false;
  bool observable = false;
  int p = 0;
  int n = 0;
};

/// Projects a window onto the attack-only subspace: Q2' * (Y - forced
/// response of the known inputs). Zero (to rounding) for attack-free,
/// noise-free windows.
VectorXd residual_projection(const DecoderMatrices& dm, const MeasurementWindow& w);

/// Recovers the sparse stacked attack by l1 minimization over the
/// projected residual, then reconstructs the window's initial state as
/// x0 = R1^-1 * Q1' * (Y - forced - E_hat). Solver status is propagated;
/// callers decide how to degrade on MaxIters/Infeasible.
DecodeResult decode(const DecoderMatrices& dm, const MeasurementWindow& w,
                    const SolverConfig& cfg = {});

/// x(k) reached from x0 after k steps of the model recursion, driven by
/// inputs[0..k-1] when provided.
VectorXd propagate_state(const LtiSystem& sys, const VectorXd& x0, int k,
                         const std::vector<VectorXd>& inputs = {});

/// Computes eigenvalues/eigenvectors of A, the supports s_i of C*v_i
/// (entries above eps * ||C*v_i||_inf count), q_max, and t_star.
CorrectabilityReport correctability_report(const LtiSystem& sys, double eps = 1e-8);

/// Smallest window length T certified to correct q per-step errors for
/// the given supports: the max over subset sizes m of the smallest
/// integer strictly greater than ((m-2)p + min S_m)/(max S_m - 2q),
/// maximized over all m-element subsets S_m, floored at n. The subset
/// maximization is done in closed form by scanning consecutive windows
/// of the ascending-sorted supports. Throws NotCorrectable when
/// s_min <= 2q.
int min_window_length(const CorrectabilityReport& report, int q, int p, int n);

/// Monte-Carlo exact-recovery rate: random initial states and random
/// time-varying attacks with per-step support size drawn from {0..q} and
/// magnitudes mixing scales 1 and 100 (times magnitude_scale). Success
/// means the decoded state matches to 1e-6 * (1 + ||x0||).
double check_q_correctable(const LtiSystem& sys, int q, int T, int trials,
                           std::uint64_t seed, double magnitude_scale = 1.0);

}  // namespace secest
