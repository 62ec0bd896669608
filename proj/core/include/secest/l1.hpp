#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "secest/errors.hpp"

namespace secest {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class SolveStatus { Optimal, MaxIters, Infeasible };

std::string to_string(SolveStatus s);

/// Equality-constrained l1 program: min ||e||_1 subject to M e = b,
/// with M r x c and r < c. In the decoder M plays Q2' and b the
/// projected window residual.
struct L1Problem {
  MatrixXd M;
  VectorXd b;
  double tol_feas = 1e-8;
  double tol_opt = 1e-6;
  int max_iters = 5000;
};

struct L1Solution {
  VectorXd e_hat;
  double objective = 0.0;
  double feas_residual = 0.0;  // ||M e_hat - b||_2
  int iterations = 0;
  SolveStatus status = SolveStatus::Optimal;
};

/// Solves the program via the split e = e+ - e- and a two-phase revised
/// simplex method. Pivoting is deterministic (Dantzig rule with
/// lowest-index tie breaks, switching to Bland's rule after a degeneracy
/// stall), so a fixed input always yields the same solution. The final
/// vertex is re-solved by least squares on its support to remove
/// accumulated factorization drift.
L1Solution solve_l1_equality(const L1Problem& prob);

/// 1e-6 * max(1, ||e||_inf): the default threshold separating attack
/// entries from numerical noise.
double default_support_eps(const VectorXd& e_hat);

/// Indices i with |e_i| > eps, ascending.
std::vector<int> thresholded_support(const VectorXd& e_hat, double eps);
std::vector<int> thresholded_support(const VectorXd& e_hat);

}  // namespace secest
