#include "secest/l1.hpp"

#include <Eigen/LU>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <limits>

namespace secest {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::MaxIters: return "MaxIters";
    case SolveStatus::Infeasible: return "Infeasible";
  }
  return "Unknown";
}

namespace {

constexpr double kReducedCostTol = 1e-9;
constexpr double kPivotTol = 1e-10;
constexpr int kRefactorCadence = 64;
constexpr int kStallLimit = 30;

// Revised simplex over min c'z s.t. [M -M | S] z = b, z >= 0, where S holds
// one signed artificial unit column per row. Column ids: [0, c) for e+,
// [c, 2c) for e-, [2c, 2c + r) for artificials keyed by original row index.
class SimplexLP {
 public:
  SimplexLP(const MatrixXd& M, const VectorXd& b)
      : M_(M), b_(b), c_(static_cast<int>(M.cols())) {
    const int r = static_cast<int>(M.rows());
    art_sign_.resize(r);
    basis_.resize(r);
    in_basis_.assign(2 * c_ + r, false);
    for (int i = 0; i < r; ++i) {
      art_sign_[i] = b(i) >= 0.0 ? 1.0 : -1.0;
      basis_[i] = 2 * c_ + i;
      in_basis_[2 * c_ + i] = true;
      rows_.push_back(i);
    }
    refactor();
  }

  int rows() const { return static_cast<int>(rows_.size()); }
  int iterations() const { return iters_; }

  // Runs simplex pivots until optimal for the given phase. Returns false
  // when the iteration budget ran out first. Apparent optimality or an
  // unbounded ratio test is re-checked once against a fresh factorization
  // so eta-update drift cannot end a phase early.
  bool optimize(bool phase_one, int budget) {
    bland_ = false;
    int stall = 0;
    bool refreshed = false;
    while (iters_ < budget) {
      if (broken_) return false;
      VectorXd y = costs_dual(phase_one);
      int enter = pick_entering(y, phase_one);
      if (enter < 0) {
        if (refreshed) return true;  // reduced costs all nonnegative
        refreshed = true;
        refactor();
        continue;
      }
      VectorXd w = binv_ * column(enter);
      int leave = ratio_test(w);
      if (leave < 0) {
        if (refreshed) return true;  // still unbounded; stuck at this vertex
        refreshed = true;
        refactor();
        continue;
      }
      refreshed = false;
      const double theta = x_basic_(leave) / w(leave);
      pivot(enter, leave, w, theta);
      ++iters_;
      stall = theta <= 1e-13 * (1.0 + x_basic_.cwiseAbs().maxCoeff()) ? stall + 1 : 0;
      if (stall > kStallLimit) bland_ = true;
      if (iters_ % kRefactorCadence == 0) refactor();
    }
    return false;
  }

  double phase_objective(bool phase_one) const {
    double obj = 0.0;
    for (int i = 0; i < rows(); ++i) {
      const int id = basis_[i];
      if (phase_one ? id >= 2 * c_ : id < 2 * c_) obj += x_basic_(i);
    }
    return obj;
  }

  // Pivots zero-valued artificials out of the basis; rows that admit no
  // structural pivot are redundant and get dropped.
  void drive_out_artificials() {
    refactor();
    bool deleted = false;
    for (int pos = 0; pos < rows(); ++pos) {
      if (basis_[pos] < 2 * c_) continue;
      VectorXd row = binv_.row(pos).transpose();
      VectorXd t = active_matrix_.transpose() * row;
      if (!t.allFinite()) continue;
      int enter = -1;
      for (int j = 0; j < 2 * c_ && enter < 0; ++j) {
        if (in_basis_[j]) continue;
        const double a = j < c_ ? t(j) : -t(j - c_);
        if (std::abs(a) > 1e-9) enter = j;
      }
      if (enter >= 0) {
        VectorXd w = binv_ * column(enter);
        pivot(enter, pos, w, 0.0);
      } else {
        dead_rows_.push_back(pos);
        deleted = true;
      }
    }
    if (deleted) erase_dead_rows();
    refactor();
  }

  // Rebuilds binv_ and the basic point from scratch. A numerically singular
  // basis gets repaired by swapping each dependent position back to its
  // row's artificial column; if the repair cannot restore full rank the
  // instance is marked broken and the phase loops report a budget failure
  // instead of returning garbage marked optimal.
  void refactor() {
    rebuild_active();
    const int r = rows();
    for (int attempt = 0; attempt <= r + 1; ++attempt) {
      MatrixXd B(r, r);
      for (int i = 0; i < r; ++i) B.col(i) = column(basis_[i]);
      Eigen::ColPivHouseholderQR<MatrixXd> qr(B);
      qr.setThreshold(1e-11);
      if (qr.rank() == r) {
        binv_ = qr.inverse();
        x_basic_ = binv_ * active_rhs_;
        if (binv_.allFinite() && x_basic_.allFinite()) return;
      }
      repaired_ = true;
      if (!swap_in_artificials(qr)) reset_to_artificial_basis();
    }
    broken_ = true;
    binv_ = MatrixXd::Identity(r, r);
    x_basic_ = VectorXd::Zero(r);
  }

  // True when a singular-basis repair fired since the last call.
  bool consume_repaired() {
    const bool was = repaired_;
    repaired_ = false;
    return was && !broken_;
  }

  bool broken() const { return broken_; }

  VectorXd extract() const {
    VectorXd e = VectorXd::Zero(c_);
    for (int i = 0; i < rows(); ++i) {
      const int id = basis_[i];
      if (id < c_)
        e(id) += x_basic_(i);
      else if (id < 2 * c_)
        e(id - c_) -= x_basic_(i);
    }
    return e;
  }

  std::vector<int> basic_support() const {
    std::vector<int> idx;
    for (int i = 0; i < rows(); ++i) {
      const int id = basis_[i];
      if (id < 2 * c_) idx.push_back(id < c_ ? id : id - c_);
    }
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    return idx;
  }

 private:
  // Replaces every basis position outside the QR pivot set with a free
  // artificial column, preferring the position's own row. Returns false
  // when the pass changed nothing, so the caller can fall back to a full
  // restart basis.
  bool swap_in_artificials(const Eigen::ColPivHouseholderQR<MatrixXd>& qr) {
    const int r = rows();
    const int rank = static_cast<int>(qr.rank());
    std::vector<bool> independent(r, false);
    const auto& perm = qr.colsPermutation().indices();
    for (int k = 0; k < rank; ++k) independent[perm(k)] = true;
    bool changed = false;
    for (int pos = 0; pos < r; ++pos) {
      if (independent[pos] || basis_[pos] >= 2 * c_) continue;
      int art = 2 * c_ + rows_[pos];
      if (in_basis_[art]) {
        art = -1;
        for (int i = 0; i < r && art < 0; ++i)
          if (!in_basis_[2 * c_ + rows_[i]]) art = 2 * c_ + rows_[i];
        if (art < 0) continue;
      }
      in_basis_[basis_[pos]] = false;
      in_basis_[art] = true;
      basis_[pos] = art;
      changed = true;
    }
    return changed;
  }

  // Restores the initial all-artificial basis, which is always nonsingular;
  // the caller then re-establishes feasibility from phase one.
  void reset_to_artificial_basis() {
    in_basis_.assign(2 * c_ + static_cast<int>(art_sign_.size()), false);
    for (int pos = 0; pos < rows(); ++pos) {
      basis_[pos] = 2 * c_ + rows_[pos];
      in_basis_[basis_[pos]] = true;
    }
  }

  VectorXd column(int id) const {
    const int r = rows();
    VectorXd col(r);
    if (id < c_) {
      col = active_matrix_.col(id);
    } else if (id < 2 * c_) {
      col = -active_matrix_.col(id - c_);
    } else {
      col.setZero();
      for (int i = 0; i < r; ++i)
        if (rows_[i] == id - 2 * c_) col(i) = art_sign_[id - 2 * c_];
    }
    return col;
  }

  VectorXd costs_dual(bool phase_one) const {
    VectorXd c_B(rows());
    for (int i = 0; i < rows(); ++i) {
      const int id = basis_[i];
      const bool structural = id < 2 * c_;
      c_B(i) = phase_one ? (structural ? 0.0 : 1.0) : (structural ? 1.0 : 0.0);
    }
    return binv_.transpose() * c_B;
  }

  int pick_entering(const VectorXd& y, bool phase_one) const {
    const double struct_cost = phase_one ? 0.0 : 1.0;
    VectorXd t = active_matrix_.transpose() * y;
    int best = -1;
    // Under Bland's rule the vertex is degenerate; roundoff-scale reduced
    // costs would keep the pivot loop churning, so demand a real descent.
    double best_d = bland_ ? -1e-7 : -kReducedCostTol;
    for (int j = 0; j < 2 * c_; ++j) {
      if (in_basis_[j]) continue;
      const double d = struct_cost - (j < c_ ? t(j) : -t(j - c_));
      if (d < best_d) {
        best = j;
        best_d = d;
        if (bland_) break;  // lowest index with negative reduced cost
      }
    }
    return best;
  }

  int ratio_test(const VectorXd& w) const {
    int leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < rows(); ++i) {
      if (w(i) <= kPivotTol) continue;
      const double ratio = std::max(x_basic_(i), 0.0) / w(i);
      if (ratio < best - 1e-12 ||
          (ratio < best + 1e-12 && (leave < 0 || basis_[i] < basis_[leave]))) {
        best = ratio;
        leave = i;
      }
    }
    return leave;
  }

  void pivot(int enter, int leave, const VectorXd& w, double theta) {
    x_basic_ -= theta * w;
    x_basic_(leave) = theta;
    in_basis_[basis_[leave]] = false;
    in_basis_[enter] = true;
    basis_[leave] = enter;
    VectorXd u = w / w(leave);
    u(leave) = 1.0 - 1.0 / w(leave);
    binv_ -= u * binv_.row(leave);
  }

  void erase_dead_rows() {
    std::sort(dead_rows_.rbegin(), dead_rows_.rend());
    for (int pos : dead_rows_) {
      in_basis_[basis_[pos]] = false;
      basis_.erase(basis_.begin() + pos);
      rows_.erase(rows_.begin() + pos);
    }
    dead_rows_.clear();
  }

  void rebuild_active() {
    const int r = rows();
    active_matrix_.resize(r, c_);
    active_rhs_.resize(r);
    for (int i = 0; i < r; ++i) {
      active_matrix_.row(i) = M_.row(rows_[i]);
      active_rhs_(i) = b_(rows_[i]);
    }
  }

  const MatrixXd& M_;
  const VectorXd& b_;
  int c_;
  std::vector<double> art_sign_;
  std::vector<int> basis_;
  std::vector<bool> in_basis_;
  std::vector<int> rows_;  // active original row indices
  std::vector<int> dead_rows_;
  MatrixXd active_matrix_;
  VectorXd active_rhs_;
  MatrixXd binv_;
  VectorXd x_basic_;
  int iters_ = 0;
  bool bland_ = false;
  bool repaired_ = false;
  bool broken_ = false;
};

}  // namespace

L1Solution solve_l1_equality(const L1Problem& prob) {
  const int r = static_cast<int>(prob.M.rows());
  const int c = static_cast<int>(prob.M.cols());
  if (r < 1 || c < 1) throw DimensionError("l1 problem must be nonempty");
  if (r >= c) throw DimensionError("l1 problem requires r < c");
  if (prob.b.size() != r) throw DimensionError("b size must match M rows");
  if (prob.tol_feas <= 0.0 || prob.tol_opt <= 0.0)
    throw DimensionError("tolerances must be strictly positive");
  if (prob.max_iters < 1) throw DimensionError("max_iters must be positive");

  L1Solution sol;
  const double b_norm = prob.b.norm();
  if (b_norm == 0.0) {
    sol.e_hat = VectorXd::Zero(c);
    return sol;
  }

  SimplexLP lp(prob.M, prob.b);
  const double feas_gate = prob.tol_feas * (1.0 + b_norm);

  // One retry: when a singular-basis repair re-seats artificial columns the
  // basic point may have drifted off the constraints, so feasibility must be
  // re-established from phase one before the result can be trusted.
  bool p1_done = false;
  bool p2_done = false;
  bool p1_feasible = false;
  for (int attempt = 0; attempt < 2; ++attempt) {
    p1_done = lp.optimize(true, prob.max_iters);
    p1_feasible = p1_done && lp.phase_objective(true) <= feas_gate;
    if (!p1_feasible) break;
    lp.drive_out_artificials();
    p2_done = lp.optimize(false, prob.max_iters);
    lp.refactor();
    if (!lp.consume_repaired()) break;
  }
  if (!p1_feasible) {
    const VectorXd e1 = lp.extract();
    const bool finite = e1.allFinite();
    sol.e_hat = finite ? e1 : VectorXd::Zero(c);
    sol.objective = sol.e_hat.lpNorm<1>();
    sol.feas_residual = (prob.M * sol.e_hat - prob.b).norm();
    sol.iterations = lp.iterations();
    sol.status = p1_done && finite ? SolveStatus::Infeasible : SolveStatus::MaxIters;
    return sol;
  }

  VectorXd e = lp.extract();

  // Least-squares refit on the vertex support. The basic columns are
  // linearly independent, so this recomputes the same vertex with one
  // well-conditioned solve and discards eta-update drift.
  std::vector<int> support = lp.basic_support();
  if (!support.empty()) {
    MatrixXd Ms(r, support.size());
    for (std::size_t k = 0; k < support.size(); ++k) Ms.col(k) = prob.M.col(support[k]);
    VectorXd es = Ms.colPivHouseholderQr().solve(prob.b);
    VectorXd polished = VectorXd::Zero(c);
    for (std::size_t k = 0; k < support.size(); ++k) polished(support[k]) = es(k);
    const double res_raw = (prob.M * e - prob.b).norm();
    const double res_pol = (prob.M * polished - prob.b).norm();
    if (res_pol <= res_raw + 1e-12 * (1.0 + b_norm) &&
        polished.lpNorm<1>() <= e.lpNorm<1>() + prob.tol_opt * (1.0 + e.lpNorm<1>())) {
      e = polished;
    }
  }

  sol.e_hat = e;
  sol.objective = e.lpNorm<1>();
  sol.feas_residual = (prob.M * e - prob.b).norm();
  sol.iterations = lp.iterations();
  if (!e.allFinite() || !std::isfinite(sol.feas_residual)) {
    sol.e_hat = VectorXd::Zero(c);
    sol.objective = 0.0;
    sol.feas_residual = b_norm;
    sol.status = SolveStatus::MaxIters;
  } else if (!p2_done || lp.broken()) {
    sol.status = SolveStatus::MaxIters;
  } else if (sol.feas_residual > feas_gate) {
    sol.status = SolveStatus::Infeasible;
  } else {
    sol.status = SolveStatus::Optimal;
  }
  return sol;
}

double default_support_eps(const VectorXd& e_hat) {
  const double scale = e_hat.size() > 0 ? e_hat.lpNorm<Eigen::Infinity>() : 0.0;
  return 1e-6 * std::max(1.0, scale);
}

std::vector<int> thresholded_support(const VectorXd& e_hat, double eps) {
  if (eps < 0.0) throw DimensionError("support threshold must be nonnegative");
  std::vector<int> idx;
  for (int i = 0; i < e_hat.size(); ++i)
    if (std::abs(e_hat(i)) > eps) idx.push_back(i);
  return idx;
}

std::vector<int> thresholded_support(const VectorXd& e_hat) {
  return thresholded_support(e_hat, default_support_eps(e_hat));
}

}  // namespace secest
