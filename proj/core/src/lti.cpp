#include "secest/lti.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <fstream>

#include "nlohmann/json.hpp"

namespace secest {

namespace {

void check_dims(const MatrixXd& A, const MatrixXd& B, const MatrixXd& C) {
  if (A.rows() == 0 || A.rows() != A.cols())
    throw DimensionError("A must be square and nonempty");
  if (B.rows() != A.rows()) throw DimensionError("B row count must match A");
  if (B.cols() < 1) throw DimensionError("B must have at least one column");
  if (C.cols() != A.cols()) throw DimensionError("C column count must match A");
  if (C.rows() < 1) throw DimensionError("C must have at least one row");
}

}  // namespace

LtiSystem LtiSystem::make(MatrixXd A, MatrixXd B, MatrixXd C) {
  check_dims(A, B, C);
  const int p = static_cast<int>(C.rows());
  for (int i = 0; i < p; ++i) {
    if (C.row(i).lpNorm<Eigen::Infinity>() == 0.0)
      throw DimensionError("C has an identically zero row " + std::to_string(i));
  }
  Eigen::ColPivHouseholderQR<MatrixXd> qr(C.transpose());
  qr.setThreshold(1e-12);
  if (qr.rank() < p) throw DimensionError("C must have full row rank");
  LtiSystem sys;
  sys.n = static_cast<int>(A.rows());
  sys.m = static_cast<int>(B.cols());
  sys.p = p;
  sys.A = std::move(A);
  sys.B = std::move(B);
  sys.C = std::move(C);
  return sys;
}

LtiSystem LtiSystem::autonomous(MatrixXd A, MatrixXd C) {
  MatrixXd B = MatrixXd::Zero(A.rows(), 1);
  return make(std::move(A), std::move(B), std::move(C));
}

MatrixXd build_observability(const LtiSystem& sys, int T) {
  if (T < 1) throw DimensionError("window length must be >= 1");
  MatrixXd Phi(sys.p * T, sys.n);
  MatrixXd CAk = sys.C;
  for (int k = 0; k < T; ++k) {
    Phi.middleRows(k * sys.p, sys.p) = CAk;
    if (k + 1 < T) CAk = CAk * sys.A;
  }
  return Phi;
}

DecoderMatrices factorize(const MatrixXd& Phi) {
  const int rows = static_cast<int>(Phi.rows());
  const int n = static_cast<int>(Phi.cols());
  if (rows <= n)
    throw DimensionError("Phi must be tall: p*T > n is required for a residual subspace");

  Eigen::HouseholderQR<MatrixXd> qr(Phi);
  MatrixXd Q = qr.householderQ() * MatrixXd::Identity(rows, rows);
  MatrixXd R1 = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();

  const double dmax = R1.diagonal().cwiseAbs().maxCoeff();
  const double tol = 1e-9 * dmax;
  for (int i = 0; i < n; ++i) {
    if (std::abs(R1(i, i)) <= tol)
      throw UnobservableSystem("rank(Phi) < n: the system is unobservable over this window");
  }

  DecoderMatrices dm;
  dm.Phi = Phi;
  dm.Q1 = Q.leftCols(n);
  dm.Q2 = Q.rightCols(rows - n);
  dm.R1 = std::move(R1);
  dm.n = n;
  dm.T = 0;
  dm.p = 0;
  return dm;
}

DecoderMatrices build_decoder_matrices(const LtiSystem& sys, int T) {
  DecoderMatrices dm = factorize(build_observability(sys, T));
  dm.T = T;
  dm.p = sys.p;
  dm.markov.reserve(T > 0 ? T - 1 : 0);
  MatrixXd CAk = sys.C;
  for (int j = 0; j + 1 < T; ++j) {
    dm.markov.push_back(CAk * sys.B);
    CAk = CAk * sys.A;
  }
  return dm;
}

Trajectory simulate_closed_loop(const LtiSystem& sys, const VectorXd& x0, int K) {
  if (x0.size() != sys.n) throw DimensionError("x0 size must equal n");
  if (K < 1) throw DimensionError("K must be >= 1");
  Trajectory tr;
  tr.states.reserve(K + 1);
  tr.inputs.assign(K, VectorXd::Zero(sys.m));
  tr.measurements.reserve(K);
  VectorXd x = x0;
  for (int k = 0; k < K; ++k) {
    tr.states.push_back(x);
    tr.measurements.push_back(sys.C * x);
    x = sys.A * x;
  }
  tr.states.push_back(x);
  return tr;
}

Trajectory simulate_open_loop(const LtiSystem& sys, const VectorXd& x0,
                              const std::vector<VectorXd>& inputs) {
  if (x0.size() != sys.n) throw DimensionError("x0 size must equal n");
  if (inputs.empty()) throw DimensionError("input sequence must be nonempty");
  Trajectory tr;
  const int K = static_cast<int>(inputs.size());
  tr.states.reserve(K + 1);
  tr.inputs = inputs;
  tr.measurements.reserve(K);
  VectorXd x = x0;
  for (int k = 0; k < K; ++k) {
    if (inputs[k].size() != sys.m) throw DimensionError("input size must equal m");
    tr.states.push_back(x);
    tr.measurements.push_back(sys.C * x);
    x = sys.A * x + sys.B * inputs[k];
  }
  tr.states.push_back(x);
  return tr;
}

namespace {

MatrixXd parse_matrix(const nlohmann::json& j, const std::string& key) {
  if (!j.is_array() || j.empty())
    throw ConfigError("matrix \"" + key + "\" must be a nonempty array of rows");
  const auto rows = j.size();
  std::size_t cols = 0;
  if (!j[0].is_array() || j[0].empty())
    throw ConfigError("matrix \"" + key + "\" rows must be nonempty arrays");
  cols = j[0].size();
  MatrixXd M(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw ConfigError("matrix \"" + key + "\" has ragged rows");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number())
        throw ConfigError("matrix \"" + key + "\" entries must be numbers");
      M(r, c) = j[r][c].get<double>();
    }
  }
  return M;
}

nlohmann::json matrix_to_json(const MatrixXd& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

LtiSystem load_system_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open system file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed JSON in " + path + ": " + e.what());
  }
  if (!j.contains("A") || !j.contains("C"))
    throw ConfigError("system file must contain keys \"A\" and \"C\"");
  MatrixXd A = parse_matrix(j["A"], "A");
  MatrixXd C = parse_matrix(j["C"], "C");
  MatrixXd B = j.contains("B") ? parse_matrix(j["B"], "B")
                               : MatrixXd::Zero(A.rows(), 1);
  try {
    return LtiSystem::make(std::move(A), std::move(B), std::move(C));
  } catch (const DimensionError& e) {
    throw ConfigError(std::string("invalid system in ") + path + ": " + e.what());
  }
}

void save_system_file(const LtiSystem& sys, const std::string& path) {
  nlohmann::json j;
  j["A"] = matrix_to_json(sys.A);
  j["B"] = matrix_to_json(sys.B);
  j["C"] = matrix_to_json(sys.C);
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write system file: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace secest
