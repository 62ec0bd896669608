#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "secest/decoder.hpp"
#include "secest/quadrotor.hpp"

using namespace secest;

namespace {

struct DecodeSetup {
  LtiSystem closed;
  DecoderMatrices dm;
  MeasurementWindow window;
};

DecodeSetup make_decode_setup(int T) {
  const QuadrotorModel model = build_quadrotor({});
  const MeasurementSelection sel = select_measurements(5);
  const FeedbackDesign design =
      design_secure_feedback(model, sel.C, default_pole_request(), 1000, 1);

  DecodeSetup s;
  s.closed = LtiSystem::autonomous(design.A_closed, sel.C);
  s.dm = build_decoder_matrices(s.closed, T);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss(0.0, 1.0);
  VectorXd x(10);
  for (int i = 0; i < 10; ++i) x(i) = gauss(rng);
  std::vector<VectorXd> ys(static_cast<std::size_t>(T));
  for (int k = 0; k < T; ++k) {
    VectorXd e = VectorXd::Zero(5);
    e(k % 5) = 3.0 + k;
    e((k + 2) % 5) = -1.5;
    ys[static_cast<std::size_t>(k)] = s.closed.C * x + e;
    x = s.closed.A * x;
  }
  s.window = MeasurementWindow::from_samples(ys);
  return s;
}

void BM_DecodeWindow(benchmark::State& state) {
  const DecodeSetup s = make_decode_setup(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    const DecodeResult res = decode(s.dm, s.window);
    benchmark::DoNotOptimize(res.x0_hat);
  }
}
BENCHMARK(BM_DecodeWindow)->Arg(10)->Arg(20)->Arg(40);

void BM_L1Solve(benchmark::State& state) {
  const int r = static_cast<int>(state.range(0));
  const int c = 2 * r;
  std::mt19937_64 rng(9);
  std::normal_distribution<double> gauss(0.0, 1.0);
  L1Problem prob;
  prob.M.resize(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) prob.M(i, j) = gauss(rng);
  prob.b.resize(r);
  for (int i = 0; i < r; ++i) prob.b(i) = gauss(rng);
  for (auto _ : state) {
    const L1Solution sol = solve_l1_equality(prob);
    benchmark::DoNotOptimize(sol.objective);
  }
}
BENCHMARK(BM_L1Solve)->Arg(20)->Arg(40)->Arg(80);

void BM_DareSolve(benchmark::State& state) {
  const QuadrotorModel model = build_quadrotor({});
  const MatrixXd Qc = default_lqr_Qc();
  const MatrixXd Rc = default_lqr_Rc();
  for (auto _ : state) {
    const MatrixXd P = solve_dare(model.A0, model.B, Qc, Rc);
    benchmark::DoNotOptimize(P);
  }
}
BENCHMARK(BM_DareSolve);

}  // namespace

BENCHMARK_MAIN();
