#include <cstdio>
#include <exception>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "secest/decoder.hpp"
#include "secest/errors.hpp"
#include "secest/lti.hpp"
#include "secest/quadrotor.hpp"
#include "secest/scenario.hpp"

namespace {

using secest::ConfigError;

int cmd_run(const std::string& config_path, const std::optional<std::string>& out,
            const std::optional<std::uint64_t>& seed,
            const std::vector<std::string>& modes) {
  secest::ScenarioConfig cfg = secest::load_scenario_file(config_path);
  if (seed) cfg.seed = *seed;
  if (out) cfg.out_dir = *out;
  if (!modes.empty()) {
    cfg.modes.clear();
    for (const auto& m : modes) {
      if (m == "kf_only")
        cfg.modes.push_back(secest::EstimatorMode::KfOnly);
      else if (m == "se_only")
        cfg.modes.push_back(secest::EstimatorMode::SeOnly);
      else if (m == "kf_plus_se")
        cfg.modes.push_back(secest::EstimatorMode::KfPlusSe);
      else
        throw ConfigError("unknown estimator mode: " + m);
    }
  }
  secest::RunReport rep = secest::run_scenario(cfg);
  secest::emit_outputs(rep, cfg.out_dir);

  std::printf("scenario %s: horizon %d, window %d, %d measurements\n",
              secest::to_string(cfg.kind).c_str(), cfg.K, cfg.T,
              static_cast<int>(rep.measurement_indices.size()));
  std::printf("design: s_min %d, q_max %d, T* %d%s\n", rep.report.s_min,
              rep.report.q_max, rep.report.t_star,
              rep.window_below_certificate ? " (window below certificate)" : "");
  for (const auto& run : rep.runs)
    std::printf("%-10s state_rmse %.6g  path_error %.6g  decode_failures %d\n",
                secest::to_string(run.mode).c_str(), run.state_rmse, run.path_error,
                run.decode_failures);
  std::printf("outputs written to %s\n", cfg.out_dir.c_str());
  return 0;
}

int cmd_analyze(const std::string& system_path, const std::optional<int>& q,
                double eps) {
  secest::LtiSystem sys = secest::load_system_file(system_path);
  secest::CorrectabilityReport rep = secest::correctability_report(sys, eps);

  std::printf("system: n = %d states, p = %d sensors\n", rep.n, rep.p);
  std::printf("observable: %s, C full rank: %s\n", rep.observable ? "yes" : "no",
              rep.C_full_rank ? "yes" : "no");
  std::printf("eigenvalues distinct/real/positive: %s\n",
              rep.distinct_real_positive_eigenvalues ? "yes" : "no");
  std::printf("eigenvector measurement supports s_i:");
  for (int s : rep.supports) std::printf(" %d", s);
  std::printf("\n");
  for (int i = 0; i < rep.eigenvalues.size(); ++i)
    std::printf("  lambda_%d = %.12g%+.12gi  (support %d)\n", i,
                rep.eigenvalues(i).real(), rep.eigenvalues(i).imag(),
                rep.supports[static_cast<std::size_t>(i)]);
  std::printf("s_min = %d\n", rep.s_min);
  std::printf("q_max = %d\n", rep.q_max);
  if (q) {
    const int t = secest::min_window_length(rep, *q, rep.p, rep.n);
    std::printf("T*(q = %d) = %d\n", *q, t);
  } else if (rep.t_star > 0) {
    std::printf("T*(q = %d) = %d\n", rep.q_max, rep.t_star);
  } else {
    std::printf("T* = n/a (no correctable q)\n");
  }
  return 0;
}

int cmd_design(const std::string& config_path, const std::string& out,
               const std::optional<std::uint64_t>& seed) {
  secest::ScenarioConfig cfg = secest::load_scenario_file(config_path);
  if (seed) cfg.seed = *seed;

  const secest::QuadrotorModel model = secest::build_quadrotor(cfg.plant);
  const secest::MeasurementSelection sel =
      cfg.measurement_indices.empty() ? secest::select_measurements(cfg.n_y)
                                      : secest::select_measurements(cfg.measurement_indices);
  const secest::MatrixXd C_design =
      cfg.design_support == "full_state"
          ? secest::MatrixXd(secest::MatrixXd::Identity(model.kStates, model.kStates))
          : sel.C;
  const secest::VectorXd init =
      cfg.initial_poles.size() ? cfg.initial_poles : secest::default_pole_request();
  const secest::FeedbackDesign design = secest::design_secure_feedback(
      model, C_design, init, cfg.design_max_tries, secest::derive_seed(cfg.seed, 3));

  const secest::LtiSystem closed =
      secest::LtiSystem::make(design.A_closed, model.B, sel.C);
  const secest::CorrectabilityReport rep = secest::correctability_report(closed);

  auto matrix = [](const secest::MatrixXd& M) {
    std::vector<std::vector<double>> rows;
    for (int r = 0; r < M.rows(); ++r)
      rows.emplace_back(M.row(r).begin(), M.row(r).end());
    return rows;
  };
  nlohmann::ordered_json j;
  j["A"] = matrix(design.A_closed);
  j["B"] = matrix(model.B);
  j["C"] = matrix(sel.C);
  j["G"] = matrix(design.G);
  nlohmann::ordered_json poles = nlohmann::ordered_json::array();
  for (int i = 0; i < design.achieved.size(); ++i)
    poles.push_back({design.achieved(i).real(), design.achieved(i).imag()});
  j["poles"] = poles;
  j["tries"] = design.tries;
  j["s_min"] = rep.s_min;
  j["q_max"] = rep.q_max;
  j["t_star"] = rep.t_star;

  std::ofstream file(out);
  if (!file) throw ConfigError("cannot write " + out);
  file << j.dump(2) << "\n";

  std::printf("design converged after %d tries: s_min %d, q_max %d, T* %d\n",
              design.tries, rep.s_min, rep.q_max, rep.t_star);
  std::printf("closed-loop system and gain written to %s\n", out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Secure state estimation scenarios for a quadrotor under sensor attacks"};
  app.require_subcommand(1);

  std::string run_config;
  std::optional<std::string> run_out;
  std::optional<std::uint64_t> run_seed;
  std::vector<std::string> run_modes;
  CLI::App* run = app.add_subcommand("run", "execute a scenario config");
  run->add_option("config", run_config, "scenario config file (JSON)")->required();
  run->add_option("--out", run_out, "output directory (overrides config)");
  run->add_option("--seed", run_seed, "master seed (overrides config)");
  run->add_option("--mode", run_modes,
                  "estimator mode to run, repeatable: kf_only, se_only, kf_plus_se");

  std::string analyze_system;
  std::optional<int> analyze_q;
  double analyze_eps = 1e-8;
  CLI::App* analyze =
      app.add_subcommand("analyze", "print the correctability report of a system file");
  analyze->add_option("system", analyze_system, "system file (JSON with A, B, C)")
      ->required();
  analyze->add_option("--q", analyze_q, "report T* for this attack sparsity");
  analyze->add_option("--eps", analyze_eps, "support threshold (relative)");

  std::string design_config;
  std::string design_out = "design.json";
  std::optional<std::uint64_t> design_seed;
  CLI::App* design =
      app.add_subcommand("design", "search a feedback gain with secure eigenstructure");
  design->add_option("config", design_config, "scenario config file (JSON)")->required();
  design->add_option("--out", design_out, "destination file");
  design->add_option("--seed", design_seed, "master seed (overrides config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (run->parsed()) return cmd_run(run_config, run_out, run_seed, run_modes);
    if (analyze->parsed()) return cmd_analyze(analyze_system, analyze_q, analyze_eps);
    if (design->parsed()) return cmd_design(design_config, design_out, design_seed);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
