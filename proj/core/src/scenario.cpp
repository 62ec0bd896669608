#include "secest/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "json.hpp"

namespace secest {

using json = nlohmann::ordered_json;

std::string to_string(ScenarioKind kind) {
  return kind == ScenarioKind::Mitm ? "mitm" : "gps";
}

namespace {

ScenarioKind scenario_from_name(const std::string& s) {
  if (s == "mitm") return ScenarioKind::Mitm;
  if (s == "gps") return ScenarioKind::Gps;
  throw ConfigError("unknown scenario kind: " + s);
}

AttackKind attack_from_name(const std::string& s) {
  if (s == "none") return AttackKind::None;
  if (s == "mitm_ramp") return AttackKind::MitmRamp;
  if (s == "gps_sinusoid") return AttackKind::GpsSinusoid;
  throw ConfigError("unknown attack kind: " + s);
}

std::string attack_name(AttackKind k) {
  switch (k) {
    case AttackKind::None: return "none";
    case AttackKind::MitmRamp: return "mitm_ramp";
    case AttackKind::GpsSinusoid: return "gps_sinusoid";
  }
  return "none";
}

EstimatorMode mode_from_name(const std::string& s) {
  if (s == "kf_only") return EstimatorMode::KfOnly;
  if (s == "se_only") return EstimatorMode::SeOnly;
  if (s == "kf_plus_se") return EstimatorMode::KfPlusSe;
  throw ConfigError("unknown estimator mode: " + s);
}

}  // namespace

ScenarioConfig default_mitm_config() {
  ScenarioConfig cfg;
  cfg.kind = ScenarioKind::Mitm;
  cfg.attack.kind = AttackKind::MitmRamp;
  cfg.K = 120;
  cfg.waypoints = {{0, {0.0, 0.0, 0.0}}, {120, {6.0, 4.5, 3.0}}};
  cfg.out_dir = "out/mitm";
  return cfg;
}

ScenarioConfig default_gps_config() {
  ScenarioConfig cfg;
  cfg.kind = ScenarioKind::Gps;
  cfg.attack.kind = AttackKind::GpsSinusoid;
  cfg.K = 150;
  cfg.waypoints = {{0, {0.0, 0.0, 0.0}}, {150, {7.5, 4.5, 3.0}}};
  cfg.out_dir = "out/gps";
  return cfg;
}

void validate_config(const ScenarioConfig& cfg) {
  if (cfg.measurement_indices.empty()) {
    if (cfg.n_y < 3 || cfg.n_y > QuadrotorModel::kStates)
      throw ConfigError("n_y must lie in [3, 10]");
  } else {
    select_measurements(cfg.measurement_indices);
  }
  if (cfg.design != "secure_placement" && cfg.design != "lqr")
    throw ConfigError("design must be secure_placement or lqr");
  if (cfg.design_support != "full_state" && cfg.design_support != "measured")
    throw ConfigError("design_support must be full_state or measured");
  if (cfg.design_max_tries < 1) throw ConfigError("design_max_tries must be positive");
  if (cfg.initial_poles.size() != 0 &&
      cfg.initial_poles.size() != QuadrotorModel::kStates)
    throw ConfigError("initial_poles needs one entry per state");
  if (cfg.noise_std < 0.0) throw ConfigError("noise_std must be nonnegative");
  if (cfg.p0 <= 0.0) throw ConfigError("p0 must be positive");
  if (cfg.qn < 0.0) throw ConfigError("qn must be nonnegative");
  if (cfg.modes.empty()) throw ConfigError("at least one estimator mode required");
  if (cfg.T < 2) throw ConfigError("window must be at least 2");
  if (cfg.K <= cfg.T) throw ConfigError("horizon must exceed the window");
  if (cfg.waypoints.empty()) throw ConfigError("at least one waypoint required");
  if (cfg.waypoints.front().k != 0) throw ConfigError("first waypoint must sit at k = 0");
  for (std::size_t i = 1; i < cfg.waypoints.size(); ++i)
    if (cfg.waypoints[i].k <= cfg.waypoints[i - 1].k)
      throw ConfigError("waypoint steps must increase");
  if (cfg.out_dir.empty()) throw ConfigError("out_dir must not be empty");
  if (cfg.plant.dt <= 0.0) throw ConfigError("plant dt must be positive");
  if (cfg.attack.kind == AttackKind::GpsSinusoid && cfg.attack.period <= 0.0)
    throw ConfigError("sinusoid period must be positive");
}

ScenarioConfig load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("malformed config " + path + ": " + e.what());
  }

  try {
    if (!j.contains("scenario")) throw ConfigError("config needs a scenario key");
    ScenarioConfig cfg = scenario_from_name(j.at("scenario").get<std::string>()) ==
                                 ScenarioKind::Mitm
                             ? default_mitm_config()
                             : default_gps_config();

    if (j.contains("plant")) {
      const auto& p = j["plant"];
      if (p.contains("dt")) cfg.plant.dt = p["dt"].get<double>();
      if (p.contains("tau")) cfg.plant.tau = p["tau"].get<double>();
      if (p.contains("kappa")) cfg.plant.kappa = p["kappa"].get<double>();
      if (p.contains("gravity")) cfg.plant.gravity = p["gravity"].get<double>();
      if (p.contains("thrust_gain"))
        cfg.plant.thrust_gain = p["thrust_gain"].get<double>();
    }
    if (j.contains("measurements")) {
      const auto& m = j["measurements"];
      if (m.contains("indices")) {
        cfg.measurement_indices = m["indices"].get<std::vector<int>>();
        cfg.n_y = static_cast<int>(cfg.measurement_indices.size());
      } else if (m.contains("n_y")) {
        cfg.n_y = m["n_y"].get<int>();
        cfg.measurement_indices.clear();
      }
    }
    if (j.contains("design")) {
      const auto& d = j["design"];
      if (d.contains("kind")) cfg.design = d["kind"].get<std::string>();
      if (d.contains("support")) cfg.design_support = d["support"].get<std::string>();
      if (d.contains("max_tries")) cfg.design_max_tries = d["max_tries"].get<int>();
      if (d.contains("initial_poles")) {
        const auto poles = d["initial_poles"].get<std::vector<double>>();
        cfg.initial_poles =
            Eigen::Map<const VectorXd>(poles.data(), static_cast<long>(poles.size()));
      }
    }
    if (j.contains("attack")) {
      const auto& a = j["attack"];
      if (a.contains("kind")) cfg.attack.kind = attack_from_name(a["kind"].get<std::string>());
      if (a.contains("slope")) cfg.attack.slope = a["slope"].get<double>();
      if (a.contains("ramp_exponent"))
        cfg.attack.ramp_exponent = a["ramp_exponent"].get<double>();
      if (a.contains("amplitude")) cfg.attack.amplitude = a["amplitude"].get<double>();
      if (a.contains("period")) cfg.attack.period = a["period"].get<double>();
      if (a.contains("noise_std")) cfg.attack.noise_std = a["noise_std"].get<double>();
      if (a.contains("seed")) cfg.attack.seed = a["seed"].get<std::uint64_t>();
    }
    if (j.contains("noise_std")) cfg.noise_std = j["noise_std"].get<double>();
    if (j.contains("kalman")) {
      const auto& k = j["kalman"];
      if (k.contains("p0")) cfg.p0 = k["p0"].get<double>();
      if (k.contains("qn")) cfg.qn = k["qn"].get<double>();
    }
    if (j.contains("modes")) {
      cfg.modes.clear();
      for (const auto& m : j["modes"]) cfg.modes.push_back(mode_from_name(m.get<std::string>()));
    }
    if (j.contains("window")) cfg.T = j["window"].get<int>();
    if (j.contains("horizon")) cfg.K = j["horizon"].get<int>();
    if (j.contains("waypoints")) {
      cfg.waypoints.clear();
      for (const auto& w : j["waypoints"]) {
        Waypoint wp;
        wp.k = w.at("k").get<int>();
        const auto pos = w.at("pos").get<std::vector<double>>();
        if (pos.size() != 3) throw ConfigError("waypoint pos needs 3 entries");
        wp.pos = Eigen::Vector3d(pos[0], pos[1], pos[2]);
        cfg.waypoints.push_back(wp);
      }
    }
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();

    validate_config(cfg);
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError("malformed config " + path + ": " + e.what());
  }
}

void save_scenario_file(const ScenarioConfig& cfg, const std::string& path) {
  json j;
  j["scenario"] = to_string(cfg.kind);
  j["plant"] = {{"dt", cfg.plant.dt},
                {"tau", cfg.plant.tau},
                {"kappa", cfg.plant.kappa},
                {"gravity", cfg.plant.gravity},
                {"thrust_gain", cfg.plant.thrust_gain}};
  if (cfg.measurement_indices.empty())
    j["measurements"] = {{"n_y", cfg.n_y}};
  else
    j["measurements"] = {{"indices", cfg.measurement_indices}};
  json d = {{"kind", cfg.design},
            {"support", cfg.design_support},
            {"max_tries", cfg.design_max_tries}};
  if (cfg.initial_poles.size() != 0)
    d["initial_poles"] =
        std::vector<double>(cfg.initial_poles.data(),
                            cfg.initial_poles.data() + cfg.initial_poles.size());
  j["design"] = d;
  j["attack"] = {{"kind", attack_name(cfg.attack.kind)},
                 {"slope", cfg.attack.slope},
                 {"ramp_exponent", cfg.attack.ramp_exponent},
                 {"amplitude", cfg.attack.amplitude},
                 {"period", cfg.attack.period},
                 {"noise_std", cfg.attack.noise_std},
                 {"seed", cfg.attack.seed}};
  j["noise_std"] = cfg.noise_std;
  j["kalman"] = {{"p0", cfg.p0}, {"qn", cfg.qn}};
  std::vector<std::string> modes;
  for (auto m : cfg.modes) modes.push_back(to_string(m));
  j["modes"] = modes;
  j["window"] = cfg.T;
  j["horizon"] = cfg.K;
  json wps = json::array();
  for (const auto& w : cfg.waypoints)
    wps.push_back({{"k", w.k}, {"pos", {w.pos(0), w.pos(1), w.pos(2)}}});
  j["waypoints"] = wps;
  j["seed"] = cfg.seed;
  j["out_dir"] = cfg.out_dir;

  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config file: " + path);
  out << j.dump(2) << '\n';
}

VectorXd reference_state(const std::vector<Waypoint>& plan, double dt, int k) {
  if (plan.empty()) throw ConfigError("reference plan is empty");
  const int n = QuadrotorModel::kStates;
  VectorXd xr = VectorXd::Zero(n);
  Eigen::Vector3d pos, vel;
  if (k >= plan.back().k) {
    pos = plan.back().pos;
    vel.setZero();
  } else {
    std::size_t i = 0;
    while (plan[i + 1].k <= k) ++i;
    const auto& a = plan[i];
    const auto& b = plan[i + 1];
    const double span = static_cast<double>(b.k - a.k);
    const double alpha = static_cast<double>(k - a.k) / span;
    pos = a.pos + alpha * (b.pos - a.pos);
    vel = (b.pos - a.pos) / (span * dt);
  }
  for (int axis = 0; axis < 3; ++axis) {
    xr(QuadrotorModel::kPositions[axis]) = pos(axis);
    xr(QuadrotorModel::kPositions[axis] + 1) = vel(axis);
  }
  return xr;
}

namespace {

struct Prepared {
  QuadrotorModel model;
  MeasurementSelection sel;
  FeedbackDesign design;
  LtiSystem sys_est;                 // closed loop seen by the estimators
  std::vector<VectorXd> reference;   // x_r(0..K)
  std::vector<VectorXd> d;           // known forcing u_ff(k) - G x_r(k)
  std::vector<VectorXd> uff;
  std::vector<VectorXd> attacks;     // e(0..K-1)
  std::vector<VectorXd> noise;       // v(0..K-1)
  AttackModel attack;                // with the seed actually used
};

Prepared prepare(const ScenarioConfig& cfg) {
  Prepared pr;
  pr.model = build_quadrotor(cfg.plant);
  pr.sel = cfg.measurement_indices.empty()
               ? select_measurements(cfg.n_y)
               : select_measurements(cfg.measurement_indices);
  const int p = static_cast<int>(pr.sel.C.rows());

  const MatrixXd C_design =
      cfg.design_support == "full_state"
          ? MatrixXd(MatrixXd::Identity(QuadrotorModel::kStates, QuadrotorModel::kStates))
          : pr.sel.C;
  if (cfg.design == "lqr") {
    pr.design = lqr_gain(pr.model, default_lqr_Qc(), default_lqr_Rc(), pr.sel.C);
  } else {
    const VectorXd init =
        cfg.initial_poles.size() ? cfg.initial_poles : default_pole_request();
    pr.design = design_secure_feedback(pr.model, C_design, init, cfg.design_max_tries,
                                       derive_seed(cfg.seed, 3));
  }
  pr.sys_est = LtiSystem::make(pr.design.A_closed, pr.model.B, pr.sel.C);

  pr.reference.resize(cfg.K + 1);
  for (int k = 0; k <= cfg.K; ++k)
    pr.reference[k] = reference_state(cfg.waypoints, cfg.plant.dt, k);

  const Eigen::ColPivHouseholderQR<MatrixXd> bqr(pr.model.B);
  pr.uff.resize(cfg.K);
  pr.d.resize(cfg.K);
  for (int k = 0; k < cfg.K; ++k) {
    pr.uff[k] = bqr.solve(pr.reference[k + 1] - pr.model.A0 * pr.reference[k]);
    pr.d[k] = pr.uff[k] - pr.design.G * pr.reference[k];
  }

  pr.attack = cfg.attack;
  if (pr.attack.seed == 0) pr.attack.seed = derive_seed(cfg.seed, 1);
  pr.attacks.resize(cfg.K);
  for (int k = 0; k < cfg.K; ++k) pr.attacks[k] = attack_at(pr.attack, k, p);

  std::mt19937_64 rng(derive_seed(cfg.seed, 2));
  std::normal_distribution<double> gauss(0.0, 1.0);
  pr.noise.resize(cfg.K);
  for (int k = 0; k < cfg.K; ++k) {
    pr.noise[k] = VectorXd::Zero(p);
    if (cfg.noise_std > 0.0)
      for (int i = 0; i < p; ++i) pr.noise[k](i) = cfg.noise_std * gauss(rng);
  }
  return pr;
}

ModeRun execute_mode(const ScenarioConfig& cfg, const Prepared& pr, EstimatorMode mode) {
  const int p = static_cast<int>(pr.sel.C.rows());
  const MatrixXd& G = pr.design.G;
  const MatrixXd& A0 = pr.model.A0;
  const MatrixXd& B = pr.model.B;
  const MatrixXd& A_cl = pr.design.A_closed;

  KalmanState kf0 = make_kalman(pr.sys_est, pr.reference[0], cfg.p0, cfg.qn,
                                cfg.noise_std * cfg.noise_std);
  FusionEstimator est(pr.sys_est, cfg.T, mode, kf0);

  ModeRun run;
  run.mode = mode;
  run.truth.reserve(cfg.K);
  run.x_hat.reserve(cfg.K);
  run.e_hat.reserve(cfg.K);
  run.attack_error.resize(p, cfg.K);

  VectorXd x = pr.reference[0];      // plant state
  VectorXd xpred = pr.reference[0];  // estimator-side prediction of x(k)
  double rmse_acc = 0.0, path_acc = 0.0;
  for (int k = 0; k < cfg.K; ++k) {
    // Telemetry attacks never touch the flight controls; navigation
    // spoofing does, because the controller flies the estimate.
    const VectorXd& fed_back = cfg.kind == ScenarioKind::Mitm ? x : xpred;
    const VectorXd u = G * (fed_back - pr.reference[k]) + pr.uff[k];
    const VectorXd y = pr.sel.C * x + pr.attacks[k] + pr.noise[k];

    FusionStep s = est.step(k, y, pr.d[k]);

    rmse_acc += (s.x_hat - x).squaredNorm();
    double perr = 0.0;
    for (int axis = 0; axis < 3; ++axis) {
      const int i = QuadrotorModel::kPositions[axis];
      const double dpos = x(i) - pr.reference[k](i);
      perr += dpos * dpos;
    }
    path_acc += std::sqrt(perr);
    run.attack_error.col(k) = s.e_hat - pr.attacks[k];
    run.truth.push_back(x);
    run.e_hat.push_back(std::move(s.e_hat));

    xpred = A_cl * s.x_hat + B * pr.d[k];
    run.x_hat.push_back(std::move(s.x_hat));
    x = A0 * x + B * u;
  }
  run.state_rmse = std::sqrt(rmse_acc / cfg.K);
  run.path_error = path_acc / cfg.K;
  run.decode_failures = est.decode_failures();
  return run;
}

}  // namespace

RunReport run_scenario(const ScenarioConfig& cfg_in) {
  ScenarioConfig cfg = cfg_in;
  if (cfg.waypoints.empty())
    cfg.waypoints = {{0, {0.0, 0.0, 0.0}},
                     {cfg.K, {0.05 * cfg.K, 0.0375 * cfg.K, 0.025 * cfg.K}}};
  validate_config(cfg);
  const Prepared pr = prepare(cfg);

  RunReport rep;
  rep.config = cfg;
  rep.config.attack.seed = pr.attack.seed;
  rep.measurement_indices = pr.sel.indices;
  rep.reference = pr.reference;
  rep.attacks = pr.attacks;
  rep.G = pr.design.G;
  rep.closed_eigs = pr.design.achieved;
  rep.design_tries = pr.design.tries;
  rep.report = correctability_report(pr.sys_est);
  rep.window_below_certificate = rep.report.t_star > 0 && cfg.T < rep.report.t_star;

  for (EstimatorMode mode : cfg.modes) rep.runs.push_back(execute_mode(cfg, pr, mode));
  return rep;
}

namespace {

void write_double(std::string& buf, double v) {
  char tmp[32];
  std::snprintf(tmp, sizeof tmp, "%.17g", v);
  buf += tmp;
}

}  // namespace

void emit_outputs(const RunReport& rep, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir + ": " + ec.message());

  const int K = rep.config.K;
  const int n = QuadrotorModel::kStates;
  const int p = static_cast<int>(rep.attacks.empty() ? 0 : rep.attacks.front().size());

  {
    const std::string path = (fs::path(dir) / "timeseries.csv").string();
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    std::string line = "k";
    for (int i = 0; i < n; ++i) line += ",xr_" + std::to_string(i);
    for (int i = 0; i < p; ++i) line += ",e_true_" + std::to_string(i);
    for (const auto& run : rep.runs) {
      const std::string m = to_string(run.mode);
      for (int i = 0; i < n; ++i) line += "," + m + "_x_" + std::to_string(i);
      for (int i = 0; i < n; ++i) line += "," + m + "_xhat_" + std::to_string(i);
      for (int i = 0; i < p; ++i) line += "," + m + "_ehat_" + std::to_string(i);
    }
    out << line << '\n';
    for (int k = 0; k < K; ++k) {
      line = std::to_string(k);
      auto push = [&line](double v) {
        line += ',';
        write_double(line, v);
      };
      for (int i = 0; i < n; ++i) push(rep.reference[k](i));
      for (int i = 0; i < p; ++i) push(rep.attacks[k](i));
      for (const auto& run : rep.runs) {
        for (int i = 0; i < n; ++i) push(run.truth[k](i));
        for (int i = 0; i < n; ++i) push(run.x_hat[k](i));
        for (int i = 0; i < p; ++i) push(run.e_hat[k](i));
      }
      out << line << '\n';
    }
  }

  {
    json j;
    j["scenario"] = to_string(rep.config.kind);
    j["seed"] = rep.config.seed;
    j["window"] = rep.config.T;
    j["horizon"] = K;
    j["n_y"] = p;
    j["noise_std"] = rep.config.noise_std;
    j["measurement_indices"] = rep.measurement_indices;

    std::vector<std::vector<double>> gain;
    for (int r = 0; r < rep.G.rows(); ++r)
      gain.emplace_back(rep.G.row(r).begin(), rep.G.row(r).end());
    json eigs = json::array();
    for (int i = 0; i < rep.closed_eigs.size(); ++i)
      eigs.push_back({rep.closed_eigs(i).real(), rep.closed_eigs(i).imag()});
    j["design"] = {{"kind", rep.config.design},
                   {"support", rep.config.design_support},
                   {"tries", rep.design_tries},
                   {"gain", gain},
                   {"closed_loop_eigenvalues", eigs}};

    j["correctability"] = {
        {"supports", rep.report.supports},
        {"s_min", rep.report.s_min},
        {"q_max", rep.report.q_max},
        {"t_star", rep.report.t_star},
        {"window_below_certificate", rep.window_below_certificate},
        {"flags",
         {{"distinct_real_positive_eigenvalues",
           rep.report.distinct_real_positive_eigenvalues},
          {"C_full_rank", rep.report.C_full_rank},
          {"observable", rep.report.observable}}}};

    j["attack"] = {{"kind", attack_name(rep.config.attack.kind)},
                   {"slope", rep.config.attack.slope},
                   {"ramp_exponent", rep.config.attack.ramp_exponent},
                   {"amplitude", rep.config.attack.amplitude},
                   {"period", rep.config.attack.period},
                   {"noise_std", rep.config.attack.noise_std},
                   {"seed", rep.config.attack.seed}};

    json modes = json::object();
    for (const auto& run : rep.runs)
      modes[to_string(run.mode)] = {{"state_rmse", run.state_rmse},
                                    {"path_error", run.path_error},
                                    {"decode_failures", run.decode_failures}};
    j["modes"] = modes;

    const std::string path = (fs::path(dir) / "summary.json").string();
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    out << j.dump(2) << '\n';
  }

  for (const auto& run : rep.runs) {
    const std::string path =
        (fs::path(dir) / ("attack_error_" + to_string(run.mode) + ".txt")).string();
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    std::string line;
    for (int r = 0; r < run.attack_error.rows(); ++r) {
      line.clear();
      for (int c = 0; c < run.attack_error.cols(); ++c) {
        if (c) line += ' ';
        write_double(line, run.attack_error(r, c));
      }
      out << line << '\n';
    }
  }
}

}  // namespace secest
