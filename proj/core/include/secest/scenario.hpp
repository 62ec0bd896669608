#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "secest/attacks.hpp"
#include "secest/fusion.hpp"
#include "secest/quadrotor.hpp"

namespace secest {

enum class ScenarioKind { Mitm, Gps };

std::string to_string(ScenarioKind kind);

/// Reference waypoint: desired position at step k. Positions are
/// interpolated linearly between waypoints and held after the last one;
/// the reference velocity is the segment slope.
struct Waypoint {
  int k = 0;
  Eigen::Vector3d pos = Eigen::Vector3d::Zero();
};

/// Everything a run needs. The telemetry scenario (Mitm) flies the plant
/// on true-state feedback, so the attack corrupts only what the
/// estimators see; the navigation scenario (Gps) feeds the fused
/// estimate back into the controller, so bad estimates bend the flown
/// path.
struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::Mitm;
  QuadrotorParams plant;
  int n_y = 5;
  std::vector<int> measurement_indices;        // empty: defaults for n_y
  std::string design = "secure_placement";     // or "lqr"
  std::string design_support = "full_state";   // or "measured"
  int design_max_tries = 1000;
  VectorXd initial_poles;                      // empty: default request
  AttackModel attack;
  double noise_std = 0.01;
  double p0 = 1.0;
  double qn = 1e-6;
  std::vector<EstimatorMode> modes = {EstimatorMode::KfOnly, EstimatorMode::SeOnly,
                                      EstimatorMode::KfPlusSe};
  int T = 10;
  int K = 120;
  std::vector<Waypoint> waypoints;             // empty: straight default leg
  std::uint64_t seed = 1;
  std::string out_dir = "out";
};

ScenarioConfig default_mitm_config();
ScenarioConfig default_gps_config();

/// Throws ConfigError on any violated constraint (n_y range, T >= 2,
/// K > T, waypoint ordering, mode list nonempty, ...).
void validate_config(const ScenarioConfig& cfg);

/// JSON file round trip. Keys are documented in docs/FORMATS.md.
ScenarioConfig load_scenario_file(const std::string& path);
void save_scenario_file(const ScenarioConfig& cfg, const std::string& path);

struct ModeRun {
  EstimatorMode mode = EstimatorMode::KfOnly;
  std::vector<VectorXd> truth;  // x(0..K-1) actually flown
  std::vector<VectorXd> x_hat;
  std::vector<VectorXd> e_hat;
  double state_rmse = 0.0;
  double path_error = 0.0;      // mean position distance to the reference
  int decode_failures = 0;
  MatrixXd attack_error;        // p x K
};

struct RunReport {
  ScenarioConfig config;
  std::vector<int> measurement_indices;
  std::vector<VectorXd> reference;  // x_r(0..K)
  std::vector<VectorXd> attacks;    // e(0..K-1)
  std::vector<ModeRun> runs;
  CorrectabilityReport report;      // closed loop through the selection
  MatrixXd G;
  Eigen::VectorXcd closed_eigs;
  int design_tries = 0;
  bool window_below_certificate = false;
};

/// Designs the controller, builds the shared attack and noise streams,
/// and runs every requested estimator mode on them.
RunReport run_scenario(const ScenarioConfig& cfg);

/// Writes timeseries.csv, summary.json, and one attack_error_<mode>.txt
/// grid per mode into dir. Formats are documented in docs/FORMATS.md and
/// stable; identical reports produce byte-identical files.
void emit_outputs(const RunReport& report, const std::string& dir);

/// Full reference state at step k for a waypoint plan (positions
/// interpolated, velocities from segment slopes, angles zero).
VectorXd reference_state(const std::vector<Waypoint>& plan, double dt, int k);

}  // namespace secest
