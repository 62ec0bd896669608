#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "secest/errors.hpp"

namespace secest {

using Eigen::VectorXd;

enum class AttackKind { None, MitmRamp, GpsSinusoid };

/// Per-step sensor corruption recipe. Each step draws from its own
/// counter-seeded stream, so e(k) is a pure function of (model, k) and
/// the sequence can be sampled in any order. Magnitudes are never
/// clipped.
struct AttackModel {
  AttackKind kind = AttackKind::None;
  double slope = 0.05;         // ramp gain per step on channel 0
  double ramp_exponent = 1.0;  // e_0(k) = slope * (k+1)^ramp_exponent
  double amplitude = 1.0;      // sinusoid peak on channel 0
  double period = 50.0;        // sinusoid period in steps
  double noise_std = 1.0;      // std of the roaming-channel corruption
  std::uint64_t seed = 0;
};

/// Growing corruption of channel 0 plus a Gaussian draw on one uniformly
/// chosen channel in {1..p-1}; per-step support is exactly 2 whenever
/// slope and noise_std are nonzero.
VectorXd mitm_attack(const AttackModel& model, int k, int p);

/// Sinusoid on channel 0 plus a Gaussian draw on one uniformly chosen
/// position channel in {0,1,2}; support is 2, dropping to 1 when the
/// roaming channel lands on 0.
VectorXd gps_spoof_attack(const AttackModel& model, int k, int p);

/// Dispatch on model.kind; None yields the zero vector.
VectorXd attack_at(const AttackModel& model, int k, int p);

/// SplitMix-style stream derivation used for the per-step attack draws
/// and for giving scenario sub-streams independent seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace secest
