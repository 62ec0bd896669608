#include "secest/attacks.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace secest {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

VectorXd mitm_attack(const AttackModel& model, int k, int p) {
  if (p < 2) throw DimensionError("ramp attack needs at least 2 channels");
  if (k < 0) throw DimensionError("time index must be nonnegative");
  VectorXd e = VectorXd::Zero(p);
  e(0) = model.slope * std::pow(k + 1.0, model.ramp_exponent);
  std::mt19937_64 rng(derive_seed(model.seed, static_cast<std::uint64_t>(k)));
  std::uniform_int_distribution<int> chan(1, p - 1);
  const int j = chan(rng);
  if (model.noise_std > 0.0) {
    std::normal_distribution<double> gauss(0.0, model.noise_std);
    e(j) += gauss(rng);
  }
  return e;
}

VectorXd gps_spoof_attack(const AttackModel& model, int k, int p) {
  if (p < 3) throw DimensionError("spoofing attack needs the 3 position channels");
  if (k < 0) throw DimensionError("time index must be nonnegative");
  if (model.period <= 0.0) throw DimensionError("sinusoid period must be positive");
  VectorXd e = VectorXd::Zero(p);
  e(0) = model.amplitude *
         std::sin(2.0 * std::numbers::pi * static_cast<double>(k) / model.period);
  std::mt19937_64 rng(derive_seed(model.seed, static_cast<std::uint64_t>(k)));
  std::uniform_int_distribution<int> chan(0, 2);
  const int j = chan(rng);
  if (model.noise_std > 0.0) {
    std::normal_distribution<double> gauss(0.0, model.noise_std);
    e(j) += gauss(rng);
  }
  return e;
}

VectorXd attack_at(const AttackModel& model, int k, int p) {
  switch (model.kind) {
    case AttackKind::MitmRamp: return mitm_attack(model, k, p);
    case AttackKind::GpsSinusoid: return gps_spoof_attack(model, k, p);
    case AttackKind::None: break;
  }
  if (p < 1) throw DimensionError("attack vector needs at least one channel");
  return VectorXd::Zero(p);
}

}  // namespace secest
