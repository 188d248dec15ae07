#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tsad/dataio/series.hpp"

namespace tsad::dataio {

enum class FaultKind { None, Step, Drift, Stuck, Noise };

/// Parses "none", "step", "drift", "stuck", "noise"; ConfigError otherwise.
FaultKind parse_fault_kind(std::string_view name);
std::string fault_kind_name(FaultKind kind);
/// fault_id written for runs of this kind (0 for None, 1..4 otherwise).
int fault_id_of(FaultKind kind);

/// Desk-scale stand-in for a process simulator.
///
/// Latent state s follows s(t+1) = A s(t) + e(t), e ~ N(0, I), where
/// A = 0.9 Q and Q is a random orthogonal matrix (QR of a Gaussian matrix,
/// sign-normalized), so the spectral radius is exactly 0.9. Each sensor reads
///   x_d(t) = level_d + gain_d * (s_d(t) + m_d(t)),  m ~ N(0, 0.5^2).
/// A and the sensor levels/gains depend only on `seed`; per-run noise on
/// (seed, run_id). Faults touch max(1, D / 4) sensors chosen from the seed:
///   step   +magnitude * sigma_d from the onset on
///   drift  linear ramp reaching magnitude * sigma_d at the last step
///   stuck  sensor frozen at its value at the onset
///   noise  extra N(0, (magnitude * sigma_d)^2) noise
/// where sigma_d is the stationary std of sensor d. Labels are 1 exactly on
/// [onset, T) for faulty runs.
struct SynthConfig {
  std::size_t runs = 4;
  std::size_t steps = 500;
  std::size_t features = 8;
  FaultKind fault_kind = FaultKind::None;
  std::size_t fault_onset = 160;
  double fault_magnitude = 5.0;
  std::uint64_t seed = 0;
  std::uint32_t first_run_id = 0;
};

std::vector<RunRecord> synth_generate(const SynthConfig& config);

/// Indices of the sensors a fault of this seed touches.
std::vector<std::size_t> synth_fault_features(const SynthConfig& config);

/// Stationary standard deviation of each sensor (before faults).
std::vector<double> synth_sensor_std(const SynthConfig& config);

/// The coupling matrix A (D x D, row-major).
std::vector<double> synth_coupling_matrix(std::size_t features, std::uint64_t seed);

}  // namespace tsad::dataio
