#pragma once

#include <cstdint>
#include <functional>

#include "starmm/surrogates.hpp"

namespace starmm {

enum class MsPartitionStrategy { Alternating, GreedyGain };

struct RisStepConfig {
  RisSetKind set_kind = RisSetKind::TU;
  RisMode mode = RisMode::ES;
  double epsilon = 1e-2;  // slack of the linearized unit-sum floor, in (0, 0.1]
  int max_iters = 300;
  double tol = 1e-6;
  int stall_window = 20;
  int softmin_rounds = 3;
  double softmin_mu0 = 0.5;
  double softmin_decay = 0.2;
  double armijo_c = 1e-4;
  double step_scale = 0.5;
  bool tn_phase_projection = true;  // snap transmit phase to reflect phase +- pi/2 after normalizing

  static RisStepConfig from_config(const KeyValueConfig& cfg);
};

struct RisStepResult {
  StarRisState state;
  bool accepted = false;  // candidate beat the incumbent under the true rates
  bool warning = false;
  double objective = 0.0;  // true min weighted rate of `state`
};

/// Linearization of |r_i|^2 + |t_i|^2 >= 1 - eps around a previous state:
/// per element, value(theta) >= 1 - eps with value affine in (r_i, t_i).
struct AffineModulusFloor {
  VecC theta_r_prev;
  VecC theta_t_prev;
  double epsilon = 0.0;

  double value(const StarRisState& s, int element) const;
  double bound() const { return 1.0 - epsilon; }
};

AffineModulusFloor linearize_modulus_floor(const StarRisState& prev, double epsilon);

/// Scales every element onto |r_i|^2 + |t_i|^2 = 1, keeping phases. Elements
/// with both coefficients zero take the fallback's value and are reported in
/// `flagged`; without a fallback they throw.
StarRisState normalize_unit_sum(const StarRisState& s, const StarRisState* fallback = nullptr,
                                std::vector<int>* flagged = nullptr);

/// Returns the candidate iff its objective is strictly larger than the
/// incumbent's (exact ties keep the incumbent).
StarRisState accept_if_improved(const StarRisState& candidate, const StarRisState& incumbent,
                                const std::function<double(const StarRisState&)>& objective,
                                bool* accepted = nullptr);

/// Deterministic reflect/transmit assignment for MS operation.
std::vector<RisSide> ms_partition(const ComplexScenario& s, MsPartitionStrategy strategy);

/// Feasible start: ES splits unit energy evenly with i.i.d. uniform phases
/// (TN couples the transmit phase at +pi/2); MS puts unit modulus on the
/// active side.
StarRisState make_initial_ris(const ComplexScenario& s, RisMode mode, RisSetKind set_kind,
                              const std::vector<RisSide>& ms_assignment, std::uint64_t seed);

/// One surface update: ascend the min weighted surrogate over the convexified
/// per-element sets, normalize for TI/TN, then keep the candidate only if the
/// true min weighted rate does not decrease.
RisStepResult solve_ris_step(const ExpansionPoint& ep, const Problem& p, const RisStepConfig& cfg);

}  // namespace starmm
