#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "starmm/common.hpp"
#include "starmm/config.hpp"

namespace starmm {

enum class RisSide { Reflect, Transmit };
enum class RisMode { ES, MS };
enum class RisSetKind { TU, TI, TN };

const char* to_string(RisSide s);
const char* to_string(RisMode m);
const char* to_string(RisSetKind k);

/// Per-element reflection/transmission coefficients of the surface.
///
/// Feasibility by set kind (per element i):
///   TU: |r_i|^2 + |t_i|^2 <= 1
///   TI: additionally |r_i|^2 + |t_i|^2 >= 1
///   TN: additionally |r_i - t_i|^2 <= 1 and |r_i + t_i|^2 <= 1
/// MS mode pins one coefficient of every element to exactly zero.
struct StarRisState {
  VecC theta_r;
  VecC theta_t;
  RisMode mode = RisMode::ES;
  RisSetKind set_kind = RisSetKind::TU;
  std::vector<RisSide> ms_assignment;  // size n_ris when mode == MS

  int size() const { return static_cast<int>(theta_r.size()); }
};

/// Checks the invariants above; on failure returns false and, if `why` is
/// given, stores a description of the first violated constraint.
bool ris_state_feasible(const StarRisState& s, double tol = 1e-9, std::string* why = nullptr);

/// All complex channels, geometry and NOMA pairing of one network draw.
/// Users 0..K-1 are CCUs, users K..2K-1 are CEUs; the partner of user k is
/// K + k. CCUs sit in the reflection space, CEUs in the transmission space.
struct ComplexScenario {
  int n_bs = 0;
  int n_u = 0;
  int n_ris = 0;
  int k_pairs = 0;
  std::vector<MatC> direct;       // F_k, 2K entries of N_u x N_BS
  MatC bs_to_ris;                 // G, N_RIS x N_BS
  std::vector<MatC> ris_to_user;  // G_k, 2K entries of N_u x N_RIS
  std::vector<RisSide> side;      // 2K entries
  Eigen::Vector2d bs_pos{0.0, 0.0};
  Eigen::Vector2d ris_pos{0.0, 0.0};
  std::vector<Eigen::Vector2d> user_pos;  // 2K entries

  int n_users() const { return 2 * k_pairs; }
  bool is_ccu(int user) const { return user < k_pairs; }
  int partner(int user) const { return is_ccu(user) ? user + k_pairs : user - k_pairs; }
};

/// Throws DimensionError / NumericsError if any invariant fails.
void validate_scenario(const ComplexScenario& s);

/// Effective channel H_k = G_k diag(theta_side) G + F_k for one user; the
/// reflection or transmission coefficient vector is chosen by the user's side.
MatC compose_effective_channel(const ComplexScenario& s, const StarRisState& ris, int user);

/// Geometry and fading parameters for random scenario draws. Distances feed
/// d^-alpha path-loss scalings on i.i.d. complex-normal entries; the CCU
/// annulus is centered on the BS, the CEU half-annulus sits behind the RIS
/// plane so CEUs are reachable only through transmission.
struct ScenarioConfig {
  int n_bs = 2;
  int n_u = 2;
  int n_ris = 8;
  int k_pairs = 2;
  double alpha_direct = 3.5;
  double alpha_ris = 2.2;
  double ris_x = 30.0;
  double ris_y = 0.0;
  double ccu_radius_min = 10.0;
  double ccu_radius_max = 20.0;
  double ceu_radius_min = 5.0;
  double ceu_radius_max = 15.0;

  static ScenarioConfig from_config(const KeyValueConfig& cfg);
};

/// Deterministic given (config, seed). Throws ConfigError on non-positive
/// antenna counts or K < 1 (n_ris == 0 is allowed and means no surface).
ComplexScenario generate_scenario(const ScenarioConfig& cfg, std::uint64_t seed);

void save_scenario(std::ostream& out, const ComplexScenario& s);
ComplexScenario load_scenario(std::istream& in);
void save_scenario_file(const std::string& path, const ComplexScenario& s);
ComplexScenario load_scenario_file(const std::string& path);

}  // namespace starmm
