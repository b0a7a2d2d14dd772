#pragma once

#include "starmm/cov_step.hpp"
#include "starmm/ris_step.hpp"

namespace starmm {

struct AoConfig {
  int max_rounds = 50;
  double rel_tol = 1e-4;
  CovSolveOptions cov;
  RisStepConfig ris;
  MsPartitionStrategy ms_strategy = MsPartitionStrategy::Alternating;
  std::uint64_t ris_init_seed = 1;
  bool regular_ris = false;        // reflect-only surface, CEUs keep direct links only
  double epsilon_floor = 1e-4;     // CCP slack is halved each round down to this
  // Power continuation: solve at these budget fractions in turn, scaling the
  // covariances up between stages. Early stages use stage_rounds rounds.
  std::vector<double> power_stages = {0.01, 0.1, 1.0};
  int stage_rounds = 6;
  // Extra starts with fresh surface phases from the incumbent covariances;
  // the best final objective wins.
  int restarts = 2;

  static AoConfig from_config(const KeyValueConfig& cfg);
};

struct AoIterRecord {
  int iter = 0;
  double weighted_min = 0.0;
  VecR rates;
  double cov_seconds = 0.0;
  double ris_seconds = 0.0;
  bool ris_accepted = false;
  bool cov_warning = false;
  bool ris_warning = false;
};

struct AoTrace {
  std::vector<AoIterRecord> records;
  bool converged = false;
};

void write_trace_csv(std::ostream& out, const AoTrace& trace);

struct AoResult {
  RealCovarianceSet covs;
  StarRisState ris;
  RateReport report;
  AoTrace trace;
};

/// Alternates covariance and surface updates from the uniform-white start
/// until the relative improvement of the min weighted rate over one full
/// round drops below rel_tol, or max_rounds is hit. The accepted objective
/// sequence is nondecreasing; each block update is reverted if it would
/// lower the true objective.
AoResult optimize(const Problem& p, const AoConfig& cfg);

/// Rates of a fixed design re-evaluated under different hardware: channels
/// and noise are rebuilt with true_iqi while covariances and surface state
/// stay as optimized (the unaware-design baseline).
RateReport evaluate_design_under_mismatch(const RealCovarianceSet& covs, const StarRisState& ris,
                                          const Problem& p, const IqiModel& true_iqi);

void save_state(std::ostream& out, const RealCovarianceSet& covs, const StarRisState& ris);
std::pair<RealCovarianceSet, StarRisState> load_state(std::istream& in);

}  // namespace starmm
