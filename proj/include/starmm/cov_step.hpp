#pragma once

#include "starmm/surrogates.hpp"

namespace starmm {

struct CovSolveOptions {
  int max_iters = 400;  // per projection phase
  double tol = 1e-6;
  int stall_window = 20;
  int softmin_rounds = 4;
  double softmin_mu0 = 0.5;
  double softmin_decay = 0.25;
  double armijo_c = 1e-4;
  double step_frac = 0.25;  // initial step length relative to the power budget
  // IGS only: with symmetric channels and proper starting points the ascent
  // flow never leaves the proper subspace, so improper optima need explicit
  // symmetry-breaking restarts around the incumbent.
  int improper_kicks = 2;
  double kick_scale = 0.1;

  static CovSolveOptions from_config(const KeyValueConfig& cfg);
};

struct CovStepResult {
  RealCovarianceSet covs;
  double objective = 0.0;  // min weighted surrogate at the returned point
  bool warning = false;    // no ascent found
  int iters = 0;
};

/// Metric projection onto the feasible covariance set: symmetrize, average
/// onto the proper subspace when PGS, then clip eigenvalues at the common
/// nonnegative threshold that brings the summed trace onto the budget.
RealCovarianceSet project_feasible(RealCovarianceSet covs, Signaling signaling);

/// Maximizes the min weighted surrogate rate over the covariance block by
/// projected gradient ascent on an annealed soft-min, with backtracking line
/// search. Users with zero weight are dropped from the objective and their
/// covariances pinned to zero. IGS runs a proper-restricted pass first and
/// continues unrestricted from its best point, so the IGS result is never
/// below the PGS result of the same instance. The returned objective is never
/// below the surrogate objective at the expansion point.
CovStepResult solve_covariance_step(const ExpansionPoint& ep, const Problem& p, double budget,
                                    const CovSolveOptions& opt = {});

}  // namespace starmm
