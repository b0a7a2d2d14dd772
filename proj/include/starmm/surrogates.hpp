#pragma once

#include <utility>
#include <vector>

#include "starmm/rates.hpp"

namespace starmm {

/// Snapshot of (covariances, surface state) with the cached matrices every
/// surrogate family expands around.
struct ExpansionPoint {
  RealCovarianceSet covs;
  StarRisState ris;
  Access access = Access::NOMA;
  std::vector<RateBranch> branches;
  std::vector<RealChannel> links;  // effective channels at `ris`
  std::vector<MatR> xn0;           // per branch X_N at the snapshot
  std::vector<MatR> xd0;           // per branch X_D at the snapshot
  std::vector<double> branch_rate0;
  VecR user_rates0;  // combined per-user rates (CEU branches folded by min)

  int n_users() const { return static_cast<int>(links.size()); }
};

ExpansionPoint build_expansion_point(const Problem& p, const RealCovarianceSet& covs,
                                     const StarRisState& ris);

int branch_index_ccu(const ExpansionPoint& ep, int user);
/// (own-decoding branch, decoding-at-CCU branch) of pair k's CEU.
std::pair<int, int> branch_indices_ceu(const ExpansionPoint& ep, int pair);

/// Concave minorant of one rate branch in the covariance block, tight at the
/// expansion point: the log-det numerator is kept and the log-det denominator
/// is replaced by its tangent plane.
class CovSurrogate {
 public:
  CovSurrogate(const ExpansionPoint& ep, int branch_index);

  int owner() const { return owner_; }
  double value(const std::vector<MatR>& p) const;
  /// value plus, when grad != nullptr, grad[j] += scale * d value / d P_j.
  double value_and_gradient(const std::vector<MatR>& p, double scale,
                            std::vector<MatR>* grad) const;

 private:
  MatR h_;        // channel of the decoding user
  MatR c_noise_;
  MatR psi_;      // tangent coefficient on every denominator covariance
  std::vector<char> in_noise_;  // j enters X_N
  std::vector<char> in_dset_;   // j enters the linearized denominator
  double const_term_ = 0.0;
  int owner_ = 0;
};

/// Concave minorant of one rate branch in the surface coefficients. The
/// channel dependence enters linearly through H(theta) and quadratically
/// through the interference terms; the bound keeps a linear term Tr(A H) and
/// subtracts Tr(M (D+S)) with a constant PSD weight M.
class RisSurrogate {
 public:
  RisSurrogate(const ExpansionPoint& ep, int branch_index);

  int owner() const { return owner_; }
  int channel_user() const { return channel_user_; }
  double value(const MatR& h_theta) const;
  /// W with d value / d t = <W, dH/dt> for any channel coordinate t.
  MatR gradient_weight(const MatR& h_theta) const;

 private:
  double c0_ = 0.0;
  MatR a_t_;    // transpose of the linear-term coefficient
  MatR m_;      // PSD quadratic-term weight
  MatR p_sum_;  // sum of covariances entering the branch
  int owner_ = 0;
  int channel_user_ = 0;
};

std::vector<CovSurrogate> build_cov_surrogates(const ExpansionPoint& ep);
std::vector<RisSurrogate> build_ris_surrogates(const ExpansionPoint& ep);

/// Spec-shaped builders for the four surrogate families. CEU builders return
/// the (own, at-partner) pair whose pointwise min is the user's surrogate.
CovSurrogate surrogate_cov_ccu(const ExpansionPoint& ep, int user);
std::pair<CovSurrogate, CovSurrogate> surrogate_cov_ceu(const ExpansionPoint& ep, int pair);
RisSurrogate surrogate_ris_ccu(const ExpansionPoint& ep, int user);
std::pair<RisSurrogate, RisSurrogate> surrogate_ris_ceu(const ExpansionPoint& ep, int pair);

/// Affine map theta -> effective real channel per user; jac holds the
/// constant partial derivatives w.r.t. (Re theta_i, Im theta_i) of the user's
/// own side vector.
struct RisLinearization {
  std::vector<MatR> h_base;               // channel with the side vector zeroed
  std::vector<std::vector<MatR>> jac;     // [user][2*element + (0:Re,1:Im)]
};

RisLinearization build_ris_linearization(const Problem& p);

/// Effective real channel of one user at the given surface state.
MatR real_channel_at(const Problem& p, const StarRisState& ris, int user);

}  // namespace starmm
