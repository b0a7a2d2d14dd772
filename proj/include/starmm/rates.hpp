#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include "starmm/iqi.hpp"

namespace starmm {

enum class Access { NOMA, TIN };
enum class Signaling { IGS, PGS };

const char* to_string(Access a);
const char* to_string(Signaling s);

/// Real-decomposition transmit covariances, one 2N_BS x 2N_BS PSD matrix per
/// user, with a sum-trace power budget. Proper (PGS) sets additionally live in
/// the [A, B; -B, A] subspace (A symmetric, B skew-symmetric).
struct RealCovarianceSet {
  std::vector<MatR> p;
  double power_budget = 0.0;

  double total_trace() const;
};

/// Orthogonal projection onto the proper-signaling subspace [A, B; -B, A].
MatR pgs_subspace_project(const MatR& m);

bool covariance_set_feasible(const RealCovarianceSet& covs, Signaling signaling,
                             double tol = 1e-6, std::string* why = nullptr);

/// Uniform white start: P_k = budget / (2K * 2N_BS) * I for every user.
RealCovarianceSet make_uniform_covariances(const ComplexScenario& s, double budget);

/// One instance of the design problem: channels, impairments, weights, modes.
struct Problem {
  ComplexScenario scenario;
  IqiModel iqi;
  double sigma2 = 1.0;
  VecR weights;  // 2K positive entries
  Access access = Access::NOMA;
  Signaling signaling = Signaling::IGS;
  double power_budget = 1.0;
};

/// Problem with all-one weights and ideal hardware unless profiles are given.
Problem make_problem(ComplexScenario scenario, double power_budget, Access access = Access::NOMA,
                     Signaling signaling = Signaling::IGS, double sigma2 = 1.0);

enum class RateRole { Ccu, Ceu, CeuAtCcu };

struct InterferenceParts {
  MatR d;        // noise-plus-interference for the decoded stream
  MatR s;        // decoded stream's signal term
  MatR s_cross;  // partner stream at the CCU (CeuAtCcu role only)
};

/// D/S matrices for the requested decoding role. Ccu excludes the paired
/// stream from D (it was SIC-canceled), Ceu treats everything else as noise,
/// CeuAtCcu additionally returns the partner stream seen at the CCU.
InterferenceParts interference_matrices(const std::vector<RealChannel>& links,
                                        const ComplexScenario& s, const RealCovarianceSet& covs,
                                        int user, RateRole role);

/// (1/2) log2 det(I + D^{-1} S), evaluated as a log-det difference.
double rate_ccu(const MatR& d, const MatR& s);

struct CeuRate {
  double rate;
  double part_own;
  double part_partner;
};

/// CEU rate: min of decoding at the CEU itself and at its paired CCU.
CeuRate rate_ceu(const MatR& d_own, const MatR& s_own, const MatR& d_partner,
                 const MatR& s_partner_own, const MatR& s_cross);

/// One rate branch (1/2) log2 |X_N| - (1/2) log2 |X_D| where X_N sums the
/// covariances in noise_set through channel_user's link plus noise, and
/// X_D = X_N minus the decoded stream signal_user.
struct RateBranch {
  int channel_user = 0;
  int signal_user = 0;
  int owner = 0;  // user whose rate this branch constrains
  std::vector<int> noise_set;
};

/// NOMA: one branch per CCU, two per CEU (own decoding + decoding at the
/// CCU). TIN: one branch per user, everything else treated as noise.
std::vector<RateBranch> make_branches(const ComplexScenario& s, Access access);

MatR branch_xn(const std::vector<RealChannel>& links, const RealCovarianceSet& covs,
               const RateBranch& b);
double branch_rate(const std::vector<RealChannel>& links, const RealCovarianceSet& covs,
                   const RateBranch& b);

/// Per-user achievable rates plus audit copies of the D/S matrices of each
/// user's own decoding step. Under TIN both CEU part slots hold the own rate.
struct RateReport {
  VecR rates;                                  // 2K
  std::vector<std::array<double, 2>> ceu_parts;  // K entries {own, at partner}
  double weighted_min = 0.0;
  std::vector<MatR> d_matrices;
  std::vector<MatR> s_matrices;
};

/// min_k weights_k * rates_k; weights must be strictly positive.
double weighted_min_rate(const RateReport& report, const VecR& weights);

RateReport evaluate_rates(const std::vector<RealChannel>& links, const ComplexScenario& s,
                          const RealCovarianceSet& covs, const VecR& weights, Access access);
RateReport evaluate_rates(const Problem& p, const StarRisState& ris, const RealCovarianceSet& covs);

/// CSV rows: user,role,rate,binding_branch
void write_report_csv(std::ostream& out, const RateReport& report, const ComplexScenario& s);

}  // namespace starmm
