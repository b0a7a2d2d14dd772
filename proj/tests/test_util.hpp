#pragma once

// Shared helpers for the test suites: random instances and the independent
// oracles the tests check against. Oracles here re-derive values from first
// principles and stay off the library's computation paths.

#include <cmath>
#include <numbers>
#include <random>

#include "starmm/ao.hpp"

namespace testutil {

using namespace starmm;

inline ComplexScenario desk_scenario(std::uint64_t seed, int k_pairs = 2, int n_ris = 8,
                                     int n_bs = 2, int n_u = 2) {
  ScenarioConfig cfg;
  cfg.n_bs = n_bs;
  cfg.n_u = n_u;
  cfg.n_ris = n_ris;
  cfg.k_pairs = k_pairs;
  return generate_scenario(cfg, seed);
}

inline MatR random_psd(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n01(0.0, 1.0);
  MatR a(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) a(r, c) = n01(rng);
  return scale * (a * a.transpose()) / n;
}

inline RealCovarianceSet random_feasible_covs(const ComplexScenario& s, double budget,
                                              std::mt19937_64& rng, bool pgs = false) {
  RealCovarianceSet covs;
  covs.power_budget = budget;
  const int n = 2 * s.n_bs;
  for (int k = 0; k < s.n_users(); ++k) covs.p.push_back(random_psd(n, rng));
  if (pgs)
    for (MatR& m : covs.p) m = pgs_subspace_project(m);
  double total = covs.total_trace();
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double target = budget * (0.3 + 0.7 * u01(rng));
  for (MatR& m : covs.p) m *= target / total;
  return covs;
}

inline StarRisState random_ris(int n_ris, RisSetKind kind, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double pi = std::numbers::pi;
  StarRisState st;
  st.set_kind = kind;
  st.theta_r.resize(n_ris);
  st.theta_t.resize(n_ris);
  for (int i = 0; i < n_ris; ++i) {
    double split = u01(rng);
    double total = kind == RisSetKind::TU ? u01(rng) : 1.0;
    double phi_r = 2.0 * pi * u01(rng);
    double phi_t = kind == RisSetKind::TN ? phi_r + (u01(rng) < 0.5 ? 1.0 : -1.0) * pi / 2.0
                                          : 2.0 * pi * u01(rng);
    st.theta_r[i] = std::polar(std::sqrt(total * split), phi_r);
    st.theta_t[i] = std::polar(std::sqrt(total * (1.0 - split)), phi_t);
  }
  return st;
}

inline IqiModel mild_iqi(const ComplexScenario& s) {
  return IqiModel::uniform(s.n_bs, s.n_u, s.n_users(), 0.9, 5.0 * std::numbers::pi / 180.0);
}

// Element-wise re-evaluation of the effective channel, independent of the
// library's matrix expression.
inline MatC compose_oracle(const ComplexScenario& s, const StarRisState& ris, int user) {
  const VecC& theta = s.side[user] == RisSide::Reflect ? ris.theta_r : ris.theta_t;
  MatC h = MatC::Zero(s.n_u, s.n_bs);
  for (int r = 0; r < s.n_u; ++r)
    for (int c = 0; c < s.n_bs; ++c) {
      Cplx acc = s.direct[user](r, c);
      for (int l = 0; l < s.n_ris; ++l)
        acc += s.ris_to_user[user](r, l) * theta[l] * s.bs_to_ris(l, c);
      h(r, c) = acc;
    }
  return h;
}

// Complex-domain point-to-point rate log2 det(I + (sigma2 I)^{-1} H Q H^H).
inline double complex_rate_oracle(const MatC& h, const MatC& q, double sigma2) {
  MatC m = MatC::Identity(h.rows(), h.rows()) + h * q * h.adjoint() / sigma2;
  return std::log2(std::abs(m.determinant()));
}

// Real image of a complex Hermitian covariance (proper signaling).
inline MatR proper_real_covariance(const MatC& q) {
  const int n = static_cast<int>(q.rows());
  MatR p(2 * n, 2 * n);
  p.topLeftCorner(n, n) = 0.5 * q.real();
  p.topRightCorner(n, n) = -0.5 * q.imag();
  p.bottomLeftCorner(n, n) = 0.5 * q.imag();
  p.bottomRightCorner(n, n) = 0.5 * q.real();
  return p;
}

inline MatC random_complex_matrix(int rows, int cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n01(0.0, 1.0);
  MatC m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = scale * Cplx(n01(rng), n01(rng)) / std::sqrt(2.0);
  return m;
}

inline MatC random_hermitian_psd(int n, std::mt19937_64& rng, double trace_target) {
  MatC a = random_complex_matrix(n, n, rng);
  MatC q = a * a.adjoint();
  return q * (trace_target / q.real().trace());
}

// Dense NOMA rate evaluation for a 1-pair scalar-antenna instance with proper
// per-user powers (p_ccu, p_ceu); used by the grid-search oracles.
inline double scalar_pair_min_rate(const Problem& prob, const StarRisState& ris, double p_ccu,
                                   double p_ceu) {
  RealCovarianceSet covs;
  covs.power_budget = prob.power_budget;
  covs.p = {0.5 * p_ccu * MatR::Identity(2, 2), 0.5 * p_ceu * MatR::Identity(2, 2)};
  RateReport rep = evaluate_rates(prob, ris, covs);
  return rep.weighted_min;
}

}  // namespace testutil
