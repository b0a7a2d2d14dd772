#include "starmm/surrogates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace starmm {

ExpansionPoint build_expansion_point(const Problem& p, const RealCovarianceSet& covs,
                                     const StarRisState& ris) {
  if (static_cast<int>(covs.p.size()) != p.scenario.n_users())
    throw DimensionError("build_expansion_point: one covariance per user required");
  ExpansionPoint ep;
  ep.covs = covs;
  ep.ris = ris;
  ep.access = p.access;
  ep.links = build_links(p.scenario, ris, p.iqi, p.sigma2);
  ep.branches = make_branches(p.scenario, p.access);

  const size_t nb = ep.branches.size();
  ep.xn0.resize(nb);
  ep.xd0.resize(nb);
  ep.branch_rate0.resize(nb);
  ep.user_rates0 = VecR::Constant(p.scenario.n_users(), std::numeric_limits<double>::infinity());
  for (size_t i = 0; i < nb; ++i) {
    const RateBranch& b = ep.branches[i];
    const RealChannel& link = ep.links[b.channel_user];
    ep.xn0[i] = branch_xn(ep.links, covs, b);
    ep.xd0[i] = ep.xn0[i] - link.h_real * covs.p[b.signal_user] * link.h_real.transpose();
    ep.branch_rate0[i] =
        (logdet_spd(ep.xn0[i], "X_N") - logdet_spd(ep.xd0[i], "X_D")) / (2.0 * kLn2);
    ep.user_rates0[b.owner] = std::min(ep.user_rates0[b.owner], ep.branch_rate0[i]);
  }
  return ep;
}

int branch_index_ccu(const ExpansionPoint& ep, int user) {
  for (size_t i = 0; i < ep.branches.size(); ++i) {
    const RateBranch& b = ep.branches[i];
    if (b.owner == user && b.channel_user == user && b.signal_user == user)
      return static_cast<int>(i);
  }
  throw DimensionError("branch_index_ccu: no own-decoding branch for user " + std::to_string(user));
}

std::pair<int, int> branch_indices_ceu(const ExpansionPoint& ep, int pair) {
  if (ep.access != Access::NOMA)
    throw DimensionError("branch_indices_ceu: CEU branches exist only under NOMA");
  const int ceu = ep.n_users() / 2 + pair;
  int own = -1, at_ccu = -1;
  for (size_t i = 0; i < ep.branches.size(); ++i) {
    const RateBranch& b = ep.branches[i];
    if (b.owner != ceu || b.signal_user != ceu) continue;
    if (b.channel_user == ceu) own = static_cast<int>(i);
    if (b.channel_user == pair) at_ccu = static_cast<int>(i);
  }
  if (own < 0 || at_ccu < 0)
    throw DimensionError("branch_indices_ceu: pair " + std::to_string(pair) + " not found");
  return {own, at_ccu};
}

CovSurrogate::CovSurrogate(const ExpansionPoint& ep, int branch_index) {
  const RateBranch& b = ep.branches.at(branch_index);
  const int users = ep.n_users();
  owner_ = b.owner;
  h_ = ep.links[b.channel_user].h_real;
  c_noise_ = ep.links[b.channel_user].c_noise;
  psi_ = h_.transpose() * inverse_spd(ep.xd0[branch_index], "X_D(t-1)") * h_ / (2.0 * kLn2);
  in_noise_.assign(users, 0);
  in_dset_.assign(users, 0);
  for (int j : b.noise_set) {
    in_noise_[j] = 1;
    if (j != b.signal_user) in_dset_[j] = 1;
  }
  // value(P) = logdet(X_N(P))/(2 ln2) - logdet(X_D0)/(2 ln2) - <Psi, sum_D (P_j - P_j0)>
  const_term_ = -logdet_spd(ep.xd0[branch_index], "X_D(t-1)") / (2.0 * kLn2);
  for (int j = 0; j < users; ++j)
    if (in_dset_[j]) const_term_ += (psi_.array() * ep.covs.p[j].array()).sum();
}

double CovSurrogate::value(const std::vector<MatR>& p) const {
  return value_and_gradient(p, 0.0, nullptr);
}

double CovSurrogate::value_and_gradient(const std::vector<MatR>& p, double scale,
                                        std::vector<MatR>* grad) const {
  const int users = static_cast<int>(p.size());
  MatR xn = c_noise_;
  for (int j = 0; j < users; ++j)
    if (in_noise_[j]) xn.noalias() += h_ * p[j] * h_.transpose();

  double v = logdet_spd(xn, "X_N") / (2.0 * kLn2) + const_term_;
  for (int j = 0; j < users; ++j)
    if (in_dset_[j]) v -= (psi_.array() * p[j].array()).sum();

  if (grad) {
    MatR gn = h_.transpose() * inverse_spd(xn, "X_N") * h_ / (2.0 * kLn2);
    for (int j = 0; j < users; ++j) {
      if (in_noise_[j]) (*grad)[j].noalias() += scale * gn;
      if (in_dset_[j]) (*grad)[j].noalias() -= scale * psi_;
    }
  }
  return v;
}

RisSurrogate::RisSurrogate(const ExpansionPoint& ep, int branch_index) {
  const RateBranch& b = ep.branches.at(branch_index);
  owner_ = b.owner;
  channel_user_ = b.channel_user;
  const MatR& h0 = ep.links[b.channel_user].h_real;
  const MatR& c_noise = ep.links[b.channel_user].c_noise;
  const MatR& xd0 = ep.xd0[branch_index];  // \bar D
  const MatR& xn0 = ep.xn0[branch_index];  // \bar D + \bar S
  MatR xd0_inv = inverse_spd(xd0, "D(t-1)");
  MatR s_bar = xn0 - xd0;
  m_ = xd0_inv - inverse_spd(xn0, "D+S(t-1)");
  a_t_ = xd0_inv * h0 * ep.covs.p[b.signal_user];  // transpose of P H0^T D^{-1}
  p_sum_ = MatR::Zero(ep.covs.p[0].rows(), ep.covs.p[0].cols());
  for (int j : b.noise_set) p_sum_ += ep.covs.p[j];
  c0_ = ep.branch_rate0[branch_index] -
        (s_bar.array() * xd0_inv.array()).sum() / (2.0 * kLn2) -
        (m_.array() * c_noise.array()).sum() / (2.0 * kLn2);
}

double RisSurrogate::value(const MatR& h_theta) const {
  double lin = (a_t_.array() * h_theta.array()).sum() / kLn2;
  MatR quad = h_theta * p_sum_ * h_theta.transpose();
  return c0_ + lin - (m_.array() * quad.array()).sum() / (2.0 * kLn2);
}

MatR RisSurrogate::gradient_weight(const MatR& h_theta) const {
  return (a_t_ - m_ * h_theta * p_sum_) / kLn2;
}

std::vector<CovSurrogate> build_cov_surrogates(const ExpansionPoint& ep) {
  std::vector<CovSurrogate> out;
  out.reserve(ep.branches.size());
  for (size_t i = 0; i < ep.branches.size(); ++i) out.emplace_back(ep, static_cast<int>(i));
  return out;
}

std::vector<RisSurrogate> build_ris_surrogates(const ExpansionPoint& ep) {
  std::vector<RisSurrogate> out;
  out.reserve(ep.branches.size());
  for (size_t i = 0; i < ep.branches.size(); ++i) out.emplace_back(ep, static_cast<int>(i));
  return out;
}

CovSurrogate surrogate_cov_ccu(const ExpansionPoint& ep, int user) {
  return CovSurrogate(ep, branch_index_ccu(ep, user));
}

std::pair<CovSurrogate, CovSurrogate> surrogate_cov_ceu(const ExpansionPoint& ep, int pair) {
  auto [own, at_ccu] = branch_indices_ceu(ep, pair);
  return {CovSurrogate(ep, own), CovSurrogate(ep, at_ccu)};
}

RisSurrogate surrogate_ris_ccu(const ExpansionPoint& ep, int user) {
  return RisSurrogate(ep, branch_index_ccu(ep, user));
}

std::pair<RisSurrogate, RisSurrogate> surrogate_ris_ceu(const ExpansionPoint& ep, int pair) {
  auto [own, at_ccu] = branch_indices_ceu(ep, pair);
  return {RisSurrogate(ep, own), RisSurrogate(ep, at_ccu)};
}

RisLinearization build_ris_linearization(const Problem& p) {
  const ComplexScenario& s = p.scenario;
  RisLinearization lin;
  const int users = s.n_users();
  lin.h_base.resize(users);
  lin.jac.resize(users);
  for (int u = 0; u < users; ++u) {
    lin.h_base[u] = wlt_channel_composite(s.direct[u], p.iqi.bs_tx, p.iqi.user_rx[u]);
    lin.jac[u].resize(2 * s.n_ris);
    for (int i = 0; i < s.n_ris; ++i) {
      MatC outer = s.ris_to_user[u].col(i) * s.bs_to_ris.row(i);
      lin.jac[u][2 * i] = wlt_channel_composite(outer, p.iqi.bs_tx, p.iqi.user_rx[u]);
      lin.jac[u][2 * i + 1] =
          wlt_channel_composite(Cplx(0.0, 1.0) * outer, p.iqi.bs_tx, p.iqi.user_rx[u]);
    }
  }
  return lin;
}

MatR real_channel_at(const Problem& p, const StarRisState& ris, int user) {
  return wlt_channel_composite(compose_effective_channel(p.scenario, ris, user), p.iqi.bs_tx,
                               p.iqi.user_rx[user]);
}

}  // namespace starmm
