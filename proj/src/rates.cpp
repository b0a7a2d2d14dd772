#include "starmm/rates.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace starmm {

const char* to_string(Access a) { return a == Access::NOMA ? "NOMA" : "TIN"; }
const char* to_string(Signaling s) { return s == Signaling::IGS ? "IGS" : "PGS"; }

double RealCovarianceSet::total_trace() const {
  double t = 0.0;
  for (const MatR& m : p) t += m.trace();
  return t;
}

MatR pgs_subspace_project(const MatR& m) {
  if (m.rows() != m.cols() || m.rows() % 2 != 0)
    throw DimensionError("pgs_subspace_project: matrix must be square with even size");
  const Eigen::Index n = m.rows() / 2;
  MatR a = 0.5 * (m.topLeftCorner(n, n) + m.bottomRightCorner(n, n));
  MatR b = 0.5 * (m.topRightCorner(n, n) - m.bottomLeftCorner(n, n));
  a = 0.5 * (a + a.transpose());
  b = 0.5 * (b - b.transpose());
  MatR out(2 * n, 2 * n);
  out.topLeftCorner(n, n) = a;
  out.topRightCorner(n, n) = b;
  out.bottomLeftCorner(n, n) = -b;
  out.bottomRightCorner(n, n) = a;
  return out;
}

bool covariance_set_feasible(const RealCovarianceSet& covs, Signaling signaling, double tol,
                             std::string* why) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  for (size_t k = 0; k < covs.p.size(); ++k) {
    const MatR& m = covs.p[k];
    if (m.rows() != m.cols()) return fail("P_" + std::to_string(k) + " not square");
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol)
      return fail("P_" + std::to_string(k) + " not symmetric");
    Eigen::SelfAdjointEigenSolver<MatR> es(symmetrize(m), Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-9 * std::max(1.0, m.norm()))
      return fail("P_" + std::to_string(k) + " has negative eigenvalues");
    if (signaling == Signaling::PGS &&
        (m - pgs_subspace_project(m)).cwiseAbs().maxCoeff() > tol * std::max(1.0, m.norm()))
      return fail("P_" + std::to_string(k) + " violates proper structure");
  }
  if (covs.total_trace() > covs.power_budget * (1.0 + 1e-9) + tol)
    return fail("sum trace exceeds power budget");
  return true;
}

RealCovarianceSet make_uniform_covariances(const ComplexScenario& s, double budget) {
  if (budget <= 0.0) throw ConfigError("make_uniform_covariances: budget must be positive");
  RealCovarianceSet covs;
  covs.power_budget = budget;
  const int n = 2 * s.n_bs;
  const int users = s.n_users();
  covs.p.assign(users, budget / (users * n) * MatR::Identity(n, n));
  return covs;
}

Problem make_problem(ComplexScenario scenario, double power_budget, Access access,
                     Signaling signaling, double sigma2) {
  Problem p;
  p.iqi = IqiModel::ideal(scenario.n_bs, scenario.n_u, scenario.n_users());
  p.weights = VecR::Ones(scenario.n_users());
  p.scenario = std::move(scenario);
  p.sigma2 = sigma2;
  p.access = access;
  p.signaling = signaling;
  p.power_budget = power_budget;
  return p;
}

namespace {

MatR accumulate_noise(const std::vector<RealChannel>& links, const RealCovarianceSet& covs,
                      int user, const std::vector<int>& skip) {
  const RealChannel& link = links[user];
  MatR d = link.c_noise;
  for (size_t j = 0; j < covs.p.size(); ++j) {
    if (std::find(skip.begin(), skip.end(), static_cast<int>(j)) != skip.end()) continue;
    d.noalias() += link.h_real * covs.p[j] * link.h_real.transpose();
  }
  return d;
}

double logdet_ratio_rate(const MatR& d, const MatR& s) {
  double v = (logdet_spd(d + s, "D+S") - logdet_spd(d, "D")) / (2.0 * kLn2);
  return std::max(v, 0.0);
}

}  // namespace

InterferenceParts interference_matrices(const std::vector<RealChannel>& links,
                                        const ComplexScenario& s, const RealCovarianceSet& covs,
                                        int user, RateRole role) {
  if (user < 0 || user >= s.n_users())
    throw DimensionError("interference_matrices: user out of range");
  if (static_cast<int>(links.size()) != s.n_users() ||
      static_cast<int>(covs.p.size()) != s.n_users())
    throw DimensionError("interference_matrices: links/covariances must cover all users");
  const bool ccu = s.is_ccu(user);
  if ((role == RateRole::Ccu || role == RateRole::CeuAtCcu) && !ccu)
    throw DimensionError("interference_matrices: role requires a CCU index");
  if (role == RateRole::Ceu && ccu)
    throw DimensionError("interference_matrices: Ceu role requires a CEU index");

  const RealChannel& link = links[user];
  const int partner = s.partner(user);
  InterferenceParts parts;
  switch (role) {
    case RateRole::Ccu:
      parts.d = accumulate_noise(links, covs, user, {user, partner});
      parts.s = link.h_real * covs.p[user] * link.h_real.transpose();
      break;
    case RateRole::Ceu:
      parts.d = accumulate_noise(links, covs, user, {user});
      parts.s = link.h_real * covs.p[user] * link.h_real.transpose();
      break;
    case RateRole::CeuAtCcu:
      parts.d = accumulate_noise(links, covs, user, {user, partner});
      parts.s = link.h_real * covs.p[user] * link.h_real.transpose();
      parts.s_cross = link.h_real * covs.p[partner] * link.h_real.transpose();
      break;
  }
  return parts;
}

double rate_ccu(const MatR& d, const MatR& s) {
  if (d.rows() != d.cols() || s.rows() != s.cols() || d.rows() != s.rows())
    throw DimensionError("rate_ccu: D/S shape mismatch");
  return logdet_ratio_rate(d, s);
}

CeuRate rate_ceu(const MatR& d_own, const MatR& s_own, const MatR& d_partner,
                 const MatR& s_partner_own, const MatR& s_cross) {
  CeuRate r;
  r.part_own = logdet_ratio_rate(d_own, s_own);
  r.part_partner = logdet_ratio_rate(d_partner + s_partner_own, s_cross);
  r.rate = std::min(r.part_own, r.part_partner);
  return r;
}

std::vector<RateBranch> make_branches(const ComplexScenario& s, Access access) {
  const int users = s.n_users();
  std::vector<int> all(users);
  for (int j = 0; j < users; ++j) all[j] = j;
  auto without = [&](std::initializer_list<int> skip) {
    std::vector<int> out;
    for (int j : all)
      if (std::find(skip.begin(), skip.end(), j) == skip.end()) out.push_back(j);
    return out;
  };

  std::vector<RateBranch> branches;
  if (access == Access::TIN) {
    for (int u = 0; u < users; ++u) branches.push_back({u, u, u, all});
    return branches;
  }
  for (int k = 0; k < s.k_pairs; ++k) {
    const int ceu = s.partner(k);
    branches.push_back({k, k, k, without({ceu})});   // CCU after SIC
    branches.push_back({ceu, ceu, ceu, all});        // CEU decodes itself
    branches.push_back({k, ceu, ceu, all});          // CEU stream decoded at the CCU
  }
  return branches;
}

MatR branch_xn(const std::vector<RealChannel>& links, const RealCovarianceSet& covs,
               const RateBranch& b) {
  const RealChannel& link = links[b.channel_user];
  MatR x = link.c_noise;
  for (int j : b.noise_set) x.noalias() += link.h_real * covs.p[j] * link.h_real.transpose();
  return x;
}

double branch_rate(const std::vector<RealChannel>& links, const RealCovarianceSet& covs,
                   const RateBranch& b) {
  const RealChannel& link = links[b.channel_user];
  MatR xn = branch_xn(links, covs, b);
  MatR xd = xn - link.h_real * covs.p[b.signal_user] * link.h_real.transpose();
  double v = (logdet_spd(xn, "X_N") - logdet_spd(xd, "X_D")) / (2.0 * kLn2);
  return std::max(v, 0.0);
}

double weighted_min_rate(const RateReport& report, const VecR& weights) {
  if (weights.size() != report.rates.size())
    throw DimensionError("weighted_min_rate: weight length mismatch");
  if ((weights.array() <= 0.0).any())
    throw ConfigError("weighted_min_rate: weights must be strictly positive");
  return (weights.array() * report.rates.array()).minCoeff();
}

RateReport evaluate_rates(const std::vector<RealChannel>& links, const ComplexScenario& s,
                          const RealCovarianceSet& covs, const VecR& weights, Access access) {
  const int users = s.n_users();
  RateReport rep;
  rep.rates = VecR::Zero(users);
  rep.ceu_parts.assign(s.k_pairs, {0.0, 0.0});
  rep.d_matrices.resize(users);
  rep.s_matrices.resize(users);

  if (access == Access::TIN) {
    for (int u = 0; u < users; ++u) {
      MatR d = accumulate_noise(links, covs, u, {u});
      MatR sig = links[u].h_real * covs.p[u] * links[u].h_real.transpose();
      rep.rates[u] = logdet_ratio_rate(d, sig);
      rep.d_matrices[u] = std::move(d);
      rep.s_matrices[u] = std::move(sig);
    }
    for (int k = 0; k < s.k_pairs; ++k)
      rep.ceu_parts[k] = {rep.rates[s.partner(k)], rep.rates[s.partner(k)]};
  } else {
    for (int k = 0; k < s.k_pairs; ++k) {
      const int ceu = s.partner(k);
      InterferenceParts ccu = interference_matrices(links, s, covs, k, RateRole::Ccu);
      InterferenceParts own = interference_matrices(links, s, covs, ceu, RateRole::Ceu);
      InterferenceParts cross = interference_matrices(links, s, covs, k, RateRole::CeuAtCcu);
      rep.rates[k] = rate_ccu(ccu.d, ccu.s);
      CeuRate cr = rate_ceu(own.d, own.s, cross.d, cross.s, cross.s_cross);
      rep.rates[ceu] = cr.rate;
      rep.ceu_parts[k] = {cr.part_own, cr.part_partner};
      rep.d_matrices[k] = std::move(ccu.d);
      rep.s_matrices[k] = std::move(ccu.s);
      rep.d_matrices[ceu] = std::move(own.d);
      rep.s_matrices[ceu] = std::move(own.s);
    }
  }
  rep.weighted_min = weighted_min_rate(rep, weights);
  return rep;
}

RateReport evaluate_rates(const Problem& p, const StarRisState& ris, const RealCovarianceSet& covs) {
  std::vector<RealChannel> links = build_links(p.scenario, ris, p.iqi, p.sigma2);
  return evaluate_rates(links, p.scenario, covs, p.weights, p.access);
}

void write_report_csv(std::ostream& out, const RateReport& report, const ComplexScenario& s) {
  out << "user,role,rate,binding_branch\n";
  for (int u = 0; u < s.n_users(); ++u) {
    const bool ccu = s.is_ccu(u);
    const char* binding = "own";
    if (!ccu) {
      const auto& parts = report.ceu_parts[s.partner(u)];
      binding = parts[0] <= parts[1] ? "own" : "at_partner";
    }
    out << u << ',' << (ccu ? "ccu" : "ceu") << ',' << report.rates[u] << ',' << binding << '\n';
  }
}

}  // namespace starmm
