#include "starmm/selftest.hpp"

#include <cmath>
#include <ostream>
#include <random>

#include "starmm/ao.hpp"
#include "starmm/sweep.hpp"

namespace starmm {

namespace {

struct Checker {
  std::ostream& out;
  bool all_ok = true;

  void check(const char* name, bool ok) {
    out << (ok ? "ok   " : "FAIL ") << name << '\n';
    all_ok = all_ok && ok;
  }
};

RealCovarianceSet random_covs(const ComplexScenario& s, double budget, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  RealCovarianceSet covs;
  covs.power_budget = budget;
  const int n = 2 * s.n_bs;
  for (int k = 0; k < s.n_users(); ++k) {
    MatR m(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) m(r, c) = n01(rng);
    covs.p.push_back(m * m.transpose() * (budget / (s.n_users() * n)));
  }
  return project_feasible(std::move(covs), Signaling::IGS);
}

StarRisState random_ris_tu(int n_ris, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  StarRisState st;
  st.set_kind = RisSetKind::TU;
  st.theta_r.resize(n_ris);
  st.theta_t.resize(n_ris);
  for (int i = 0; i < n_ris; ++i) {
    double split = u01(rng);
    double total = u01(rng);
    st.theta_r[i] = std::polar(std::sqrt(total * split), 2.0 * std::numbers::pi * u01(rng));
    st.theta_t[i] = std::polar(std::sqrt(total * (1.0 - split)), 2.0 * std::numbers::pi * u01(rng));
  }
  return st;
}

}  // namespace

bool selftest_run(std::ostream& out) {
  Checker ck{out};
  std::mt19937_64 rng(20240817ULL);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  // widely-linear transform identities
  {
    bool ok = true;
    for (int t = 0; t < 50; ++t) {
      int n = 1 + static_cast<int>(3 * u01(rng));
      VecR amp(n), ph(n);
      for (int i = 0; i < n; ++i) {
        amp[i] = 0.5 + 0.5 * u01(rng);
        ph[i] = (u01(rng) - 0.5) * 0.35;
      }
      GammaPair g = gamma_matrices(amp, ph);
      for (int i = 0; i < n; ++i)
        ok = ok && (g.g1[i] + std::conj(g.g2[i]) == Cplx(1.0, 0.0));
    }
    ck.check("gamma identity G1 + conj(G2) = I", ok);
  }
  {
    RealChannel rc = real_decompose(MatC::Identity(2, 2), IqiProfile::ideal(2),
                                    IqiProfile::ideal(2), 2.0);
    ck.check("ideal hardware noise covariance = (sigma2/2) I",
             (rc.c_noise - MatR::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);
  }

  ScenarioConfig cfg;
  cfg.n_ris = 6;
  cfg.k_pairs = 2;
  ComplexScenario scenario = generate_scenario(cfg, 7);
  Problem prob = make_problem(scenario, 2e5);

  std::mt19937_64 rng2(11);
  RealCovarianceSet covs = random_covs(scenario, prob.power_budget, rng2);
  StarRisState ris = random_ris_tu(scenario.n_ris, rng2);
  ExpansionPoint ep = build_expansion_point(prob, covs, ris);

  // tightness of all surrogate families at the expansion point
  {
    bool ok = true;
    std::vector<CovSurrogate> cs = build_cov_surrogates(ep);
    for (size_t i = 0; i < cs.size(); ++i)
      ok = ok && std::abs(cs[i].value(covs.p) - ep.branch_rate0[i]) < 1e-9;
    std::vector<RisSurrogate> rs = build_ris_surrogates(ep);
    for (size_t i = 0; i < rs.size(); ++i) {
      MatR h = real_channel_at(prob, ris, rs[i].channel_user());
      ok = ok && std::abs(rs[i].value(h) - ep.branch_rate0[i]) < 1e-9;
    }
    ck.check("surrogates tight at the expansion point", ok);
  }
  // minorant spot check
  {
    bool ok = true;
    std::vector<CovSurrogate> cs = build_cov_surrogates(ep);
    std::vector<RisSurrogate> rs = build_ris_surrogates(ep);
    for (int draw = 0; draw < 50 && ok; ++draw) {
      RealCovarianceSet c2 = random_covs(scenario, prob.power_budget, rng2);
      for (size_t i = 0; i < cs.size(); ++i) {
        double truth = branch_rate(ep.links, c2, ep.branches[i]);
        ok = ok && cs[i].value(c2.p) <= truth + 1e-9;
      }
      StarRisState r2 = random_ris_tu(scenario.n_ris, rng2);
      std::vector<RealChannel> links2 = build_links(scenario, r2, prob.iqi, prob.sigma2);
      for (size_t i = 0; i < rs.size(); ++i) {
        double truth = branch_rate(links2, covs, ep.branches[i]);
        MatR h = real_channel_at(prob, r2, ep.branches[i].channel_user);
        ok = ok && rs[i].value(h) <= truth + 1e-9;
      }
    }
    ck.check("surrogates minorize the true rates", ok);
  }
  // projection idempotence
  {
    RealCovarianceSet once = project_feasible(covs, Signaling::IGS);
    RealCovarianceSet twice = project_feasible(once, Signaling::IGS);
    double diff = 0.0;
    for (size_t k = 0; k < once.p.size(); ++k)
      diff = std::max(diff, (once.p[k] - twice.p[k]).cwiseAbs().maxCoeff());
    ck.check("project_feasible is idempotent", diff < 1e-12);
  }
  // normalization
  {
    StarRisState n = normalize_unit_sum(ris);
    bool ok = true;
    for (int i = 0; i < n.size(); ++i)
      ok = ok && std::abs(std::norm(n.theta_r[i]) + std::norm(n.theta_t[i]) - 1.0) < 1e-12;
    ck.check("normalize_unit_sum lands on the unit sum", ok);
  }
  // channel composition linearity in theta
  {
    StarRisState base = random_ris_tu(scenario.n_ris, rng2);
    MatC h0 = compose_effective_channel(scenario, base, 0);
    StarRisState bumped = base;
    const double delta = 0.37;
    bumped.theta_r[2] += delta;
    MatC h1 = compose_effective_channel(scenario, bumped, 0);
    MatC expected = delta * scenario.ris_to_user[0].col(2) * scenario.bs_to_ris.row(2);
    ck.check("effective channel is linear in each coefficient",
             (h1 - h0 - expected).cwiseAbs().maxCoeff() < 1e-12);
  }
  return ck.all_ok;
}

}  // namespace starmm
