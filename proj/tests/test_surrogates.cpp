#include <doctest.h>

#include "test_util.hpp"

using namespace starmm;
using namespace testutil;

TEST_SUITE_BEGIN("surrogates");

namespace {

struct Setup {
  Problem prob;
  RealCovarianceSet covs;
  StarRisState ris;
  ExpansionPoint ep;
};

Setup make_setup(std::uint64_t seed, Access access = Access::NOMA, bool with_iqi = true) {
  std::mt19937_64 rng(seed);
  ComplexScenario scenario = desk_scenario(seed, 2, 6);
  Problem prob = make_problem(scenario, 50.0, access);
  if (with_iqi) prob.iqi = mild_iqi(scenario);
  RealCovarianceSet covs = random_feasible_covs(scenario, 50.0, rng);
  StarRisState ris = random_ris(6, RisSetKind::TU, rng);
  ExpansionPoint ep = build_expansion_point(prob, covs, ris);
  return {std::move(prob), std::move(covs), std::move(ris), std::move(ep)};
}

double true_branch_rate_at_ris(const Setup& s, const RateBranch& b, const StarRisState& ris) {
  std::vector<RealChannel> links = build_links(s.prob.scenario, ris, s.prob.iqi, s.prob.sigma2);
  return branch_rate(links, s.ep.covs, b);
}

}  // namespace

TEST_CASE("expansion point caches equal fresh recomputation") {
  Setup s = make_setup(50);
  for (size_t i = 0; i < s.ep.branches.size(); ++i) {
    MatR fresh = branch_xn(s.ep.links, s.covs, s.ep.branches[i]);
    CHECK((fresh - s.ep.xn0[i]).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(s.ep.branch_rate0[i] ==
          doctest::Approx(branch_rate(s.ep.links, s.covs, s.ep.branches[i])).epsilon(1e-12));
  }
  RateReport rep = evaluate_rates(s.ep.links, s.prob.scenario, s.covs, s.prob.weights, s.prob.access);
  CHECK((s.ep.user_rates0 - rep.rates).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("covariance surrogates are tight at the expansion point") {
  for (auto seed : {51, 52, 53}) {
    Setup s = make_setup(seed);
    std::vector<CovSurrogate> surr = build_cov_surrogates(s.ep);
    for (size_t i = 0; i < surr.size(); ++i)
      CHECK(std::abs(surr[i].value(s.covs.p) - s.ep.branch_rate0[i]) < 1e-9);
  }
}

TEST_CASE("ris surrogates are tight at the expansion point") {
  for (auto seed : {54, 55, 56}) {
    Setup s = make_setup(seed);
    std::vector<RisSurrogate> surr = build_ris_surrogates(s.ep);
    for (size_t i = 0; i < surr.size(); ++i) {
      MatR h = real_channel_at(s.prob, s.ris, surr[i].channel_user());
      CHECK(std::abs(surr[i].value(h) - s.ep.branch_rate0[i]) < 1e-9);
    }
  }
}

TEST_CASE("covariance surrogates minorize the true branch rates") {
  Setup s = make_setup(57);
  std::mt19937_64 rng(570);
  std::vector<CovSurrogate> surr = build_cov_surrogates(s.ep);
  for (int draw = 0; draw < 60; ++draw) {
    RealCovarianceSet c2 = random_feasible_covs(s.prob.scenario, 50.0, rng);
    for (size_t i = 0; i < surr.size(); ++i) {
      double truth = branch_rate(s.ep.links, c2, s.ep.branches[i]);
      CHECK(surr[i].value(c2.p) <= truth + 1e-9);
    }
  }
}

TEST_CASE("ris surrogates minorize the true branch rates") {
  Setup s = make_setup(58);
  std::mt19937_64 rng(580);
  std::vector<RisSurrogate> surr = build_ris_surrogates(s.ep);
  for (int draw = 0; draw < 60; ++draw) {
    StarRisState r2 = random_ris(s.prob.scenario.n_ris, RisSetKind::TU, rng);
    for (size_t i = 0; i < surr.size(); ++i) {
      double truth = true_branch_rate_at_ris(s, s.ep.branches[i], r2);
      MatR h = real_channel_at(s.prob, r2, surr[i].channel_user());
      CHECK(surr[i].value(h) <= truth + 1e-9);
    }
  }
}

TEST_CASE("covariance surrogate gradients match central differences") {
  Setup s = make_setup(59);
  std::vector<CovSurrogate> surr = build_cov_surrogates(s.ep);
  const int users = s.prob.scenario.n_users();
  const int n = 2 * s.prob.scenario.n_bs;
  const double step = 1e-5;
  for (size_t i = 0; i < surr.size(); i += 2) {  // subsample branches for speed
    std::vector<MatR> grad(users, MatR::Zero(n, n));
    surr[i].value_and_gradient(s.covs.p, 1.0, &grad);
    for (int j = 0; j < users; ++j) {
      for (int r = 0; r < n; ++r) {
        for (int c = r; c < n; ++c) {
          std::vector<MatR> hi = s.covs.p, lo = s.covs.p;
          hi[j](r, c) += step;
          lo[j](r, c) -= step;
          if (r != c) {
            hi[j](c, r) += step;
            lo[j](c, r) -= step;
          }
          double fd = (surr[i].value(hi) - surr[i].value(lo)) / (2.0 * step);
          double expected = r == c ? grad[j](r, r) : 2.0 * grad[j](r, c);
          if (std::abs(fd) < 1e-12 && std::abs(expected) < 1e-12) continue;
          CHECK(fd == doctest::Approx(expected).epsilon(1e-4));
        }
      }
    }
  }
}

TEST_CASE("ris surrogate gradients match central differences") {
  Setup s = make_setup(60);
  RisLinearization lin = build_ris_linearization(s.prob);
  std::vector<RisSurrogate> surr = build_ris_surrogates(s.ep);
  const double step = 1e-5;
  for (size_t i = 0; i < surr.size(); i += 2) {
    const int u = surr[i].channel_user();
    const bool reflect = s.prob.scenario.side[u] == RisSide::Reflect;
    MatR w = surr[i].gradient_weight(real_channel_at(s.prob, s.ris, u));
    for (int e = 0; e < s.prob.scenario.n_ris; ++e) {
      for (int coord = 0; coord < 2; ++coord) {
        double analytic = (w.array() * lin.jac[u][2 * e + coord].array()).sum();
        StarRisState hi = s.ris, lo = s.ris;
        Cplx bump = coord == 0 ? Cplx(step, 0.0) : Cplx(0.0, step);
        (reflect ? hi.theta_r : hi.theta_t)[e] += bump;
        (reflect ? lo.theta_r : lo.theta_t)[e] -= bump;
        double fhi = surr[i].value(real_channel_at(s.prob, hi, u));
        double flo = surr[i].value(real_channel_at(s.prob, lo, u));
        double fd = (fhi - flo) / (2.0 * step);
        if (std::abs(fd) < 1e-12 && std::abs(analytic) < 1e-12) continue;
        CHECK(fd == doctest::Approx(analytic).epsilon(1e-4));
      }
    }
  }
}

TEST_CASE("surrogate gradient equals the true rate gradient at the expansion point") {
  Setup s = make_setup(61);
  const int users = s.prob.scenario.n_users();
  const int n = 2 * s.prob.scenario.n_bs;
  std::vector<CovSurrogate> surr = build_cov_surrogates(s.ep);
  const double step = 1e-5;
  const size_t i = 0;  // CCU branch of pair 0
  std::vector<MatR> grad(users, MatR::Zero(n, n));
  surr[i].value_and_gradient(s.covs.p, 1.0, &grad);
  for (int j = 0; j < users; ++j) {
    for (int r = 0; r < n; ++r) {
      RealCovarianceSet hi = s.covs, lo = s.covs;
      hi.p[j](r, r) += step;
      lo.p[j](r, r) -= step;
      double fd = (branch_rate(s.ep.links, hi, s.ep.branches[i]) -
                   branch_rate(s.ep.links, lo, s.ep.branches[i])) /
                  (2.0 * step);
      if (std::abs(fd) < 1e-10 && std::abs(grad[j](r, r)) < 1e-10) continue;
      CHECK(fd == doctest::Approx(grad[j](r, r)).epsilon(2e-4));
    }
  }
}

TEST_CASE("surrogates are concave along random segments") {
  Setup s = make_setup(62);
  std::mt19937_64 rng(620);
  std::uniform_real_distribution<double> u01(0.05, 0.95);
  std::vector<CovSurrogate> cs = build_cov_surrogates(s.ep);
  std::vector<RisSurrogate> rs = build_ris_surrogates(s.ep);
  for (int t = 0; t < 25; ++t) {
    RealCovarianceSet a = random_feasible_covs(s.prob.scenario, 50.0, rng);
    RealCovarianceSet b = random_feasible_covs(s.prob.scenario, 50.0, rng);
    double lam = u01(rng);
    std::vector<MatR> mid(a.p.size());
    for (size_t j = 0; j < a.p.size(); ++j) mid[j] = lam * a.p[j] + (1.0 - lam) * b.p[j];
    for (const CovSurrogate& su : cs)
      CHECK(su.value(mid) >= lam * su.value(a.p) + (1.0 - lam) * su.value(b.p) - 1e-9);

    StarRisState ra = random_ris(6, RisSetKind::TU, rng);
    StarRisState rb = random_ris(6, RisSetKind::TU, rng);
    StarRisState rmid = ra;
    rmid.theta_r = lam * ra.theta_r + (1.0 - lam) * rb.theta_r;
    rmid.theta_t = lam * ra.theta_t + (1.0 - lam) * rb.theta_t;
    for (const RisSurrogate& su : rs) {
      const int u = su.channel_user();
      double va = su.value(real_channel_at(s.prob, ra, u));
      double vb = su.value(real_channel_at(s.prob, rb, u));
      double vm = su.value(real_channel_at(s.prob, rmid, u));
      CHECK(vm >= lam * va + (1.0 - lam) * vb - 1e-9);
    }
  }
}

TEST_CASE("named builders select the expected branches") {
  Setup s = make_setup(63);
  CovSurrogate ccu = surrogate_cov_ccu(s.ep, 1);
  CHECK(ccu.owner() == 1);
  auto [own, atp] = surrogate_cov_ceu(s.ep, 1);
  CHECK(own.owner() == 3);
  CHECK(atp.owner() == 3);
  RisSurrogate rcu = surrogate_ris_ccu(s.ep, 0);
  CHECK(rcu.channel_user() == 0);
  auto [rown, ratp] = surrogate_ris_ceu(s.ep, 0);
  CHECK(rown.channel_user() == 2);
  CHECK(ratp.channel_user() == 0);

  Setup tin = make_setup(64, Access::TIN);
  CHECK_THROWS_AS(branch_indices_ceu(tin.ep, 0), DimensionError);
  CHECK(build_cov_surrogates(tin.ep).size() == 4);  // one branch per user
}

TEST_CASE("tin surrogates follow the same contracts") {
  Setup s = make_setup(65, Access::TIN);
  std::mt19937_64 rng(650);
  std::vector<CovSurrogate> surr = build_cov_surrogates(s.ep);
  for (size_t i = 0; i < surr.size(); ++i)
    CHECK(std::abs(surr[i].value(s.covs.p) - s.ep.branch_rate0[i]) < 1e-9);
  for (int draw = 0; draw < 30; ++draw) {
    RealCovarianceSet c2 = random_feasible_covs(s.prob.scenario, 50.0, rng);
    for (size_t i = 0; i < surr.size(); ++i)
      CHECK(surr[i].value(c2.p) <= branch_rate(s.ep.links, c2, s.ep.branches[i]) + 1e-9);
  }
}

TEST_SUITE_END();
