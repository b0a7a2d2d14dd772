#include <doctest.h>

#include <sstream>

#include "test_util.hpp"

using namespace starmm;
using namespace testutil;

TEST_SUITE_BEGIN("rates");

namespace {

// Independent re-summation of D for one user: plain loops over the skip list.
MatR oracle_noise_sum(const std::vector<RealChannel>& links, const RealCovarianceSet& covs,
                      int user, const std::vector<int>& skip) {
  MatR d = links[user].c_noise;
  for (int j = 0; j < static_cast<int>(covs.p.size()); ++j) {
    bool skipped = false;
    for (int sidx : skip) skipped = skipped || sidx == j;
    if (!skipped) d += links[user].h_real * covs.p[j] * links[user].h_real.transpose();
  }
  return d;
}

struct Instance {
  ComplexScenario scenario;
  Problem prob;
  StarRisState ris;
  std::vector<RealChannel> links;
  RealCovarianceSet covs;
};

Instance make_instance(std::uint64_t seed, bool with_iqi = false) {
  std::mt19937_64 rng(seed);
  Instance in;
  in.scenario = desk_scenario(seed, 2, 6);
  in.prob = make_problem(in.scenario, 100.0);
  if (with_iqi) in.prob.iqi = mild_iqi(in.scenario);
  in.ris = random_ris(6, RisSetKind::TU, rng);
  in.links = build_links(in.scenario, in.ris, in.prob.iqi, in.prob.sigma2);
  in.covs = random_feasible_covs(in.scenario, 100.0, rng);
  return in;
}

}  // namespace

TEST_CASE("interference matrices reduce to noise when other powers vanish") {
  Instance in = make_instance(21);
  for (MatR& m : in.covs.p) m.setZero();
  InterferenceParts parts = interference_matrices(in.links, in.scenario, in.covs, 0, RateRole::Ccu);
  CHECK((parts.d - in.links[0].c_noise).cwiseAbs().maxCoeff() == 0.0);
  CHECK(parts.s.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("ccu and ceu noise sets differ exactly by the partner term") {
  Instance in = make_instance(22, true);
  const int k = 1, ceu = in.scenario.partner(k);
  InterferenceParts ccu = interference_matrices(in.links, in.scenario, in.covs, k, RateRole::Ccu);
  MatR tin_style = oracle_noise_sum(in.links, in.covs, k, {k});
  MatR partner_term = in.links[k].h_real * in.covs.p[ceu] * in.links[k].h_real.transpose();
  CHECK((ccu.d + partner_term - tin_style).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("interference matrices match independent re-summation") {
  Instance in = make_instance(23, true);
  for (int k = 0; k < in.scenario.k_pairs; ++k) {
    const int ceu = in.scenario.partner(k);
    InterferenceParts a = interference_matrices(in.links, in.scenario, in.covs, k, RateRole::Ccu);
    CHECK((a.d - oracle_noise_sum(in.links, in.covs, k, {k, ceu})).cwiseAbs().maxCoeff() < 1e-12);
    InterferenceParts b = interference_matrices(in.links, in.scenario, in.covs, ceu, RateRole::Ceu);
    CHECK((b.d - oracle_noise_sum(in.links, in.covs, ceu, {ceu})).cwiseAbs().maxCoeff() < 1e-12);
    InterferenceParts c =
        interference_matrices(in.links, in.scenario, in.covs, k, RateRole::CeuAtCcu);
    MatR cross = in.links[k].h_real * in.covs.p[ceu] * in.links[k].h_real.transpose();
    CHECK((c.s_cross - cross).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("role and user index must agree") {
  Instance in = make_instance(24);
  CHECK_THROWS_AS(interference_matrices(in.links, in.scenario, in.covs, 2, RateRole::Ccu),
                  DimensionError);
  CHECK_THROWS_AS(interference_matrices(in.links, in.scenario, in.covs, 0, RateRole::Ceu),
                  DimensionError);
}

TEST_CASE("zero signal means zero rate") {
  MatR d = 2.0 * MatR::Identity(4, 4);
  CHECK(rate_ccu(d, MatR::Zero(4, 4)) == 0.0);
}

TEST_CASE("scalar link recovers the Shannon formula") {
  const double p = 7.0, sigma2 = 1.5;
  MatR h = MatR::Identity(2, 2);  // unit complex channel in the real domain
  MatR s = h * (0.5 * p * MatR::Identity(2, 2)) * h.transpose();
  MatR d = 0.5 * sigma2 * MatR::Identity(2, 2);
  CHECK(rate_ccu(d, s) == doctest::Approx(std::log2(1.0 + p / sigma2)).epsilon(1e-12));
}

TEST_CASE("real-domain rate equals the complex-domain rate for proper signaling") {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 100; ++t) {
    MatC h = random_complex_matrix(2, 2, rng);
    MatC q = random_hermitian_psd(2, rng, 3.0);
    const double sigma2 = 1.0;
    MatR hr = real_composite(h, MatC::Zero(2, 2));
    MatR s = hr * proper_real_covariance(q) * hr.transpose();
    MatR d = 0.5 * sigma2 * MatR::Identity(4, 4);
    CHECK(rate_ccu(d, s) ==
          doctest::Approx(complex_rate_oracle(h, q, sigma2)).epsilon(1e-9));
  }
}

TEST_CASE("ceu rate is the minimum of its two decoding rates") {
  Instance in = make_instance(32, true);
  const int k = 0, ceu = in.scenario.partner(k);
  InterferenceParts own = interference_matrices(in.links, in.scenario, in.covs, ceu, RateRole::Ceu);
  InterferenceParts cross =
      interference_matrices(in.links, in.scenario, in.covs, k, RateRole::CeuAtCcu);
  CeuRate r = rate_ceu(own.d, own.s, cross.d, cross.s, cross.s_cross);
  CHECK(r.part_own == doctest::Approx(rate_ccu(own.d, own.s)).epsilon(1e-12));
  CHECK(r.part_partner ==
        doctest::Approx(rate_ccu(cross.d + cross.s, cross.s_cross)).epsilon(1e-12));
  CHECK(r.rate == std::min(r.part_own, r.part_partner));

  CeuRate zero_cross = rate_ceu(own.d, own.s, cross.d, cross.s, MatR::Zero(4, 4));
  CHECK(zero_cross.rate == 0.0);
}

TEST_CASE("det-ratio and direct forms agree") {
  std::mt19937_64 rng(33);
  MatR d = random_psd(4, rng) + MatR::Identity(4, 4);
  MatR s = random_psd(4, rng);
  double direct = std::log2((d + s).determinant() / d.determinant()) / 2.0;
  CHECK(rate_ccu(d, s) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("weighted minimum") {
  RateReport rep;
  rep.rates = VecR::Constant(4, 1.7);
  CHECK(weighted_min_rate(rep, VecR::Ones(4)) == doctest::Approx(1.7));
  RateReport two;
  two.rates = VecR(2);
  two.rates << 1.0, 3.0;
  VecR w(2);
  w << 2.0, 1.0;
  CHECK(weighted_min_rate(two, w) == doctest::Approx(2.0));

  std::mt19937_64 rng(34);
  std::uniform_real_distribution<double> u01(0.1, 2.0);
  for (int t = 0; t < 50; ++t) {
    RateReport r;
    r.rates = VecR(5);
    VecR wt(5);
    for (int i = 0; i < 5; ++i) {
      r.rates[i] = u01(rng);
      wt[i] = u01(rng);
    }
    double brute = 1e300;
    for (int i = 0; i < 5; ++i) brute = std::min(brute, wt[i] * r.rates[i]);
    CHECK(weighted_min_rate(r, wt) == doctest::Approx(brute).epsilon(1e-15));
  }
  VecR bad = VecR::Zero(5);
  RateReport r;
  r.rates = VecR::Ones(5);
  CHECK_THROWS_AS(weighted_min_rate(r, bad), ConfigError);
}

TEST_CASE("growing a covariance never shrinks the signal term") {
  std::mt19937_64 rng(35);
  Instance in = make_instance(36);
  MatR bump = random_psd(4, rng, 0.3);
  RealCovarianceSet larger = in.covs;
  larger.p[0] += bump;
  InterferenceParts before = interference_matrices(in.links, in.scenario, in.covs, 0, RateRole::Ccu);
  InterferenceParts after =
      interference_matrices(in.links, in.scenario, larger, 0, RateRole::Ccu);
  Eigen::SelfAdjointEigenSolver<MatR> es(after.s - before.s, Eigen::EigenvaluesOnly);
  CHECK(es.eigenvalues().minCoeff() > -1e-12);
}

TEST_CASE("SIC never hurts the CCU relative to TIN") {
  Instance in = make_instance(37, true);
  RateReport noma = evaluate_rates(in.links, in.scenario, in.covs, in.prob.weights, Access::NOMA);
  RateReport tin = evaluate_rates(in.links, in.scenario, in.covs, in.prob.weights, Access::TIN);
  for (int k = 0; k < in.scenario.k_pairs; ++k)
    CHECK(noma.rates[k] >= tin.rates[k] - 1e-12);
}

TEST_CASE("rates are invariant to a consistent orthogonal rotation") {
  std::mt19937_64 rng(38);
  Instance in = make_instance(39, true);
  MatR q = Eigen::HouseholderQR<MatR>(random_psd(4, rng) + MatR::Random(4, 4)).householderQ();
  std::vector<RealChannel> rotated = in.links;
  for (RealChannel& link : rotated) {
    link.h_real = q * link.h_real;
    link.c_noise = q * link.c_noise * q.transpose();
  }
  RateReport a = evaluate_rates(in.links, in.scenario, in.covs, in.prob.weights, Access::NOMA);
  RateReport b = evaluate_rates(rotated, in.scenario, in.covs, in.prob.weights, Access::NOMA);
  CHECK((a.rates - b.rates).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("proper subspace projection is the canonical real image") {
  std::mt19937_64 rng(40);
  MatC q = random_hermitian_psd(2, rng, 2.0);
  MatR p = proper_real_covariance(q);
  CHECK((pgs_subspace_project(p) - p).cwiseAbs().maxCoeff() < 1e-14);
  MatR noisy = p + 0.1 * random_psd(4, rng);
  MatR proj = pgs_subspace_project(noisy);
  // projection is idempotent and orthogonal (residual orthogonal to subspace)
  CHECK((pgs_subspace_project(proj) - proj).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(std::abs(((noisy - proj).array() * proj.array()).sum()) < 1e-12);
}

TEST_CASE("report invariants and CSV emission") {
  Instance in = make_instance(41, true);
  RateReport rep = evaluate_rates(in.links, in.scenario, in.covs, in.prob.weights, Access::NOMA);
  CHECK(rep.rates.minCoeff() >= 0.0);
  for (int k = 0; k < in.scenario.k_pairs; ++k) {
    const int ceu = in.scenario.partner(k);
    CHECK(rep.rates[ceu] == std::min(rep.ceu_parts[k][0], rep.ceu_parts[k][1]));
  }
  CHECK(rep.weighted_min == doctest::Approx(rep.rates.minCoeff()));
  std::ostringstream out;
  write_report_csv(out, rep, in.scenario);
  CHECK(out.str().find("user,role,rate,binding_branch") == 0);
  CHECK(out.str().find("ceu") != std::string::npos);
}

TEST_SUITE_END();
