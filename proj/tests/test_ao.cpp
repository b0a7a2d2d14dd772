#include <doctest.h>

#include <sstream>

#include "test_util.hpp"

using namespace starmm;
using namespace testutil;

TEST_SUITE_BEGIN("ao");

namespace {

AoConfig fast_ao() {
  AoConfig cfg;
  cfg.max_rounds = 10;
  cfg.rel_tol = 1e-3;
  cfg.cov.max_iters = 160;
  cfg.ris.max_iters = 120;
  return cfg;
}

void check_monotone(const AoTrace& trace) {
  for (size_t i = 1; i < trace.records.size(); ++i)
    CHECK(trace.records[i].weighted_min >= trace.records[i - 1].weighted_min - 1e-9);
}

}  // namespace

TEST_CASE("no surface degenerates to covariance-only rounds") {
  ComplexScenario s = desk_scenario(100, 2, 0);
  Problem prob = make_problem(s, 1e5);
  AoResult res = optimize(prob, fast_ao());
  CHECK(res.trace.records.size() >= 2);
  check_monotone(res.trace);
  CHECK(res.ris.size() == 0);
}

TEST_CASE("identical configs give identical traces") {
  ComplexScenario s = desk_scenario(101, 2, 6);
  Problem prob = make_problem(s, 1e5);
  prob.iqi = mild_iqi(s);
  AoResult a = optimize(prob, fast_ao());
  AoResult b = optimize(prob, fast_ao());
  REQUIRE(a.trace.records.size() == b.trace.records.size());
  for (size_t i = 0; i < a.trace.records.size(); ++i)
    CHECK(a.trace.records[i].weighted_min == b.trace.records[i].weighted_min);
  CHECK((a.report.rates - b.report.rates).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("objective is monotone across modes and set kinds") {
  for (std::uint64_t seed : {111, 112}) {
    ComplexScenario s = desk_scenario(seed, 2, 6);
    Problem prob = make_problem(s, 1e5);
    prob.iqi = mild_iqi(s);
    for (RisSetKind kind : {RisSetKind::TU, RisSetKind::TN}) {
      AoConfig cfg = fast_ao();
      cfg.ris.set_kind = kind;
      AoResult res = optimize(prob, cfg);
      check_monotone(res.trace);
      CHECK(ris_state_feasible(res.ris, 1e-7));
      std::string why;
      CHECK(covariance_set_feasible(res.covs, prob.signaling, 1e-6, &why));
    }
    AoConfig ms = fast_ao();
    ms.ris.mode = RisMode::MS;
    ms.ris.set_kind = RisSetKind::TI;
    AoResult res = optimize(prob, ms);
    check_monotone(res.trace);
  }
}

TEST_CASE("paper-scale configuration runs to convergence") {
  ComplexScenario s = desk_scenario(113, 3, 60);
  CHECK(s.n_users() == 6);
  Problem prob = make_problem(s, 1e5);
  AoConfig cfg = fast_ao();
  cfg.max_rounds = 6;
  AoResult res = optimize(prob, cfg);
  check_monotone(res.trace);
  CHECK(res.report.weighted_min > 0.0);
}

TEST_CASE("tiny instance lands near the joint brute-force optimum") {
  for (std::uint64_t seed : {121, 122}) {
    ScenarioConfig cfg;
    cfg.n_bs = cfg.n_u = 1;
    cfg.n_ris = 2;
    cfg.k_pairs = 1;
    ComplexScenario s = generate_scenario(cfg, seed);
    const double budget = 2e5;
    Problem prob = make_problem(s, budget);
    AoConfig ao = fast_ao();
    ao.max_rounds = 16;
    AoResult res = optimize(prob, ao);

    // power split x 16-level phases on both elements, even energy split
    double grid_best = 0.0;
    const int phases = 16;
    const double amp = 1.0 / std::sqrt(2.0);
    for (int i = 1; i < 32; ++i) {
      double rho = i / 32.0;
      for (int p0 = 0; p0 < phases; ++p0)
        for (int p1 = 0; p1 < phases; ++p1)
          for (int q0 = 0; q0 < phases; ++q0)
            for (int q1 = 0; q1 < phases; ++q1) {
              StarRisState cand;
              cand.theta_r = VecC(2);
              cand.theta_t = VecC(2);
              cand.theta_r[0] = std::polar(amp, 2.0 * std::numbers::pi * p0 / phases);
              cand.theta_r[1] = std::polar(amp, 2.0 * std::numbers::pi * p1 / phases);
              cand.theta_t[0] = std::polar(amp, 2.0 * std::numbers::pi * q0 / phases);
              cand.theta_t[1] = std::polar(amp, 2.0 * std::numbers::pi * q1 / phases);
              grid_best = std::max(grid_best, scalar_pair_min_rate(prob, cand, rho * budget,
                                                                    (1.0 - rho) * budget));
            }
    }
    CHECK(res.report.weighted_min >= 0.95 * grid_best);
  }
}

TEST_CASE("mismatch evaluation") {
  ComplexScenario s = desk_scenario(131, 2, 6);
  Problem prob = make_problem(s, 1e5);
  prob.iqi = IqiModel::uniform(s.n_bs, s.n_u, s.n_users(), 0.85, 0.08);
  AoConfig cfg = fast_ao();
  cfg.max_rounds = 4;
  AoResult res = optimize(prob, cfg);

  RateReport same = evaluate_design_under_mismatch(res.covs, res.ris, prob, prob.iqi);
  CHECK((same.rates - res.report.rates).cwiseAbs().maxCoeff() == 0.0);

  IqiModel ideal = IqiModel::ideal(s.n_bs, s.n_u, s.n_users());
  RateReport under_ideal = evaluate_design_under_mismatch(res.covs, res.ris, prob, ideal);
  std::vector<RealChannel> links = build_links(s, res.ris, ideal, prob.sigma2);
  CHECK((links[0].c_noise - 0.5 * prob.sigma2 * MatR::Identity(2 * s.n_u, 2 * s.n_u))
            .cwiseAbs()
            .maxCoeff() == 0.0);
  RateReport manual = evaluate_rates(links, s, res.covs, prob.weights, prob.access);
  CHECK((under_ideal.rates - manual.rates).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("trace csv and state dump round trip") {
  ComplexScenario s = desk_scenario(141, 1, 4);
  Problem prob = make_problem(s, 1e4);
  AoConfig cfg = fast_ao();
  cfg.max_rounds = 3;
  AoResult res = optimize(prob, cfg);

  std::ostringstream trace;
  write_trace_csv(trace, res.trace);
  CHECK(trace.str().find("iter,weighted_min") == 0);

  std::stringstream state;
  save_state(state, res.covs, res.ris);
  auto [covs, ris] = load_state(state);
  CHECK(covs.power_budget == res.covs.power_budget);
  for (size_t k = 0; k < covs.p.size(); ++k)
    CHECK((covs.p[k] - res.covs.p[k]).cwiseAbs().maxCoeff() == 0.0);
  CHECK((ris.theta_r - res.ris.theta_r).cwiseAbs().maxCoeff() == 0.0);
  CHECK((ris.theta_t - res.ris.theta_t).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("driver validates weights and budget") {
  ComplexScenario s = desk_scenario(151, 1, 2);
  Problem prob = make_problem(s, 10.0);
  prob.weights[0] = 0.0;
  CHECK_THROWS_AS(optimize(prob, fast_ao()), ConfigError);
  Problem bad = make_problem(s, -1.0);
  CHECK_THROWS_AS(optimize(bad, fast_ao()), ConfigError);
}

TEST_SUITE_END();
