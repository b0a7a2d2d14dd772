#include "starmm/ao.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace starmm {

AoConfig AoConfig::from_config(const KeyValueConfig& cfg) {
  AoConfig a;
  a.max_rounds = static_cast<int>(cfg.get_int("ao_max_rounds", a.max_rounds));
  a.rel_tol = cfg.get_double("ao_rel_tol", a.rel_tol);
  a.cov = CovSolveOptions::from_config(cfg);
  a.ris = RisStepConfig::from_config(cfg);
  std::string strat = cfg.get_string("ms_partition", "alternating");
  if (strat == "alternating") a.ms_strategy = MsPartitionStrategy::Alternating;
  else if (strat == "greedy_gain") a.ms_strategy = MsPartitionStrategy::GreedyGain;
  else throw ConfigError("ms_partition must be alternating or greedy_gain");
  a.ris_init_seed = static_cast<std::uint64_t>(cfg.get_int("ris_init_seed", 1));
  a.regular_ris = cfg.get_bool("regular_ris", false);
  a.epsilon_floor = cfg.get_double("ris_epsilon_floor", a.epsilon_floor);
  if (cfg.has("ao_power_stages")) {
    a.power_stages = cfg.get_double_list("ao_power_stages");
    if (a.power_stages.empty() || a.power_stages.back() != 1.0)
      throw ConfigError("ao_power_stages must end with 1.0");
  }
  a.stage_rounds = static_cast<int>(cfg.get_int("ao_stage_rounds", a.stage_rounds));
  a.restarts = static_cast<int>(cfg.get_int("ao_restarts", a.restarts));
  return a;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

namespace {

// One AO pass at a fixed budget from the given starting state. Appends
// monotone records to `trace` starting at iteration index `iter0`.
struct SingleRun {
  RealCovarianceSet covs;
  StarRisState ris;
  double objective = 0.0;
};

SingleRun run_ao_rounds(const Problem& p, const AoConfig& cfg, RisStepConfig ris_cfg,
                        RealCovarianceSet covs, StarRisState ris, int max_rounds, AoTrace& trace,
                        int& iter) {
  RateReport rep = evaluate_rates(p, ris, covs);
  double cur_obj = rep.weighted_min;
  if (trace.records.empty()) {
    AoIterRecord rec;
    rec.iter = iter++;
    rec.weighted_min = cur_obj;
    rec.rates = rep.rates;
    trace.records.push_back(std::move(rec));
  }

  for (int round = 1; round <= max_rounds; ++round) {
    const double round_start_obj = cur_obj;
    AoIterRecord rec;
    rec.iter = iter++;

    auto t0 = std::chrono::steady_clock::now();
    ExpansionPoint ep = build_expansion_point(p, covs, ris);
    CovStepResult cov_res = solve_covariance_step(ep, p, p.power_budget, cfg.cov);
    rec.cov_warning = cov_res.warning;
    if (!cov_res.warning) {
      RateReport cand = evaluate_rates(p, ris, cov_res.covs);
      if (cand.weighted_min >= cur_obj) {
        covs = std::move(cov_res.covs);
        cur_obj = cand.weighted_min;
      } else {
        rec.cov_warning = true;  // surrogate ascent did not carry to the true rates
      }
    }
    rec.cov_seconds = seconds_since(t0);

    if (p.scenario.n_ris > 0) {
      t0 = std::chrono::steady_clock::now();
      ExpansionPoint ep2 = build_expansion_point(p, covs, ris);
      RisStepResult ris_res = solve_ris_step(ep2, p, ris_cfg);
      ris = ris_res.state;
      cur_obj = std::max(cur_obj, ris_res.objective);
      rec.ris_accepted = ris_res.accepted;
      rec.ris_warning = ris_res.warning;
      rec.ris_seconds = seconds_since(t0);
      ris_cfg.epsilon = std::max(0.5 * ris_cfg.epsilon, cfg.epsilon_floor);
    }

    RateReport now = evaluate_rates(p, ris, covs);
    rec.weighted_min = now.weighted_min;
    rec.rates = now.rates;
    trace.records.push_back(rec);

    const double rel = (cur_obj - round_start_obj) / std::max(std::abs(round_start_obj), 1e-12);
    if (rel < cfg.rel_tol) {
      trace.converged = true;
      break;
    }
  }
  return {std::move(covs), std::move(ris), cur_obj};
}

// Full pass: power continuation from the uniform-white start at the lowest
// stage, scaling covariances between stages, then the final budget.
AoResult run_full(const Problem& p, const AoConfig& cfg, const RisStepConfig& ris_cfg,
                  const StarRisState& ris0, const RealCovarianceSet* covs0) {
  AoResult out;
  int iter = 0;
  StarRisState ris = ris0;
  RealCovarianceSet covs;
  std::vector<double> stages = cfg.power_stages.empty() ? std::vector<double>{1.0}
                                                        : cfg.power_stages;
  SingleRun run;
  for (size_t si = 0; si < stages.size(); ++si) {
    Problem sub = p;
    sub.power_budget = p.power_budget * stages[si];
    if (si == 0) {
      if (covs0) {
        covs = *covs0;
        const double scale = sub.power_budget / std::max(covs.total_trace(), 1e-300);
        if (scale < 1.0)
          for (MatR& m : covs.p) m *= scale;
        covs.power_budget = sub.power_budget;
      } else {
        covs = make_uniform_covariances(p.scenario, sub.power_budget);
      }
    } else {
      const double scale = stages[si] / stages[si - 1];
      for (MatR& m : covs.p) m *= scale;
      covs.power_budget = sub.power_budget;
    }
    const bool last = si + 1 == stages.size();
    out.trace.converged = false;
    run = run_ao_rounds(sub, cfg, ris_cfg, std::move(covs), std::move(ris),
                        last ? cfg.max_rounds : std::min(cfg.max_rounds, cfg.stage_rounds),
                        out.trace, iter);
    covs = std::move(run.covs);
    ris = std::move(run.ris);
  }
  out.covs = std::move(covs);
  out.ris = std::move(ris);
  out.report = evaluate_rates(p, out.ris, out.covs);
  return out;
}

}  // namespace

namespace {

void adopt_better(AoResult& best, AoResult cand, bool& have) {
  if (!have || cand.report.weighted_min > best.report.weighted_min) {
    best = std::move(cand);
    have = true;
  }
}

// Native run for one set kind plus fresh-phase restarts from the incumbent.
void explore_kind(const Problem& p, const AoConfig& cfg, const RisStepConfig& ris_cfg,
                  const std::vector<RisSide>& assignment, AoResult& best, bool& have) {
  StarRisState ris0 = make_initial_ris(p.scenario, ris_cfg.mode, ris_cfg.set_kind, assignment,
                                       cfg.ris_init_seed);
  adopt_better(best, run_full(p, cfg, ris_cfg, ris0, nullptr), have);
  if (p.scenario.n_ris == 0) return;
  for (int j = 1; j <= cfg.restarts; ++j) {
    StarRisState fresh = make_initial_ris(p.scenario, ris_cfg.mode, ris_cfg.set_kind, assignment,
                                          cfg.ris_init_seed + 7919ULL * j);
    adopt_better(best, run_full(p, cfg, ris_cfg, fresh, &best.covs), have);
  }
}

// Nested-set continuation: solve the most constrained kind first and track
// its solution through the relaxations, competing against native starts at
// every level. States feasible for T_N are feasible for T_I and T_U, so the
// final objective is ordered across the three kinds on identical instances.
AoResult optimize_kind_chain(const Problem& p, const AoConfig& cfg) {
  RisStepConfig ris_cfg = cfg.ris;
  std::vector<RisSide> assignment;
  if (cfg.regular_ris && p.scenario.n_ris > 0) {
    ris_cfg.mode = RisMode::MS;
    ris_cfg.set_kind = RisSetKind::TI;
    assignment.assign(p.scenario.n_ris, RisSide::Reflect);
  } else if (ris_cfg.mode == RisMode::MS && p.scenario.n_ris > 0) {
    assignment = ms_partition(p.scenario, cfg.ms_strategy);
  }

  std::vector<RisSetKind> kinds;
  if (ris_cfg.mode == RisMode::ES && p.scenario.n_ris > 0) {
    kinds.push_back(RisSetKind::TN);
    if (ris_cfg.set_kind != RisSetKind::TN) kinds.push_back(RisSetKind::TI);
    if (ris_cfg.set_kind == RisSetKind::TU) kinds.push_back(RisSetKind::TU);
  } else {
    kinds.push_back(ris_cfg.set_kind);
  }

  AoResult best;
  bool have = false;
  for (size_t ki = 0; ki < kinds.size(); ++ki) {
    RisStepConfig kcfg = ris_cfg;
    kcfg.set_kind = kinds[ki];
    if (have) {
      // carry the previous kind's solution into the relaxed set
      AoResult carried = best;
      carried.ris.set_kind = kinds[ki];
      adopt_better(best, run_full(p, cfg, kcfg, carried.ris, &carried.covs), have);
    }
    explore_kind(p, cfg, kcfg, assignment, best, have);
  }
  return best;
}

}  // namespace

AoResult optimize(const Problem& p, const AoConfig& cfg) {
  validate_scenario(p.scenario);
  if (p.weights.size() != p.scenario.n_users())
    throw DimensionError("optimize: weight vector must cover all users");
  if ((p.weights.array() <= 0.0).any())
    throw ConfigError("optimize: weights must be strictly positive");
  if (p.power_budget <= 0.0) throw ConfigError("optimize: power budget must be positive");

  if (p.signaling == Signaling::IGS) {
    // Proper-restricted pre-solve; its solution is feasible for the improper
    // problem, so the returned objective is never below the PGS result.
    Problem pgs = p;
    pgs.signaling = Signaling::PGS;
    AoResult best = optimize_kind_chain(pgs, cfg);
    bool have = true;
    RisStepConfig ris_cfg = cfg.ris;
    if (cfg.regular_ris && p.scenario.n_ris > 0) {
      ris_cfg.mode = RisMode::MS;
      ris_cfg.set_kind = RisSetKind::TI;
    }
    adopt_better(best, run_full(p, cfg, ris_cfg, best.ris, &best.covs), have);
    adopt_better(best, optimize_kind_chain(p, cfg), have);
    return best;
  }
  return optimize_kind_chain(p, cfg);
}

RateReport evaluate_design_under_mismatch(const RealCovarianceSet& covs, const StarRisState& ris,
                                          const Problem& p, const IqiModel& true_iqi) {
  Problem q = p;
  q.iqi = true_iqi;
  return evaluate_rates(q, ris, covs);
}

void write_trace_csv(std::ostream& out, const AoTrace& trace) {
  out << "iter,weighted_min,cov_seconds,ris_seconds,ris_accepted,cov_warning,ris_warning";
  if (!trace.records.empty())
    for (Eigen::Index u = 0; u < trace.records.front().rates.size(); ++u) out << ",rate_" << u;
  out << '\n';
  out << std::setprecision(17);
  for (const AoIterRecord& r : trace.records) {
    out << r.iter << ',' << r.weighted_min << ',' << r.cov_seconds << ',' << r.ris_seconds << ','
        << (r.ris_accepted ? 1 : 0) << ',' << (r.cov_warning ? 1 : 0) << ','
        << (r.ris_warning ? 1 : 0);
    for (Eigen::Index u = 0; u < r.rates.size(); ++u) out << ',' << r.rates[u];
    out << '\n';
  }
}

void save_state(std::ostream& out, const RealCovarianceSet& covs, const StarRisState& ris) {
  out << std::setprecision(17);
  out << "starmm-state 1\n";
  out << "budget " << covs.power_budget << '\n';
  out << "covariances " << covs.p.size() << '\n';
  for (const MatR& m : covs.p) {
    out << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) out << m(r, c) << (c + 1 == m.cols() ? '\n' : ' ');
    }
  }
  out << "ris " << ris.size() << ' ' << to_string(ris.mode) << ' ' << to_string(ris.set_kind) << '\n';
  for (int i = 0; i < ris.size(); ++i)
    out << ris.theta_r[i].real() << ' ' << ris.theta_r[i].imag() << ' ' << ris.theta_t[i].real()
        << ' ' << ris.theta_t[i].imag() << '\n';
  if (ris.mode == RisMode::MS) {
    out << "assignment";
    for (RisSide s : ris.ms_assignment) out << ' ' << (s == RisSide::Reflect ? 'r' : 't');
    out << '\n';
  }
}

std::pair<RealCovarianceSet, StarRisState> load_state(std::istream& in) {
  std::string tag;
  int version = 0;
  in >> tag >> version;
  if (!in || tag != "starmm-state" || version != 1) throw ConfigError("state dump: bad header");
  RealCovarianceSet covs;
  in >> tag >> covs.power_budget;
  if (!in || tag != "budget") throw ConfigError("state dump: missing budget");
  size_t n = 0;
  in >> tag >> n;
  if (!in || tag != "covariances") throw ConfigError("state dump: missing covariances");
  covs.p.resize(n);
  for (size_t k = 0; k < n; ++k) {
    Eigen::Index rows = 0, cols = 0;
    in >> rows >> cols;
    covs.p[k].resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) in >> covs.p[k](r, c);
  }
  StarRisState ris;
  int nris = 0;
  std::string mode, kind;
  in >> tag >> nris >> mode >> kind;
  if (!in || tag != "ris") throw ConfigError("state dump: missing ris");
  ris.mode = mode == "MS" ? RisMode::MS : RisMode::ES;
  ris.set_kind = kind == "T_I" ? RisSetKind::TI : (kind == "T_N" ? RisSetKind::TN : RisSetKind::TU);
  ris.theta_r.resize(nris);
  ris.theta_t.resize(nris);
  for (int i = 0; i < nris; ++i) {
    double a, b, c, d;
    in >> a >> b >> c >> d;
    ris.theta_r[i] = Cplx(a, b);
    ris.theta_t[i] = Cplx(c, d);
  }
  if (ris.mode == RisMode::MS) {
    in >> tag;
    if (!in || tag != "assignment") throw ConfigError("state dump: missing assignment");
    ris.ms_assignment.resize(nris);
    for (int i = 0; i < nris; ++i) {
      char c;
      in >> c;
      ris.ms_assignment[i] = c == 'r' ? RisSide::Reflect : RisSide::Transmit;
    }
  }
  if (!in) throw ConfigError("state dump: truncated");
  return {std::move(covs), std::move(ris)};
}

}  // namespace starmm
