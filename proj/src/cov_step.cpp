#include "starmm/cov_step.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace starmm {

CovSolveOptions CovSolveOptions::from_config(const KeyValueConfig& cfg) {
  CovSolveOptions o;
  o.max_iters = static_cast<int>(cfg.get_int("cov_max_iters", o.max_iters));
  o.tol = cfg.get_double("cov_tol", o.tol);
  o.stall_window = static_cast<int>(cfg.get_int("cov_stall_window", o.stall_window));
  o.softmin_rounds = static_cast<int>(cfg.get_int("cov_softmin_rounds", o.softmin_rounds));
  o.softmin_mu0 = cfg.get_double("cov_softmin_mu0", o.softmin_mu0);
  o.softmin_decay = cfg.get_double("cov_softmin_decay", o.softmin_decay);
  o.armijo_c = cfg.get_double("cov_armijo_c", o.armijo_c);
  o.step_frac = cfg.get_double("cov_step_frac", o.step_frac);
  o.improper_kicks = static_cast<int>(cfg.get_int("cov_improper_kicks", o.improper_kicks));
  o.kick_scale = cfg.get_double("cov_kick_scale", o.kick_scale);
  return o;
}

RealCovarianceSet project_feasible(RealCovarianceSet covs, Signaling signaling) {
  // Exact Frobenius projection: symmetrize, average onto the proper subspace
  // (orthogonal, PSD-preserving), then clip eigenvalues at a common threshold
  // s >= 0 chosen so the clipped traces meet the budget. Both reductions keep
  // the subspace and the cone, so the composition is the metric projection
  // onto the joint feasible set.
  std::vector<Eigen::SelfAdjointEigenSolver<MatR>> eigs;
  eigs.reserve(covs.p.size());
  for (MatR& m : covs.p) {
    m = symmetrize(m);
    if (signaling == Signaling::PGS) m = pgs_subspace_project(m);
    eigs.emplace_back(m);
    if (eigs.back().info() != Eigen::Success)
      throw NumericsError("project_feasible: eigensolver failed");
  }
  auto clipped_trace = [&](double s) {
    double t = 0.0;
    for (const auto& es : eigs) t += (es.eigenvalues().array() - s).cwiseMax(0.0).sum();
    return t;
  };
  double shift = 0.0;
  if (clipped_trace(0.0) > covs.power_budget) {
    double lo = 0.0, hi = 0.0;
    for (const auto& es : eigs)
      hi = std::max(hi, es.eigenvalues().size() ? es.eigenvalues().maxCoeff() : 0.0);
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(hi, 1.0); ++it) {
      double mid = 0.5 * (lo + hi);
      (clipped_trace(mid) > covs.power_budget ? lo : hi) = mid;
    }
    shift = 0.5 * (lo + hi);
  }
  for (size_t k = 0; k < covs.p.size(); ++k) {
    VecR ev = (eigs[k].eigenvalues().array() - shift).cwiseMax(0.0);
    covs.p[k] = eigs[k].eigenvectors() * ev.asDiagonal() * eigs[k].eigenvectors().transpose();
    covs.p[k] = symmetrize(covs.p[k]);
  }
  return covs;
}

namespace {

struct Branch {
  CovSurrogate surrogate;
  double weight;
};

// min over branches, soft-min value and softmax weights at temperature mu.
double soft_min(const std::vector<double>& v, double mu, std::vector<double>* w) {
  double vmin = *std::min_element(v.begin(), v.end());
  double z = 0.0;
  for (double x : v) z += std::exp(-(x - vmin) / mu);
  if (w) {
    w->resize(v.size());
    for (size_t i = 0; i < v.size(); ++i) (*w)[i] = std::exp(-(v[i] - vmin) / mu) / z;
  }
  return vmin - mu * std::log(z);
}

double hard_min(const std::vector<Branch>& branches, const std::vector<MatR>& p) {
  double m = std::numeric_limits<double>::infinity();
  for (const Branch& b : branches) m = std::min(m, b.weight * b.surrogate.value(p));
  return m;
}

struct PhaseState {
  std::vector<MatR> x;
  std::vector<MatR> best;
  double best_obj;
  int iters = 0;
  bool improved = false;
};

void zero_masked(std::vector<MatR>& p, const std::vector<char>& active) {
  for (size_t j = 0; j < p.size(); ++j)
    if (!active[j]) p[j].setZero();
}

void run_phase(const std::vector<Branch>& branches, Signaling proj_mode, double budget,
               const std::vector<char>& active, const CovSolveOptions& opt, PhaseState& st) {
  const size_t users = st.x.size();
  auto project = [&](std::vector<MatR> p) {
    RealCovarianceSet c{std::move(p), budget};
    c = project_feasible(std::move(c), proj_mode);
    zero_masked(c.p, active);
    return c.p;
  };

  st.x = project(st.x);
  double cur_hard = hard_min(branches, st.x);
  if (cur_hard > st.best_obj) {
    st.best_obj = cur_hard;
    st.best = st.x;
    st.improved = true;
  }

  const int iters_per_round = std::max(1, opt.max_iters / std::max(1, opt.softmin_rounds));
  std::vector<double> values(branches.size());
  std::vector<double> w;
  for (int round = 0; round < opt.softmin_rounds; ++round) {
    const double mu = std::max(opt.softmin_mu0 * std::pow(opt.softmin_decay, round), 1e-6);
    double window_ref = st.best_obj;
    int since_window = 0;
    for (int it = 0; it < iters_per_round; ++it) {
      ++st.iters;
      // Per-branch gradients first; the soft-min weights need all values.
      std::vector<std::vector<MatR>> bgrad(branches.size());
      for (size_t i = 0; i < branches.size(); ++i) {
        bgrad[i].assign(users, MatR::Zero(st.x[0].rows(), st.x[0].cols()));
        values[i] = branches[i].weight *
                    branches[i].surrogate.value_and_gradient(st.x, branches[i].weight, &bgrad[i]);
      }
      double f0 = soft_min(values, mu, &w);
      std::vector<MatR> grad(users, MatR::Zero(st.x[0].rows(), st.x[0].cols()));
      for (size_t i = 0; i < branches.size(); ++i)
        for (size_t j = 0; j < users; ++j) grad[j].noalias() += w[i] * bgrad[i][j];
      double gnorm = 0.0;
      for (size_t j = 0; j < users; ++j)
        if (active[j]) gnorm += grad[j].squaredNorm();
      gnorm = std::sqrt(gnorm);
      if (gnorm < 1e-15) break;
      const double scale = opt.step_frac * budget / gnorm;

      bool moved = false;
      double alpha = 1.0;
      for (int ls = 0; ls < 30; ++ls, alpha *= 0.5) {
        std::vector<MatR> cand = st.x;
        for (size_t j = 0; j < users; ++j)
          if (active[j]) cand[j] += alpha * scale * grad[j];
        cand = project(std::move(cand));
        for (size_t i = 0; i < branches.size(); ++i)
          values[i] = branches[i].weight * branches[i].surrogate.value(cand);
        double f1 = soft_min(values, mu, nullptr);
        double dirdot = 0.0;
        for (size_t j = 0; j < users; ++j) dirdot += (grad[j].array() * (cand[j] - st.x[j]).array()).sum();
        const bool armijo_ok = dirdot > 0.0 ? f1 >= f0 + opt.armijo_c * dirdot : f1 > f0;
        if (armijo_ok) {
          st.x = std::move(cand);
          moved = true;
          break;
        }
      }
      if (!moved) break;

      cur_hard = hard_min(branches, st.x);
      if (cur_hard > st.best_obj) {
        st.best_obj = cur_hard;
        st.best = st.x;
        st.improved = true;
      }
      if (++since_window >= opt.stall_window) {
        if (st.best_obj - window_ref < opt.tol) break;
        window_ref = st.best_obj;
        since_window = 0;
      }
    }
  }
}

}  // namespace

CovStepResult solve_covariance_step(const ExpansionPoint& ep, const Problem& p, double budget,
                                    const CovSolveOptions& opt) {
  if (budget <= 0.0) throw ConfigError("solve_covariance_step: budget must be positive");
  const int users = ep.n_users();
  if (p.weights.size() != users)
    throw DimensionError("solve_covariance_step: weight vector must cover all users");
  if ((p.weights.array() < 0.0).any())
    throw ConfigError("solve_covariance_step: weights must be nonnegative");

  std::vector<char> active(users, 0);
  for (int u = 0; u < users; ++u) active[u] = p.weights[u] > 0.0;

  std::vector<Branch> branches;
  std::vector<CovSurrogate> all = build_cov_surrogates(ep);
  for (CovSurrogate& s : all) {
    const int owner = s.owner();
    if (active[owner]) branches.push_back({std::move(s), p.weights[owner]});
  }
  if (branches.empty()) throw ConfigError("solve_covariance_step: no user has positive weight");

  PhaseState st;
  st.x = ep.covs.p;
  zero_masked(st.x, active);
  st.best = st.x;
  st.best_obj = -std::numeric_limits<double>::infinity();

  if (p.signaling == Signaling::IGS) {
    run_phase(branches, Signaling::PGS, budget, active, opt, st);  // proper warm start
    st.x = st.best;
    run_phase(branches, Signaling::IGS, budget, active, opt, st);
    // Symmetry-breaking kicks off the proper subspace; best iterate wins.
    std::mt19937_64 rng(0x1395bd9e5ULL);
    std::normal_distribution<double> n01(0.0, 1.0);
    const double scale = opt.kick_scale * budget / std::max(1, users);
    for (int kick = 0; kick < opt.improper_kicks; ++kick) {
      st.x = st.best;
      for (size_t j = 0; j < st.x.size(); ++j) {
        if (!active[j]) continue;
        MatR r(st.x[j].rows(), st.x[j].cols());
        for (Eigen::Index a = 0; a < r.rows(); ++a)
          for (Eigen::Index b = 0; b < r.cols(); ++b) r(a, b) = n01(rng);
        st.x[j] += scale / r.norm() * symmetrize(r);
      }
      run_phase(branches, Signaling::IGS, budget, active, opt, st);
    }
  } else {
    run_phase(branches, Signaling::PGS, budget, active, opt, st);
  }

  CovStepResult res;
  res.covs.power_budget = budget;
  res.warning = !st.improved;
  res.covs.p = res.warning ? ep.covs.p : st.best;
  res.objective = st.best_obj;
  res.iters = st.iters;
  return res;
}

}  // namespace starmm
