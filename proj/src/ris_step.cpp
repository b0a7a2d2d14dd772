#include "starmm/ris_step.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace starmm {

RisStepConfig RisStepConfig::from_config(const KeyValueConfig& cfg) {
  RisStepConfig o;
  std::string kind = cfg.get_string("ris_set_kind", "T_U");
  if (kind == "T_U" || kind == "TU") o.set_kind = RisSetKind::TU;
  else if (kind == "T_I" || kind == "TI") o.set_kind = RisSetKind::TI;
  else if (kind == "T_N" || kind == "TN") o.set_kind = RisSetKind::TN;
  else throw ConfigError("ris_set_kind must be one of T_U, T_I, T_N");
  std::string mode = cfg.get_string("ris_mode", "ES");
  if (mode == "ES") o.mode = RisMode::ES;
  else if (mode == "MS") o.mode = RisMode::MS;
  else throw ConfigError("ris_mode must be ES or MS");
  o.epsilon = cfg.get_double("ris_epsilon", o.epsilon);
  o.max_iters = static_cast<int>(cfg.get_int("ris_max_iters", o.max_iters));
  o.tol = cfg.get_double("ris_tol", o.tol);
  o.stall_window = static_cast<int>(cfg.get_int("ris_stall_window", o.stall_window));
  o.softmin_rounds = static_cast<int>(cfg.get_int("ris_softmin_rounds", o.softmin_rounds));
  o.softmin_mu0 = cfg.get_double("ris_softmin_mu0", o.softmin_mu0);
  o.softmin_decay = cfg.get_double("ris_softmin_decay", o.softmin_decay);
  o.armijo_c = cfg.get_double("ris_armijo_c", o.armijo_c);
  o.step_scale = cfg.get_double("ris_step_scale", o.step_scale);
  o.tn_phase_projection = cfg.get_bool("ris_tn_phase_projection", o.tn_phase_projection);
  if (o.epsilon <= 0.0 || o.epsilon > 0.1) throw ConfigError("ris_epsilon must be in (0, 0.1]");
  return o;
}

double AffineModulusFloor::value(const StarRisState& s, int element) const {
  const Cplx a0 = theta_r_prev[element], b0 = theta_t_prev[element];
  const Cplx a = s.theta_r[element], b = s.theta_t[element];
  return std::norm(a0) + 2.0 * std::real(a0 * std::conj(a - a0)) + std::norm(b0) +
         2.0 * std::real(b0 * std::conj(b - b0));
}

AffineModulusFloor linearize_modulus_floor(const StarRisState& prev, double epsilon) {
  if (!prev.theta_r.allFinite() || !prev.theta_t.allFinite())
    throw NumericsError("linearize_modulus_floor: non-finite previous state");
  return {prev.theta_r, prev.theta_t, epsilon};
}

StarRisState normalize_unit_sum(const StarRisState& s, const StarRisState* fallback,
                                std::vector<int>* flagged) {
  StarRisState out = s;
  for (int i = 0; i < s.size(); ++i) {
    double sum = std::norm(s.theta_r[i]) + std::norm(s.theta_t[i]);
    if (sum <= 0.0) {
      if (!fallback)
        throw NumericsError("normalize_unit_sum: element " + std::to_string(i) +
                            " has zero coefficients and no fallback");
      out.theta_r[i] = fallback->theta_r[i];
      out.theta_t[i] = fallback->theta_t[i];
      if (flagged) flagged->push_back(i);
      continue;
    }
    double inv = 1.0 / std::sqrt(sum);
    out.theta_r[i] *= inv;
    out.theta_t[i] *= inv;
  }
  return out;
}

StarRisState accept_if_improved(const StarRisState& candidate, const StarRisState& incumbent,
                                const std::function<double(const StarRisState&)>& objective,
                                bool* accepted) {
  const double cand = objective(candidate);
  const double inc = objective(incumbent);
  const bool take = cand > inc;
  if (accepted) *accepted = take;
  return take ? candidate : incumbent;
}

std::vector<RisSide> ms_partition(const ComplexScenario& s, MsPartitionStrategy strategy) {
  if (s.n_ris < 2) throw ConfigError("ms_partition: needs at least two elements");
  std::vector<RisSide> out(s.n_ris, RisSide::Reflect);
  if (strategy == MsPartitionStrategy::Alternating) {
    for (int i = 0; i < s.n_ris; ++i) out[i] = (i % 2 == 0) ? RisSide::Reflect : RisSide::Transmit;
    return out;
  }
  for (int i = 0; i < s.n_ris; ++i) {
    double score_r = 0.0, score_t = 0.0;
    for (int u = 0; u < s.n_users(); ++u) {
      double g = (s.ris_to_user[u].col(i) * s.bs_to_ris.row(i)).squaredNorm();
      (s.side[u] == RisSide::Reflect ? score_r : score_t) += g;
    }
    out[i] = score_t > score_r ? RisSide::Transmit : RisSide::Reflect;  // ties reflect
  }
  return out;
}

StarRisState make_initial_ris(const ComplexScenario& s, RisMode mode, RisSetKind set_kind,
                              const std::vector<RisSide>& ms_assignment, std::uint64_t seed) {
  StarRisState st;
  st.mode = mode;
  st.set_kind = set_kind;
  st.theta_r = VecC::Zero(s.n_ris);
  st.theta_t = VecC::Zero(s.n_ris);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double pi = std::numbers::pi;
  if (mode == RisMode::MS) {
    if (static_cast<int>(ms_assignment.size()) != s.n_ris)
      throw DimensionError("make_initial_ris: MS assignment must cover all elements");
    st.ms_assignment = ms_assignment;
    for (int i = 0; i < s.n_ris; ++i) {
      Cplx c = std::polar(1.0, 2.0 * pi * u01(rng));
      (ms_assignment[i] == RisSide::Reflect ? st.theta_r[i] : st.theta_t[i]) = c;
    }
    return st;
  }
  const double amp = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < s.n_ris; ++i) {
    double phi_r = 2.0 * pi * u01(rng);
    double phi_t = set_kind == RisSetKind::TN ? phi_r + pi / 2.0 : 2.0 * pi * u01(rng);
    st.theta_r[i] = std::polar(amp, phi_r);
    st.theta_t[i] = std::polar(amp, phi_t);
  }
  return st;
}

namespace {

using Vec4 = Eigen::Vector4d;

Eigen::VectorXd project_ball(Eigen::VectorXd y, double rho) {
  double n = y.norm();
  if (n > rho && n > 0.0) y *= rho / n;
  return y;
}

// Exact projection onto {||x|| <= rho} intersected with {<c,x> >= d0}.
Eigen::VectorXd project_ball_halfspace(const Eigen::VectorXd& y, double rho,
                                       const Eigen::VectorXd& c, double d0) {
  const double cn2 = c.squaredNorm();
  if (cn2 <= 0.0) return project_ball(y, rho);
  auto in_half = [&](const Eigen::VectorXd& x) { return c.dot(x) >= d0 - 1e-12; };
  if (y.norm() <= rho && in_half(y)) return y;
  Eigen::VectorXd zb = project_ball(y, rho);
  if (in_half(zb)) return zb;
  Eigen::VectorXd zh = y + (d0 - c.dot(y)) / cn2 * c;
  if (zh.norm() <= rho * (1.0 + 1e-12)) return zh;
  // Both constraints active: sphere cap rim.
  if (rho * std::sqrt(cn2) <= d0) return rho / std::sqrt(cn2) * c;  // degenerate set
  Eigen::VectorXd m = d0 / cn2 * c;
  double r0 = std::sqrt(std::max(rho * rho - m.squaredNorm(), 0.0));
  Eigen::VectorXd w = y - c.dot(y) / cn2 * c;
  double wn = w.norm();
  if (wn < 1e-300) {
    // pick a deterministic direction orthogonal to c
    Eigen::VectorXd e = Eigen::VectorXd::Zero(y.size());
    int idx = 0;
    c.cwiseAbs().minCoeff(&idx);
    e[idx] = 1.0;
    w = e - c.dot(e) / cn2 * c;
    wn = w.norm();
  }
  return m + r0 / wn * w;
}

Vec4 to_vec4(Cplx a, Cplx b) { return Vec4(a.real(), a.imag(), b.real(), b.imag()); }

// Per-element projection onto the convexified feasibility set.
struct ElementProjector {
  RisSetKind set_kind;
  RisMode mode;
  RisSide ms_side = RisSide::Reflect;  // MS only
  bool use_floor = false;              // TI/TN add the linearized unit-sum floor
  Cplx a0, b0;                         // floor expansion point
  double eps = 0.0;

  void apply(Cplx& a, Cplx& b) const {
    if (mode == RisMode::MS) {
      Cplx& act = ms_side == RisSide::Reflect ? a : b;
      (ms_side == RisSide::Reflect ? b : a) = Cplx(0.0, 0.0);
      Eigen::Vector2d x(act.real(), act.imag());
      if (!use_floor) {
        x = project_ball(x, 1.0);
      } else {
        const Cplx act0 = ms_side == RisSide::Reflect ? a0 : b0;
        Eigen::Vector2d c(2.0 * act0.real(), 2.0 * act0.imag());
        double d0 = 1.0 - eps + std::norm(act0);
        x = project_ball_halfspace(x, 1.0, c, d0);
      }
      act = Cplx(x[0], x[1]);
      return;
    }
    if (set_kind == RisSetKind::TN) {
      project_tn(a, b);
      return;
    }
    Vec4 x = to_vec4(a, b);
    if (!use_floor) {
      x = project_ball(x, 1.0);
    } else {
      Vec4 c = 2.0 * to_vec4(a0, b0);
      double d0 = 1.0 - eps + std::norm(a0) + std::norm(b0);
      x = project_ball_halfspace(x, 1.0, c, d0);
    }
    a = Cplx(x[0], x[1]);
    b = Cplx(x[2], x[3]);
  }

  // TN: |a+b|^2 <= 1 and |a-b|^2 <= 1 (these imply |a|^2+|b|^2 <= 1) plus the
  // floor. In rotated coordinates u=(a+b)/sqrt2, v=(a-b)/sqrt2 the quadratic
  // constraints become two independent balls of radius 1/sqrt2; Dykstra
  // alternates them with the floor halfspace.
  void project_tn(Cplx& a, Cplx& b) const {
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    Cplx u = (a + b) * inv_sqrt2, v = (a - b) * inv_sqrt2;
    Cplx u0 = (a0 + b0) * inv_sqrt2, v0 = (a0 - b0) * inv_sqrt2;
    Vec4 x = to_vec4(u, v);
    Vec4 c = 2.0 * to_vec4(u0, v0);
    const double d0 = 1.0 - eps + std::norm(a0) + std::norm(b0);
    auto proj_balls = [&](Vec4 p) {
      Eigen::Vector2d pu = project_ball(p.head<2>(), inv_sqrt2);
      Eigen::Vector2d pv = project_ball(p.tail<2>(), inv_sqrt2);
      return Vec4(pu[0], pu[1], pv[0], pv[1]);
    };
    auto proj_half = [&](Vec4 p) -> Vec4 {
      if (!use_floor) return p;
      double viol = d0 - c.dot(p);
      if (viol <= 0.0) return p;
      return p + viol / c.squaredNorm() * c;
    };
    Vec4 pinc = Vec4::Zero(), qinc = Vec4::Zero();
    for (int it = 0; it < 200; ++it) {
      Vec4 ya = proj_balls(x + pinc);
      pinc = x + pinc - ya;
      Vec4 xb = proj_half(ya + qinc);
      qinc = ya + qinc - xb;
      if ((xb - x).norm() < 1e-13 && it > 0) {
        x = xb;
        break;
      }
      x = xb;
    }
    u = Cplx(x[0], x[1]);
    v = Cplx(x[2], x[3]);
    a = (u + v) * inv_sqrt2;
    b = (u - v) * inv_sqrt2;
  }
};

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

double wrap_angle(double a) {
  const double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a > std::numbers::pi) a -= two_pi;
  if (a < -std::numbers::pi) a += two_pi;
  return a;
}

// Snap the transmit phase to the nearer of reflect phase +- pi/2, keeping
// both moduli; restores the TN phase coupling after normalization.
void tn_phase_project(StarRisState& s) {
  for (int i = 0; i < s.size(); ++i) {
    if (std::abs(s.theta_r[i]) == 0.0 || std::abs(s.theta_t[i]) == 0.0) continue;
    double pr = std::arg(s.theta_r[i]);
    double pt = std::arg(s.theta_t[i]);
    double plus = wrap_angle(pt - (pr + std::numbers::pi / 2.0));
    double minus = wrap_angle(pt - (pr - std::numbers::pi / 2.0));
    double target = std::abs(plus) <= std::abs(minus) ? pr + std::numbers::pi / 2.0
                                                      : pr - std::numbers::pi / 2.0;
    s.theta_t[i] = std::polar(std::abs(s.theta_t[i]), target);
  }
}

double masked_weighted_min(const VecR& rates, const VecR& weights) {
  double m = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < rates.size(); ++i)
    if (weights[i] > 0.0) m = std::min(m, weights[i] * rates[i]);
  return m;
}

}  // namespace

RisStepResult solve_ris_step(const ExpansionPoint& ep, const Problem& p, const RisStepConfig& cfg) {
  const ComplexScenario& scn = p.scenario;
  auto true_objective = [&](const StarRisState& st) {
    std::vector<RealChannel> links = build_links(scn, st, p.iqi, p.sigma2);
    RateReport rep = evaluate_rates(links, scn, ep.covs, VecR::Ones(scn.n_users()), p.access);
    return masked_weighted_min(rep.rates, p.weights);
  };

  RisStepResult res;
  if (scn.n_ris == 0) {
    res.state = ep.ris;
    res.objective = true_objective(ep.ris);
    return res;
  }

  StarRisState start = ep.ris;
  start.set_kind = cfg.set_kind;
  start.mode = cfg.mode;
  std::string why;
  if (!ris_state_feasible(start, 1e-7, &why))
    throw ConfigError("solve_ris_step: starting point infeasible for " +
                      std::string(to_string(cfg.set_kind)) + ": " + why);

  // Branches with positive weight, surrogates and channel jacobians.
  std::vector<RisSurrogate> all = build_ris_surrogates(ep);
  std::vector<RisSurrogate> surr;
  std::vector<double> bw;
  for (RisSurrogate& s : all) {
    if (p.weights[s.owner()] <= 0.0) continue;
    bw.push_back(p.weights[s.owner()]);
    surr.push_back(std::move(s));
  }
  if (surr.empty()) throw ConfigError("solve_ris_step: no user has positive weight");
  RisLinearization lin = build_ris_linearization(p);

  const bool use_floor = cfg.set_kind != RisSetKind::TU;
  AffineModulusFloor floor = linearize_modulus_floor(ep.ris, cfg.epsilon);

  std::vector<ElementProjector> projectors(scn.n_ris);
  for (int i = 0; i < scn.n_ris; ++i) {
    ElementProjector& pr = projectors[i];
    pr.set_kind = cfg.set_kind;
    pr.mode = cfg.mode;
    if (cfg.mode == RisMode::MS) pr.ms_side = start.ms_assignment[i];
    pr.use_floor = use_floor;
    pr.a0 = floor.theta_r_prev[i];
    pr.b0 = floor.theta_t_prev[i];
    pr.eps = floor.epsilon;
  }
  auto project_state = [&](StarRisState st) {
    for (int i = 0; i < scn.n_ris; ++i) projectors[i].apply(st.theta_r[i], st.theta_t[i]);
    return st;
  };

  auto channels_at = [&](const StarRisState& st) {
    std::vector<MatR> h(scn.n_users());
    for (const RisSurrogate& s : surr)
      if (h[s.channel_user()].size() == 0) h[s.channel_user()] = real_channel_at(p, st, s.channel_user());
    return h;
  };
  auto surrogate_values = [&](const std::vector<MatR>& h, std::vector<double>& values) {
    for (size_t i = 0; i < surr.size(); ++i) values[i] = bw[i] * surr[i].value(h[surr[i].channel_user()]);
  };

  StarRisState x = project_state(start);
  std::vector<double> values(surr.size()), w;
  std::vector<MatR> h = channels_at(x);
  surrogate_values(h, values);
  double best_obj = *std::min_element(values.begin(), values.end());
  StarRisState best = x;
  bool improved = false;

  const int iters_per_round = std::max(1, cfg.max_iters / std::max(1, cfg.softmin_rounds));
  for (int round = 0; round < cfg.softmin_rounds; ++round) {
    const double mu = std::max(cfg.softmin_mu0 * std::pow(cfg.softmin_decay, round), 1e-6);
    double window_ref = best_obj;
    int since_window = 0;
    for (int it = 0; it < iters_per_round; ++it) {
      h = channels_at(x);
      surrogate_values(h, values);
      double f0 = soft_min(values, mu, &w);

      VecC gr = VecC::Zero(scn.n_ris), gt = VecC::Zero(scn.n_ris);
      for (size_t bi = 0; bi < surr.size(); ++bi) {
        const int u = surr[bi].channel_user();
        MatR wmat = (w[bi] * bw[bi]) * surr[bi].gradient_weight(h[u]);
        VecC& g = scn.side[u] == RisSide::Reflect ? gr : gt;
        for (int i = 0; i < scn.n_ris; ++i) {
          double dre = (wmat.array() * lin.jac[u][2 * i].array()).sum();
          double dim = (wmat.array() * lin.jac[u][2 * i + 1].array()).sum();
          g[i] += Cplx(dre, dim);
        }
      }
      if (cfg.mode == RisMode::MS) {
        for (int i = 0; i < scn.n_ris; ++i)
          (start.ms_assignment[i] == RisSide::Reflect ? gt[i] : gr[i]) = Cplx(0.0, 0.0);
      }
      double gnorm = std::sqrt(gr.squaredNorm() + gt.squaredNorm());
      if (gnorm < 1e-15) break;
      const double scale = cfg.step_scale / gnorm;

      bool moved = false;
      double alpha = 1.0;
      for (int ls = 0; ls < 30; ++ls, alpha *= 0.5) {
        StarRisState cand = x;
        cand.theta_r += alpha * scale * gr;
        cand.theta_t += alpha * scale * gt;
        cand = project_state(std::move(cand));
        std::vector<MatR> hc = channels_at(cand);
        std::vector<double> vc(surr.size());
        surrogate_values(hc, vc);
        double f1 = soft_min(vc, mu, nullptr);
        double dirdot = (gr.conjugate().cwiseProduct(cand.theta_r - x.theta_r)).real().sum() +
                        (gt.conjugate().cwiseProduct(cand.theta_t - x.theta_t)).real().sum();
        const bool ok = dirdot > 0.0 ? f1 >= f0 + cfg.armijo_c * dirdot : f1 > f0;
        if (ok) {
          x = std::move(cand);
          double hard = *std::min_element(vc.begin(), vc.end());
          if (hard > best_obj) {
            best_obj = hard;
            best = x;
            improved = true;
          }
          moved = true;
          break;
        }
      }
      if (!moved) break;
      if (++since_window >= cfg.stall_window) {
        if (best_obj - window_ref < cfg.tol) break;
        window_ref = best_obj;
        since_window = 0;
      }
    }
  }

  // Candidate post-processing per feasibility set, then monotone acceptance.
  // The phase-projected variant is feasible for every set kind, so it is
  // offered as a second candidate in ES mode.
  StarRisState candidate = best;
  if (cfg.set_kind != RisSetKind::TU) candidate = normalize_unit_sum(candidate, &ep.ris);
  candidate.set_kind = cfg.set_kind;
  candidate.mode = cfg.mode;
  if (cfg.mode == RisMode::MS) candidate.ms_assignment = start.ms_assignment;

  std::vector<StarRisState> candidates;
  if (cfg.set_kind == RisSetKind::TN && cfg.mode == RisMode::ES) {
    if (cfg.tn_phase_projection) tn_phase_project(candidate);
    candidates.push_back(candidate);
  } else {
    candidates.push_back(candidate);
    if (cfg.mode == RisMode::ES) {
      StarRisState coupled = candidate;
      tn_phase_project(coupled);
      candidates.push_back(std::move(coupled));
    }
  }

  const StarRisState* pick = nullptr;
  double pick_obj = -std::numeric_limits<double>::infinity();
  for (const StarRisState& c : candidates) {
    if (!ris_state_feasible(c, 1e-7)) continue;
    double obj = true_objective(c);
    if (obj > pick_obj) {
      pick_obj = obj;
      pick = &c;
    }
  }
  if (!pick) {
    res.state = ep.ris;
    res.accepted = false;
    res.warning = true;
    res.objective = true_objective(ep.ris);
    return res;
  }

  bool accepted = false;
  res.state = accept_if_improved(*pick, start, true_objective, &accepted);
  res.accepted = accepted;
  res.warning = !improved;
  res.objective = true_objective(res.state);
  return res;
}

}  // namespace starmm
