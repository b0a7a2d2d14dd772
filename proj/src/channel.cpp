#include "starmm/channel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

namespace starmm {

const char* to_string(RisSide s) { return s == RisSide::Reflect ? "reflect" : "transmit"; }
const char* to_string(RisMode m) { return m == RisMode::ES ? "ES" : "MS"; }
const char* to_string(RisSetKind k) {
  switch (k) {
    case RisSetKind::TU: return "T_U";
    case RisSetKind::TI: return "T_I";
    default: return "T_N";
  }
}

bool ris_state_feasible(const StarRisState& s, double tol, std::string* why) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  const int n = s.size();
  if (s.theta_t.size() != n) return fail("theta_r/theta_t length mismatch");
  if (s.mode == RisMode::MS && static_cast<int>(s.ms_assignment.size()) != n)
    return fail("MS mode requires a per-element assignment");
  for (int i = 0; i < n; ++i) {
    const double sr = std::norm(s.theta_r[i]);
    const double st = std::norm(s.theta_t[i]);
    if (!std::isfinite(sr) || !std::isfinite(st)) return fail("non-finite coefficient at element " + std::to_string(i));
    if (sr + st > 1.0 + tol)
      return fail("element " + std::to_string(i) + ": |r|^2+|t|^2 = " + std::to_string(sr + st) + " > 1");
    if (s.set_kind != RisSetKind::TU && sr + st < 1.0 - tol)
      return fail("element " + std::to_string(i) + ": |r|^2+|t|^2 = " + std::to_string(sr + st) + " < 1");
    if (s.set_kind == RisSetKind::TN) {
      if (std::norm(s.theta_r[i] + s.theta_t[i]) > 1.0 + tol)
        return fail("element " + std::to_string(i) + ": |r+t|^2 > 1");
      if (std::norm(s.theta_r[i] - s.theta_t[i]) > 1.0 + tol)
        return fail("element " + std::to_string(i) + ": |r-t|^2 > 1");
    }
    if (s.mode == RisMode::MS) {
      if (s.ms_assignment[i] == RisSide::Reflect && s.theta_t[i] != Cplx(0.0, 0.0))
        return fail("element " + std::to_string(i) + ": reflect-assigned but theta_t != 0");
      if (s.ms_assignment[i] == RisSide::Transmit && s.theta_r[i] != Cplx(0.0, 0.0))
        return fail("element " + std::to_string(i) + ": transmit-assigned but theta_r != 0");
    }
  }
  return true;
}

void validate_scenario(const ComplexScenario& s) {
  if (s.n_bs < 1 || s.n_u < 1) throw ConfigError("scenario: antenna counts must be positive");
  if (s.k_pairs < 1) throw ConfigError("scenario: k_pairs must be >= 1");
  if (s.n_ris < 0) throw ConfigError("scenario: n_ris must be >= 0");
  const int nu = s.n_users();
  if (static_cast<int>(s.direct.size()) != nu) throw DimensionError("scenario: direct channel list F has wrong length");
  if (static_cast<int>(s.ris_to_user.size()) != nu)
    throw DimensionError("scenario: RIS-to-user channel list G_k has wrong length");
  if (static_cast<int>(s.side.size()) != nu) throw DimensionError("scenario: side list has wrong length");
  if (s.bs_to_ris.rows() != s.n_ris || s.bs_to_ris.cols() != s.n_bs)
    throw DimensionError("scenario: G must be n_ris x n_bs");
  require_finite(s.bs_to_ris, "G");
  for (int k = 0; k < nu; ++k) {
    if (s.direct[k].rows() != s.n_u || s.direct[k].cols() != s.n_bs)
      throw DimensionError("scenario: F_" + std::to_string(k) + " must be n_u x n_bs");
    if (s.ris_to_user[k].rows() != s.n_u || s.ris_to_user[k].cols() != s.n_ris)
      throw DimensionError("scenario: G_" + std::to_string(k) + " must be n_u x n_ris");
    require_finite(s.direct[k], "F_k");
    require_finite(s.ris_to_user[k], "G_k");
  }
}

MatC compose_effective_channel(const ComplexScenario& s, const StarRisState& ris, int user) {
  if (user < 0 || user >= s.n_users())
    throw DimensionError("compose_effective_channel: user index " + std::to_string(user) + " out of range");
  if (ris.size() != s.n_ris)
    throw DimensionError("compose_effective_channel: theta length " + std::to_string(ris.size()) +
                         " does not match n_ris " + std::to_string(s.n_ris));
  const MatC& gk = s.ris_to_user[user];
  const MatC& g = s.bs_to_ris;
  const MatC& f = s.direct[user];
  if (gk.cols() != g.rows())
    throw DimensionError("compose_effective_channel: G_k columns do not match G rows");
  if (f.rows() != gk.rows() || f.cols() != g.cols())
    throw DimensionError("compose_effective_channel: F_k shape does not match G_k * G");
  const VecC& theta = s.side[user] == RisSide::Reflect ? ris.theta_r : ris.theta_t;
  return gk * theta.asDiagonal() * g + f;
}

ScenarioConfig ScenarioConfig::from_config(const KeyValueConfig& cfg) {
  ScenarioConfig c;
  c.n_bs = static_cast<int>(cfg.get_int("n_bs", c.n_bs));
  c.n_u = static_cast<int>(cfg.get_int("n_u", c.n_u));
  c.n_ris = static_cast<int>(cfg.get_int("n_ris", c.n_ris));
  c.k_pairs = static_cast<int>(cfg.get_int("k_pairs", c.k_pairs));
  c.alpha_direct = cfg.get_double("alpha_direct", c.alpha_direct);
  c.alpha_ris = cfg.get_double("alpha_ris", c.alpha_ris);
  c.ris_x = cfg.get_double("ris_x", c.ris_x);
  c.ris_y = cfg.get_double("ris_y", c.ris_y);
  c.ccu_radius_min = cfg.get_double("ccu_radius_min", c.ccu_radius_min);
  c.ccu_radius_max = cfg.get_double("ccu_radius_max", c.ccu_radius_max);
  c.ceu_radius_min = cfg.get_double("ceu_radius_min", c.ceu_radius_min);
  c.ceu_radius_max = cfg.get_double("ceu_radius_max", c.ceu_radius_max);
  return c;
}

namespace {

// Complex normal with variance `var` (var/2 per real dimension).
MatC draw_cn(std::mt19937_64& rng, int rows, int cols, double var) {
  std::normal_distribution<double> n01(0.0, 1.0);
  const double s = std::sqrt(var / 2.0);
  MatC m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double re = n01(rng);
      double im = n01(rng);
      m(r, c) = Cplx(s * re, s * im);
    }
  return m;
}

}  // namespace

ComplexScenario generate_scenario(const ScenarioConfig& cfg, std::uint64_t seed) {
  if (cfg.n_bs < 1 || cfg.n_u < 1) throw ConfigError("generate_scenario: antenna counts must be positive");
  if (cfg.k_pairs < 1) throw ConfigError("generate_scenario: k_pairs must be >= 1");
  if (cfg.n_ris < 0) throw ConfigError("generate_scenario: n_ris must be >= 0");
  if (cfg.ccu_radius_min > cfg.ccu_radius_max || cfg.ceu_radius_min > cfg.ceu_radius_max ||
      cfg.ccu_radius_min <= 0 || cfg.ceu_radius_min <= 0)
    throw ConfigError("generate_scenario: bad annulus radii");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double pi = std::numbers::pi;

  ComplexScenario s;
  s.n_bs = cfg.n_bs;
  s.n_u = cfg.n_u;
  s.n_ris = cfg.n_ris;
  s.k_pairs = cfg.k_pairs;
  s.bs_pos = Eigen::Vector2d(0.0, 0.0);
  s.ris_pos = Eigen::Vector2d(cfg.ris_x, cfg.ris_y);

  const int nu = s.n_users();
  s.user_pos.resize(nu);
  s.side.resize(nu);

  // CCUs: full annulus around the BS (always on the BS side of the surface).
  for (int k = 0; k < cfg.k_pairs; ++k) {
    double r = cfg.ccu_radius_min + (cfg.ccu_radius_max - cfg.ccu_radius_min) * u01(rng);
    double phi = 2.0 * pi * u01(rng);
    s.user_pos[k] = s.bs_pos + r * Eigen::Vector2d(std::cos(phi), std::sin(phi));
    s.side[k] = RisSide::Reflect;
  }
  // CEUs: half annulus behind the surface plane, facing away from the BS.
  for (int k = 0; k < cfg.k_pairs; ++k) {
    double r = cfg.ceu_radius_min + (cfg.ceu_radius_max - cfg.ceu_radius_min) * u01(rng);
    double phi = pi * (u01(rng) - 0.5);  // (-pi/2, pi/2)
    s.user_pos[cfg.k_pairs + k] = s.ris_pos + r * Eigen::Vector2d(std::cos(phi), std::sin(phi));
    s.side[cfg.k_pairs + k] = RisSide::Transmit;
  }
  // Random pairing within the CEU cluster; the pairing rule stays k ~ K+k.
  std::shuffle(s.user_pos.begin() + cfg.k_pairs, s.user_pos.end(), rng);

  const double d_bs_ris = (s.ris_pos - s.bs_pos).norm();
  s.bs_to_ris = draw_cn(rng, s.n_ris, s.n_bs, std::pow(std::max(d_bs_ris, 1.0), -cfg.alpha_ris));

  s.direct.resize(nu);
  s.ris_to_user.resize(nu);
  for (int k = 0; k < nu; ++k) {
    double d_direct = std::max((s.user_pos[k] - s.bs_pos).norm(), 1.0);
    double d_ris = std::max((s.user_pos[k] - s.ris_pos).norm(), 1.0);
    s.direct[k] = draw_cn(rng, s.n_u, s.n_bs, std::pow(d_direct, -cfg.alpha_direct));
    s.ris_to_user[k] = draw_cn(rng, s.n_u, s.n_ris, std::pow(d_ris, -cfg.alpha_ris));
  }
  validate_scenario(s);
  return s;
}

namespace {

void write_matrix(std::ostream& out, const std::string& name, const MatC& m) {
  out << "matrix " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      out << m(r, c).real() << ' ' << m(r, c).imag();
      out << (c + 1 == m.cols() ? '\n' : ' ');
    }
    if (m.cols() == 0) out << '\n';
  }
}

MatC read_matrix(std::istream& in, const std::string& expect) {
  std::string tag, name;
  Eigen::Index rows = 0, cols = 0;
  in >> tag >> name >> rows >> cols;
  if (!in || tag != "matrix" || name != expect)
    throw ConfigError("scenario dump: expected matrix " + expect + ", got " + tag + " " + name);
  MatC m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      double re = 0, im = 0;
      in >> re >> im;
      m(r, c) = Cplx(re, im);
    }
  if (!in) throw ConfigError("scenario dump: truncated matrix " + expect);
  return m;
}

}  // namespace

void save_scenario(std::ostream& out, const ComplexScenario& s) {
  out << std::setprecision(17);
  out << "starmm-scenario 1\n";
  out << "dims " << s.n_bs << ' ' << s.n_u << ' ' << s.n_ris << ' ' << s.k_pairs << '\n';
  out << "bs_pos " << s.bs_pos.x() << ' ' << s.bs_pos.y() << '\n';
  out << "ris_pos " << s.ris_pos.x() << ' ' << s.ris_pos.y() << '\n';
  for (int k = 0; k < s.n_users(); ++k)
    out << "user " << k << ' ' << s.user_pos[k].x() << ' ' << s.user_pos[k].y() << ' '
        << to_string(s.side[k]) << '\n';
  write_matrix(out, "G", s.bs_to_ris);
  for (int k = 0; k < s.n_users(); ++k) write_matrix(out, "F_" + std::to_string(k), s.direct[k]);
  for (int k = 0; k < s.n_users(); ++k) write_matrix(out, "Gk_" + std::to_string(k), s.ris_to_user[k]);
}

ComplexScenario load_scenario(std::istream& in) {
  std::string tag;
  int version = 0;
  in >> tag >> version;
  if (!in || tag != "starmm-scenario" || version != 1)
    throw ConfigError("scenario dump: bad header");
  ComplexScenario s;
  in >> tag >> s.n_bs >> s.n_u >> s.n_ris >> s.k_pairs;
  if (!in || tag != "dims") throw ConfigError("scenario dump: missing dims");
  in >> tag >> s.bs_pos.x() >> s.bs_pos.y();
  if (!in || tag != "bs_pos") throw ConfigError("scenario dump: missing bs_pos");
  in >> tag >> s.ris_pos.x() >> s.ris_pos.y();
  if (!in || tag != "ris_pos") throw ConfigError("scenario dump: missing ris_pos");
  const int nu = s.n_users();
  s.user_pos.resize(nu);
  s.side.resize(nu);
  for (int k = 0; k < nu; ++k) {
    int idx = 0;
    std::string side;
    in >> tag >> idx >> s.user_pos[k].x() >> s.user_pos[k].y() >> side;
    if (!in || tag != "user" || idx != k) throw ConfigError("scenario dump: bad user line");
    s.side[k] = side == "reflect" ? RisSide::Reflect : RisSide::Transmit;
  }
  s.bs_to_ris = read_matrix(in, "G");
  s.direct.resize(nu);
  s.ris_to_user.resize(nu);
  for (int k = 0; k < nu; ++k) s.direct[k] = read_matrix(in, "F_" + std::to_string(k));
  for (int k = 0; k < nu; ++k) s.ris_to_user[k] = read_matrix(in, "Gk_" + std::to_string(k));
  validate_scenario(s);
  return s;
}

void save_scenario_file(const std::string& path, const ComplexScenario& s) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  save_scenario(out, s);
}

ComplexScenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open for reading: " + path);
  return load_scenario(in);
}

}  // namespace starmm
