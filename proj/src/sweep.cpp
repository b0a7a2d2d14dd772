#include "starmm/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

namespace starmm {

const char* method_name(Method m) {
  switch (m) {
    case Method::IgsNomaEsTu: return "IGS-NOMA-ES-T_U";
    case Method::IgsNomaEsTi: return "IGS-NOMA-ES-T_I";
    case Method::IgsNomaEsTn: return "IGS-NOMA-ES-T_N";
    case Method::IgsNomaMs: return "IGS-NOMA-MS";
    case Method::PgsNoma: return "PGS-NOMA";
    case Method::IgsTin: return "IGS-TIN";
    case Method::NoRis: return "no-RIS";
    case Method::RegularRis: return "regular-RIS";
    default: return "IQI-unaware";
  }
}

std::optional<Method> parse_method(const std::string& name) {
  static const Method all[] = {Method::IgsNomaEsTu, Method::IgsNomaEsTi, Method::IgsNomaEsTn,
                               Method::IgsNomaMs,   Method::PgsNoma,     Method::IgsTin,
                               Method::NoRis,       Method::RegularRis,  Method::IqiUnaware};
  for (Method m : all)
    if (name == method_name(m)) return m;
  return std::nullopt;
}

const char* axis_name(SweepAxis a) {
  switch (a) {
    case SweepAxis::PowerP: return "power_P";
    case SweepAxis::PairCountK: return "pair_count_K";
    default: return "iqi_amplitude_a_t";
  }
}

std::optional<SweepAxis> parse_axis(const std::string& name) {
  for (SweepAxis a : {SweepAxis::PowerP, SweepAxis::PairCountK, SweepAxis::IqiAmplitude})
    if (name == axis_name(a)) return a;
  return std::nullopt;
}

SweepSpec SweepSpec::from_config(const KeyValueConfig& cfg) {
  SweepSpec s;
  auto axis = parse_axis(cfg.get_string("axis"));
  if (!axis) throw ConfigError("unknown sweep axis: " + cfg.get_string("axis"));
  s.axis = *axis;
  s.values = cfg.get_double_list("values");
  if (s.values.empty()) throw ConfigError("sweep values must be nonempty");
  if (!std::is_sorted(s.values.begin(), s.values.end()))
    throw ConfigError("sweep values must be ascending");
  s.trials = static_cast<int>(cfg.get_int("trials", 1));
  if (s.trials < 1) throw ConfigError("trials must be >= 1");
  for (const std::string& name : cfg.get_string_list("methods")) {
    auto m = parse_method(name);
    if (!m) throw ConfigError("unknown method: " + name);
    s.methods.push_back(*m);
  }
  if (s.methods.empty()) throw ConfigError("method list must be nonempty");
  s.scenario = ScenarioConfig::from_config(cfg);
  s.ao = AoConfig::from_config(cfg);
  s.power = cfg.get_double("power", s.power);
  s.sigma2 = cfg.get_double("sigma2", s.sigma2);
  s.iqi_a = cfg.get_double("iqi_a", s.iqi_a);
  s.iqi_phase_deg = cfg.get_double("iqi_phase_deg", s.iqi_phase_deg);
  return s;
}

ComplexScenario strip_ris(ComplexScenario s) {
  s.n_ris = 0;
  s.bs_to_ris = MatC::Zero(0, s.n_bs);
  for (MatC& g : s.ris_to_user) g = MatC::Zero(s.n_u, 0);
  return s;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct TrialOutcome {
  bool ok = false;
  double min_rate = 0.0;
  std::string error;
};

TrialOutcome execute_trial(const SweepSpec& spec, Method method, double axis_value,
                           std::uint64_t seed, int trial) {
  TrialOutcome out;
  try {
    ScenarioConfig scfg = spec.scenario;
    double power = spec.power;
    double true_a = spec.iqi_a;
    double phase_rad = spec.iqi_phase_deg * std::numbers::pi / 180.0;
    switch (spec.axis) {
      case SweepAxis::PowerP: power = axis_value; break;
      case SweepAxis::PairCountK: scfg.k_pairs = static_cast<int>(axis_value); break;
      case SweepAxis::IqiAmplitude:
        // a_t = 1 on this axis is the ideal-hardware reference point.
        true_a = axis_value;
        if (axis_value == 1.0) phase_rad = 0.0;
        break;
    }

    // Common random numbers: scenario and init seeds depend on the trial only.
    const std::uint64_t scn_seed = splitmix64(seed ^ splitmix64(trial + 1));
    const std::uint64_t ris_seed = splitmix64(scn_seed ^ 0x5851f42d4c957f2dULL);

    ComplexScenario scenario = generate_scenario(scfg, scn_seed);
    if (method == Method::NoRis) scenario = strip_ris(scenario);

    Problem prob = make_problem(std::move(scenario), power,
                                method == Method::IgsTin ? Access::TIN : Access::NOMA,
                                method == Method::PgsNoma ? Signaling::PGS : Signaling::IGS,
                                spec.sigma2);
    const int users = prob.scenario.n_users();
    IqiModel true_iqi =
        IqiModel::uniform(prob.scenario.n_bs, prob.scenario.n_u, users, true_a, phase_rad);
    prob.iqi = method == Method::IqiUnaware
                   ? IqiModel::ideal(prob.scenario.n_bs, prob.scenario.n_u, users)
                   : true_iqi;

    AoConfig ao = spec.ao;
    ao.ris_init_seed = ris_seed;
    ao.regular_ris = method == Method::RegularRis;
    switch (method) {
      case Method::IgsNomaEsTu:
      case Method::PgsNoma:
      case Method::IgsTin:
        ao.ris.mode = RisMode::ES;
        ao.ris.set_kind = RisSetKind::TU;
        break;
      case Method::IgsNomaEsTi:
        ao.ris.mode = RisMode::ES;
        ao.ris.set_kind = RisSetKind::TI;
        break;
      case Method::IgsNomaEsTn:
        ao.ris.mode = RisMode::ES;
        ao.ris.set_kind = RisSetKind::TN;
        break;
      case Method::IgsNomaMs:
      case Method::IqiUnaware:
        ao.ris.mode = RisMode::MS;
        ao.ris.set_kind = RisSetKind::TI;
        break;
      case Method::NoRis:
      case Method::RegularRis:
        ao.ris.mode = RisMode::ES;
        ao.ris.set_kind = RisSetKind::TU;
        break;
    }

    AoResult res = optimize(prob, ao);
    if (method == Method::IqiUnaware) {
      RateReport rep = evaluate_design_under_mismatch(res.covs, res.ris, prob, true_iqi);
      out.min_rate = rep.weighted_min;
    } else {
      out.min_rate = res.report.weighted_min;
    }
    out.ok = true;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

}  // namespace

double run_trial(const SweepSpec& spec, Method method, double axis_value, std::uint64_t seed,
                 int trial) {
  TrialOutcome out = execute_trial(spec, method, axis_value, seed, trial);
  if (!out.ok) throw NumericsError("trial failed: " + out.error);
  return out.min_rate;
}

const SweepCell* SweepResults::find(double axis_value, Method m) const {
  for (const SweepCell& c : cells)
    if (c.method == m && c.axis_value == axis_value) return &c;
  return nullptr;
}

SweepResults run_sweep(const SweepSpec& spec, std::uint64_t seed, int threads, std::ostream* log) {
  struct Task {
    int vi, mi, trial;
  };
  std::vector<Task> tasks;
  for (int vi = 0; vi < static_cast<int>(spec.values.size()); ++vi)
    for (int mi = 0; mi < static_cast<int>(spec.methods.size()); ++mi)
      for (int t = 0; t < spec.trials; ++t) tasks.push_back({vi, mi, t});

  std::vector<TrialOutcome> outcomes(tasks.size());
  std::atomic<size_t> next{0};
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min<int>(threads, static_cast<int>(tasks.size())));

  auto worker = [&]() {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const Task& t = tasks[i];
      outcomes[i] =
          execute_trial(spec, spec.methods[t.mi], spec.values[t.vi], seed, t.trial);
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }

  SweepResults results;
  int failed_total = 0;
  for (int vi = 0; vi < static_cast<int>(spec.values.size()); ++vi) {
    for (int mi = 0; mi < static_cast<int>(spec.methods.size()); ++mi) {
      SweepCell cell;
      cell.axis = spec.axis;
      cell.axis_value = spec.values[vi];
      cell.method = spec.methods[mi];
      std::vector<double> xs;
      for (size_t i = 0; i < tasks.size(); ++i) {
        if (tasks[i].vi != vi || tasks[i].mi != mi) continue;
        if (outcomes[i].ok) {
          xs.push_back(outcomes[i].min_rate);
        } else {
          ++cell.trials_failed;
          ++failed_total;
          std::ostringstream msg;
          msg << method_name(cell.method) << " value=" << cell.axis_value
              << " trial=" << tasks[i].trial << ": " << outcomes[i].error;
          results.failures.push_back(msg.str());
          if (log) *log << "trial failed: " << msg.str() << '\n';
        }
      }
      cell.trials_ok = static_cast<int>(xs.size());
      if (!xs.empty()) {
        double mean = 0.0;
        for (double x : xs) mean += x;
        mean /= xs.size();
        double var = 0.0;
        for (double x : xs) var += (x - mean) * (x - mean);
        cell.mean = mean;
        cell.stderr_mean = xs.size() > 1 ? std::sqrt(var / (xs.size() * (xs.size() - 1.0))) : 0.0;
      }
      results.cells.push_back(std::move(cell));
    }
  }
  if (failed_total > 0.1 * static_cast<double>(tasks.size()))
    throw NumericsError("sweep aborted: trial failure rate above 10% (" +
                        std::to_string(failed_total) + "/" + std::to_string(tasks.size()) + ")");
  return results;
}

void write_results_csv(std::ostream& out, const SweepResults& results) {
  out << "axis,axis_value,method,trials_ok,trials_failed,mean_min_rate,stderr_min_rate\n";
  out << std::setprecision(17);
  for (const SweepCell& c : results.cells)
    out << axis_name(c.axis) << ',' << c.axis_value << ',' << method_name(c.method) << ','
        << c.trials_ok << ',' << c.trials_failed << ',' << c.mean << ',' << c.stderr_mean << '\n';
}

SweepResults read_results_csv(std::istream& in) {
  SweepResults results;
  std::string line;
  if (!std::getline(in, line) ||
      line != "axis,axis_value,method,trials_ok,trials_failed,mean_min_rate,stderr_min_rate")
    throw ConfigError("results csv: unexpected header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    std::string tok;
    while (std::getline(ls, tok, ',')) f.push_back(tok);
    if (f.size() != 7) throw ConfigError("results csv: bad row: " + line);
    SweepCell c;
    auto axis = parse_axis(f[0]);
    auto method = parse_method(f[2]);
    if (!axis || !method) throw ConfigError("results csv: unknown axis or method: " + line);
    c.axis = *axis;
    c.method = *method;
    c.axis_value = std::stod(f[1]);
    c.trials_ok = std::stoi(f[3]);
    c.trials_failed = std::stoi(f[4]);
    c.mean = std::stod(f[5]);
    c.stderr_mean = std::stod(f[6]);
    results.cells.push_back(std::move(c));
  }
  return results;
}

std::vector<GainRow> summarize_gains(const SweepResults& results, Method reference,
                                     Method treatment) {
  std::vector<GainRow> rows;
  for (const SweepCell& ref : results.cells) {
    if (ref.method != reference) continue;
    const SweepCell* treat = results.find(ref.axis_value, treatment);
    if (!treat) continue;
    GainRow row;
    row.axis = ref.axis;
    row.axis_value = ref.axis_value;
    row.reference = reference;
    row.treatment = treatment;
    row.ref_mean = ref.mean;
    row.treat_mean = treat->mean;
    if (ref.mean > 0.0) {
      row.gain_percent = (treat->mean - ref.mean) / ref.mean * 100.0;
      row.defined = true;
    }
    rows.push_back(row);
  }
  return rows;
}

void write_gains_csv(std::ostream& out, const std::vector<GainRow>& rows) {
  out << "axis,axis_value,reference,treatment,ref_mean,treat_mean,gain_percent\n";
  out << std::setprecision(17);
  for (const GainRow& r : rows) {
    out << axis_name(r.axis) << ',' << r.axis_value << ',' << method_name(r.reference) << ','
        << method_name(r.treatment) << ',' << r.ref_mean << ',' << r.treat_mean << ',';
    if (r.defined) out << r.gain_percent;
    else out << "undefined";
    out << '\n';
  }
}

}  // namespace starmm
