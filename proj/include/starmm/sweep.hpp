#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "starmm/ao.hpp"

namespace starmm {

/// Comparison methods. IGS-NOMA-MS uses the configured partition strategy;
/// no-RIS strips the surface from the scenario; regular-RIS pins the surface
/// to reflect-only so CEUs keep direct links only; IQI-unaware optimizes as if
/// hardware were ideal and is then evaluated under the true impairments (with
/// the MS surface, like the aware counterpart it is compared against).
enum class Method {
  IgsNomaEsTu,
  IgsNomaEsTi,
  IgsNomaEsTn,
  IgsNomaMs,
  PgsNoma,
  IgsTin,
  NoRis,
  RegularRis,
  IqiUnaware,
};

const char* method_name(Method m);
std::optional<Method> parse_method(const std::string& name);

enum class SweepAxis { PowerP, PairCountK, IqiAmplitude };

const char* axis_name(SweepAxis a);
std::optional<SweepAxis> parse_axis(const std::string& name);

struct SweepSpec {
  SweepAxis axis = SweepAxis::PowerP;
  std::vector<double> values;  // nonempty, ascending
  int trials = 1;
  std::vector<Method> methods;
  ScenarioConfig scenario;
  AoConfig ao;
  double power = 1e5;
  double sigma2 = 1.0;
  double iqi_a = 1.0;          // scaled-identity amplitude at every transceiver
  double iqi_phase_deg = 0.0;  // degrees

  static SweepSpec from_config(const KeyValueConfig& cfg);
};

struct SweepCell {
  SweepAxis axis = SweepAxis::PowerP;
  double axis_value = 0.0;
  Method method = Method::IgsNomaEsTu;
  int trials_ok = 0;
  int trials_failed = 0;
  double mean = 0.0;
  double stderr_mean = 0.0;
};

struct SweepResults {
  std::vector<SweepCell> cells;
  std::vector<std::string> failures;  // one log line per failed trial

  const SweepCell* find(double axis_value, Method m) const;
};

/// Runs trials x values x methods with common random numbers: within one
/// trial index every method sees the identical scenario and impairment draw.
/// Failed trials are logged and excluded; an overall failure rate above 10%
/// aborts. Deterministic given (spec, seed) regardless of thread count.
SweepResults run_sweep(const SweepSpec& spec, std::uint64_t seed, int threads = 0,
                       std::ostream* log = nullptr);

/// Runs a single trial of one method; exposed for targeted experiments.
double run_trial(const SweepSpec& spec, Method method, double axis_value, std::uint64_t seed,
                 int trial);

void write_results_csv(std::ostream& out, const SweepResults& results);
SweepResults read_results_csv(std::istream& in);

struct GainRow {
  SweepAxis axis = SweepAxis::PowerP;
  double axis_value = 0.0;
  Method reference = Method::PgsNoma;
  Method treatment = Method::IgsNomaEsTu;
  double ref_mean = 0.0;
  double treat_mean = 0.0;
  double gain_percent = 0.0;
  bool defined = false;  // reference mean must be positive
};

/// Percentage improvement of treatment over reference per axis value.
std::vector<GainRow> summarize_gains(const SweepResults& results, Method reference,
                                     Method treatment);

void write_gains_csv(std::ostream& out, const std::vector<GainRow>& rows);

/// Removes the surface from a scenario in place (n_ris = 0), keeping the
/// direct links untouched so baselines stay paired with the full draw.
ComplexScenario strip_ris(ComplexScenario s);

}  // namespace starmm
