// Batch CLI: `run` executes a sweep spec, `summarize` turns a results CSV
// into a gain table, `selftest` runs the built-in oracle battery.
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "starmm/selftest.hpp"
#include "starmm/sweep.hpp"

namespace {

int run_command(const std::string& spec_path, std::uint64_t seed, const std::string& out_dir,
                int threads) {
  starmm::KeyValueConfig cfg = starmm::KeyValueConfig::from_file(spec_path);
  starmm::SweepSpec spec = starmm::SweepSpec::from_config(cfg);
  std::filesystem::create_directories(out_dir);

  starmm::SweepResults results = starmm::run_sweep(spec, seed, threads, &std::cerr);

  const std::string csv_path = out_dir + "/results.csv";
  std::ofstream out(csv_path);
  if (!out) throw starmm::ConfigError("cannot open for writing: " + csv_path);
  starmm::write_results_csv(out, results);
  std::cout << "wrote " << csv_path << " (" << results.cells.size() << " cells, "
            << results.failures.size() << " failed trials)\n";
  return 0;
}

int summarize_command(const std::string& in_path, const std::string& ref_name,
                      const std::string& treat_name, const std::string& out_path) {
  auto ref = starmm::parse_method(ref_name);
  auto treat = starmm::parse_method(treat_name);
  if (!ref) throw starmm::ConfigError("unknown reference method: " + ref_name);
  if (!treat) throw starmm::ConfigError("unknown treatment method: " + treat_name);
  std::ifstream in(in_path);
  if (!in) throw starmm::ConfigError("cannot open for reading: " + in_path);
  starmm::SweepResults results = starmm::read_results_csv(in);
  std::vector<starmm::GainRow> rows = starmm::summarize_gains(results, *ref, *treat);
  std::ofstream out(out_path);
  if (!out) throw starmm::ConfigError("cannot open for writing: " + out_path);
  starmm::write_gains_csv(out, rows);
  std::cout << "wrote " << out_path << " (" << rows.size() << " rows)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"max-min fair STAR-RIS precoding experiments"};
  app.require_subcommand(1);

  std::string spec_path, out_dir = "out";
  std::uint64_t seed = 1;
  int threads = 0;
  CLI::App* run = app.add_subcommand("run", "run a sweep spec");
  run->add_option("--spec", spec_path, "sweep spec file")->required();
  run->add_option("--seed", seed, "master seed");
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--threads", threads, "worker threads (0 = hardware)");

  std::string in_path, ref_name, treat_name, gains_path = "gains.csv";
  CLI::App* summarize = app.add_subcommand("summarize", "gain table from a results CSV");
  summarize->add_option("--in", in_path, "results.csv from run")->required();
  summarize->add_option("--reference", ref_name, "reference method name")->required();
  summarize->add_option("--treatment", treat_name, "treatment method name")->required();
  summarize->add_option("--out", gains_path, "output gains CSV");

  CLI::App* selftest = app.add_subcommand("selftest", "run the built-in oracle battery");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return run_command(spec_path, seed, out_dir, threads);
    if (summarize->parsed()) return summarize_command(in_path, ref_name, treat_name, gains_path);
    if (selftest->parsed()) return starmm::selftest_run(std::cout) ? 0 : 4;
  } catch (const starmm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 1;
}
