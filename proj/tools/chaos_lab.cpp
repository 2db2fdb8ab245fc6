#include <CLI11.hpp>

#include <iomanip>
#include <iostream>

#include "chaoslab/harness.hpp"

using namespace chaoslab;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;
constexpr int kOtherError = 1;

void print_rows(const std::filesystem::path& metrics) {
  if (!std::filesystem::exists(metrics)) return;
  std::cout << std::left << std::setw(8) << "N" << std::setw(32) << "statistic" << std::right << std::setw(14)
            << "value" << std::setw(14) << "ci_lo" << std::setw(14) << "ci_hi" << '\n';
  for (const auto& r : read_metrics_csv(metrics))
    std::cout << std::left << std::setw(8) << r.N << std::setw(32) << r.statistic << std::right << std::setprecision(6)
              << std::setw(14) << r.value << std::setw(14) << r.ci_lo << std::setw(14) << r.ci_hi << '\n';
}

int run_mode(const std::string& mode, const std::string& config_path, std::optional<std::uint64_t> seed,
             std::optional<std::string> out) {
  ExperimentConfig cfg = load_config(config_path);
  const Mode m = parse_mode(mode);
  if (cfg.mode != m) cfg.mode = m;
  if (seed) cfg.seed = *seed;
  if (out) cfg.output_dir = *out;
  cfg.validate();

  const RunManifest man = run_experiment(cfg);
  const std::filesystem::path dir = cfg.output_dir;
  if (m == Mode::regime) {
    const RegimeParams p = plan(cfg.theta, cfg.alpha, cfg.m, cfg.N, cfg.theorem, cfg.gamma, cfg.eta);
    write_certificate(std::cout, p);
  } else {
    print_rows(dir / "metrics.csv");
  }
  std::cerr << "wrote " << man.files.size() << " files to " << dir.string() << " (config " << man.config_hash
            << ", " << std::fixed << std::setprecision(2) << man.timings_s.at("total") << " s)\n";
  return kOk;
}

int run_report(const std::string& dir) {
  const auto tables = report(dir);
  std::cout << std::left << std::setw(32) << "statistic" << std::right << std::setw(4) << "n" << std::setw(12)
            << "slope" << std::setw(12) << "intercept" << std::setw(10) << "r2" << std::setw(12) << "slope_lo"
            << std::setw(12) << "slope_hi" << "  status\n";
  for (const auto& t : tables)
    std::cout << std::left << std::setw(32) << t.statistic << std::right << std::setw(4) << t.fit.n
              << std::setprecision(4) << std::setw(12) << t.fit.slope << std::setw(12) << t.fit.intercept
              << std::setw(10) << t.fit.r2 << std::setw(12) << t.fit.slope_ci_lo << std::setw(12)
              << t.fit.slope_ci_hi << "  " << t.status << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Propagation-of-chaos experiments for a mollified Yukawa particle system"};
  app.set_version_flag("--version", std::string(kCodeVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  for (const char* name : {"pde", "coupling", "lln", "regime", "sweep"}) {
    auto* sub = app.add_subcommand(name, std::string("run the ") + name + " recipe");
    sub->add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "master seed, overrides the config");
    sub->add_option("--out", out, "output directory, overrides the config");
  }
  std::string run_dir;
  auto* rep = app.add_subcommand("report", "regression tables over a finished run directory");
  rep->add_option("dir", run_dir, "run directory containing manifest.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (rep->parsed()) return run_report(run_dir);
    for (auto* sub : app.get_subcommands()) return run_mode(sub->get_name(), config_path, seed, out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOtherError;
  }
  return kOtherError;
}
