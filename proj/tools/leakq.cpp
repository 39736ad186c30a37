// leakq: command-line front end for the leakage-queue library.
//
//   leakq simulate <scenario> [--out PATH] [--seed N]
//   leakq analyze  <scenario> [--out PATH]
//   leakq sweep    <scenario> --param capacity|gamma --grid a:b:step [--out PATH] [--seed N]
//   leakq validate [--suite NAME] [--seed N] [--out PATH]
//   leakq qq       <scenario> [--reference gaussian|skewnormal] [--out PATH] [--seed N]
//
// Exit status: 0 success, 1 invalid scenario or failed validation, 2 usage error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "leakq/leakq.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw leakq::Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw leakq::Error("write failed for '" + path + "'");
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) std::cout << text;
  else write_text(out_path, text);
}

leakq::Scenario load(const std::string& path, std::optional<std::uint64_t> seed) {
  auto sc = leakq::load_scenario(path);
  if (seed) sc.plan.master_seed = *seed;
  for (const auto& w : sc.warnings) std::cerr << "warning: " << w << "\n";
  return sc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and closed-form analysis of energy storage with self-discharge"};
  app.require_subcommand(1);

  std::string scenario, out, grid, param = "capacity", suite, reference = "gaussian";
  std::optional<std::uint64_t> seed;

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo steady state: JSON summary plus empirical CDF");
  simulate->add_option("scenario", scenario, "Scenario file")->required();
  simulate->add_option("--out", out, "JSON output path; the CDF goes next to it as <stem>.cdf.csv");
  simulate->add_option("--seed", seed, "Override the scenario seed");

  auto* analyze = app.add_subcommand("analyze", "Closed-form reference moments, loss probabilities and bounds");
  analyze->add_option("scenario", scenario, "Scenario file")->required();
  analyze->add_option("--out", out, "Output path (default stdout)");

  auto* sweep = app.add_subcommand("sweep", "Simulated and analytic quantities over a parameter grid");
  sweep->add_option("scenario", scenario, "Scenario file")->required();
  sweep->add_option("--param", param, "Swept parameter")->check(CLI::IsMember({"capacity", "gamma"}));
  sweep->add_option("--grid", grid, "Inclusive grid a:b:step (capacity in Wh, gamma per slot)")->required();
  sweep->add_option("--out", out, "CSV output path (default stdout)");
  sweep->add_option("--seed", seed, "Override the scenario seed");

  auto* validate = app.add_subcommand("validate", "Run invariant suites");
  validate->add_option("scenario", scenario, "Ignored; suites use built-in setups");
  validate->add_option("--suite", suite, "Suite name (default: all)");
  validate->add_option("--seed", seed, "Seed for random instances");
  validate->add_option("--out", out, "JSON report path (default stdout)");

  auto* qq = app.add_subcommand("qq", "Q-Q pairs of simulated stored energy against a fitted reference");
  qq->add_option("scenario", scenario, "Scenario file")->required();
  qq->add_option("--reference", reference, "Reference distribution")->check(CLI::IsMember({"gaussian", "skewnormal"}));
  qq->add_option("--out", out, "CSV output path (default stdout)");
  qq->add_option("--seed", seed, "Override the scenario seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  const unsigned threads = leakq::resolve_threads();
  try {
    if (simulate->parsed()) {
      const auto sc = load(scenario, seed);
      const auto summary = leakq::run(sc.plan, threads);
      const std::string json = leakq::simulate_json(sc, summary).dump(2) + "\n";
      emit(out, json);
      if (!out.empty()) {
        auto cdf_path = std::filesystem::path(out);
        cdf_path.replace_extension(".cdf.csv");
        write_text(cdf_path.string(), leakq::cdf_csv(summary.cdf));
      }
    } else if (analyze->parsed()) {
      const auto sc = load(scenario, std::nullopt);
      emit(out, leakq::analyze_json(sc).dump(2) + "\n");
    } else if (sweep->parsed()) {
      std::vector<double> points;
      try {
        points = leakq::parse_grid(grid);
      } catch (const leakq::Error& e) {
        throw UsageError(e.what());
      }
      if (points.empty()) throw UsageError("sweep grid '" + grid + "' is empty");
      const auto sc = load(scenario, seed);
      const auto which = param == "gamma" ? leakq::SweepParam::kGamma : leakq::SweepParam::kCapacity;
      emit(out, leakq::sweep_csv(sc, which, points, threads));
    } else if (validate->parsed()) {
      const auto& names = leakq::suite_names();
      if (!suite.empty() && std::find(names.begin(), names.end(), suite) == names.end()) {
        throw UsageError("unknown suite '" + suite + "' (dynamics, duality, convergence, clt, bounds)");
      }
      leakq::Json report = leakq::Json::array();
      bool passed = true;
      for (const auto& name : names) {
        if (!suite.empty() && name != suite) continue;
        const auto r = leakq::run_suite(name, seed.value_or(1), threads);
        passed = passed && r.passed();
        report.push_back(leakq::suite_json(r));
      }
      emit(out, (suite.empty() ? report : report.front()).dump(2) + "\n");
      return passed ? kOk : kFailure;
    } else if (qq->parsed()) {
      const auto sc = load(scenario, seed);
      const auto which = reference == "skewnormal" ? leakq::QqReference::kSkewNormal : leakq::QqReference::kGaussian;
      emit(out, leakq::qq_csv(leakq::qq_run(sc, which, threads)));
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}
