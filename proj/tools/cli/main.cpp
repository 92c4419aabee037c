#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "nanoguide/inference.hpp"
#include "nanoguide/parallel.hpp"
#include "runner/experiments.hpp"
#include "runner/selftest.hpp"
#include "runner/table.hpp"

namespace rn = nanoguide::runner;

namespace {

int fit_command(const std::string& model, const std::string& path, std::size_t peaks, int degree,
                double noise_sigma, const std::string& format) {
  try {
    std::ifstream in(path);
    if (!in) {
      std::cerr << "error: cannot read " << path << '\n';
      return 1;
    }
    const auto data = nanoguide::read_xy_csv(in);
    nanoguide::FitResult fit;
    switch (rn::parse_fit_model(model)) {
      case rn::FitModel::lorentzian: fit = nanoguide::fit_lorentzian(data.x, data.y, peaks); break;
      case rn::FitModel::g2: fit = nanoguide::fit_g2(data.x, data.y); break;
      case rn::FitModel::stark: fit = nanoguide::fit_stark_slope(data.x, data.y, degree, noise_sigma); break;
    }
    if (format == "csv") {
      std::cout << nanoguide::csv_header(fit) << '\n' << nanoguide::csv_row(fit) << '\n';
    } else {
      nanoguide::write_key_value(std::cout, fit);
    }
    return fit.converged ? 0 : 3;
  } catch (const nanoguide::OutOfModelError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const nanoguide::ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const nanoguide::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nanoguide: waveguide-coupled molecule simulations and fits"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(rn::tool_version()));

  auto* run = app.add_subcommand("run", "Run an experiment config and write its CSV artifact");
  std::string config;
  std::uint64_t seed = 0;
  std::string output;
  run->add_option("config", config, "Experiment config file")->required()->check(CLI::ExistingFile);
  auto* seed_opt = run->add_option("--seed", seed, "Override experiment.seed");
  auto* output_opt = run->add_option("--output", output, "Override experiment.output");

  auto* selftest = app.add_subcommand("selftest", "Run the oracle-equivalence suites");
  double corruption = 0.2;
  std::size_t emissions = 400000;
  auto* corrupt_opt = selftest->add_option("--corrupt", corruption,
                                           "Inject a relative error into the decay rate (mutation check)")
                          ->expected(0, 1)
                          ->default_val(0.2);
  selftest->add_option("--mc-emissions", emissions, "Emissions in the Monte Carlo suite")->default_val(400000);

  auto* fit = app.add_subcommand("fit", "Fit a model to two-column CSV data");
  std::string model;
  std::string data;
  std::size_t peaks = 1;
  int degree = 1;
  double noise_sigma = 0.0;
  std::string format = "kv";
  fit->add_option("model", model, "lorentzian, g2 or stark")
      ->required()
      ->check(CLI::IsMember({"lorentzian", "g2", "stark"}));
  fit->add_option("csv", data, "Two-column CSV (x, y)")->required();
  fit->add_option("--peaks", peaks, "Lorentzian components")->default_val(1);
  fit->add_option("--degree", degree, "Stark polynomial degree")->default_val(1);
  fit->add_option("--noise-sigma", noise_sigma, "Known center noise in MHz (stark)")->default_val(0.0);
  fit->add_option("--format", format, "kv or csv")->check(CLI::IsMember({"kv", "csv"}))->default_val("kv");

  CLI11_PARSE(app, argc, argv);
  const unsigned threads = nanoguide::default_thread_count();

  if (*run) {
    rn::RunRequest req{config, std::nullopt, std::nullopt, threads};
    if (*seed_opt) req.seed = seed;
    if (*output_opt) req.output = output;
    return rn::run_config(req, std::cout, std::cerr);
  }
  if (*selftest) {
    rn::SelftestOptions opts;
    opts.corruption = *corrupt_opt ? corruption : 0.0;
    opts.montecarlo_emissions = emissions;
    opts.threads = threads;
    return rn::report_selftest(rn::run_selftest(opts), std::cout);
  }
  return fit_command(model, data, peaks, degree, noise_sigma, format);
}
