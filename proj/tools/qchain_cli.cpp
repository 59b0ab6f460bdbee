// qchain: exact non-equilibrium dynamics of a periodically quenched
// harmonic chain. Subcommands:
//   simulate --config <json>          run one configured time series to CSV
//   validate                          run the oracle suite, exit 0 iff clean
//   figures  --config <json> --figure {2..6}   emit preset data series
//
// Exit codes: 0 success, 1 validation failure, 2 config error,
// 3 numerical assertion failure.

#include <CLI11.hpp>
#include <iostream>

#include "qchain/simulate.hpp"
#include "qchain/validation.hpp"

namespace {

int do_simulate(const std::string& config_path) {
  const qchain::RunConfig cfg = qchain::RunConfig::from_json_file(config_path);
  for (const auto& w : cfg.warnings()) std::cerr << "warning: " << w << "\n";
  qchain::run_simulation_to_csv(cfg);
  std::cout << "wrote " << cfg.output_path << "\n";
  return 0;
}

int do_validate() {
  const auto results = qchain::validation::run_validation_suite();
  qchain::validation::print_report(std::cout, results);
  return qchain::validation::all_passed(results) ? 0 : 1;
}

int do_figures(const std::string& config_path, int figure) {
  const qchain::RunConfig base = qchain::RunConfig::from_json_file(config_path);
  for (const auto& cfg : qchain::figure_presets(figure, base)) {
    for (const auto& w : cfg.warnings()) std::cerr << "warning: " << w << "\n";
    qchain::run_simulation_to_csv(cfg);
    std::cout << "wrote " << cfg.output_path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact quench dynamics of a periodic harmonic chain"};
  app.require_subcommand(1);

  std::string config_path;
  int figure = 2;

  auto* simulate = app.add_subcommand("simulate", "run one configured series to CSV");
  simulate->add_option("--config", config_path, "JSON run configuration")->required();

  auto* validate = app.add_subcommand("validate", "run the oracle suite");

  auto* figures = app.add_subcommand("figures", "emit a preset data series");
  figures->add_option("--config", config_path, "JSON base configuration (output stem, threads)")
      ->required();
  figures->add_option("--figure", figure, "series preset number (2-6)")->required();

  try {
    app.parse(argc, argv);
    if (simulate->parsed()) return do_simulate(config_path);
    if (validate->parsed()) return do_validate();
    if (figures->parsed()) return do_figures(config_path, figure);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const qchain::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const qchain::NumericalError& e) {
    std::cerr << "numerical assertion failed: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
