#include "run.hpp"

#include "CLI11.hpp"
#include "pesin/common.hpp"

#include <cstdlib>
#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"finite-time Pesin charts and invariant curves for planar maps"};
  app.require_subcommand(1);

  std::string config, out;
  int workers = 1;
  auto* an = app.add_subcommand("analyze", "run the tasks of a config, write report.json and CSVs");
  an->add_option("--config", config, "run config (JSON)")->required();
  an->add_option("--out", out, "output directory (overrides the config and PESIN_OUT)");
  an->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  auto* ft = app.add_subcommand("fit", "fit lambda, rho, eps along the configured orbit");
  ft->add_option("--config", config, "run config (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  namespace cli = pesin::cli;
  try {
    const cli::Json cfg = cli::load_config(config);
    if (*ft) {
      std::cout << cli::fit(cfg).dump(2) << '\n';
      return 0;
    }
    if (out.empty()) {
      const char* env = std::getenv("PESIN_OUT");
      out = env && *env ? env : cfg.value("output", "out");
    }
    const cli::RunResult r = cli::analyze(cfg, out, workers);
    for (const auto& f : r.report.at("failures")) std::cerr << "pesin: " << f.get<std::string>() << '\n';
    std::cout << out << "/report.json: " << r.report.at("status").get<std::string>() << '\n';
    return r.exit_code;
  } catch (const pesin::PremiseError& e) {
    std::cerr << "pesin: premise failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "pesin: " << e.what() << '\n';
    return 1;
  }
}
