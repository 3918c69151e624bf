#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "bandshift/config.hpp"
#include "bandshift/errors.hpp"
#include "bandshift/parallel.hpp"
#include "bandshift/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Band-edge spectral shift coefficients for periodic operators with decaying perturbations"};
  app.require_subcommand(1, 1);
  std::string config_path, out_dir, format;
  int threads = 0;
  app.add_option("--config", config_path, "Configuration file (key = value lines)")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Output directory (overrides run.output_dir)");
  app.add_option("--format", format, "Data format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--threads", threads, "Worker threads (default 1)")->check(CLI::NonNegativeNumber);
  app.fallthrough();
  for (const auto& name : bandshift::subcommands()) app.add_subcommand(name);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : bandshift::kExitValidation;
  }
  const std::string subcommand = app.get_subcommands().front()->get_name();
  try {
    bandshift::RunConfig config = config_path.empty() ? bandshift::RunConfig{} : bandshift::load_config(config_path);
    if (!out_dir.empty()) config.output_dir = out_dir;
    if (!format.empty()) config.format = format;
    if (threads > 0) bandshift::default_threads() = threads;
    return bandshift::run(subcommand, config, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "bandshift " << subcommand << ": " << e.what() << "\n";
    return bandshift::exit_code_for(e);
  }
}
