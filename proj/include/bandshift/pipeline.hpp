#pragma once

#include <exception>
#include <iosfwd>
#include <string>
#include <vector>

#include "bandshift/config.hpp"

namespace bandshift {

enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 2,
  kExitRejected = 3,
  kExitTolerance = 4,
  kExitNumerical = 5,
};

const std::vector<std::string>& subcommands();

/// Runs one subcommand and writes its data file plus metadata.json into config.output_dir.
/// Returns kExitOk, kExitRejected (certificate) or kExitTolerance (verify); library
/// errors propagate as exceptions.
int run(const std::string& subcommand, const RunConfig& config, std::ostream& log);

/// Exit status for an exception escaping run().
int exit_code_for(const std::exception& error);

}  // namespace bandshift
