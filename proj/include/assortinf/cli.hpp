#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace assortinf {

/// Exit codes: 0 success, 1 usage or validation error, 2 convergence,
/// numerical or experiment failure.
int cli_main(int argc, char** argv);

/// Same, with arguments (without the program name) and explicit streams.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace assortinf
