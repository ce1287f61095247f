#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace vizex {

// Exit codes: 0 success, 1 engine error, 2 usage or query syntax error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli_main(int argc, char** argv);

}  // namespace vizex
