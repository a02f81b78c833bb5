#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ldplab::cli {

// Runs one subcommand. Exit codes: 0 success, 1 domain error (one JSON
// error record on `err`), 2 usage error.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

int run(int argc, char** argv);

}  // namespace ldplab::cli
