#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace palmsdp {

/// Runs the command line `args` (program name excluded). Exit codes: 0 on a
/// converged solve or a successful gen/oracle run, 2 when a solve ran out of
/// budget, 1 on errors and unknown flags.
int cli_main(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace palmsdp
