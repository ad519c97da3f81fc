#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nidm::cli {

/// Runs one `nidm` invocation. `args` excludes the program name. Data goes to
/// `out`, diagnostics to `err`. Returns 0 on success, 1 on a domain error
/// (parse, validation, lookup), 2 on a usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nidm::cli
