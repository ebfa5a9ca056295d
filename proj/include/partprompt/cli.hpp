#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace partprompt {

/// Runs one `partprompt` invocation; args excludes the program name.
/// Returns 0 on success, 1 on a domain error, 2 on a usage error.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli_main(int argc, char** argv);

}  // namespace partprompt
