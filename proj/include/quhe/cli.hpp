#pragma once

namespace quhe::cli {

// argv-style entry point, callable in-process for tests.  Returns the
// process exit code: 0 success, 1 failed verification checks, 2 usage or
// parse errors, 3 infeasible instances.
int run(int argc, const char* const* argv);

}  // namespace quhe::cli
