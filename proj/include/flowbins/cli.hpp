#pragma once

namespace flowbins {

// Entry point behind the flowbins binary. Exit codes: 0 success,
// 2 validation failure, 3 usage error.
int run_cli(int argc, const char* const* argv);

}  // namespace flowbins
