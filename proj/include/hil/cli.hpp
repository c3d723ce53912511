#pragma once

namespace hil::cli {

/// Exit codes: 0 success, 1 operational error, 2 experiment failure.
enum ExitCode { ok = 0, operational_error = 1, experiment_failure = 2 };

int run(int argc, char** argv);

}  // namespace hil::cli
