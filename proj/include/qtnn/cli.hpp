#pragma once

namespace qtnn::cli {

/// Runs one `qtnn` subcommand. Returns 0 on success, 1 for invalid input or
/// usage, 2 for numerical or IO failure.
int dispatch(int argc, char** argv);

}  // namespace qtnn::cli
