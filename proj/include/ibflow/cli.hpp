#pragma once

namespace ibflow {

/// Entry point of the ibflow command-line tool. Exit codes: 0 success,
/// 2 configuration error, 3 numerical divergence, 4 validation failure.
int cli_main(int argc, const char* const* argv);

} // namespace ibflow
