#pragma once

#include <ostream>

namespace imugan {

/// Entry point of the `imugan` tool. Returns 0 on success, 1 on a domain error
/// (bad data, failed training) and 2 on a usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace imugan
