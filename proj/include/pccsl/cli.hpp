#pragma once

#include <iosfwd>

namespace pccsl::cli {

/// Entry point behind the `pccsl` binary; streams are injectable so tests
/// can capture output byte-for-byte.
/// Exit codes: 0 ok / all relations accepted, 1 validation or usage error,
/// 2 some relation rejected, 3 runtime errors and caps.
int run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err);

}  // namespace pccsl::cli
