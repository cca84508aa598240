// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <ostream>

namespace vacot::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomainError = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `vacot` tool. Never throws.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace vacot::cli
