// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace iosim::harness {

/// Entry point shared by the iosim binary and in-process tests.
/// Exit codes: 0 success, 1 runtime failure, 2 usage error.
int cli_main(int argc, const char* const* argv);

/// Fast invariant battery behind `iosim selftest`; returns the failure count.
int run_selftest();

}  // namespace iosim::harness
