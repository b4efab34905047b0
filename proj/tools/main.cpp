// SPDX-License-Identifier: Apache-2.0
#include "iosim/cli.hpp"

int main(int argc, char** argv) { return iosim::harness::cli_main(argc, argv); }
