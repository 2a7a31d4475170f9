// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chanpred Authors

#include <iostream>
#include <string>
#include <vector>

#include "commands.hpp"

int main(int argc, char **argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return chanpred::cli::run_cli(args, std::cout, std::cerr);
}
