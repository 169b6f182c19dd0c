// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "scenemark/cli.hpp"

int main(int argc, char** argv) { return scenemark::run_cli(argc, argv, std::cout, std::cerr); }
