// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "memopt/cli.hpp"

int main(int argc, char **argv) {
  return memopt::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
