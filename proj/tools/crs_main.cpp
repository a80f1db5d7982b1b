// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "crs/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return crs::cli::run(args, std::cin, std::cout, std::cerr);
}
