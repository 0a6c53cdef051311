#include <iostream>
#include <string>
#include <vector>

#include "bqcd/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  return bqcd::run_cli(args, std::cout, std::cerr);
}
