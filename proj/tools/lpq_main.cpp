#include <iostream>
#include <string>
#include <vector>

#include "lpq/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return lpq::run_cli(args, std::cout, std::cerr);
}
