#include <iostream>
#include <string>
#include <vector>

#include "cskl/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cskl::run_cli(args, std::cout, std::cerr);
}
